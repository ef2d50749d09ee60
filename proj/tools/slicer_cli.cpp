// Command-line front end: graph/parameter generation, simulation, learning,
// evaluation, sweeps and the built-in oracle checks.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "slicer.hpp"

namespace {

using namespace slicer;

// Options that map onto configuration keys. Values given on the command line
// override those from --config and --set.
class Bindings {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto& slot = values_[key];
    options_.push_back({app->add_option(flag, slot, help), key});
  }

  void apply(KeyValueConfig& cfg) const {
    for (const auto& [opt, key] : options_)
      if (opt->count() > 0) cfg.set(key, values_.at(key));
  }

 private:
  struct Bound {
    CLI::Option* option;
    std::string key;
  };
  std::map<std::string, std::string> values_;
  std::vector<Bound> options_;
};

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  Bindings bindings;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "override a configuration key (key=value)");
    bindings.add(app, "--seed", "seed", "master seed");
  }

  KeyValueConfig resolve() const {
    KeyValueConfig cfg = config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(config_path);
    for (const auto& kv : overrides) cfg.set_assignment(kv);
    bindings.apply(cfg);
    return cfg;
  }
};

Header stamped(const KeyValueConfig& cfg) {
  Header h;
  h.set("config_hash", cfg.hash());
  h.set("seed", cfg.str("seed", "0"));
  return h;
}

// Commands without randomness of their own carry the seed of their input.
void inherit_seed(KeyValueConfig& cfg, const Header& input) {
  if (!cfg.has("seed"))
    if (auto s = input.get("seed")) cfg.set("seed", *s);
}

std::uint64_t seed_of(const KeyValueConfig& cfg) { return static_cast<std::uint64_t>(cfg.integer("seed", 0)); }

void print_report(const EvalReport& r) {
  std::printf("mean_l1      %.6f\nmean_signed  %.6f\nauc          %.6f\ntp/fp/tn/fn  %llu/%llu/%llu/%llu\n", r.mean_l1,
              r.mean_signed, r.auc, static_cast<unsigned long long>(r.true_positives),
              static_cast<unsigned long long>(r.false_positives), static_cast<unsigned long long>(r.true_negatives),
              static_cast<unsigned long long>(r.false_negatives));
}

int cmd_graph(const Common& common, const std::string& out, const std::string& superset_out) {
  const KeyValueConfig cfg = common.resolve();
  Rng rng(seed_of(cfg));
  const Network net = build_network(cfg, rng);
  Header h = stamped(cfg);
  h.set("generator", net.description);
  {
    auto os = open_output(out);
    write_edge_list(os, net.truth, nullptr, nullptr, h);
  }
  const bool has_fakes = net.candidates.num_fake() > 0;
  if (!superset_out.empty()) {
    if (!has_fakes) detail::fail("this graph spec has no superset; set --fake-ratio or use lattice-diag");
    h.set("fake_fraction", format_double(net.candidates.fake_fraction()));
    const EdgeParams zeros = EdgeParams::constant(net.candidates.superset.num_edges(), 0.0);
    auto os = open_output(superset_out);
    write_edge_list(os, net.candidates.superset, &zeros, &net.candidates.truth, h);
  }
  std::printf("%s\n", net.description.c_str());
  if (has_fakes) std::printf("fake fraction %.4f\n", net.candidates.fake_fraction());
  return 0;
}

int cmd_params(const Common& common, const std::string& graph_path, const std::string& out) {
  const KeyValueConfig cfg = common.resolve();
  const auto f = read_edge_list(graph_path);
  const Graph g = f.truth.empty() ? f.graph : CandidateEdgeSet{f.graph, f.truth}.truth_graph();
  Rng rng(seed_of(cfg));
  const EdgeParams alpha = sample_params(g.num_edges(), build_param_dist(cfg), rng);
  Header h = stamped(cfg);
  h.set("params", cfg.str("params.dist", "uniform"));
  auto os = open_output(out);
  write_edge_list(os, g, &alpha, nullptr, h);
  return 0;
}

int cmd_simulate(const Common& common, const std::string& graph_path, const std::string& out) {
  const KeyValueConfig cfg = common.resolve();
  const auto f = read_edge_list(graph_path);
  if (!f.alpha) detail::fail(graph_path, ": simulation needs an alpha column");
  const Graph g = f.graph;
  const auto m = cfg.integer("sim.M", 1000);
  if (m < 1) detail::fail("need at least one cascade");
  const int T = static_cast<int>(cfg.integer("sim.T", 5));
  if (T < 1) detail::fail("horizon must be >= 1");
  const std::string policy_name = cfg.str("sim.seed_policy", "uniform");
  SeedPolicy policy;
  if (policy_name == "round-robin") policy = SeedPolicy::round_robin();
  else if (policy_name != "uniform") detail::fail("unknown seed policy '", policy_name, "'");
  const std::uint64_t seed = seed_of(cfg);

  ObservationDescriptor desc{cfg.real("obs.xi", 0.0), build_grid(cfg), build_noise(cfg)};
  ObservationModel model;
  Rng hide_rng(derive_seed(seed, {4}));
  model.hidden = choose_hidden(g.num_nodes(), desc.xi, hide_rng);
  model.grid = desc.grid;
  model.noise = desc.noise;
  model.validate(g.num_nodes(), T);

  const auto cascades = simulate_set(g, *f.alpha, static_cast<std::size_t>(m), T, policy, derive_seed(seed, {3}));
  std::vector<ObservedCascade> observed(cascades.size());
  const std::uint64_t obs_seed = derive_seed(seed, {5});
  detail::parallel_for(cascades.size(), [&](std::size_t c) {
    Rng r = Rng::stream(obs_seed, c);
    observed[c] = apply_observation(cascades[c], model, r);
  });
  Header h = stamped(cfg);
  desc.stamp(h);
  auto os = open_output(out);
  write_cascades(os, observed, g.num_nodes(), T, h);
  return 0;
}

int cmd_learn(const Common& common, const std::string& cascades_path, const std::string& graph_path,
              const std::string& out, const std::string& trace_path) {
  KeyValueConfig cfg = common.resolve();
  const CascadeFile data = read_cascades(cascades_path);
  if (data.cascades.empty()) detail::fail(cascades_path, ": no cascades");
  const ObservationDescriptor desc = data.observation();
  inherit_seed(cfg, data.header);
  if (cfg.str("learn.mode", "base") == "noisy" && !cfg.has("learn.noise")) {
    if (!desc.noise) detail::fail("noisy mode: cascade file records no noise kernel; pass --noise");
    cfg.set("learn.noise", join(desc.noise->pi));
  }
  const LearnerConfig learner = build_learner(cfg);
  const auto g = read_edge_list(graph_path);
  if (g.graph.num_nodes() != data.num_nodes)
    detail::fail("graph has ", g.graph.num_nodes(), " nodes, cascades have ", data.num_nodes);
  const bool drop_intervals = cfg.boolean("learn.intervals_as_hidden", false);
  const SufficientStats stats = aggregate_statistics(data.cascades, {drop_intervals});
  bool has_intervals = false;
  for (const auto& c : data.cascades)
    for (const auto& o : c.times) has_intervals |= o.is_interval();
  check_mode_compatible(learner.mode, has_intervals, drop_intervals);

  const LearnResult r = fit(g.graph, stats, learner);
  Header h = stamped(cfg);
  h.set("mode", learner.mode.name());
  h.set("iterations", std::to_string(r.iterations));
  h.set("converged", r.converged ? "1" : "0");
  h.set("surviving", std::to_string(r.num_surviving()));
  if (learner.mode.shared_alpha()) h.set("shared_alpha", format_double(r.shared_alpha));
  {
    auto os = open_output(out);
    write_edge_list(os, g.graph, &r.alpha, nullptr, h);
  }
  if (!trace_path.empty()) {
    auto os = open_output(trace_path);
    write_trace_csv(os, r.trace, stamped(cfg));
  }
  std::printf("mode %s, %d iterations, %s, %zu/%zu edges, %.2fs\n", learner.mode.name().c_str(), r.iterations,
              r.converged ? "converged" : "not converged", r.num_surviving(), r.surviving.size(), r.seconds);
  if (learner.mode.shared_alpha()) std::printf("alpha=%.10g\n", r.shared_alpha);
  return r.converged ? 0 : 2;
}

int cmd_eval(const Common& common, const std::string& learned_path, const std::string& truth_path,
             const std::string& out, const std::string& scatter_path) {
  KeyValueConfig cfg = common.resolve();
  const auto learned = read_edge_list(learned_path);
  inherit_seed(cfg, learned.header);
  const auto truth = read_edge_list(truth_path);
  if (!learned.alpha) detail::fail(learned_path, ": no alpha column");
  if (!truth.alpha) detail::fail(truth_path, ": no alpha column");
  const Graph truth_graph = truth.truth.empty() ? truth.graph : CandidateEdgeSet{truth.graph, truth.truth}.truth_graph();
  const EdgeParams truth_alpha =
      truth.truth.empty() ? *truth.alpha : [&] {
        std::vector<double> a;
        for (EdgeId e = 0; e < truth.graph.num_edges(); ++e)
          if (truth.truth[e]) a.push_back((*truth.alpha)[e]);
        return EdgeParams(std::move(a));
      }();
  for (EdgeId e = 0; e < truth_graph.num_edges(); ++e)
    if (!learned.graph.has_edge(truth_graph.edge(e).u, truth_graph.edge(e).v))
      detail::fail("truth edge (", truth_graph.edge(e).u, ",", truth_graph.edge(e).v, ") is not among the learned edges");
  CandidateEdgeSet cands{learned.graph, {}};
  cands.truth.resize(learned.graph.num_edges());
  for (EdgeId e = 0; e < learned.graph.num_edges(); ++e)
    cands.truth[e] = truth_graph.has_edge(learned.graph.edge(e).u, learned.graph.edge(e).v);
  const EdgeParams on_candidates = expand_to_superset(truth_graph, truth_alpha, learned.graph);
  const EvalReport report = evaluate(cands, *learned.alpha, on_candidates, cfg.real("eval.threshold", 1e-8));
  if (!out.empty()) {
    auto os = open_output(out);
    stamped(cfg).write(os);
    write_report_csv(os, report);
  }
  if (!scatter_path.empty()) {
    auto os = open_output(scatter_path);
    stamped(cfg).write(os);
    write_scatter_csv(os, learned.graph, on_candidates, *learned.alpha, cands.truth);
  }
  print_report(report);
  return 0;
}

int cmd_sweep(const Common& common, const std::string& out_dir) {
  const KeyValueConfig cfg = common.resolve();
  const auto rows = run_sweep(cfg, out_dir, &std::cerr);
  std::printf("%zu rows -> %s\n", rows.size(), (std::filesystem::path(out_dir) / "results.csv").string().c_str());
  return 0;
}

int cmd_check(const Common& common) {
  const KeyValueConfig cfg = common.resolve();
  bool ok = true;
  for (const auto& r : checks::run_all(seed_of(cfg))) {
    std::printf("%s %s: worst %.3g (tolerance %.0g, %zu instances)\n", r.passed() ? "PASS" : "FAIL", r.name.c_str(),
                r.worst, r.tolerance, r.instances);
    ok &= r.passed();
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Independent Cascade learning with dynamic message passing"};
  app.require_subcommand(1);

  Common c_graph, c_params, c_sim, c_learn, c_eval, c_sweep, c_check;
  std::string out, superset_out, graph_path, cascades_path, trace_path, learned_path, truth_path, scatter_path;

  auto* graph = app.add_subcommand("graph", "generate a network (and optional candidate superset)");
  c_graph.attach(graph);
  c_graph.bindings.add(graph, "--type", "graph.type", "er | ba | rr | tree | lattice-diag | file");
  c_graph.bindings.add(graph, "--n", "graph.n", "node count");
  c_graph.bindings.add(graph, "--avg-degree", "graph.avg_degree", "mean degree (er)");
  c_graph.bindings.add(graph, "--links", "graph.links", "links per new node (ba)");
  c_graph.bindings.add(graph, "--degree", "graph.degree", "degree (rr, tree)");
  c_graph.bindings.add(graph, "--side", "graph.side", "lattice side (lattice-diag)");
  c_graph.bindings.add(graph, "--path", "graph.path", "edge list (file)");
  c_graph.bindings.add(graph, "--fake-ratio", "graph.fake_ratio", "fake edges per true edge in the superset");
  graph->add_option("--out", out, "truth edge list")->required();
  graph->add_option("--superset-out", superset_out, "candidate file with truth flags");

  auto* params = app.add_subcommand("params", "draw transmission probabilities for a graph");
  c_params.attach(params);
  c_params.bindings.add(params, "--dist", "params.dist", "uniform | constant");
  c_params.bindings.add(params, "--lo", "params.lo", "uniform lower bound");
  c_params.bindings.add(params, "--hi", "params.hi", "uniform upper bound");
  c_params.bindings.add(params, "--value", "params.value", "constant value");
  params->add_option("--graph", graph_path, "edge list")->required()->check(CLI::ExistingFile);
  params->add_option("--out", out, "edge list with alpha")->required();

  auto* simulate = app.add_subcommand("simulate", "simulate cascades and apply the observation model");
  c_sim.attach(simulate);
  c_sim.bindings.add(simulate, "-M,--cascades", "sim.M", "number of cascades");
  c_sim.bindings.add(simulate, "-T,--horizon", "sim.T", "time horizon");
  c_sim.bindings.add(simulate, "--seed-policy", "sim.seed_policy", "uniform | round-robin");
  c_sim.bindings.add(simulate, "--xi", "obs.xi", "fraction of hidden nodes");
  c_sim.bindings.add(simulate, "--times", "obs.grid", "observation instants, e.g. 0,6");
  c_sim.bindings.add(simulate, "--noise", "obs.noise", "timestamp noise pi_-K..pi_K, e.g. 0.2,0.6,0.2");
  simulate->add_option("--graph", graph_path, "edge list with alpha")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out, "cascade file")->required();

  auto* learn = app.add_subcommand("learn", "fit transmission probabilities to cascades");
  c_learn.attach(learn);
  c_learn.bindings.add(learn, "--mode", "learn.mode", "base | simple | missing | noisy");
  c_learn.bindings.add(learn, "--noise", "learn.noise", "noise kernel for noisy mode (default: from cascade file)");
  c_learn.bindings.add(learn, "--boundary", "learn.boundary", "noisy-mode boundary: clamped | truncated");
  c_learn.bindings.add(learn, "--prune", "learn.prune", "structure-learning threshold (0 disables)");
  c_learn.bindings.add(learn, "--lr", "learn.lr", "initial step size");
  c_learn.bindings.add(learn, "--max-iter", "learn.max_iter", "iteration limit");
  c_learn.bindings.add(learn, "--tol", "learn.tol", "stop when max |delta alpha| is below this");
  c_learn.bindings.add(learn, "--alpha-init", "learn.alpha_init", "starting alpha");
  c_learn.bindings.add(learn, "--grad-clip", "learn.grad_clip", "bound on each gradient entry");
  c_learn.bindings.add(learn, "--drop-intervals", "learn.intervals_as_hidden", "treat interval outcomes as hidden (true|false)");
  learn->add_option("--cascades", cascades_path, "cascade file")->required()->check(CLI::ExistingFile);
  auto* g_opt = learn->add_option("--graph", graph_path, "edge list to learn over");
  auto* s_opt = learn->add_option("--superset", graph_path, "candidate file to learn over");
  g_opt->excludes(s_opt);
  for (auto* o : {g_opt, s_opt}) o->check(CLI::ExistingFile);
  learn->add_option("--out", out, "learned edge list")->required();
  learn->add_option("--trace", trace_path, "objective trace CSV");

  auto* eval = app.add_subcommand("eval", "compare learned and true parameters");
  c_eval.attach(eval);
  c_eval.bindings.add(eval, "--threshold", "eval.threshold", "alpha at or above which an edge counts as found");
  eval->add_option("--learned", learned_path, "learned edge list")->required()->check(CLI::ExistingFile);
  eval->add_option("--truth", truth_path, "true edge list with alpha")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "report CSV");
  eval->add_option("--scatter", scatter_path, "scatter CSV");

  auto* sweep = app.add_subcommand("sweep", "grid over cascade counts and hidden fractions");
  c_sweep.attach(sweep);
  sweep->add_option("--out", out, "output directory")->required();

  auto* check = app.add_subcommand("check", "run the oracle and gradient checks");
  c_check.attach(check);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*graph) return cmd_graph(c_graph, out, superset_out);
    if (*params) return cmd_params(c_params, graph_path, out);
    if (*simulate) return cmd_simulate(c_sim, graph_path, out);
    if (*learn) {
      if (graph_path.empty()) throw CLI::RequiredError("--graph or --superset");
      return cmd_learn(c_learn, cascades_path, graph_path, out, trace_path);
    }
    if (*eval) return cmd_eval(c_eval, learned_path, truth_path, out, scatter_path);
    if (*sweep) return cmd_sweep(c_sweep, out);
    if (*check) return cmd_check(c_check);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
