#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "slicer/cascade.hpp"
#include "slicer/detail/parallel.hpp"
#include "slicer/error.hpp"
#include "slicer/graph.hpp"
#include "slicer/io.hpp"
#include "slicer/learner.hpp"
#include "slicer/metrics.hpp"
#include "slicer/rng.hpp"

namespace slicer {

/// Flat `key = value` configuration. A `[section]` line prefixes the keys
/// that follow with `section.`; `#` starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& is) {
    KeyValueConfig cfg;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      std::string_view sv = line;
      if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
      sv = trim(sv);
      if (sv.empty()) continue;
      if (sv.front() == '[') {
        if (sv.back() != ']') detail::fail("config line ", lineno, ": unterminated section");
        section = std::string(trim(sv.substr(1, sv.size() - 2)));
        continue;
      }
      const auto eq = sv.find('=');
      if (eq == std::string_view::npos) detail::fail("config line ", lineno, ": expected key = value");
      std::string key(trim(sv.substr(0, eq)));
      if (key.empty()) detail::fail("config line ", lineno, ": empty key");
      if (!section.empty()) key = section + "." + key;
      cfg.set(key, std::string(trim(sv.substr(eq + 1))));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    auto in = open_input(path);
    try {
      return parse(in);
    } catch (const Error& e) {
      detail::fail(path, ": ", e.what());
    }
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  /// Applies a `key=value` override.
  void set_assignment(std::string_view kv) {
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos || eq == 0) detail::fail("override '", kv, "' is not key=value");
    set(std::string(trim(kv.substr(0, eq))), std::string(trim(kv.substr(eq + 1))));
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }
  std::string str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) detail::fail("config key '", key, "' is required");
    return it->second;
  }
  double real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }
  double real(const std::string& key) const { return guarded(key, [&] { return parse_double(str(key)); }); }
  long long integer(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }
  long long integer(const std::string& key) const { return guarded(key, [&] { return parse_int(str(key)); }); }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    detail::fail("config key '", key, "': expected a boolean, got '", v, "'");
  }
  std::vector<double> reals(const std::string& key) const {
    return guarded(key, [&] { return parse_double_list(str(key)); });
  }

  /// Sorted `key=value` lines; the basis of the config hash.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + '=' + v + '\n';
    return out;
  }
  std::string hash() const { return hex64(fnv1a64(canonical())); }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  template <typename Fn>
  std::invoke_result_t<Fn> guarded(const std::string& key, Fn&& fn) const {
    try {
      return fn();
    } catch (const Error& e) {
      detail::fail("config key '", key, "': ", e.what());
    }
  }

  std::map<std::string, std::string> values_;
};

/// Seed for a sub-task identified by a path of integers under a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master);
  for (auto p : path) h = mix64(h ^ mix64(p + 0x9e3779b97f4a7c15ULL));
  return h;
}

// ---------------------------------------------------------------------------
// Builders from configuration keys
// ---------------------------------------------------------------------------

/// A ground-truth network plus the candidate set the learner runs on. Without
/// a superset the candidates are the truth edges themselves.
struct Network {
  Graph truth;
  CandidateEdgeSet candidates;
  std::string description;
};

/// Keys: graph.type (er, ba, rr, tree, lattice-diag, file), graph.n,
/// graph.avg_degree, graph.links, graph.degree, graph.side, graph.path,
/// graph.fake_ratio (adds a superset of random non-edges).
inline Network build_network(const KeyValueConfig& cfg, Rng& rng) {
  const std::string type = cfg.str("graph.type", "er");
  Network net;
  std::optional<CandidateEdgeSet> superset;
  auto size = [&](const char* key, long long fallback) {
    const long long v = cfg.integer(key, fallback);
    if (v < 0) detail::fail("config key '", key, "' must be >= 0");
    return static_cast<std::size_t>(v);
  };
  if (type == "er") {
    net.truth = gen_erdos_renyi(size("graph.n", 100), cfg.real("graph.avg_degree", 3.0), rng);
  } else if (type == "ba") {
    net.truth = gen_barabasi_albert(size("graph.n", 100), cfg.real("graph.links", 1.5), rng);
  } else if (type == "rr") {
    net.truth = gen_random_regular(size("graph.n", 100), size("graph.degree", 3), rng);
  } else if (type == "tree") {
    net.truth = gen_regular_tree(size("graph.degree", 3), size("graph.n", 100));
  } else if (type == "lattice-diag") {
    superset = gen_lattice_with_diagonals(size("graph.side", 10), rng);
    net.truth = superset->truth_graph();
  } else if (type == "file") {
    auto f = read_edge_list(cfg.str("graph.path"));
    if (!f.truth.empty()) {
      superset = CandidateEdgeSet{f.graph, f.truth};
      net.truth = superset->truth_graph();
    } else {
      net.truth = f.graph;
    }
  } else {
    detail::fail("unknown graph.type '", type, "'");
  }
  const double fake_ratio = cfg.real("graph.fake_ratio", 0.0);
  if (!superset && fake_ratio > 0.0) superset = superset_with_fake_edges(net.truth, fake_ratio, rng);
  net.candidates = superset ? std::move(*superset)
                            : CandidateEdgeSet{net.truth, std::vector<bool>(net.truth.num_edges(), true)};
  std::ostringstream d;
  d << type << " n=" << net.truth.num_nodes() << " edges=" << net.truth.num_edges()
    << " candidates=" << net.candidates.superset.num_edges();
  net.description = d.str();
  return net;
}

/// Keys: params.dist (uniform, constant), params.lo, params.hi, params.value.
inline ParamDist build_param_dist(const KeyValueConfig& cfg) {
  const std::string dist = cfg.str("params.dist", "uniform");
  if (dist == "uniform") return UniformDist{cfg.real("params.lo", 0.0), cfg.real("params.hi", 1.0)};
  if (dist == "constant") return ConstantDist{cfg.real("params.value", 0.5)};
  detail::fail("unknown params.dist '", dist, "'");
}

inline std::optional<NoiseSpec> build_noise(const KeyValueConfig& cfg) {
  const std::string s = cfg.str("obs.noise", "none");
  if (s == "none" || s.empty()) return std::nullopt;
  NoiseSpec n{parse_double_list(s)};
  n.validate();
  return n;
}

inline std::vector<int> build_grid(const KeyValueConfig& cfg) {
  const std::string s = cfg.str("obs.grid", "full");
  if (s == "full" || s.empty()) return {};
  return parse_int_list(s);
}

/// Keys: learn.mode (base, simple, missing, noisy), learn.boundary (clamped,
/// truncated), learn.lr, learn.max_iter, learn.tol, learn.alpha_init,
/// learn.prune, learn.grad_clip. Noisy mode takes its kernel from obs.noise
/// unless learn.noise is set.
inline LearnerConfig build_learner(const KeyValueConfig& cfg) {
  LearnerConfig lc;
  const std::string mode = cfg.str("learn.mode", "base");
  const std::string boundary = cfg.str("learn.boundary", "clamped");
  NoiseBoundary b = NoiseBoundary::Clamped;
  if (boundary == "truncated") b = NoiseBoundary::Truncated;
  else if (boundary != "clamped") detail::fail("unknown learn.boundary '", boundary, "'");
  if (mode == "base") lc.mode = LearnerMode::base();
  else if (mode == "simple") lc.mode = LearnerMode::simple_graph();
  else if (mode == "missing") lc.mode = LearnerMode::missing_times();
  else if (mode == "noisy") {
    const std::string key = cfg.has("learn.noise") ? "learn.noise" : "obs.noise";
    if (!cfg.has(key) || cfg.str(key) == "none") detail::fail("noisy mode needs a noise kernel (learn.noise or obs.noise)");
    lc.mode = LearnerMode::noisy_times(NoiseSpec{cfg.reals(key)}, b);
  } else {
    detail::fail("unknown learn.mode '", mode, "'");
  }
  lc.learning_rate = cfg.real("learn.lr", lc.learning_rate);
  lc.max_iterations = static_cast<int>(cfg.integer("learn.max_iter", lc.max_iterations));
  lc.tolerance = cfg.real("learn.tol", lc.tolerance);
  lc.alpha_init = cfg.real("learn.alpha_init", lc.alpha_init);
  lc.prune_threshold = cfg.real("learn.prune", lc.prune_threshold);
  lc.grad_clip = cfg.real("learn.grad_clip", lc.grad_clip);
  lc.validate();
  return lc;
}

/// Rejects data the chosen mode cannot interpret, before any optimisation.
/// Interval outcomes need missing mode unless they are dropped as hidden.
inline void check_mode_compatible(const LearnerMode& mode, bool data_has_intervals, bool intervals_as_hidden) {
  if (data_has_intervals && !intervals_as_hidden && mode.kind != LearnerMode::Kind::MissingTimes)
    detail::fail("cascades contain interval outcomes; use missing mode or drop intervals as hidden");
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
  std::size_t network = 0;
  std::size_t param_draw = 0;
  std::size_t cascades = 0;
  double xi = 0.0;
  double l1 = 0.0;
  double bias = 0.0;
  double auc = 0.0;
  int iterations = 0;
  bool converged = false;
  double runtime = 0.0;
};

inline constexpr const char* kSweepColumns = "network,param_draw,M,xi,l1,bias,auc,iterations,converged,runtime_s";

inline std::string format_row(const SweepRow& r) {
  std::ostringstream os;
  os << r.network << ',' << r.param_draw << ',' << r.cascades << ',' << format_double(r.xi) << ','
     << format_double(r.l1) << ',' << format_double(r.bias) << ',' << format_double(r.auc) << ',' << r.iterations
     << ',' << (r.converged ? 1 : 0) << ',' << format_double(r.runtime);
  return os.str();
}

inline SweepRow parse_row(std::string_view line) {
  const auto c = split(line, ',');
  if (c.size() != 10) detail::fail("sweep row has ", c.size(), " columns, expected 10");
  auto real = [](std::string_view s) {
    return s == "nan" || s == "-nan" ? std::numeric_limits<double>::quiet_NaN() : parse_double(s);
  };
  SweepRow r;
  r.network = parse_int<std::size_t>(c[0]);
  r.param_draw = parse_int<std::size_t>(c[1]);
  r.cascades = parse_int<std::size_t>(c[2]);
  r.xi = real(c[3]);
  r.l1 = real(c[4]);
  r.bias = real(c[5]);
  r.auc = real(c[6]);
  r.iterations = parse_int<int>(c[7]);
  r.converged = c[8] == "1";
  r.runtime = real(c[9]);
  return r;
}

/// Sweep axes and replication, read from `sweep.*` keys plus sim.T and seed.
struct SweepPlan {
  std::vector<std::size_t> cascades;  // sweep.M, ascending
  std::vector<double> xi;             // sweep.xi
  std::size_t networks = 1;           // sweep.networks
  std::size_t param_draws = 1;        // sweep.param_draws
  int horizon = 5;                    // sim.T
  std::uint64_t seed = 0;             // seed
  bool intervals_as_hidden = false;   // learn.intervals_as_hidden
  double eval_threshold = 1e-8;       // eval.threshold

  static SweepPlan from(const KeyValueConfig& cfg) {
    SweepPlan p;
    for (double m : cfg.reals("sweep.M")) {
      if (!(m >= 1.0) || m != std::floor(m)) detail::fail("sweep.M entries must be positive integers");
      p.cascades.push_back(static_cast<std::size_t>(m));
    }
    p.xi = cfg.has("sweep.xi") ? cfg.reals("sweep.xi") : std::vector<double>{cfg.real("obs.xi", 0.0)};
    if (p.cascades.empty() || p.xi.empty()) detail::fail("sweep axes must be non-empty");
    std::sort(p.cascades.begin(), p.cascades.end());
    p.networks = static_cast<std::size_t>(cfg.integer("sweep.networks", 1));
    p.param_draws = static_cast<std::size_t>(cfg.integer("sweep.param_draws", 1));
    if (cfg.integer("sweep.networks", 1) < 1 || cfg.integer("sweep.param_draws", 1) < 1)
      detail::fail("replication counts must be >= 1");
    p.horizon = static_cast<int>(cfg.integer("sim.T", 5));
    if (p.horizon < 1) detail::fail("sim.T must be >= 1");
    p.seed = static_cast<std::uint64_t>(cfg.integer("seed", 0));
    p.intervals_as_hidden = cfg.boolean("learn.intervals_as_hidden", false);
    p.eval_threshold = cfg.real("eval.threshold", 1e-8);
    return p;
  }

  std::size_t num_cells() const { return networks * param_draws * cascades.size() * xi.size(); }
};

inline std::string cell_file_name(std::size_t network, std::size_t draw, std::size_t m, std::size_t xi_index) {
  return "net" + std::to_string(network) + "_draw" + std::to_string(draw) + "_M" + std::to_string(m) + "_xi" +
         std::to_string(xi_index) + ".csv";
}

/// One (network, parameter draw) replicate: every M and xi cell. The largest
/// cascade set is simulated once; smaller M use its prefixes. Cells whose
/// file already exists in `cell_dir` are skipped.
inline std::vector<SweepRow> run_replicate(const KeyValueConfig& cfg, const SweepPlan& plan, std::size_t network,
                                           std::size_t draw, const std::filesystem::path& cell_dir) {
  const std::string hash = cfg.hash();
  std::vector<SweepRow> rows;
  std::vector<std::pair<std::size_t, std::size_t>> missing;  // (M index, xi index)
  for (std::size_t x = 0; x < plan.xi.size(); ++x)
    for (std::size_t k = 0; k < plan.cascades.size(); ++k)
      if (!std::filesystem::exists(cell_dir / cell_file_name(network, draw, plan.cascades[k], x))) missing.emplace_back(k, x);
  if (missing.empty()) return rows;

  Rng net_rng(derive_seed(plan.seed, {1, network}));
  const Network net = build_network(cfg, net_rng);
  Rng param_rng(derive_seed(plan.seed, {2, network, draw}));
  const EdgeParams truth = sample_params(net.truth.num_edges(), build_param_dist(cfg), param_rng);
  const EdgeParams truth_on_candidates = expand_to_superset(net.truth, truth, net.candidates.superset);
  const std::size_t max_m = plan.cascades.back();
  const auto cascades =
      simulate_set(net.truth, truth, max_m, plan.horizon, SeedPolicy::uniform_random(), derive_seed(plan.seed, {3, network, draw}));
  const LearnerConfig learner = build_learner(cfg);

  for (std::size_t x = 0; x < plan.xi.size(); ++x) {
    bool needed = false;
    for (const auto& [k, xx] : missing) needed |= xx == x;
    if (!needed) continue;
    Rng hide_rng(derive_seed(plan.seed, {4, network, draw, x}));
    ObservationModel model;
    model.hidden = choose_hidden(net.truth.num_nodes(), plan.xi[x], hide_rng);
    model.grid = build_grid(cfg);
    model.noise = build_noise(cfg);
    model.validate(net.truth.num_nodes(), plan.horizon);
    const std::uint64_t obs_seed = derive_seed(plan.seed, {5, network, draw, x});
    std::vector<ObservedCascade> observed(max_m);
    detail::parallel_for(max_m, [&](std::size_t c) {
      Rng r = Rng::stream(obs_seed, c);
      observed[c] = apply_observation(cascades[c], model, r);
    });

    for (const auto& [k, xx] : missing) {
      if (xx != x) continue;
      const std::size_t m = plan.cascades[k];
      const auto stats = aggregate_statistics(std::span<const ObservedCascade>(observed.data(), m),
                                              {plan.intervals_as_hidden});
      check_mode_compatible(learner.mode, stats.has_intervals(), plan.intervals_as_hidden);
      const LearnResult fitres = fit(net.candidates, stats, learner);
      const EvalReport rep = evaluate(net.candidates, fitres.alpha, truth_on_candidates, plan.eval_threshold);
      SweepRow row{network, draw, m, plan.xi[x], rep.mean_l1, rep.mean_signed, rep.auc, fitres.iterations,
                   fitres.converged, fitres.seconds};
      auto out = open_output((cell_dir / cell_file_name(network, draw, m, x)).string());
      out << "# config_hash=" << hash << "\n# seed=" << plan.seed << '\n' << kSweepColumns << '\n' << format_row(row) << '\n';
      rows.push_back(row);
    }
  }
  return rows;
}

inline SweepRow read_cell(const std::filesystem::path& path) {
  auto in = open_input(path.string());
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line != kSweepColumns) return parse_row(line);
  detail::fail(path.string(), ": no data row");
}

/// Runs (or resumes) a sweep into `out_dir`: per-cell files under cells/,
/// then results.csv with one row per (network, draw, M, xi) and heatmap.csv
/// with per-(M, xi) means. Replicates run in parallel.
inline std::vector<SweepRow> run_sweep(const KeyValueConfig& cfg, const std::filesystem::path& out_dir,
                                       std::ostream* log = nullptr) {
  const SweepPlan plan = SweepPlan::from(cfg);
  const auto cell_dir = out_dir / "cells";
  std::filesystem::create_directories(cell_dir);
  const std::size_t replicates = plan.networks * plan.param_draws;
  std::mutex log_mutex;
  detail::parallel_for(replicates, [&](std::size_t r) {
    const auto rows = run_replicate(cfg, plan, r / plan.param_draws, r % plan.param_draws, cell_dir);
    if (log && !rows.empty()) {
      std::lock_guard lock(log_mutex);
      *log << "replicate " << r + 1 << "/" << replicates << ": " << rows.size() << " cells\n";
    }
  });

  std::vector<SweepRow> rows;
  for (std::size_t nw = 0; nw < plan.networks; ++nw)
    for (std::size_t d = 0; d < plan.param_draws; ++d)
      for (std::size_t m : plan.cascades)
        for (std::size_t x = 0; x < plan.xi.size(); ++x) rows.push_back(read_cell(cell_dir / cell_file_name(nw, d, m, x)));

  Header header;
  header.set("config_hash", cfg.hash());
  header.set("seed", std::to_string(plan.seed));
  {
    auto out = open_output((out_dir / "results.csv").string());
    header.write(out);
    out << kSweepColumns << '\n';
    for (const auto& r : rows) out << format_row(r) << '\n';
  }
  {
    auto out = open_output((out_dir / "heatmap.csv").string());
    header.write(out);
    out << "M,xi,mean_l1,mean_bias,mean_auc,cells\n";
    for (std::size_t m : plan.cascades)
      for (double xi : plan.xi) {
        double l1 = 0, bias = 0, auc = 0;
        std::size_t count = 0;
        for (const auto& r : rows)
          if (r.cascades == m && r.xi == xi) {
            l1 += r.l1;
            bias += r.bias;
            auc += r.auc;
            ++count;
          }
        const auto c = static_cast<double>(count);
        out << m << ',' << format_double(xi) << ',' << format_double(l1 / c) << ',' << format_double(bias / c) << ','
            << format_double(auc / c) << ',' << count << '\n';
      }
  }
  return rows;
}

}  // namespace slicer
