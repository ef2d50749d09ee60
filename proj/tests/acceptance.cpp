// Acceptance gate: one PASS/FAIL line per criterion. Optional arguments
// select criteria by id (e.g. `acceptance AC5 AC7`).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "support.hpp"

using namespace slicer;
using namespace testing_support;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Scenario {
  CandidateEdgeSet candidates;
  Graph truth_graph;
  EdgeParams truth;
  int horizon = 5;
  double xi = 0.0;
  ObservationModel model;  // hidden mask filled per run
};

struct FitOutcome {
  double l1 = 0.0, bias = 0.0, auc = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Simulates max(Ms) cascades once, observes them, and fits every prefix.
std::vector<FitOutcome> run_prefixes(const Scenario& sc, const std::vector<std::size_t>& Ms, const LearnerConfig& lc,
                                  std::uint64_t seed, bool drop_intervals = false) {
  const std::size_t max_m = *std::max_element(Ms.begin(), Ms.end());
  const auto cascades = simulate_set(sc.truth_graph, sc.truth, max_m, sc.horizon, SeedPolicy::uniform_random(), seed);
  ObservationModel model = sc.model;
  Rng hide(derive_seed(seed, {1}));
  model.hidden = choose_hidden(sc.truth_graph.num_nodes(), sc.xi, hide);
  std::vector<ObservedCascade> obs(max_m);
  for (std::size_t c = 0; c < max_m; ++c) {
    Rng r = Rng::stream(derive_seed(seed, {2}), c);
    obs[c] = apply_observation(cascades[c], model, r);
  }
  const auto truth_on_candidates = expand_to_superset(sc.truth_graph, sc.truth, sc.candidates.superset);
  std::vector<FitOutcome> out;
  for (std::size_t m : Ms) {
    const auto stats = aggregate_statistics(std::span<const ObservedCascade>(obs.data(), m), {drop_intervals});
    const auto r = fit(sc.candidates, stats, lc);
    const auto rep = evaluate(sc.candidates, r.alpha, truth_on_candidates, 1e-8);
    out.push_back({rep.mean_l1, rep.mean_signed, rep.auc, r.iterations, r.converged});
  }
  return out;
}

Scenario er_scenario(Rng& rng, ParamDist dist, int T, double xi) {
  Scenario sc;
  sc.truth_graph = gen_erdos_renyi(100, 3.0, rng);
  sc.truth = sample_params(sc.truth_graph.num_edges(), dist, rng);
  sc.candidates = {sc.truth_graph, std::vector<bool>(sc.truth_graph.num_edges(), true)};
  sc.horizon = T;
  sc.xi = xi;
  return sc;
}

constexpr std::uint64_t kSeeds = 5;

Verdict from_check(const checks::CheckResult& r) {
  return {r.passed(), fmt("worst=%.3g tol=%.0e instances=%zu", r.worst, r.tolerance, r.instances)};
}

Verdict ac1() { return from_check(checks::tree_exactness(20, 1001)); }
Verdict ac2() { return from_check(checks::fast_form_equivalence(50, 1002)); }
Verdict ac3() { return from_check(checks::gradient_finite_difference(3, 1003)); }

Verdict ac4() {
  double worst = 0.0;
  Rng rng(1004);
  int instances = 0;
  for (auto kind : {LearnerMode::Kind::Base, LearnerMode::Kind::MissingTimes, LearnerMode::Kind::NoisyTimes}) {
    for (int k = 0; k < 3; ++k, ++instances) {
      const Graph g = gen_erdos_renyi(10, 3.0, rng);
      const auto truth = sample_params(g.num_edges(), UniformDist{0.1, 0.9}, rng);
      ObservationModel model;
      model.hidden = choose_hidden(10, 0.2, rng);
      LearnerMode mode = LearnerMode::base();
      if (kind == LearnerMode::Kind::MissingTimes) {
        model.grid = {0, 2, 3};
        mode = LearnerMode::missing_times();
      } else if (kind == LearnerMode::Kind::NoisyTimes) {
        model.noise = NoiseSpec::symmetric_k1();
        mode = LearnerMode::noisy_times(NoiseSpec::symmetric_k1());
      }
      const auto cs = simulate_set(g, truth, 500, 5, SeedPolicy::uniform_random(), rng());
      const auto stats = aggregate_statistics(observe_all(cs, model, rng()));
      const Problem problem(g, stats, mode);
      const auto probe = sample_params(g.num_edges(), UniformDist{0.1, 0.9}, rng);
      const auto alpha = DirectedParams::from(probe);
      const auto runs = problem.forward(alpha, false);
      const auto grad = problem.gradient(probe);
      std::vector<double> unsimplified(g.num_edges(), 0.0);
      for (std::size_t s = 0; s < runs.size(); ++s) {
        const auto st = lambda_backward(g, alpha, runs[s], lambda_node(problem.observations().classes[s], runs[s]));
        const auto dO = reference_objective_gradient_p(stats.classes[s], stats.total_cascades(), runs[s], mode);
        for (int t = 1; t <= runs[s].horizon(); ++t) {
          for (NodeId i = 0; i < g.num_nodes(); ++i) worst = std::max(worst, std::abs(dL_dnode(dO, st, i, t)));
          for (DirEdgeId d = 0; d < g.num_directed(); ++d)
            worst = std::max(worst, std::abs(dL_dmessage(g, alpha, runs[s], st, d, t)));
        }
        for (EdgeId e = 0; e < g.num_edges(); ++e) unsimplified[e] += dL_dalpha_unsimplified(g, alpha, runs[s], st, e);
      }
      for (EdgeId e = 0; e < g.num_edges(); ++e) worst = std::max(worst, std::abs(unsimplified[e] - grad[e]));
    }
  }
  return {worst < 1e-9, fmt("worst residual=%.3g tol=1e-09 instances=%d", worst, instances)};
}

Verdict ac5() {
  int good = 0;
  double sum = 0.0;
  std::string per;
  for (std::uint64_t s = 1; s <= kSeeds; ++s) {
    Rng rng(5000 + s);
    const auto sc = er_scenario(rng, ConstantDist{0.5}, 5, 0.5);
    LearnerConfig lc;
    lc.mode = LearnerMode::simple_graph();
    const double l1 = run_prefixes(sc, {10}, lc, derive_seed(5, {s}))[0].l1;
    good += l1 <= 0.1;
    sum += l1;
    per += fmt(" %.3f", l1);
  }
  return {good >= 4, fmt("seeds<=0.1: %d/5 mean=%.3f per-seed:%s", good, sum / kSeeds, per.c_str())};
}

Verdict ac6() {
  const std::vector<std::size_t> Ms{100, 1000, 10000, 100000};
  int monotone = 0;
  double top = 0.0;
  std::string per;
  for (std::uint64_t s = 1; s <= kSeeds; ++s) {
    Rng rng(6000 + s);
    const auto sc = er_scenario(rng, UniformDist{0.0, 1.0}, 5, 0.0);
    const auto r = run_prefixes(sc, Ms, LearnerConfig{}, derive_seed(6, {s}));
    monotone += r[0].l1 > r[1].l1 && r[1].l1 > r[2].l1;
    top += r[3].l1;
    per += fmt(" [%.3f %.3f %.4f %.4f]", r[0].l1, r[1].l1, r[2].l1, r[3].l1);
  }
  top /= kSeeds;
  return {top < 0.05 && monotone >= 4,
          fmt("mean L1(1e5)=%.4f monotone seeds=%d/5 L1 by M:%s", top, monotone, per.c_str())};
}

Verdict ac7() {
  double auc_small = 0.0, auc_large = 0.0, worst_large = 1.0;
  for (std::uint64_t s = 1; s <= kSeeds; ++s) {
    Rng rng(7000 + s);
    Scenario sc;
    sc.candidates = gen_lattice_with_diagonals(10, rng);
    sc.truth_graph = sc.candidates.truth_graph();
    sc.truth = sample_params(sc.truth_graph.num_edges(), UniformDist{0.0, 1.0}, rng);
    sc.horizon = 5;
    sc.xi = 0.25;
    LearnerConfig lc;
    lc.prune_threshold = 1e-8;
    const auto r = run_prefixes(sc, {100, 100000}, lc, derive_seed(7, {s}));
    auc_small += r[0].auc;
    auc_large += r[1].auc;
    worst_large = std::min(worst_large, r[1].auc);
  }
  auc_small /= kSeeds;
  auc_large /= kSeeds;
  return {auc_large >= 0.99 && auc_small < auc_large,
          fmt("mean AUC(1e2)=%.4f mean AUC(1e5)=%.4f min AUC(1e5)=%.4f", auc_small, auc_large, worst_large)};
}

Verdict ac8() {
  const std::vector<std::size_t> Ms{100, 1000, 10000, 100000};
  std::vector<double> l1(Ms.size(), 0.0);
  double bias_missing = 0.0, bias_naive = 0.0;
  for (std::uint64_t s = 1; s <= kSeeds; ++s) {
    Rng rng(8000 + s);
    auto sc = er_scenario(rng, UniformDist{0.0, 1.0}, 6, 0.0);
    sc.model.grid = {0, 6};
    LearnerConfig missing;
    missing.mode = LearnerMode::missing_times();
    const auto r = run_prefixes(sc, Ms, missing, derive_seed(8, {s}));
    for (std::size_t k = 0; k < Ms.size(); ++k) l1[k] += r[k].l1 / kSeeds;
    bias_missing += r.back().bias / kSeeds;
    bias_naive += run_prefixes(sc, {100000}, LearnerConfig{}, derive_seed(8, {s}), true)[0].bias / kSeeds;
  }
  const bool decreasing = l1[0] > l1[1] && l1[1] > l1[2] && l1[2] > l1[3];
  const double ratio = std::abs(bias_naive) / std::abs(bias_missing);
  return {decreasing && ratio >= 3.0,
          fmt("bias naive=%.4f missing=%.4f ratio=%.1f; missing L1 by M: %.4f %.4f %.4f %.4f", bias_naive,
              bias_missing, ratio, l1[0], l1[1], l1[2], l1[3])};
}

Verdict ac9() {
  double l1_noisy = 0.0, l1_naive = 0.0, bias_noisy = 0.0;
  for (std::uint64_t s = 1; s <= kSeeds; ++s) {
    Rng rng(9000 + s);
    auto sc = er_scenario(rng, UniformDist{0.0, 1.0}, 5, 0.1);
    sc.model.noise = NoiseSpec::symmetric_k1();
    LearnerConfig noisy;
    noisy.mode = LearnerMode::noisy_times(NoiseSpec::symmetric_k1());
    const auto a = run_prefixes(sc, {100000}, noisy, derive_seed(9, {s}))[0];
    const auto b = run_prefixes(sc, {100000}, LearnerConfig{}, derive_seed(9, {s}))[0];
    l1_noisy += a.l1 / kSeeds;
    bias_noisy += a.bias / kSeeds;
    l1_naive += b.l1 / kSeeds;
  }
  return {l1_noisy < l1_naive && std::abs(bias_noisy) < 0.05,
          fmt("L1 noisy=%.4f naive=%.4f; bias noisy=%.4f", l1_noisy, l1_naive, bias_noisy)};
}

Verdict ac10() {
  ScopedEnv single("SLICER_THREADS", "1");
  const int T = 5;
  const std::size_t classes = 20;
  std::vector<double> edges, seconds;
  for (std::size_t n : {100, 200, 400, 800, 1600}) {
    Rng rng(10000 + n);
    const Graph g = gen_erdos_renyi(n, 3.0, rng);
    const auto truth = sample_params(g.num_edges(), UniformDist{0.0, 1.0}, rng);
    std::vector<NodeId> seeds(classes);
    std::iota(seeds.begin(), seeds.end(), 0);
    const auto cs = simulate_set(g, truth, 10 * classes, T, SeedPolicy::fixed_list(seeds), 10);
    std::vector<ObservedCascade> obs;
    for (const auto& c : cs) obs.push_back(observe_fully(c));
    const Problem problem(g, aggregate_statistics(obs), LearnerMode::base());
    const auto probe = EdgeParams::constant(g.num_edges(), 0.3);
    double best = 1e300;
    for (int rep = 0; rep < 7; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto grad = problem.gradient(probe);
      const double obj = problem.objective(DirectedParams::from(probe));
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!std::isfinite(obj + grad[0])) return {false, "non-finite objective"};
      best = std::min(best, dt);
    }
    edges.push_back(static_cast<double>(g.num_edges()));
    seconds.push_back(best);
  }
  const double n = static_cast<double>(edges.size());
  const double mx = std::accumulate(edges.begin(), edges.end(), 0.0) / n;
  const double my = std::accumulate(seconds.begin(), seconds.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    sxy += (edges[k] - mx) * (seconds[k] - my);
    sxx += (edges[k] - mx) * (edges[k] - mx);
    syy += (seconds[k] - my) * (seconds[k] - my);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  std::string per;
  for (std::size_t k = 0; k < edges.size(); ++k) per += fmt(" %.0f:%.2fms", edges[k], seconds[k] * 1e3);
  return {r2 > 0.95, fmt("R^2=%.4f (|E|:time%s)", r2, per.c_str())};
}

Verdict ac11() { return from_check(checks::mode_reductions(5, 1011)); }

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"AC1 tree exactness", ac1},
      {"AC2 fast-form equivalence", ac2},
      {"AC3 gradient vs finite differences", ac3},
      {"AC4 stationarity residuals", ac4},
      {"AC5 simple-graph recovery", ac5},
      {"AC6 full-observation consistency", ac6},
      {"AC7 lattice structure learning", ac7},
      {"AC8 missing-times bias", ac8},
      {"AC9 noisy-timestamp bias", ac9},
      {"AC10 per-iteration cost scaling", ac10},
      {"AC11 mode-reduction identities", ac11},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const std::string id = name.substr(0, name.find(' '));
    if (!wanted.empty() && !wanted.contains(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !v.pass;
  }
  return failures == 0 ? 0 : 1;
}
