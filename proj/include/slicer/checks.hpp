#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "slicer/cascade.hpp"
#include "slicer/dmp.hpp"
#include "slicer/graph.hpp"
#include "slicer/learner.hpp"
#include "slicer/rng.hpp"

namespace slicer::checks {

struct CheckResult {
  std::string name;
  double worst = 0.0;  // largest observed deviation
  double tolerance = 0.0;
  std::size_t instances = 0;
  bool passed() const { return worst < tolerance; }
};

/// Uniform random labelled tree with `edges` edges (random recursive tree).
inline Graph random_tree(std::size_t edges, Rng& rng) {
  std::vector<Edge> e;
  for (NodeId v = 1; v <= edges; ++v) e.push_back(make_edge(static_cast<NodeId>(rng.below(v)), v));
  return Graph(edges + 1, std::move(e));
}

/// DMP marginals against exhaustive percolation on random trees.
inline CheckResult tree_exactness(std::size_t count, std::uint64_t seed, std::size_t max_edges = 12, int max_horizon = 6) {
  CheckResult r{"tree exactness", 0.0, 1e-10, count};
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const Graph g = random_tree(1 + rng.below(max_edges), rng);
    std::vector<double> a(g.num_edges());
    for (auto& x : a) x = rng.uniform();
    const EdgeParams params(std::move(a));
    const auto s = static_cast<NodeId>(rng.below(g.num_nodes()));
    const int T = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_horizon)));
    const DmpRun run = dmp_forward(g, params, InitialCondition::single_seed(g.num_nodes(), s), T);
    const MarginalTable exact = exact_marginals_bruteforce(g, params, s, T);
    for (NodeId i = 0; i < g.num_nodes(); ++i)
      for (int t = 0; t <= T; ++t) r.worst = std::max(r.worst, std::abs(run.marginal(i, t) - exact.at(i, t)));
  }
  return r;
}

/// Division-based forward pass against explicit products, on random graphs
/// where about a fifth of the edges have alpha exactly 1.
inline CheckResult fast_form_equivalence(std::size_t count, std::uint64_t seed) {
  CheckResult r{"fast form equivalence", 0.0, 1e-12, count};
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t n = 5 + rng.below(36);
    const Graph g = gen_erdos_renyi(n, 2.0 + 2.0 * rng.uniform(), rng);
    if (g.num_edges() == 0) continue;
    std::vector<double> a(g.num_edges());
    for (auto& x : a) x = rng.bernoulli(0.2) ? 1.0 : rng.uniform();
    const EdgeParams params(std::move(a));
    const int T = 1 + static_cast<int>(rng.below(8));
    InitialCondition init;
    init.p0.assign(n, 0.0);
    init.p0[rng.below(n)] = 1.0;
    if (rng.bernoulli(0.5)) init.p0[rng.below(n)] = rng.uniform();
    const DmpRun slow = dmp_forward(g, params, init, T);
    const DmpRun fast = dmp_forward_fast(g, params, init, T);
    for (int t = 0; t <= T; ++t) {
      for (NodeId i = 0; i < n; ++i) r.worst = std::max(r.worst, std::abs(slow.marginal(i, t) - fast.marginal(i, t)));
      for (DirEdgeId d = 0; d < g.num_directed(); ++d)
        r.worst = std::max(r.worst, std::abs(slow.message(d, t) - fast.message(d, t)));
    }
  }
  return r;
}

/// Small instance with observed data for one learner mode: data are
/// generated from one parameter draw and the gradient is probed at another.
struct GradientInstance {
  Graph graph;
  SufficientStats stats;
  LearnerMode mode;
  EdgeParams probe;
};

inline GradientInstance gradient_instance(LearnerMode::Kind kind, Rng& rng) {
  GradientInstance inst;
  const std::size_t n = 6 + rng.below(5);
  do {
    inst.graph = gen_erdos_renyi(n, 3.0, rng);
  } while (inst.graph.num_edges() < 3);
  const std::size_t m = inst.graph.num_edges();
  const int T = 4;
  const bool shared = kind == LearnerMode::Kind::SimpleGraph;
  const EdgeParams truth = sample_params(m, shared ? ParamDist{ConstantDist{0.4}} : ParamDist{UniformDist{0.1, 0.9}}, rng);
  const auto cascades = simulate_set(inst.graph, truth, 300, T, SeedPolicy::uniform_random(), rng());
  ObservationModel model;
  model.hidden = choose_hidden(n, 0.2, rng);
  switch (kind) {
    case LearnerMode::Kind::Base:
      inst.mode = LearnerMode::base();
      break;
    case LearnerMode::Kind::SimpleGraph:
      inst.mode = LearnerMode::simple_graph();
      break;
    case LearnerMode::Kind::MissingTimes:
      model.grid = {0, 2, 4};
      inst.mode = LearnerMode::missing_times();
      break;
    case LearnerMode::Kind::NoisyTimes:
      model.noise = NoiseSpec::symmetric_k1();
      inst.mode = LearnerMode::noisy_times(NoiseSpec::symmetric_k1());
      break;
  }
  std::vector<ObservedCascade> observed;
  for (const auto& c : cascades) observed.push_back(apply_observation(c, model, rng));
  inst.stats = aggregate_statistics(observed);
  inst.probe = shared ? EdgeParams::constant(m, 0.25 + 0.5 * rng.uniform())
                      : sample_params(m, UniformDist{0.15, 0.85}, rng);
  return inst;
}

/// Adjoint gradient against central differences in all four learner modes.
inline CheckResult gradient_finite_difference(std::size_t per_mode, std::uint64_t seed, double h = 1e-6) {
  CheckResult r{"gradient vs finite differences", 0.0, 1e-4, 0};
  Rng rng(seed);
  for (auto kind : {LearnerMode::Kind::Base, LearnerMode::Kind::SimpleGraph, LearnerMode::Kind::MissingTimes,
                    LearnerMode::Kind::NoisyTimes}) {
    for (std::size_t k = 0; k < per_mode; ++k) {
      const auto inst = gradient_instance(kind, rng);
      const Problem problem(inst.graph, inst.stats, inst.mode);
      ++r.instances;
      if (inst.mode.shared_alpha()) {
        r.worst = std::max(r.worst, finite_difference_check(problem, inst.probe, std::nullopt, h).rel_error);
      } else {
        for (EdgeId e = 0; e < inst.graph.num_edges(); ++e)
          r.worst = std::max(r.worst, finite_difference_check(problem, inst.probe, e, h).rel_error);
      }
    }
  }
  return r;
}

/// Noisy mode with a delta kernel and missing mode on a full grid must
/// reproduce the base objective and gradient.
inline CheckResult mode_reductions(std::size_t count, std::uint64_t seed) {
  CheckResult r{"mode reductions", 0.0, 1e-12, count};
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const auto inst = gradient_instance(LearnerMode::Kind::Base, rng);
    const Problem base(inst.graph, inst.stats, LearnerMode::base());
    const Problem delta(inst.graph, inst.stats, LearnerMode::noisy_times(NoiseSpec{{1.0}}));
    const Problem delta_wide(inst.graph, inst.stats, LearnerMode::noisy_times(NoiseSpec{{0.0, 1.0, 0.0}}));
    const Problem missing(inst.graph, inst.stats, LearnerMode::missing_times());
    const auto alpha = DirectedParams::from(inst.probe);
    const double ob = base.objective(alpha);
    const auto gb = base.gradient(inst.probe);
    for (const Problem* p : {&delta, &delta_wide, &missing}) {
      r.worst = std::max(r.worst, std::abs(p->objective(alpha) - ob));
      const auto g = p->gradient(inst.probe);
      for (EdgeId e = 0; e < g.size(); ++e) r.worst = std::max(r.worst, std::abs(g[e] - gb[e]));
    }
  }
  return r;
}

inline std::vector<CheckResult> run_all(std::uint64_t seed) {
  return {tree_exactness(20, seed), fast_form_equivalence(50, seed + 1), gradient_finite_difference(3, seed + 2),
          mode_reductions(5, seed + 3)};
}

}  // namespace slicer::checks
