#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "slicer/detail/parallel.hpp"
#include "slicer/error.hpp"
#include "slicer/graph.hpp"
#include "slicer/rng.hpp"

namespace slicer {

/// Time sentinel for "not activated within the horizon". In the objective
/// algebra it behaves as step T+1 with p(T+1) = 1.
inline constexpr int kNever = std::numeric_limits<int>::max();

/// What is known about one node's activation in one cascade.
///
/// Interval(lo, hi) means activation in the window (lo, hi]; hi may be kNever
/// when the last observation instant precedes the horizon and the node was
/// still inactive there.
struct Outcome {
  enum class Kind : std::uint8_t { Exact, Interval, Star, Hidden };

  Kind kind = Kind::Hidden;
  int lo = 0;
  int hi = 0;

  static Outcome exact(int t) { return {Kind::Exact, t - 1, t}; }
  static Outcome interval(int lo, int hi) { return {Kind::Interval, lo, hi}; }
  static Outcome star() { return {Kind::Star, 0, kNever}; }
  static Outcome hidden() { return {Kind::Hidden, 0, 0}; }

  bool is_exact() const { return kind == Kind::Exact; }
  bool is_interval() const { return kind == Kind::Interval; }
  bool is_star() const { return kind == Kind::Star; }
  bool is_hidden() const { return kind == Kind::Hidden; }
  int time() const { return hi; }  // Exact only

  friend bool operator==(const Outcome&, const Outcome&) = default;
  friend auto operator<=>(const Outcome&, const Outcome&) = default;
};

/// Ground-truth realisation: Exact or Star per node.
struct Cascade {
  NodeId seed = 0;
  int horizon = 0;
  std::vector<Outcome> times;
};

/// Cascade as seen through an observation model; may contain Hidden and
/// Interval outcomes.
struct ObservedCascade {
  NodeId seed = 0;
  int horizon = 0;
  std::vector<Outcome> times;
};

/// Discrete timestamp noise: observed = true + k with probability pi[k + K].
struct NoiseSpec {
  std::vector<double> pi;

  int radius() const { return static_cast<int>(pi.size() / 2); }
  double prob(int k) const {
    const int K = radius();
    return (k < -K || k > K) ? 0.0 : pi[static_cast<std::size_t>(k + K)];
  }
  bool is_identity() const { return pi.size() == 1; }

  void validate() const {
    if (pi.empty() || pi.size() % 2 == 0) detail::fail("noise spec needs an odd number of probabilities, got ", pi.size());
    double total = 0.0;
    for (double p : pi) {
      if (!(p >= 0.0)) detail::fail("noise probability ", p, " is negative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) detail::fail("noise probabilities sum to ", total, ", expected 1");
  }

  /// The synthetic noise used in the timestamp experiments: K=1, 0.2/0.6/0.2.
  static NoiseSpec symmetric_k1() { return {{0.2, 0.6, 0.2}}; }
};

/// Which nodes report, at which instants, and with what timestamp noise.
struct ObservationModel {
  std::vector<bool> hidden;      // empty: nobody hidden
  std::vector<int> grid;         // empty: every step 0..T observed
  std::optional<NoiseSpec> noise;

  bool full_grid(int horizon) const {
    if (grid.empty()) return true;
    if (static_cast<int>(grid.size()) != horizon + 1) return false;
    for (int t = 0; t <= horizon; ++t)
      if (grid[static_cast<std::size_t>(t)] != t) return false;
    return true;
  }

  void validate(std::size_t n, int horizon) const {
    if (!hidden.empty() && hidden.size() != n) detail::fail("hidden mask has ", hidden.size(), " entries for ", n, " nodes");
    if (!grid.empty()) {
      if (!std::is_sorted(grid.begin(), grid.end()) || std::adjacent_find(grid.begin(), grid.end()) != grid.end())
        detail::fail("observation grid must be strictly increasing");
      if (grid.front() < 0 || grid.back() > horizon) detail::fail("observation grid outside [0,", horizon, "]");
      if (grid.front() != 0) detail::fail("observation grid must contain 0 so the initial condition is identifiable");
    }
    if (noise) noise->validate();
  }
};

/// Counts of one outcome for one (class, node).
struct OutcomeCount {
  Outcome outcome;
  std::uint64_t count = 0;
};

/// All cascades sharing one initial condition (a seed node).
struct ClassStats {
  NodeId seed = 0;
  std::uint64_t cascades = 0;
  std::vector<std::vector<OutcomeCount>> per_node;  // hidden outcomes omitted
};

/// Counts grouped by initial-condition class; the only input the learner needs.
struct SufficientStats {
  std::size_t num_nodes = 0;
  int horizon = 0;
  std::vector<ClassStats> classes;  // ordered by seed

  std::uint64_t total_cascades() const {
    std::uint64_t m = 0;
    for (const auto& c : classes) m += c.cascades;
    return m;
  }
  bool has_intervals() const {
    for (const auto& c : classes)
      for (const auto& node : c.per_node)
        for (const auto& oc : node)
          if (oc.outcome.is_interval()) return true;
    return false;
  }
};

// ---------------------------------------------------------------------------

/// One Independent Cascade realisation from a single seed.
inline Cascade simulate_cascade(const Graph& g, const EdgeParams& params, NodeId seed, int horizon, Rng& rng) {
  if (seed >= g.num_nodes()) detail::fail("seed ", seed, " out of range");
  if (horizon < 1) detail::fail("horizon must be >= 1");
  if (params.size() != g.num_edges()) detail::fail("params cover ", params.size(), " edges, graph has ", g.num_edges());
  Cascade c{seed, horizon, std::vector<Outcome>(g.num_nodes(), Outcome::star())};
  c.times[seed] = Outcome::exact(0);
  std::vector<NodeId> frontier{seed}, next;
  for (int t = 1; t <= horizon && !frontier.empty(); ++t) {
    next.clear();
    for (NodeId i : frontier)
      for (const auto& inc : g.neighbors(i)) {
        if (!c.times[inc.neighbor].is_star()) continue;
        if (rng.bernoulli(params[inc.edge])) {
          c.times[inc.neighbor] = Outcome::exact(t);
          next.push_back(inc.neighbor);
        }
      }
    std::swap(frontier, next);
  }
  return c;
}

/// Checks the IC reachability invariant: seed at 0, only Exact/Star, and every
/// node active at t > 0 has a neighbor active at t - 1.
inline bool is_valid_cascade(const Graph& g, const Cascade& c) {
  if (c.times.size() != g.num_nodes() || c.times[c.seed] != Outcome::exact(0)) return false;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const Outcome& o = c.times[i];
    if (o.is_star()) continue;
    if (!o.is_exact() || o.time() < 0 || o.time() > c.horizon) return false;
    if (o.time() == 0) {
      if (i != c.seed) return false;
      continue;
    }
    bool reached = false;
    for (const auto& inc : g.neighbors(i)) {
      const Outcome& nb = c.times[inc.neighbor];
      if (nb.is_exact() && nb.time() == o.time() - 1) reached = true;
    }
    if (!reached) return false;
  }
  return true;
}

struct SeedPolicy {
  enum class Kind { UniformRandom, RoundRobin, Fixed } kind = Kind::UniformRandom;
  std::vector<NodeId> fixed;  // cycled through for Kind::Fixed

  static SeedPolicy uniform_random() { return {}; }
  static SeedPolicy round_robin() { return {Kind::RoundRobin, {}}; }
  static SeedPolicy fixed_list(std::vector<NodeId> s) { return {Kind::Fixed, std::move(s)}; }
};

/// M independent cascades. Cascade c uses Rng::stream(master_seed, c), so any
/// prefix of a larger set equals the smaller set and results do not depend
/// on the worker count.
inline std::vector<Cascade> simulate_set(const Graph& g, const EdgeParams& params, std::size_t count, int horizon,
                                         const SeedPolicy& policy, std::uint64_t master_seed) {
  if (count == 0) detail::fail("simulate_set needs at least one cascade");
  if (policy.kind == SeedPolicy::Kind::Fixed && policy.fixed.empty()) detail::fail("fixed seed policy with no seeds");
  std::vector<Cascade> out(count);
  detail::parallel_for(count, [&](std::size_t c) {
    Rng rng = Rng::stream(master_seed, c);
    NodeId seed = 0;
    switch (policy.kind) {
      case SeedPolicy::Kind::UniformRandom: seed = rng.below(g.num_nodes()); break;
      case SeedPolicy::Kind::RoundRobin: seed = c % g.num_nodes(); break;
      case SeedPolicy::Kind::Fixed: seed = policy.fixed[c % policy.fixed.size()]; break;
    }
    out[c] = simulate_cascade(g, params, seed, horizon, rng);
  });
  return out;
}

/// Hidden mask with round(xi * n) nodes chosen uniformly, fixed for an experiment.
inline std::vector<bool> choose_hidden(std::size_t n, double xi, Rng& rng) {
  if (!(xi >= 0.0 && xi <= 1.0)) detail::fail("hidden fraction ", xi, " outside [0,1]");
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> hidden(n, false);
  const auto k = static_cast<std::size_t>(std::llround(xi * static_cast<double>(n)));
  for (std::size_t i = 0; i < k; ++i) hidden[order[i]] = true;
  return hidden;
}

/// Applies timestamp noise, then time-grid coarsening, then hiding. The seed
/// is never noised or hidden. Noised times are clamped to [0, T] and Star is
/// never noised.
inline ObservedCascade apply_observation(const Cascade& c, const ObservationModel& model, Rng& rng) {
  const int T = c.horizon;
  model.validate(c.times.size(), T);
  ObservedCascade out{c.seed, T, c.times};

  if (model.noise && !model.noise->is_identity()) {
    const NoiseSpec& noise = *model.noise;
    const int K = noise.radius();
    for (NodeId i = 0; i < out.times.size(); ++i) {
      Outcome& o = out.times[i];
      if (i == c.seed || !o.is_exact()) continue;
      double u = rng.uniform();
      int k = K;
      for (int j = -K; j <= K; ++j) {
        u -= noise.prob(j);
        if (u < 0.0) {
          k = j;
          break;
        }
      }
      o = Outcome::exact(std::clamp(o.time() + k, 0, T));
    }
  }

  if (!model.full_grid(T)) {
    const auto& grid = model.grid;
    const int last = grid.back();
    for (NodeId i = 0; i < out.times.size(); ++i) {
      Outcome& o = out.times[i];
      if (i == c.seed) continue;
      const bool active_by_last = o.is_exact() && o.time() <= last;
      if (!active_by_last) {
        // Still inactive at the final observation.
        if (last < T) o = Outcome::interval(last, kNever);
        continue;
      }
      const int t = o.time();
      const int seen = *std::lower_bound(grid.begin(), grid.end(), t);
      if (seen == 0) continue;  // clamped noise can place a report at 0
      const int before = *(std::lower_bound(grid.begin(), grid.end(), t) - 1);
      o = seen - before == 1 ? Outcome::exact(seen) : Outcome::interval(before, seen);
    }
  }

  if (!model.hidden.empty())
    for (NodeId i = 0; i < out.times.size(); ++i)
      if (model.hidden[i] && i != c.seed) out.times[i] = Outcome::hidden();
  return out;
}

/// Identity observation (every node, every step, no noise).
inline ObservedCascade observe_fully(const Cascade& c) { return {c.seed, c.horizon, c.times}; }

struct AggregateOptions {
  // Naive missing-times benchmark: interval outcomes are discarded as if the
  // node had not reported.
  bool intervals_as_hidden = false;
};

/// Groups observed cascades by seed and counts outcomes per observed node.
inline SufficientStats aggregate_statistics(std::span<const ObservedCascade> cascades, AggregateOptions options = {}) {
  if (cascades.empty()) detail::fail("no cascades to aggregate");
  const std::size_t n = cascades.front().times.size();
  const int T = cascades.front().horizon;
  std::map<NodeId, ClassStats> by_seed;
  for (const auto& c : cascades) {
    if (c.times.size() != n || c.horizon != T) detail::fail("cascades disagree on node count or horizon");
    if (c.seed >= n) detail::fail("cascade seed ", c.seed, " out of range");
    if (c.times[c.seed].is_hidden()) detail::fail("cascade seed ", c.seed, " is hidden; class not identifiable");
    auto& cls = by_seed[c.seed];
    if (cls.per_node.empty()) {
      cls.seed = c.seed;
      cls.per_node.resize(n);
    }
    ++cls.cascades;
    for (NodeId i = 0; i < n; ++i) {
      const Outcome& o = c.times[i];
      if (o.is_hidden() || (options.intervals_as_hidden && o.is_interval())) continue;
      auto& list = cls.per_node[i];
      auto it = std::find_if(list.begin(), list.end(), [&](const OutcomeCount& oc) { return oc.outcome == o; });
      if (it == list.end())
        list.push_back({o, 1});
      else
        ++it->count;
    }
  }
  SufficientStats stats{n, T, {}};
  stats.classes.reserve(by_seed.size());
  for (auto& [seed, cls] : by_seed) {
    for (auto& list : cls.per_node)
      std::sort(list.begin(), list.end(), [](const OutcomeCount& a, const OutcomeCount& b) { return a.outcome < b.outcome; });
    stats.classes.push_back(std::move(cls));
  }
  return stats;
}

inline SufficientStats aggregate_statistics(const std::vector<ObservedCascade>& cascades, AggregateOptions options = {}) {
  return aggregate_statistics(std::span<const ObservedCascade>(cascades), options);
}

}  // namespace slicer
