#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "slicer/cascade.hpp"
#include "slicer/error.hpp"
#include "slicer/graph.hpp"
#include "slicer/rng.hpp"

namespace slicer {

/// Below this value the cavity division 1 - alpha*p is considered singular and
/// the affected message is recomputed with the explicit product.
inline constexpr double kCavityGuard = 1e-9;

/// Probability of each node being active at t = 0.
struct InitialCondition {
  std::vector<double> p0;

  static InitialCondition single_seed(std::size_t n, NodeId seed) {
    InitialCondition ic{std::vector<double>(n, 0.0)};
    ic.p0.at(seed) = 1.0;
    return ic;
  }

  void validate(std::size_t n) const {
    if (p0.size() != n) detail::fail("initial condition has ", p0.size(), " entries for ", n, " nodes");
    for (double v : p0)
      if (!(v >= 0.0 && v <= 1.0)) detail::fail("initial probability ", v, " outside [0,1]");
  }
};

/// Marginals p_i(t) and cavity messages p_{i->j}(t) for t = 0..T under one
/// initial condition. Messages are indexed by DirEdgeId.
class DmpRun {
 public:
  DmpRun() = default;
  DmpRun(std::size_t n, std::size_t num_directed, int horizon)
      : n_(n), horizon_(horizon), marg_(n * stride()), msg_(num_directed * stride()) {}

  int horizon() const { return horizon_; }
  std::size_t num_nodes() const { return n_; }
  std::size_t num_directed() const { return msg_.size() / stride(); }
  std::size_t stride() const { return static_cast<std::size_t>(horizon_) + 1; }

  double marginal(NodeId i, int t) const { return marg_[i * stride() + static_cast<std::size_t>(t)]; }
  double message(DirEdgeId d, int t) const { return msg_[d * stride() + static_cast<std::size_t>(t)]; }
  double& marginal(NodeId i, int t) { return marg_[i * stride() + static_cast<std::size_t>(t)]; }
  double& message(DirEdgeId d, int t) { return msg_[d * stride() + static_cast<std::size_t>(t)]; }

  std::span<const double> marginals_of(NodeId i) const { return {marg_.data() + i * stride(), stride()}; }
  const std::vector<double>& marginals() const { return marg_; }
  const std::vector<double>& messages() const { return msg_; }

  std::span<const double> initial() const { return p0_; }
  double initial(NodeId i) const { return p0_[i]; }

  /// Number of factor evaluations performed (cost counter).
  std::uint64_t work = 0;

 private:
  friend DmpRun dmp_forward(const Graph&, const DirectedParams&, const InitialCondition&, int);
  friend DmpRun dmp_forward_fast(const Graph&, const DirectedParams&, const InitialCondition&, int);

  std::size_t n_ = 0;
  int horizon_ = 0;
  std::vector<double> marg_;
  std::vector<double> msg_;
  std::vector<double> p0_;
};

namespace detail {

inline void check_forward_inputs(const Graph& g, const DirectedParams& alpha, const InitialCondition& init, int T) {
  if (T < 1) detail::fail("horizon must be >= 1");
  if (alpha.size() != g.num_directed())
    detail::fail("directed params have ", alpha.size(), " entries, graph needs ", g.num_directed());
  init.validate(g.num_nodes());
}

inline void seed_time_zero(const Graph& g, const InitialCondition& init, DmpRun& run) {
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    run.marginal(i, 0) = init.p0[i];
    for (const auto& inc : g.neighbors(i)) run.message(inc.out, 0) = init.p0[i];
  }
}

// (1 - p0_i) * prod over k in neighbors(i), k != excluded, of
// (1 - alpha_{k->i} p_{k->i}(t-1)).
inline double cavity_survival(const Graph& g, const DirectedParams& alpha, const DmpRun& run, double p0, NodeId i,
                              int t, std::size_t excluded_edge, std::uint64_t& work) {
  double s = 1.0 - p0;
  for (const auto& inc : g.neighbors(i)) {
    if (inc.edge == excluded_edge) continue;
    s *= 1.0 - alpha[inc.in] * run.message(inc.in, t - 1);
    ++work;
  }
  return s;
}

}  // namespace detail

/// Reference DMP recursion: every marginal and message evaluated as an
/// explicit product over neighbors (cost grows with the sum of squared degrees).
inline DmpRun dmp_forward(const Graph& g, const DirectedParams& alpha, const InitialCondition& init, int T) {
  detail::check_forward_inputs(g, alpha, init, T);
  DmpRun run(g.num_nodes(), g.num_directed(), T);
  run.p0_ = init.p0;
  detail::seed_time_zero(g, init, run);
  constexpr auto none = static_cast<std::size_t>(-1);
  for (int t = 1; t <= T; ++t)
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
      run.marginal(i, t) = 1.0 - detail::cavity_survival(g, alpha, run, init.p0[i], i, t, none, run.work);
      for (const auto& inc : g.neighbors(i))
        run.message(inc.out, t) = 1.0 - detail::cavity_survival(g, alpha, run, init.p0[i], i, t, inc.edge, run.work);
    }
  return run;
}

/// Edge-linear DMP: messages are obtained from the node marginal by dividing
/// out one factor, 1 - p_{i->j}(t) = (1 - p_i(t)) / (1 - alpha_{j->i} p_{j->i}(t-1)).
/// A message whose divisor falls below kCavityGuard is recomputed directly.
inline DmpRun dmp_forward_fast(const Graph& g, const DirectedParams& alpha, const InitialCondition& init, int T) {
  detail::check_forward_inputs(g, alpha, init, T);
  DmpRun run(g.num_nodes(), g.num_directed(), T);
  run.p0_ = init.p0;
  detail::seed_time_zero(g, init, run);
  std::vector<double> factor;
  for (int t = 1; t <= T; ++t)
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
      const auto nb = g.neighbors(i);
      factor.resize(nb.size());
      double survival = 1.0 - init.p0[i];
      for (std::size_t k = 0; k < nb.size(); ++k) {
        factor[k] = 1.0 - alpha[nb[k].in] * run.message(nb[k].in, t - 1);
        survival *= factor[k];
      }
      run.work += nb.size();
      run.marginal(i, t) = 1.0 - survival;
      for (std::size_t k = 0; k < nb.size(); ++k) {
        double cavity = 0.0;
        if (factor[k] < kCavityGuard) {
          cavity = detail::cavity_survival(g, alpha, run, init.p0[i], i, t, nb[k].edge, run.work);
        } else {
          cavity = survival / factor[k];
          ++run.work;
        }
        run.message(nb[k].out, t) = 1.0 - cavity;
      }
    }
  return run;
}

inline DmpRun dmp_forward(const Graph& g, const EdgeParams& p, const InitialCondition& init, int T) {
  return dmp_forward(g, DirectedParams::from(p), init, T);
}
inline DmpRun dmp_forward_fast(const Graph& g, const EdgeParams& p, const InitialCondition& init, int T) {
  return dmp_forward_fast(g, DirectedParams::from(p), init, T);
}

/// Probability of an outcome under a DMP run: Exact(t) -> p(t) - p(t-1),
/// Star -> 1 - p(T), Interval(lo, hi) -> p(hi) - p(lo) with p(never) = 1.
inline double activation_marginal(const DmpRun& run, NodeId i, const Outcome& o) {
  const int T = run.horizon();
  auto p = [&](int t) { return t == kNever ? 1.0 : run.marginal(i, t); };
  switch (o.kind) {
    case Outcome::Kind::Exact:
      if (o.time() < 0 || o.time() > T) detail::fail("exact time ", o.time(), " outside [0,", T, "]");
      return o.time() == 0 ? p(0) : p(o.time()) - p(o.time() - 1);
    case Outcome::Kind::Star:
      return 1.0 - p(T);
    case Outcome::Kind::Interval:
      if (o.lo < 0 || o.lo >= o.hi || (o.hi > T && o.hi != kNever))
        detail::fail("interval (", o.lo, ",", o.hi, "] invalid for horizon ", T);
      return p(o.hi) - p(o.lo);
    case Outcome::Kind::Hidden:
      break;
  }
  detail::fail("hidden outcome has no activation probability");
}

/// Cumulative activation probabilities p_i(t), i < n, t in 0..T.
struct MarginalTable {
  std::size_t n = 0;
  int horizon = 0;
  std::vector<double> p;
  std::vector<double> stderr_;  // Monte Carlo only

  double at(NodeId i, int t) const { return p[i * (static_cast<std::size_t>(horizon) + 1) + static_cast<std::size_t>(t)]; }
  double& at(NodeId i, int t) { return p[i * (static_cast<std::size_t>(horizon) + 1) + static_cast<std::size_t>(t)]; }
  double stderr_at(NodeId i, int t) const {
    return stderr_[i * (static_cast<std::size_t>(horizon) + 1) + static_cast<std::size_t>(t)];
  }
};

/// Maximum number of directed edges the exhaustive oracle will enumerate.
inline constexpr std::size_t kBruteForceBudget = 24;

/// Exact IC marginals from the percolation picture: every directed edge is
/// open independently with its alpha, and a node is active by t iff its
/// shortest open path from the seed has length <= t. Sums over all open/closed
/// assignments of the directed edges (edges with alpha in {0,1} are not branched).
inline MarginalTable exact_marginals_bruteforce(const Graph& g, const DirectedParams& alpha, NodeId seed, int T) {
  const std::size_t D = g.num_directed();
  if (D > kBruteForceBudget)
    detail::fail("exhaustive enumeration over ", D, " directed edges exceeds the budget of ", kBruteForceBudget,
                 "; use monte_carlo_marginals instead");
  if (seed >= g.num_nodes()) detail::fail("seed out of range");
  const std::size_t n = g.num_nodes();
  MarginalTable out{n, T, std::vector<double>(n * (static_cast<std::size_t>(T) + 1), 0.0), {}};
  std::vector<char> open(D, 0);
  std::vector<int> dist(n);
  std::vector<NodeId> queue(n);

  auto accumulate = [&](double weight) {
    std::fill(dist.begin(), dist.end(), -1);
    std::size_t head = 0, tail = 0;
    dist[seed] = 0;
    queue[tail++] = seed;
    while (head < tail) {
      const NodeId i = queue[head++];
      if (dist[i] >= T) continue;
      for (const auto& inc : g.neighbors(i))
        if (open[inc.out] && dist[inc.neighbor] < 0) {
          dist[inc.neighbor] = dist[i] + 1;
          queue[tail++] = inc.neighbor;
        }
    }
    for (NodeId i = 0; i < n; ++i)
      if (dist[i] >= 0)
        for (int t = dist[i]; t <= T; ++t) out.at(i, t) += weight;
  };

  auto recurse = [&](auto&& self, std::size_t d, double weight) -> void {
    if (weight == 0.0) return;
    if (d == D) {
      accumulate(weight);
      return;
    }
    const double a = alpha[d];
    if (a >= 1.0 || a <= 0.0) {
      open[d] = a >= 1.0;
      self(self, d + 1, weight);
      return;
    }
    open[d] = 1;
    self(self, d + 1, weight * a);
    open[d] = 0;
    self(self, d + 1, weight * (1.0 - a));
  };
  recurse(recurse, 0, 1.0);
  return out;
}

inline MarginalTable exact_marginals_bruteforce(const Graph& g, const EdgeParams& p, NodeId seed, int T) {
  return exact_marginals_bruteforce(g, DirectedParams::from(p), seed, T);
}

/// Empirical activation frequencies over `samples` simulated cascades, with
/// binomial standard errors.
inline MarginalTable monte_carlo_marginals(const Graph& g, const EdgeParams& params, NodeId seed, int T,
                                           std::size_t samples, Rng& rng) {
  if (samples == 0) detail::fail("monte_carlo_marginals needs samples >= 1");
  const std::size_t n = g.num_nodes();
  const std::size_t stride = static_cast<std::size_t>(T) + 1;
  std::vector<std::uint64_t> hits(n * stride, 0);
  for (std::size_t s = 0; s < samples; ++s) {
    const Cascade c = simulate_cascade(g, params, seed, T, rng);
    for (NodeId i = 0; i < n; ++i)
      if (c.times[i].is_exact())
        for (int t = c.times[i].time(); t <= T; ++t) ++hits[i * stride + static_cast<std::size_t>(t)];
  }
  MarginalTable out{n, T, std::vector<double>(n * stride), std::vector<double>(n * stride)};
  const double m = static_cast<double>(samples);
  for (std::size_t k = 0; k < hits.size(); ++k) {
    const double p = static_cast<double>(hits[k]) / m;
    out.p[k] = p;
    out.stderr_[k] = std::sqrt(p * (1.0 - p) / m);
  }
  return out;
}

/// CSV rows `class,node,t,p` for one run.
inline void write_marginals_csv(std::ostream& os, std::size_t class_id, const DmpRun& run, bool header = false) {
  if (header) os << "class,node,t,p\n";
  for (NodeId i = 0; i < run.num_nodes(); ++i)
    for (int t = 0; t <= run.horizon(); ++t) os << class_id << ',' << i << ',' << t << ',' << run.marginal(i, t) << '\n';
}

}  // namespace slicer
