#pragma once

// Shared fixtures and independent reference computations for the tests.
// Nothing here calls the learner's compiled linear forms or the adjoint
// recursion; the reference derivatives are written out from the outcome
// definitions and the explicit-product DMP constraints.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "slicer.hpp"

namespace testing_support {

using namespace slicer;

inline Graph path_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return Graph(n, e);
}

inline Graph cycle_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i) e.push_back(make_edge(i, (i + 1) % n));
  return Graph(n, e);
}

/// Observed cascades for a small random instance.
inline std::vector<ObservedCascade> observe_all(const std::vector<Cascade>& cs, const ObservationModel& model,
                                                std::uint64_t seed) {
  std::vector<ObservedCascade> out;
  for (std::size_t c = 0; c < cs.size(); ++c) {
    Rng r = Rng::stream(seed, c);
    out.push_back(apply_observation(cs[c], model, r));
  }
  return out;
}

/// Sets an environment variable for the lifetime of the object.
class ScopedEnv {
 public:
  ScopedEnv(const char* name, const std::string& value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old, had_ = true;
    setenv(name, value.c_str(), 1);
  }
  ~ScopedEnv() {
    if (had_)
      setenv(name_, old_.c_str(), 1);
    else
      unsetenv(name_);
  }
  ScopedEnv(const ScopedEnv&) = delete;
  ScopedEnv& operator=(const ScopedEnv&) = delete;

 private:
  const char* name_;
  std::string old_;
  bool had_ = false;
};

// ---------------------------------------------------------------------------
// Reference observation probabilities and their derivatives in p_i(t)
// ---------------------------------------------------------------------------

/// Probability of true activation time tau (T+1 stands for "never") and its
/// sensitivity to p(t): returns coefficients c[t] with prob = const + sum c[t] p(t).
struct Affine {
  double constant = 0.0;
  std::vector<double> coeff;  // size T+1
};

inline Affine true_time_affine(int tau, int T) {
  Affine a{0.0, std::vector<double>(static_cast<std::size_t>(T) + 1, 0.0)};
  if (tau == T + 1) {
    a.constant = 1.0;
    a.coeff[static_cast<std::size_t>(T)] -= 1.0;
    return a;
  }
  a.coeff[static_cast<std::size_t>(tau)] += 1.0;
  if (tau > 0) a.coeff[static_cast<std::size_t>(tau - 1)] -= 1.0;
  return a;
}

/// Observed-given-true weight for the noisy model. `truncated` is the literal
/// shift kernel over {0..T, T+1}; otherwise shifts are clamped into [0, T] and
/// "never" is reported exactly.
inline double noise_weight(const NoiseSpec& pi, bool truncated, int observed, int truth, int T) {
  if (truncated) return pi.prob(observed - truth);
  if (truth == T + 1) return observed == T + 1 ? 1.0 : 0.0;
  if (observed == T + 1) return 0.0;
  double w = 0.0;
  for (int k = -pi.radius(); k <= pi.radius(); ++k)
    if (std::clamp(truth + k, 0, T) == observed) w += pi.prob(k);
  return w;
}

inline Affine outcome_affine(const Outcome& o, int T, const LearnerMode& mode) {
  Affine a{0.0, std::vector<double>(static_cast<std::size_t>(T) + 1, 0.0)};
  auto add = [&](const Affine& b, double w) {
    a.constant += w * b.constant;
    for (std::size_t t = 0; t < a.coeff.size(); ++t) a.coeff[t] += w * b.coeff[t];
  };
  if (mode.kind == LearnerMode::Kind::NoisyTimes && !o.is_interval()) {
    const int observed = o.is_star() ? T + 1 : o.time();
    const bool truncated = mode.boundary == NoiseBoundary::Truncated;
    for (int truth = 0; truth <= T + 1; ++truth) {
      const double w = noise_weight(mode.noise, truncated, observed, truth, T);
      if (w != 0.0) add(true_time_affine(truth, T), w);
    }
    return a;
  }
  if (o.is_star()) return true_time_affine(T + 1, T);
  if (o.is_exact()) return true_time_affine(o.time(), T);
  // Interval (lo, hi]: p(hi) - p(lo), with hi = never meaning p = 1.
  if (o.hi == kNever) {
    a.constant = 1.0;
  } else {
    a.coeff[static_cast<std::size_t>(o.hi)] += 1.0;
  }
  a.coeff[static_cast<std::size_t>(o.lo)] -= 1.0;
  return a;
}

/// Reference objective for one class, normalised by the total cascade count.
inline double reference_class_objective(const ClassStats& cls, std::uint64_t total, const DmpRun& run,
                                        const LearnerMode& mode, double floor = 1e-12) {
  const int T = run.horizon();
  double o = 0.0;
  for (NodeId i = 0; i < cls.per_node.size(); ++i)
    for (const auto& oc : cls.per_node[i]) {
      const Affine a = outcome_affine(oc.outcome, T, mode);
      double mu = a.constant;
      for (int t = 0; t <= T; ++t) mu += a.coeff[static_cast<std::size_t>(t)] * run.marginal(i, t);
      o += static_cast<double>(oc.count) / static_cast<double>(total) * std::log(std::max(mu, floor));
    }
  return o;
}

/// dO/dp_i(t) for one class, n x (T+1).
inline std::vector<double> reference_objective_gradient_p(const ClassStats& cls, std::uint64_t total, const DmpRun& run,
                                                          const LearnerMode& mode, double floor = 1e-12) {
  const int T = run.horizon();
  const std::size_t stride = static_cast<std::size_t>(T) + 1;
  std::vector<double> d(cls.per_node.size() * stride, 0.0);
  for (NodeId i = 0; i < cls.per_node.size(); ++i)
    for (const auto& oc : cls.per_node[i]) {
      const Affine a = outcome_affine(oc.outcome, T, mode);
      double mu = a.constant;
      for (int t = 0; t <= T; ++t) mu += a.coeff[static_cast<std::size_t>(t)] * run.marginal(i, t);
      if (!(mu > floor)) continue;
      const double w = static_cast<double>(oc.count) / static_cast<double>(total);
      for (std::size_t t = 0; t < stride; ++t) d[i * stride + t] += w * a.coeff[t] / mu;
    }
  return d;
}

// ---------------------------------------------------------------------------
// Lagrangian stationarity with explicit products
//
//   L = O + sum_{i,t>=1} lam_i(t) [p_i(t) - 1 + (1 - pbar_i) prod_{k in di} (1 - a_ki p_{k->i}(t-1))]
//         + sum_{i->j,t>=1} lam_{i->j}(t) [p_{i->j}(t) - 1 + (1 - pbar_i) prod_{k in di\j} (...)]
// ---------------------------------------------------------------------------

/// (1 - pbar_j) * prod over incoming edges of j except those in `skip`.
inline double survival_except(const Graph& g, const DirectedParams& a, const DmpRun& run, NodeId j, int t,
                              std::initializer_list<EdgeId> skip) {
  double prod = 1.0 - run.initial(j);
  for (const auto& inc : g.neighbors(j)) {
    if (std::find(skip.begin(), skip.end(), inc.edge) != skip.end()) continue;
    prod *= 1.0 - a[inc.in] * run.message(inc.in, t);
  }
  return prod;
}

/// dL/dp_{i->j}(t) for the message i->j (directed id d), t in 1..T.
inline double dL_dmessage(const Graph& g, const DirectedParams& a, const DmpRun& run, const LagrangeState& st,
                          DirEdgeId d, int t) {
  const int T = run.horizon();
  double r = st.msg_at(d, t);
  if (t == T) return r;
  const NodeId j = g.target(d);
  const EdgeId e = Graph::undirected(d);
  r -= a[d] * st.node_at(j, t + 1) * survival_except(g, a, run, j, t, {e});
  for (const auto& k : g.neighbors(j)) {
    if (k.edge == e) continue;
    r -= a[d] * st.msg_at(k.out, t + 1) * survival_except(g, a, run, j, t, {e, k.edge});
  }
  return r;
}

/// dL/dp_i(t) = dO/dp_i(t) + lam_i(t), t in 1..T.
inline double dL_dnode(const std::vector<double>& dO, const LagrangeState& st, NodeId i, int t) {
  return dO[i * st.stride + static_cast<std::size_t>(t)] + st.node_at(i, t);
}

/// dL/dalpha for one undirected edge written without the 1/alpha shortcut:
/// the explicit derivative of every constraint that contains alpha_ij.
inline double dL_dalpha_unsimplified(const Graph& g, const DirectedParams& a, const DmpRun& run,
                                     const LagrangeState& st, EdgeId e) {
  double s = 0.0;
  for (DirEdgeId d : {2 * e, 2 * e + 1}) {
    const NodeId j = g.target(d);
    for (int t = 0; t < run.horizon(); ++t) {
      const double p = run.message(d, t);
      s -= p * st.node_at(j, t + 1) * survival_except(g, a, run, j, t, {e});
      for (const auto& k : g.neighbors(j)) {
        if (k.edge == e) continue;
        s -= p * st.msg_at(k.out, t + 1) * survival_except(g, a, run, j, t, {e, k.edge});
      }
    }
  }
  return s;
}

}  // namespace testing_support
