#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slicer/cascade.hpp"
#include "slicer/detail/parallel.hpp"
#include "slicer/dmp.hpp"
#include "slicer/error.hpp"
#include "slicer/graph.hpp"

namespace slicer {

/// How a noisy timestamp near the ends of [0, T] is modelled.
enum class NoiseBoundary {
  // Observed time is clamp(true + k, 0, T) and Star is never perturbed. This
  // is what apply_observation produces.
  Clamped,
  // Star is treated as step T+1 and shifted like any other time; mass pushed
  // outside [0, T+1] is dropped.
  Truncated,
};

/// Learner variant.
struct LearnerMode {
  enum class Kind { Base, SimpleGraph, MissingTimes, NoisyTimes };

  Kind kind = Kind::Base;
  NoiseSpec noise{{1.0}};
  NoiseBoundary boundary = NoiseBoundary::Clamped;

  static LearnerMode base() { return {}; }
  static LearnerMode simple_graph() { return {Kind::SimpleGraph, {{1.0}}, NoiseBoundary::Clamped}; }
  static LearnerMode missing_times() { return {Kind::MissingTimes, {{1.0}}, NoiseBoundary::Clamped}; }
  static LearnerMode noisy_times(NoiseSpec noise, NoiseBoundary boundary = NoiseBoundary::Clamped) {
    noise.validate();
    return {Kind::NoisyTimes, std::move(noise), boundary};
  }

  bool shared_alpha() const { return kind == Kind::SimpleGraph; }

  std::string name() const {
    switch (kind) {
      case Kind::Base: return "base";
      case Kind::SimpleGraph: return "simple";
      case Kind::MissingTimes: return "missing";
      case Kind::NoisyTimes: return "noisy";
    }
    return "?";
  }
};

struct LearnerConfig {
  LearnerMode mode;
  double learning_rate = 0.1;
  int max_iterations = 2000;
  double tolerance = 1e-6;  // on max |delta alpha| of an accepted step
  double alpha_init = 0.5;
  double alpha_lo = 1e-9;
  double alpha_hi = 1.0 - 1e-9;
  double prune_threshold = 0.0;  // > 0 enables structure learning
  double log_floor = 1e-12;
  double fd_step = 1e-6;
  // Gradient entries are clipped to [-grad_clip, grad_clip] before the step.
  double grad_clip = 0.5;
  // Accepted steps may lower the objective by at most this much.
  double ascent_slack = 1e-12;

  void validate() const {
    if (!(learning_rate > 0.0)) detail::fail("learning rate must be > 0");
    if (!(0.0 < alpha_lo && alpha_lo < alpha_hi && alpha_hi <= 1.0)) detail::fail("need 0 < alpha_lo < alpha_hi <= 1");
    if (max_iterations < 0) detail::fail("max_iterations must be >= 0");
    if (!(log_floor > 0.0)) detail::fail("log floor must be > 0");
    if (!(grad_clip > 0.0)) detail::fail("grad_clip must be > 0");
    if (mode.kind == LearnerMode::Kind::NoisyTimes) mode.noise.validate();
    if (mode.shared_alpha() && prune_threshold > 0.0) detail::fail("structure pruning needs per-edge parameters");
  }
};

// ---------------------------------------------------------------------------
// Observation likelihoods as linear forms in p_i(0..T)
// ---------------------------------------------------------------------------

/// mu = constant + sum_k coeff_k * p(time_k).
struct LinearForm {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;

  void add(int t, double w) {
    for (auto& [tt, ww] : terms)
      if (tt == t) {
        ww += w;
        return;
      }
    terms.emplace_back(t, w);
  }
  void add_scaled(const LinearForm& other, double scale) {
    constant += scale * other.constant;
    for (const auto& [t, w] : other.terms) add(t, scale * w);
  }
  void prune_zeros() {
    std::erase_if(terms, [](const auto& tw) { return tw.second == 0.0; });
    std::sort(terms.begin(), terms.end());
  }
};

namespace detail {

// Likelihood of the true activation time tau in {0..T} or T+1 (= never).
inline LinearForm exact_time_form(int tau, int T) {
  LinearForm f;
  if (tau == T + 1) {
    f.constant = 1.0;
    f.add(T, -1.0);
  } else {
    f.add(tau, 1.0);
    if (tau > 0) f.add(tau - 1, -1.0);
  }
  return f;
}

inline LinearForm base_form(const Outcome& o, int T) {
  switch (o.kind) {
    case Outcome::Kind::Exact:
      if (o.time() < 0 || o.time() > T) fail("exact time ", o.time(), " outside [0,", T, "]");
      return exact_time_form(o.time(), T);
    case Outcome::Kind::Star:
      return exact_time_form(T + 1, T);
    case Outcome::Kind::Interval: {
      if (o.lo < 0 || o.lo >= o.hi || (o.hi > T && o.hi != kNever))
        fail("interval (", o.lo, ",", o.hi, "] invalid for horizon ", T);
      LinearForm f;
      if (o.hi == kNever)
        f.constant = 1.0;
      else
        f.add(o.hi, 1.0);
      f.add(o.lo, -1.0);
      return f;
    }
    case Outcome::Kind::Hidden:
      break;
  }
  fail("hidden outcome has no likelihood");
}

// P(observed time | true time), times in {0..T, T+1 = never}.
inline double noise_kernel(const NoiseSpec& noise, NoiseBoundary boundary, int observed, int truth, int T) {
  if (boundary == NoiseBoundary::Truncated) return noise.prob(observed - truth);
  if (truth == T + 1 || observed == T + 1) return observed == truth ? 1.0 : 0.0;
  double p = 0.0;
  for (int k = -noise.radius(); k <= noise.radius(); ++k)
    if (std::clamp(truth + k, 0, T) == observed) p += noise.prob(k);
  return p;
}

inline LinearForm noisy_form(const Outcome& o, int T, const NoiseSpec& noise, NoiseBoundary boundary) {
  int observed = 0;
  if (o.is_exact()) {
    observed = o.time();
    if (observed < 0 || observed > T) fail("exact time ", observed, " outside [0,", T, "]");
  } else if (o.is_star()) {
    observed = T + 1;
  } else {
    fail("noisy-timestamp mode accepts only exact and star outcomes");
  }
  LinearForm f;
  for (int truth = 0; truth <= T + 1; ++truth) {
    const double w = noise_kernel(noise, boundary, observed, truth, T);
    if (w != 0.0) f.add_scaled(exact_time_form(truth, T), w);
  }
  f.prune_zeros();
  return f;
}

}  // namespace detail

/// Likelihood form of one outcome under a learner mode.
inline LinearForm outcome_form(const Outcome& o, int T, const LearnerMode& mode) {
  if (o.is_interval() && mode.kind != LearnerMode::Kind::MissingTimes)
    detail::fail("interval outcomes require the missing-times mode (mode is '", mode.name(), "')");
  if (mode.kind == LearnerMode::Kind::NoisyTimes) return detail::noisy_form(o, T, mode.noise, mode.boundary);
  LinearForm f = detail::base_form(o, T);
  f.prune_zeros();
  return f;
}

/// One (node, outcome) observation within a class, with its weight.
struct ObservationTerm {
  NodeId node = 0;
  double weight = 0.0;  // count / total cascades
  double constant = 0.0;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
};

/// Observations of one initial-condition class, compiled against a mode.
struct CompiledClass {
  NodeId seed = 0;
  std::vector<ObservationTerm> terms;
  std::vector<std::pair<int, double>> coeffs;

  double mu(const ObservationTerm& term, const DmpRun& run) const {
    double m = term.constant;
    for (std::uint32_t k = term.begin; k < term.end; ++k) m += coeffs[k].second * run.marginal(term.node, coeffs[k].first);
    return m;
  }
};

/// Stats compiled into linear forms. The objective is normalised by the total
/// cascade count (mean log-likelihood per cascade), which leaves the optimum
/// unchanged and keeps the step size independent of M.
struct CompiledObservations {
  std::size_t num_nodes = 0;
  int horizon = 0;
  std::vector<CompiledClass> classes;

  static CompiledObservations compile(const SufficientStats& stats, const LearnerMode& mode) {
    if (stats.classes.empty()) detail::fail("no cascade classes to learn from");
    const double total = static_cast<double>(stats.total_cascades());
    CompiledObservations out{stats.num_nodes, stats.horizon, {}};
    out.classes.reserve(stats.classes.size());
    for (const auto& cls : stats.classes) {
      CompiledClass cc;
      cc.seed = cls.seed;
      for (NodeId i = 0; i < cls.per_node.size(); ++i)
        for (const auto& oc : cls.per_node[i]) {
          if (oc.count == 0 || oc.outcome.is_hidden()) continue;
          const LinearForm f = outcome_form(oc.outcome, stats.horizon, mode);
          ObservationTerm term{i, static_cast<double>(oc.count) / total, f.constant,
                               static_cast<std::uint32_t>(cc.coeffs.size()), 0};
          cc.coeffs.insert(cc.coeffs.end(), f.terms.begin(), f.terms.end());
          term.end = static_cast<std::uint32_t>(cc.coeffs.size());
          cc.terms.push_back(term);
        }
      out.classes.push_back(std::move(cc));
    }
    return out;
  }
};

/// Contribution of one class to the objective: sum of weight * log(max(mu, floor)).
inline double class_objective(const CompiledClass& cls, const DmpRun& run, double log_floor) {
  double o = 0.0;
  for (const auto& term : cls.terms) o += term.weight * std::log(std::max(cls.mu(term, run), log_floor));
  return o;
}

/// Total objective over classes, runs[s] belonging to classes[s].
inline double objective(const CompiledObservations& obs, std::span<const DmpRun> runs, double log_floor = 1e-12) {
  if (runs.size() != obs.classes.size()) detail::fail("need one DMP run per class");
  double o = 0.0;
  for (std::size_t s = 0; s < runs.size(); ++s) o += class_objective(obs.classes[s], runs[s], log_floor);
  return o;
}

/// Node multipliers lambda_i(t) = -dO/dp_i(t) for t in 1..T, stored as an
/// n x (T+1) table with column 0 zero. Nodes without observations (hidden)
/// stay zero; observations whose mu is floored contribute nothing.
inline std::vector<double> lambda_node(const CompiledClass& cls, const DmpRun& run, double log_floor = 1e-12) {
  const std::size_t stride = run.stride();
  std::vector<double> lam(run.num_nodes() * stride, 0.0);
  for (const auto& term : cls.terms) {
    const double mu = cls.mu(term, run);
    if (!(mu > log_floor)) continue;
    const double scale = term.weight / mu;
    for (std::uint32_t k = term.begin; k < term.end; ++k) {
      const auto [t, w] = cls.coeffs[k];
      if (t >= 1) lam[term.node * stride + static_cast<std::size_t>(t)] -= scale * w;
    }
  }
  return lam;
}

/// Adjoint fields for one class.
struct LagrangeState {
  int horizon = 0;
  std::size_t stride = 0;
  std::vector<double> node;  // lambda_i(t), n x (T+1)
  std::vector<double> msg;   // lambda_{i->j}(t), 2|E| x (T+1); zero at t = T
  std::vector<double> hat;   // aggregate lambda-hat_j(t), n x (T+1)
  std::uint64_t work = 0;

  double node_at(NodeId i, int t) const { return node[i * stride + static_cast<std::size_t>(t)]; }
  double msg_at(DirEdgeId d, int t) const { return msg[d * stride + static_cast<std::size_t>(t)]; }
  double hat_at(NodeId j, int t) const { return hat[j * stride + static_cast<std::size_t>(t)]; }
};

/// Backward recursion for message multipliers, linear in |E| per step:
///   hat_j(t)       = sum_k lambda_{j->k}(t+1) (1 - p_{j->k}(t+1))
///   lambda_{i->j}(t) = alpha_ij [ lambda_j(t+1)(1 - p_{j->i}(t+1))
///                       + (hat_j(t) - lambda_{j->i}(t+1)(1 - p_{j->i}(t+1))) / (1 - alpha_ij p_{i->j}(t)) ]
/// with the explicit sum over k != i when the divisor is below kCavityGuard.
inline LagrangeState lambda_backward(const Graph& g, const DirectedParams& alpha, const DmpRun& run,
                                     std::vector<double> node_lambda) {
  const int T = run.horizon();
  const std::size_t stride = run.stride();
  if (node_lambda.size() != g.num_nodes() * stride) detail::fail("node multipliers have wrong shape");
  LagrangeState st{T, stride, std::move(node_lambda), std::vector<double>(g.num_directed() * stride, 0.0),
                   std::vector<double>(g.num_nodes() * stride, 0.0), 0};
  auto lam_msg = [&](DirEdgeId d, int t) -> double& { return st.msg[d * stride + static_cast<std::size_t>(t)]; };

  for (int t = T - 1; t >= 0; --t) {
    for (NodeId j = 0; j < g.num_nodes(); ++j) {
      double hat = 0.0;
      for (const auto& inc : g.neighbors(j)) hat += lam_msg(inc.out, t + 1) * (1.0 - run.message(inc.out, t + 1));
      st.hat[j * stride + static_cast<std::size_t>(t)] = hat;
      st.work += g.degree(j);
    }
    for (NodeId j = 0; j < g.num_nodes(); ++j) {
      const auto nb = g.neighbors(j);
      const double lam_j = st.node_at(j, t + 1);
      const double hat = st.hat_at(j, t);
      for (const auto& in_edge : nb) {
        const DirEdgeId d = in_edge.in;  // i -> j
        const double a = alpha[d];
        const double cavity_ji = 1.0 - run.message(in_edge.out, t + 1);  // 1 - p_{j->i}(t+1)
        const double divisor = 1.0 - a * run.message(d, t);
        double others = 0.0;
        if (divisor >= kCavityGuard) {
          others = (hat - lam_msg(in_edge.out, t + 1) * cavity_ji) / divisor;
          ++st.work;
        } else {
          for (const auto& k : nb) {
            if (k.edge == in_edge.edge) continue;
            double prod = 1.0 - run.initial(j);
            for (const auto& m : nb)
              if (m.edge != in_edge.edge && m.edge != k.edge) prod *= 1.0 - alpha[m.in] * run.message(m.in, t);
            others += lam_msg(k.out, t + 1) * prod;
            st.work += nb.size();
          }
        }
        lam_msg(d, t) = a * (lam_j * cavity_ji + others);
      }
    }
  }
  return st;
}

/// d objective / d alpha for each directed orientation in one class,
/// -(1/alpha_d) sum_{t<T} lambda_d(t) p_d(t), accumulated into `out`.
inline void accumulate_directed_gradient(const DmpRun& run, const LagrangeState& st, const DirectedParams& alpha,
                                         std::span<double> out) {
  for (DirEdgeId d = 0; d < alpha.size(); ++d) {
    double s = 0.0;
    for (int t = 0; t < run.horizon(); ++t) s += st.msg_at(d, t) * run.message(d, t);
    out[d] -= s / alpha[d];
  }
}

/// Per-undirected-edge gradient summed over classes (both orientations).
inline std::vector<double> grad_per_edge(const Graph& g, std::span<const DmpRun> runs,
                                         std::span<const LagrangeState> states, const DirectedParams& alpha) {
  std::vector<double> directed(g.num_directed(), 0.0);
  for (std::size_t s = 0; s < runs.size(); ++s) accumulate_directed_gradient(runs[s], states[s], alpha, directed);
  std::vector<double> out(g.num_edges());
  for (EdgeId e = 0; e < g.num_edges(); ++e) out[e] = directed[2 * e] + directed[2 * e + 1];
  return out;
}

/// Gradient with respect to a single shared alpha: -(1/alpha) sum over
/// classes, t < T and both orientations of every edge of lambda * p.
inline double grad_shared(std::span<const DmpRun> runs, std::span<const LagrangeState> states, double alpha) {
  double s = 0.0;
  for (std::size_t c = 0; c < runs.size(); ++c)
    for (DirEdgeId d = 0; d < runs[c].num_directed(); ++d)
      for (int t = 0; t < runs[c].horizon(); ++t) s += states[c].msg_at(d, t) * runs[c].message(d, t);
  return -s / alpha;
}

/// Graph plus compiled observations: evaluates the objective and its
/// adjoint gradient for any parameter vector.
class Problem {
 public:
  Problem(Graph graph, const SufficientStats& stats, LearnerMode mode, double log_floor = 1e-12)
      : graph_(std::move(graph)), mode_(std::move(mode)), log_floor_(log_floor),
        obs_(CompiledObservations::compile(stats, mode_)) {
    if (stats.num_nodes != graph_.num_nodes())
      detail::fail("stats cover ", stats.num_nodes, " nodes, graph has ", graph_.num_nodes());
    for (const auto& cls : obs_.classes) inits_.push_back(InitialCondition::single_seed(graph_.num_nodes(), cls.seed));
  }

  const Graph& graph() const { return graph_; }
  const LearnerMode& mode() const { return mode_; }
  const CompiledObservations& observations() const { return obs_; }
  int horizon() const { return obs_.horizon; }
  std::size_t num_classes() const { return obs_.classes.size(); }
  double log_floor() const { return log_floor_; }

  /// Replaces the edge set (used after pruning); observations are unchanged.
  void set_graph(Graph g) { graph_ = std::move(g); }

  std::vector<DmpRun> forward(const DirectedParams& alpha, bool fast = true) const {
    std::vector<DmpRun> runs(num_classes());
    detail::parallel_for(num_classes(), [&](std::size_t s) {
      runs[s] = fast ? dmp_forward_fast(graph_, alpha, inits_[s], horizon())
                     : dmp_forward(graph_, alpha, inits_[s], horizon());
    });
    return runs;
  }

  double objective(std::span<const DmpRun> runs) const { return slicer::objective(obs_, runs, log_floor_); }
  double objective(const DirectedParams& alpha, bool fast = true) const { return objective(forward(alpha, fast)); }

  std::vector<LagrangeState> backward(const DirectedParams& alpha, std::span<const DmpRun> runs) const {
    std::vector<LagrangeState> states(num_classes());
    detail::parallel_for(num_classes(), [&](std::size_t s) {
      states[s] = lambda_backward(graph_, alpha, runs[s], lambda_node(obs_.classes[s], runs[s], log_floor_));
    });
    return states;
  }

  /// Gradient per directed orientation.
  std::vector<double> gradient_directed(const DirectedParams& alpha, std::span<const DmpRun> runs) const {
    const auto states = backward(alpha, runs);
    std::vector<double> g(graph_.num_directed(), 0.0);
    for (std::size_t s = 0; s < runs.size(); ++s) accumulate_directed_gradient(runs[s], states[s], alpha, g);
    return g;
  }

  std::vector<double> gradient(const EdgeParams& p) const {
    const auto alpha = DirectedParams::from(p);
    const auto runs = forward(alpha);
    return grad_per_edge(graph_, runs, backward(alpha, runs), alpha);
  }

  double gradient_shared(double a) const {
    const auto alpha = DirectedParams::uniform(graph_.num_edges(), a);
    const auto runs = forward(alpha);
    return grad_shared(runs, backward(alpha, runs), a);
  }

 private:
  Graph graph_;
  LearnerMode mode_;
  double log_floor_;
  CompiledObservations obs_;
  std::vector<InitialCondition> inits_;
};

struct TraceRow {
  int iteration = 0;
  double objective = 0.0;
  double max_delta = 0.0;
  std::size_t active_edges = 0;
};

struct LearnResult {
  EdgeParams alpha;             // over the initial candidate set; pruned edges are 0
  std::vector<bool> surviving;  // aligned with the initial candidate set
  double shared_alpha = std::numeric_limits<double>::quiet_NaN();
  std::vector<TraceRow> trace;
  int iterations = 0;
  bool converged = false;
  double seconds = 0.0;

  std::size_t num_surviving() const { return static_cast<std::size_t>(std::count(surviving.begin(), surviving.end(), true)); }
};

/// Projected gradient ascent on the objective.
///
/// Each iteration runs the forward pass per class, the adjoint pass, and an
/// update alpha <- clamp(alpha + step * clip(grad), alpha_lo, alpha_hi), where
/// clip bounds each gradient entry by grad_clip. The step
/// starts at the learning rate and is halved until the objective does not
/// decrease; it then grows back by 2x per accepted iteration up to the
/// learning rate. With pruning enabled, an edge whose unclamped update falls
/// below the threshold is removed for the rest of the run.
inline LearnResult fit(const Graph& candidates, const SufficientStats& stats, const LearnerConfig& config) {
  config.validate();
  if (candidates.num_edges() == 0) detail::fail("candidate edge set is empty");
  const auto started = std::chrono::steady_clock::now();
  Problem problem(candidates, stats, config.mode, config.log_floor);
  const bool shared = config.mode.shared_alpha();
  const bool pruning = config.prune_threshold > 0.0;

  std::vector<EdgeId> active(candidates.num_edges());  // current edge -> original edge
  for (EdgeId e = 0; e < active.size(); ++e) active[e] = e;
  std::vector<double> alpha(candidates.num_edges(), std::clamp(config.alpha_init, config.alpha_lo, config.alpha_hi));

  auto directed = [&](const std::vector<double>& a) {
    DirectedParams d;
    d.alpha.resize(2 * a.size());
    for (std::size_t e = 0; e < a.size(); ++e) d.alpha[2 * e] = d.alpha[2 * e + 1] = a[e];
    return d;
  };

  LearnResult result;
  result.surviving.assign(candidates.num_edges(), true);
  auto runs = problem.forward(directed(alpha));
  double current = problem.objective(runs);
  double step = config.learning_rate;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    const auto dalpha = directed(alpha);
    const auto gdir = problem.gradient_directed(dalpha, runs);
    std::vector<double> grad(alpha.size());
    double gsum = 0.0;
    for (std::size_t e = 0; e < alpha.size(); ++e) {
      grad[e] = gdir[2 * e] + gdir[2 * e + 1];
      gsum += grad[e];
      if (!std::isfinite(grad[e]))
        detail::fail("non-finite gradient at iteration ", iter, " on edge (", problem.graph().edge(e).u, ",",
                     problem.graph().edge(e).v, ")");
    }
    if (shared) std::fill(grad.begin(), grad.end(), gsum);

    std::vector<double> proposal(alpha.size()), raw(alpha.size());
    std::vector<DmpRun> proposal_runs;
    double proposal_obj = 0.0;
    bool accepted = false;
    while (step > 1e-16) {
      for (std::size_t e = 0; e < alpha.size(); ++e) {
        raw[e] = alpha[e] + step * std::clamp(grad[e], -config.grad_clip, config.grad_clip);
        proposal[e] = std::clamp(raw[e], config.alpha_lo, config.alpha_hi);
      }
      proposal_runs = problem.forward(directed(proposal));
      proposal_obj = problem.objective(proposal_runs);
      if (proposal_obj >= current - config.ascent_slack) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.converged = true;
      result.iterations = iter - 1;
      break;
    }

    double max_delta = 0.0;
    for (std::size_t e = 0; e < alpha.size(); ++e) max_delta = std::max(max_delta, std::abs(proposal[e] - alpha[e]));
    alpha = std::move(proposal);
    runs = std::move(proposal_runs);
    current = proposal_obj;

    if (pruning) {
      std::vector<Edge> kept_edges;
      std::vector<EdgeId> kept_ids;
      std::vector<double> kept_alpha;
      for (std::size_t e = 0; e < alpha.size(); ++e) {
        if (raw[e] < config.prune_threshold) {
          result.surviving[active[e]] = false;
          continue;
        }
        kept_edges.push_back(problem.graph().edge(e));
        kept_ids.push_back(active[e]);
        kept_alpha.push_back(alpha[e]);
      }
      if (kept_ids.size() != active.size()) {
        if (kept_ids.empty()) detail::fail("all candidate edges were pruned at iteration ", iter);
        problem.set_graph(Graph(candidates.num_nodes(), std::move(kept_edges)));
        active = std::move(kept_ids);
        alpha = std::move(kept_alpha);
        runs = problem.forward(directed(alpha));
        current = problem.objective(runs);
      }
    }

    result.trace.push_back({iter, current, max_delta, active.size()});
    result.iterations = iter;
    if (max_delta < config.tolerance) {
      result.converged = true;
      break;
    }
    step = std::min(2.0 * step, config.learning_rate);
  }

  std::vector<double> full(candidates.num_edges(), 0.0);
  for (std::size_t e = 0; e < active.size(); ++e) full[active[e]] = alpha[e];
  result.alpha = EdgeParams(std::move(full));
  if (shared) result.shared_alpha = alpha.empty() ? 0.0 : alpha.front();
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

inline LearnResult fit(const CandidateEdgeSet& candidates, const SufficientStats& stats, const LearnerConfig& config) {
  return fit(candidates.superset, stats, config);
}

struct GradientCheck {
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

/// Central finite difference of the objective against the adjoint gradient,
/// for one edge (edge set) or for the shared parameter (edge unset; all
/// entries of `params` move together). Objective values for the difference
/// use the reference (explicit-product) forward pass.
inline GradientCheck finite_difference_check(const Problem& problem, const EdgeParams& params,
                                             std::optional<EdgeId> edge, double h) {
  if (!(h > 0.0)) detail::fail("finite-difference step must be > 0");
  auto shifted = [&](double delta) {
    EdgeParams p = params;
    if (edge) {
      p[*edge] += delta;
    } else {
      for (auto& a : p.values()) a += delta;
    }
    return p;
  };
  auto in_open_unit = [](const EdgeParams& p) {
    return std::all_of(p.values().begin(), p.values().end(), [](double a) { return a > 0.0 && a < 1.0; });
  };
  const EdgeParams plus = shifted(h), minus = shifted(-h);
  if (!in_open_unit(plus) || !in_open_unit(minus)) detail::fail("alpha +- h leaves (0,1); check needs an interior point");

  GradientCheck out;
  const auto grad = problem.gradient(params);
  if (edge) {
    out.analytic = grad.at(*edge);
  } else {
    for (double g : grad) out.analytic += g;
  }
  out.numeric = (problem.objective(DirectedParams::from(plus), false) -
                 problem.objective(DirectedParams::from(minus), false)) / (2.0 * h);
  const double scale = std::max({std::abs(out.analytic), std::abs(out.numeric), 1e-300});
  out.rel_error = std::abs(out.analytic - out.numeric) / scale;
  return out;
}

}  // namespace slicer
