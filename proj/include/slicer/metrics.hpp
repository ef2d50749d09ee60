#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "slicer/error.hpp"
#include "slicer/graph.hpp"

namespace slicer {

struct ParamError {
  double mean_l1 = 0.0;
  double mean_signed = 0.0;
};

/// Mean |alpha - alpha*| and mean (alpha - alpha*) over the ground-truth
/// edges. Truth edges absent from `learned_graph` (pruned) count as 0.
inline ParamError l1_param_error(const Graph& learned_graph, const EdgeParams& learned, const Graph& truth_graph,
                                 const EdgeParams& truth) {
  if (truth_graph.num_edges() == 0) detail::fail("l1 error over an empty truth edge set");
  if (learned.size() != learned_graph.num_edges() || truth.size() != truth_graph.num_edges())
    detail::fail("params not aligned with their graphs");
  ParamError err;
  for (EdgeId e = 0; e < truth_graph.num_edges(); ++e) {
    const auto& edge = truth_graph.edge(e);
    const auto k = learned_graph.find_edge(edge.u, edge.v);
    const double a = k ? learned[*k] : 0.0;
    err.mean_l1 += std::abs(a - truth[e]);
    err.mean_signed += a - truth[e];
  }
  const auto m = static_cast<double>(truth_graph.num_edges());
  err.mean_l1 /= m;
  err.mean_signed /= m;
  return err;
}

/// Same-graph variant: both parameter vectors aligned with one edge list.
inline ParamError l1_param_error(const EdgeParams& learned, const EdgeParams& truth) {
  if (truth.size() == 0) detail::fail("l1 error over an empty truth edge set");
  if (learned.size() != truth.size()) detail::fail("learned and truth params differ in size");
  ParamError err;
  for (EdgeId e = 0; e < truth.size(); ++e) {
    err.mean_l1 += std::abs(learned[e] - truth[e]);
    err.mean_signed += learned[e] - truth[e];
  }
  err.mean_l1 /= static_cast<double>(truth.size());
  err.mean_signed /= static_cast<double>(truth.size());
  return err;
}

/// Area under the ROC curve as the Mann-Whitney statistic with midranks:
/// probability that a random positive outscores a random negative, ties 1/2.
inline double roc_auc(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) detail::fail("scores and labels differ in length");
  const std::size_t n = scores.size();
  const auto pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) detail::fail("ROC AUC needs at least one positive and one negative");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t k = 0; k < n;) {
    std::size_t end = k;
    while (end < n && scores[order[end]] == scores[order[k]]) ++end;
    const double midrank = 0.5 * static_cast<double>(k + 1 + end);
    for (std::size_t q = k; q < end; ++q)
      if (positive[order[q]]) rank_sum += midrank;
    k = end;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

/// Summary written by `eval`.
struct EvalReport {
  double mean_l1 = std::numeric_limits<double>::quiet_NaN();
  double mean_signed = std::numeric_limits<double>::quiet_NaN();
  double auc = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t true_positives = 0;
  std::uint64_t false_positives = 0;
  std::uint64_t true_negatives = 0;
  std::uint64_t false_negatives = 0;

  friend bool operator==(const EvalReport& a, const EvalReport& b) {
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    return same(a.mean_l1, b.mean_l1) && same(a.mean_signed, b.mean_signed) && same(a.auc, b.auc) &&
           a.true_positives == b.true_positives && a.false_positives == b.false_positives &&
           a.true_negatives == b.true_negatives && a.false_negatives == b.false_negatives;
  }
};

/// Evaluates learned parameters on a candidate set against ground truth.
/// `truth_alpha` is aligned with the candidate set (zero on fake edges).
/// An edge counts as recovered when its learned alpha is >= threshold.
inline EvalReport evaluate(const CandidateEdgeSet& candidates, const EdgeParams& learned, const EdgeParams& truth_alpha,
                           double threshold) {
  EvalReport r;
  const std::size_t m = candidates.superset.num_edges();
  if (learned.size() != m || truth_alpha.size() != m) detail::fail("params not aligned with candidate set");
  std::vector<bool> is_true(m);
  for (EdgeId e = 0; e < m; ++e) is_true[e] = candidates.has_truth() ? bool(candidates.truth[e]) : truth_alpha[e] > 0.0;
  double l1 = 0.0, sgn = 0.0;
  std::size_t count = 0;
  for (EdgeId e = 0; e < m; ++e) {
    const bool found = learned[e] >= threshold;
    if (is_true[e]) {
      l1 += std::abs(learned[e] - truth_alpha[e]);
      sgn += learned[e] - truth_alpha[e];
      ++count;
      found ? ++r.true_positives : ++r.false_negatives;
    } else {
      found ? ++r.false_positives : ++r.true_negatives;
    }
  }
  if (count == 0) detail::fail("no ground-truth edges among the candidates");
  r.mean_l1 = l1 / static_cast<double>(count);
  r.mean_signed = sgn / static_cast<double>(count);
  if (count < m) r.auc = roc_auc(learned.values(), is_true);
  return r;
}

/// `metric,value` CSV; doubles written with round-trip precision.
inline void write_report_csv(std::ostream& os, const EvalReport& r) {
  os << "metric,value\n" << std::setprecision(17);
  os << "mean_l1," << r.mean_l1 << '\n';
  os << "mean_signed," << r.mean_signed << '\n';
  os << "auc," << r.auc << '\n';
  os << "true_positives," << r.true_positives << '\n';
  os << "false_positives," << r.false_positives << '\n';
  os << "true_negatives," << r.true_negatives << '\n';
  os << "false_negatives," << r.false_negatives << '\n';
}

inline EvalReport read_report_csv(std::istream& is) {
  EvalReport r;
  std::string line;
  while (std::getline(is, line) && line.starts_with('#')) {
  }
  if (line != "metric,value") detail::fail("report CSV missing header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) detail::fail("malformed report line '", line, "'");
    const std::string key = line.substr(0, comma), value = line.substr(comma + 1);
    auto real = [&] { return value == "nan" || value == "-nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(value); };
    if (key == "mean_l1") r.mean_l1 = real();
    else if (key == "mean_signed") r.mean_signed = real();
    else if (key == "auc") r.auc = real();
    else if (key == "true_positives") r.true_positives = std::stoull(value);
    else if (key == "false_positives") r.false_positives = std::stoull(value);
    else if (key == "true_negatives") r.true_negatives = std::stoull(value);
    else if (key == "false_negatives") r.false_negatives = std::stoull(value);
    else detail::fail("unknown metric '", key, "'");
  }
  return r;
}

/// Scatter rows `i,j,alpha_true,alpha_learned` for the truth edges.
inline void write_scatter_csv(std::ostream& os, const Graph& g, const EdgeParams& truth_alpha, const EdgeParams& learned,
                              const std::vector<bool>& truth_mask = {}) {
  os << "i,j,alpha_true,alpha_learned\n" << std::setprecision(17);
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    if (!truth_mask.empty() && !truth_mask[e]) continue;
    os << g.edge(e).u << ',' << g.edge(e).v << ',' << truth_alpha[e] << ',' << learned[e] << '\n';
  }
}

}  // namespace slicer
