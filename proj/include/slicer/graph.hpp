#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "slicer/error.hpp"
#include "slicer/rng.hpp"

namespace slicer {

using NodeId = std::size_t;
using EdgeId = std::size_t;
// Directed orientation of an undirected edge e: 2e is u->v, 2e+1 is v->u.
using DirEdgeId = std::size_t;

/// Unordered node pair stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// One entry of a node's neighbor list.
struct Incidence {
  NodeId neighbor;
  EdgeId edge;
  DirEdgeId in;   // neighbor -> this node
  DirEdgeId out;  // this node -> neighbor
};

/// Undirected simple graph with a canonical edge order.
///
/// Edges are kept sorted lexicographically; an edge's position in that order
/// is its EdgeId, and every per-edge array in the library (EdgeParams, truth
/// masks, gradients) is aligned with it. Neighbor lists are stored in CSR form.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    for (const auto& e : edges_) {
      if (e.u == e.v) detail::fail("self-loop (", e.u, ",", e.v, ")");
      if (e.u >= n_ || e.v >= n_) detail::fail("edge (", e.u, ",", e.v, ") out of range for n=", n_);
      if (e.u > e.v) detail::fail("edge (", e.u, ",", e.v, ") not canonical");
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    build_adjacency();
  }

  std::size_t num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_directed() const { return 2 * edges_.size(); }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }

  std::span<const Incidence> neighbors(NodeId i) const {
    return {adj_.data() + offset_[i], adj_.data() + offset_[i + 1]};
  }
  std::size_t degree(NodeId i) const { return offset_[i + 1] - offset_[i]; }

  NodeId source(DirEdgeId d) const { return d % 2 == 0 ? edges_[d / 2].u : edges_[d / 2].v; }
  NodeId target(DirEdgeId d) const { return d % 2 == 0 ? edges_[d / 2].v : edges_[d / 2].u; }
  static DirEdgeId reverse(DirEdgeId d) { return d ^ 1U; }
  static EdgeId undirected(DirEdgeId d) { return d / 2; }

  std::optional<EdgeId> find_edge(NodeId a, NodeId b) const {
    if (a == b || a >= n_ || b >= n_) return std::nullopt;
    const Edge key = make_edge(a, b);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
    if (it == edges_.end() || *it != key) return std::nullopt;
    return static_cast<EdgeId>(it - edges_.begin());
  }
  bool has_edge(NodeId a, NodeId b) const { return find_edge(a, b).has_value(); }

  /// Re-checks every structural invariant; throws on violation.
  void validate() const {
    std::size_t total = 0;
    for (NodeId i = 0; i < n_; ++i) {
      for (const auto& inc : neighbors(i)) {
        const Edge& e = edges_.at(inc.edge);
        if (make_edge(i, inc.neighbor) != e) detail::fail("adjacency of ", i, " inconsistent with edge set");
        if (source(inc.out) != i || target(inc.out) != inc.neighbor || reverse(inc.out) != inc.in)
          detail::fail("directed indices of ", i, " inconsistent");
        ++total;
      }
    }
    if (total != 2 * edges_.size()) detail::fail("adjacency not symmetric");
    for (std::size_t k = 1; k < edges_.size(); ++k)
      if (!(edges_[k - 1] < edges_[k])) detail::fail("edge list not strictly sorted");
  }

 private:
  void build_adjacency() {
    offset_.assign(n_ + 1, 0);
    for (const auto& e : edges_) {
      ++offset_[e.u + 1];
      ++offset_[e.v + 1];
    }
    std::partial_sum(offset_.begin(), offset_.end(), offset_.begin());
    adj_.resize(2 * edges_.size());
    std::vector<std::size_t> fill(offset_.begin(), offset_.end() - 1);
    for (EdgeId e = 0; e < edges_.size(); ++e) {
      const auto [u, v] = edges_[e];
      adj_[fill[u]++] = Incidence{v, e, 2 * e + 1, 2 * e};
      adj_[fill[v]++] = Incidence{u, e, 2 * e, 2 * e + 1};
    }
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offset_{0};
  std::vector<Incidence> adj_;
};

/// Builds a graph from an arbitrary pair list: orders each pair, drops
/// duplicates, rejects self-loops and out-of-range ids.
inline Graph build_graph(std::size_t n, std::span<const std::pair<NodeId, NodeId>> pairs) {
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    if (a == b) detail::fail("self-loop (", a, ",", b, ") rejected");
    if (a >= n || b >= n) detail::fail("pair (", a, ",", b, ") out of range for n=", n);
    edges.push_back(make_edge(a, b));
  }
  return Graph(n, std::move(edges));
}

inline Graph build_graph(std::size_t n, std::initializer_list<std::pair<NodeId, NodeId>> pairs) {
  return build_graph(n, std::span<const std::pair<NodeId, NodeId>>(pairs.begin(), pairs.size()));
}

/// Transmission probability per undirected edge, aligned with Graph::edges().
class EdgeParams {
 public:
  EdgeParams() = default;
  explicit EdgeParams(std::vector<double> alpha) : alpha_(std::move(alpha)) {
    for (std::size_t e = 0; e < alpha_.size(); ++e)
      if (!(alpha_[e] >= 0.0 && alpha_[e] <= 1.0)) detail::fail("alpha[", e, "]=", alpha_[e], " outside [0,1]");
  }
  static EdgeParams constant(std::size_t m, double value) { return EdgeParams(std::vector<double>(m, value)); }

  std::size_t size() const { return alpha_.size(); }
  double operator[](EdgeId e) const { return alpha_[e]; }
  double& operator[](EdgeId e) { return alpha_[e]; }
  std::span<const double> values() const { return alpha_; }
  std::vector<double>& values() { return alpha_; }

  friend bool operator==(const EdgeParams&, const EdgeParams&) = default;

 private:
  std::vector<double> alpha_;
};

/// Transmission probability per directed orientation (size 2|E|). The
/// symmetric case used by every generator is `DirectedParams::from(EdgeParams)`;
/// a one-way edge is expressed by a zero on the reverse orientation.
struct DirectedParams {
  std::vector<double> alpha;

  static DirectedParams from(const EdgeParams& p) {
    DirectedParams d;
    d.alpha.resize(2 * p.size());
    for (EdgeId e = 0; e < p.size(); ++e) d.alpha[2 * e] = d.alpha[2 * e + 1] = p[e];
    return d;
  }
  static DirectedParams uniform(std::size_t num_edges, double a) { return {std::vector<double>(2 * num_edges, a)}; }

  double operator[](DirEdgeId d) const { return alpha[d]; }
  std::size_t size() const { return alpha.size(); }
};

/// Candidate (super-set) edges plus an optional ground-truth flag per edge.
struct CandidateEdgeSet {
  Graph superset;
  std::vector<bool> truth;  // empty when unknown; else aligned with superset edges

  bool has_truth() const { return !truth.empty(); }
  std::size_t num_true() const { return static_cast<std::size_t>(std::count(truth.begin(), truth.end(), true)); }
  std::size_t num_fake() const { return truth.size() - num_true(); }
  double fake_fraction() const {
    return truth.empty() ? 0.0 : static_cast<double>(num_fake()) / static_cast<double>(truth.size());
  }

  /// Truth edges as a standalone graph.
  Graph truth_graph() const {
    std::vector<Edge> e;
    for (EdgeId k = 0; k < superset.num_edges(); ++k)
      if (truth.at(k)) e.push_back(superset.edge(k));
    return Graph(superset.num_nodes(), std::move(e));
  }
};

// ---------------------------------------------------------------------------
// Generators. All are deterministic functions of their arguments and the
// state of the supplied Rng.
// ---------------------------------------------------------------------------

/// Tree grown breadth-first from node 0: the root gets `degree` children and
/// every later node gets `degree - 1`, so internal nodes have degree `degree`.
/// Growth stops at n nodes, leaving the last internal node possibly short.
inline Graph gen_regular_tree(std::size_t degree, std::size_t n) {
  if (degree < 2) detail::fail("regular tree needs degree >= 2, got ", degree);
  if (n < 1) detail::fail("regular tree needs n >= 1");
  std::vector<Edge> edges;
  std::size_t next = 1;
  for (NodeId parent = 0; next < n; ++parent) {
    const std::size_t children = parent == 0 ? degree : degree - 1;
    for (std::size_t c = 0; c < children && next < n; ++c) edges.push_back(make_edge(parent, next++));
  }
  return Graph(n, std::move(edges));
}

/// Random k-regular simple graph by the pairing model: stubs are shuffled and
/// paired; any self-loop or multi-edge discards the attempt.
inline Graph gen_random_regular(std::size_t n, std::size_t k, Rng& rng, int max_attempts = 10000) {
  if (k >= n) detail::fail("random regular graph needs k < n (n=", n, ", k=", k, ")");
  if ((n * k) % 2 != 0) detail::fail("random regular graph needs n*k even (n=", n, ", k=", k, ")");
  std::vector<NodeId> stubs;
  stubs.reserve(n * k);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    stubs.clear();
    for (NodeId i = 0; i < n; ++i)
      for (std::size_t c = 0; c < k; ++c) stubs.push_back(i);
    std::shuffle(stubs.begin(), stubs.end(), rng);
    std::set<Edge> seen;
    bool ok = true;
    for (std::size_t s = 0; s + 1 < stubs.size(); s += 2) {
      if (stubs[s] == stubs[s + 1] || !seen.insert(make_edge(stubs[s], stubs[s + 1])).second) {
        ok = false;
        break;
      }
    }
    if (ok) return Graph(n, std::vector<Edge>(seen.begin(), seen.end()));
  }
  detail::fail("no simple ", k, "-regular graph on ", n, " nodes found after ", max_attempts, " attempts");
}

/// Erdos-Renyi G(n, m) with m = round(n * avg_degree / 2) distinct edges.
inline Graph gen_erdos_renyi(std::size_t n, double avg_degree, Rng& rng) {
  if (n < 2 || !(avg_degree > 0.0) || !(avg_degree <= static_cast<double>(n - 1)))
    detail::fail("Erdos-Renyi needs 0 < avg_degree <= n-1 (n=", n, ", avg_degree=", avg_degree, ")");
  const auto m = static_cast<std::size_t>(std::llround(static_cast<double>(n) * avg_degree / 2.0));
  std::set<Edge> chosen;
  while (chosen.size() < m) {
    const NodeId a = rng.below(n);
    const NodeId b = rng.below(n);
    if (a != b) chosen.insert(make_edge(a, b));
  }
  return Graph(n, std::vector<Edge>(chosen.begin(), chosen.end()));
}

/// Barabasi-Albert preferential attachment with a possibly fractional number
/// of links per new node. Node v (after the initial clique) attaches
/// round(v*m) - round((v-1)*m) links, so m = 1.5 alternates 1 and 2 and gives
/// an average degree of about 3; an integer m is the classic model.
inline Graph gen_barabasi_albert(std::size_t n, double links_per_node, Rng& rng) {
  if (!(links_per_node >= 1.0)) detail::fail("Barabasi-Albert needs links_per_node >= 1");
  const auto core = static_cast<std::size_t>(std::ceil(links_per_node)) + 1;
  if (n <= static_cast<std::size_t>(std::ceil(links_per_node)))
    detail::fail("Barabasi-Albert needs n > links_per_node");
  std::vector<Edge> edges;
  std::vector<NodeId> endpoints;  // each node repeated degree times
  const std::size_t start = std::min(core, n);
  for (NodeId a = 0; a < start; ++a)
    for (NodeId b = a + 1; b < start; ++b) {
      edges.push_back({a, b});
      endpoints.push_back(a);
      endpoints.push_back(b);
    }
  // With a single-link core (m = 1) the clique is a single edge.
  for (NodeId v = start; v < n; ++v) {
    const auto step = static_cast<std::size_t>(v - start + 1);
    auto links = static_cast<std::size_t>(std::llround(static_cast<double>(step) * links_per_node) -
                                          std::llround(static_cast<double>(step - 1) * links_per_node));
    links = std::clamp<std::size_t>(links, 1, v);
    std::vector<NodeId> targets;
    while (targets.size() < links) {
      const NodeId t = endpoints[rng.below(endpoints.size())];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (NodeId t : targets) {
      edges.push_back(make_edge(t, v));
      endpoints.push_back(t);
      endpoints.push_back(v);
    }
  }
  return Graph(n, std::move(edges));
}

/// Open side x side square lattice (node r*side+c) as the truth graph, and a
/// super-set adding one diagonal per unit cell with random orientation.
inline CandidateEdgeSet gen_lattice_with_diagonals(std::size_t side, Rng& rng) {
  if (side < 2) detail::fail("lattice needs side >= 2");
  const std::size_t n = side * side;
  auto id = [side](std::size_t r, std::size_t c) { return r * side + c; };
  std::vector<Edge> all;
  std::set<Edge> fakes;
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      if (c + 1 < side) all.push_back(make_edge(id(r, c), id(r, c + 1)));
      if (r + 1 < side) all.push_back(make_edge(id(r, c), id(r + 1, c)));
    }
  for (std::size_t r = 0; r + 1 < side; ++r)
    for (std::size_t c = 0; c + 1 < side; ++c) {
      const Edge d = rng.bernoulli(0.5) ? make_edge(id(r, c), id(r + 1, c + 1)) : make_edge(id(r, c + 1), id(r + 1, c));
      fakes.insert(d);
      all.push_back(d);
    }
  CandidateEdgeSet out{Graph(n, std::move(all)), {}};
  out.truth.resize(out.superset.num_edges());
  for (EdgeId e = 0; e < out.superset.num_edges(); ++e) out.truth[e] = !fakes.contains(out.superset.edge(e));
  return out;
}

/// Super-set of `truth` with ceil(fake_ratio * |E|) uniformly sampled non-edges.
inline CandidateEdgeSet superset_with_fake_edges(const Graph& truth, double fake_ratio, Rng& rng) {
  if (fake_ratio < 0.0) detail::fail("fake_ratio must be >= 0");
  const std::size_t n = truth.num_nodes();
  const auto fakes_wanted = static_cast<std::size_t>(std::ceil(fake_ratio * static_cast<double>(truth.num_edges()) - 1e-9));
  const std::size_t pairs = n * (n - 1) / 2;
  if (fakes_wanted > pairs - truth.num_edges())
    detail::fail("cannot sample ", fakes_wanted, " fake edges: only ", pairs - truth.num_edges(), " non-edges exist");
  std::set<Edge> fakes;
  if (fakes_wanted * 2 > pairs - truth.num_edges()) {
    // Dense request: enumerate non-edges and take a random subset.
    std::vector<Edge> non;
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = a + 1; b < n; ++b)
        if (!truth.has_edge(a, b)) non.push_back({a, b});
    std::shuffle(non.begin(), non.end(), rng);
    fakes.insert(non.begin(), non.begin() + static_cast<std::ptrdiff_t>(fakes_wanted));
  } else {
    while (fakes.size() < fakes_wanted) {
      const NodeId a = rng.below(n);
      const NodeId b = rng.below(n);
      if (a != b && !truth.has_edge(a, b)) fakes.insert(make_edge(a, b));
    }
  }
  std::vector<Edge> all = truth.edges();
  all.insert(all.end(), fakes.begin(), fakes.end());
  CandidateEdgeSet out{Graph(n, std::move(all)), {}};
  out.truth.resize(out.superset.num_edges());
  for (EdgeId e = 0; e < out.superset.num_edges(); ++e) out.truth[e] = !fakes.contains(out.superset.edge(e));
  return out;
}

/// Complete graph; the super-set used when nothing is known about topology.
inline CandidateEdgeSet complete_superset(const Graph& truth) {
  const std::size_t n = truth.num_nodes();
  std::vector<Edge> all;
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b) all.push_back({a, b});
  CandidateEdgeSet out{Graph(n, std::move(all)), {}};
  out.truth.resize(out.superset.num_edges());
  for (EdgeId e = 0; e < out.superset.num_edges(); ++e)
    out.truth[e] = truth.has_edge(out.superset.edge(e).u, out.superset.edge(e).v);
  return out;
}

struct UniformDist {
  double lo = 0.0;
  double hi = 1.0;
};
struct ConstantDist {
  double value = 0.5;
};
using ParamDist = std::variant<UniformDist, ConstantDist>;

/// Independent draw per edge (or a constant), in edge order.
inline EdgeParams sample_params(std::size_t num_edges, const ParamDist& dist, Rng& rng) {
  std::vector<double> alpha(num_edges);
  if (const auto* u = std::get_if<UniformDist>(&dist)) {
    if (!(0.0 <= u->lo && u->lo <= u->hi && u->hi <= 1.0))
      detail::fail("uniform(", u->lo, ",", u->hi, ") must satisfy 0 <= a <= b <= 1");
    for (auto& a : alpha) a = u->lo == u->hi ? u->lo : rng.uniform(u->lo, u->hi);
  } else {
    const double c = std::get<ConstantDist>(dist).value;
    if (!(0.0 <= c && c <= 1.0)) detail::fail("constant(", c, ") must lie in [0,1]");
    std::fill(alpha.begin(), alpha.end(), c);
  }
  return EdgeParams(std::move(alpha));
}

/// Ground-truth parameters expanded onto a candidate set: truth edges keep
/// their value, fake edges get zero.
inline EdgeParams expand_to_superset(const Graph& truth, const EdgeParams& truth_params, const Graph& superset) {
  std::vector<double> out(superset.num_edges(), 0.0);
  for (EdgeId e = 0; e < superset.num_edges(); ++e)
    if (auto k = truth.find_edge(superset.edge(e).u, superset.edge(e).v)) out[e] = truth_params[*k];
  return EdgeParams(std::move(out));
}

/// Union-find connectivity check.
inline bool is_connected(const Graph& g) {
  const std::size_t n = g.num_nodes();
  if (n == 0) return true;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = n;
  for (const auto& e : g.edges()) {
    const auto a = find(e.u), b = find(e.v);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

inline bool is_tree(const Graph& g) { return g.num_edges() + 1 == g.num_nodes() && is_connected(g); }

}  // namespace slicer
