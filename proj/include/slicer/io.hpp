#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slicer/cascade.hpp"
#include "slicer/error.hpp"
#include "slicer/graph.hpp"
#include "slicer/learner.hpp"

namespace slicer {

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

/// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) detail::fail("cannot format ", x);
  return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
  double x = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || end != s.data() + s.size()) detail::fail("not a number: '", s, "'");
  return x;
}

template <typename Int = long long>
Int parse_int(std::string_view s) {
  Int x{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || end != s.data() + s.size()) detail::fail("not an integer: '", s, "'");
  return x;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<double> parse_double_list(std::string_view s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (auto part : split(s, ',')) out.push_back(parse_double(trim(part)));
  return out;
}

inline std::vector<int> parse_int_list(std::string_view s) {
  std::vector<int> out;
  if (trim(s).empty()) return out;
  for (auto part : split(s, ',')) out.push_back(parse_int<int>(trim(part)));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (k) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += format_double(xs[k]);
    else
      out += std::to_string(xs[k]);
  }
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k, x >>= 4) out[static_cast<std::size_t>(k)] = digits[x & 0xF];
  return out;
}

// ---------------------------------------------------------------------------
// `# key=value` header block shared by every file
// ---------------------------------------------------------------------------

class Header {
 public:
  void set(std::string key, std::string value) {
    for (auto& [k, v] : items_)
      if (k == key) {
        v = std::move(value);
        return;
      }
    items_.emplace_back(std::move(key), std::move(value));
  }
  std::optional<std::string> get(std::string_view key) const {
    for (const auto& [k, v] : items_)
      if (k == key) return v;
    return std::nullopt;
  }
  std::string require(std::string_view key) const {
    auto v = get(key);
    if (!v) detail::fail("file header lacks '", key, "'");
    return *v;
  }
  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : items_) os << "# " << k << '=' << v << '\n';
  }

  /// Consumes a `# key=value` line; false for anything else.
  bool absorb(std::string_view line) {
    if (line.size() < 2 || line[0] != '#' || line[1] != ' ') return false;
    line.remove_prefix(2);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) return false;
    set(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
    return true;
  }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

/// Stamp carried by every output: hash of the generating configuration and
/// the master seed.
struct Provenance {
  std::string config_hash = hex64(fnv1a64(""));
  std::uint64_t seed = 0;

  void stamp(Header& h) const {
    h.set("config_hash", config_hash);
    h.set("seed", std::to_string(seed));
  }
};

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) detail::fail("cannot open '", path, "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) detail::fail("cannot open '", path, "' for writing");
  return out;
}

// ---------------------------------------------------------------------------
// Edge lists: `# n=<count>` then `i<TAB>j[<TAB>alpha[<TAB>truth]]`
// ---------------------------------------------------------------------------

struct EdgeListFile {
  Header header;
  Graph graph;
  std::optional<EdgeParams> alpha;  // aligned with graph edges
  std::vector<bool> truth;          // candidate files only
};

inline void write_edge_list(std::ostream& os, const Graph& g, const EdgeParams* alpha, const std::vector<bool>* truth,
                            Header header) {
  if (alpha && alpha->size() != g.num_edges()) detail::fail("alpha not aligned with graph");
  if (truth && truth->size() != g.num_edges()) detail::fail("truth flags not aligned with graph");
  if (truth && !alpha) detail::fail("candidate files need an alpha column");
  os << "# n=" << g.num_nodes() << '\n';
  header.write(os);
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    os << g.edge(e).u << '\t' << g.edge(e).v;
    if (alpha) os << '\t' << format_double((*alpha)[e]);
    if (truth) os << '\t' << ((*truth)[e] ? 1 : 0);
    os << '\n';
  }
}

inline EdgeListFile read_edge_list(std::istream& is) {
  EdgeListFile f;
  std::string line;
  std::vector<Edge> edges;
  std::vector<double> alpha;
  std::vector<bool> truth;
  std::optional<std::size_t> columns;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv[0] == '#') {
      f.header.absorb(sv);
      continue;
    }
    const auto cols = split(sv, '\t');
    if (cols.size() < 2 || cols.size() > 4) detail::fail("line ", lineno, ": expected 2 to 4 tab-separated columns");
    if (!columns) columns = cols.size();
    if (*columns != cols.size()) detail::fail("line ", lineno, ": column count changed");
    const auto u = parse_int<NodeId>(cols[0]), v = parse_int<NodeId>(cols[1]);
    edges.push_back({u, v});
    if (cols.size() >= 3) alpha.push_back(parse_double(cols[2]));
    if (cols.size() == 4) {
      if (cols[3] != "0" && cols[3] != "1") detail::fail("line ", lineno, ": truth flag must be 0 or 1");
      truth.push_back(cols[3] == "1");
    }
  }
  const auto n = parse_int<std::size_t>(f.header.require("n"));
  for (const auto& e : edges) {
    if (e.u == e.v) detail::fail("self-loop on node ", e.u);
    if (e.u >= n || e.v >= n) detail::fail("edge (", e.u, ",", e.v, ") outside n=", n);
  }
  std::vector<Edge> normalized;
  normalized.reserve(edges.size());
  for (const auto& e : edges) normalized.push_back(make_edge(e.u, e.v));
  f.graph = Graph(n, normalized);
  if (f.graph.num_edges() != edges.size()) detail::fail("edge list contains duplicate edges");
  // Graph sorts its edges; realign the per-line columns.
  if (!alpha.empty()) {
    std::vector<double> a(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) a[*f.graph.find_edge(edges[k].u, edges[k].v)] = alpha[k];
    f.alpha = EdgeParams(std::move(a));
  }
  if (!truth.empty()) {
    f.truth.assign(edges.size(), false);
    for (std::size_t k = 0; k < edges.size(); ++k) f.truth[*f.graph.find_edge(edges[k].u, edges[k].v)] = truth[k];
  }
  return f;
}

inline EdgeListFile read_edge_list(const std::string& path) {
  auto in = open_input(path);
  try {
    return read_edge_list(in);
  } catch (const Error& e) {
    detail::fail(path, ": ", e.what());
  }
}

// ---------------------------------------------------------------------------
// Cascade files
// ---------------------------------------------------------------------------

/// How a cascade file was produced; written into and read back from its header.
struct ObservationDescriptor {
  double xi = 0.0;
  std::vector<int> grid;  // empty: full grid
  std::optional<NoiseSpec> noise;

  void stamp(Header& h) const {
    h.set("xi", format_double(xi));
    h.set("grid", grid.empty() ? "full" : join(grid));
    h.set("noise", noise ? join(noise->pi) : "none");
  }
  static ObservationDescriptor from(const Header& h) {
    ObservationDescriptor d;
    if (auto v = h.get("xi")) d.xi = parse_double(*v);
    if (auto v = h.get("grid"); v && *v != "full") d.grid = parse_int_list(*v);
    if (auto v = h.get("noise"); v && *v != "none") d.noise = NoiseSpec{parse_double_list(*v)};
    return d;
  }
};

inline std::string format_outcome(const Outcome& o) {
  switch (o.kind) {
    case Outcome::Kind::Exact:
      return std::to_string(o.time());
    case Outcome::Kind::Star:
      return "*";
    case Outcome::Kind::Hidden:
      return "?";
    case Outcome::Kind::Interval:
      return std::to_string(o.lo) + ':' + (o.hi == kNever ? std::string("*") : std::to_string(o.hi));
  }
  return "?";
}

inline Outcome parse_outcome(std::string_view s, int horizon) {
  if (s == "*") return Outcome::star();
  if (s == "?") return Outcome::hidden();
  if (const auto colon = s.find(':'); colon != std::string_view::npos) {
    const int lo = parse_int<int>(s.substr(0, colon));
    const auto hs = s.substr(colon + 1);
    const int hi = hs == "*" ? kNever : parse_int<int>(hs);
    if (lo < 0 || lo >= hi || (hi != kNever && hi > horizon)) detail::fail("bad interval '", s, "'");
    return Outcome::interval(lo, hi);
  }
  const int t = parse_int<int>(s);
  if (t < 0 || t > horizon) detail::fail("time ", t, " outside [0,", horizon, "]");
  return Outcome::exact(t);
}

struct CascadeFile {
  Header header;
  std::size_t num_nodes = 0;
  int horizon = 0;
  std::vector<ObservedCascade> cascades;

  ObservationDescriptor observation() const { return ObservationDescriptor::from(header); }
};

/// Header lines (n, T, observation descriptor, provenance), then per cascade
/// a `#seed<TAB>id<TAB>node` line and one `id<TAB>node<TAB>outcome` record
/// per node.
inline void write_cascades(std::ostream& os, std::span<const ObservedCascade> cascades, std::size_t n, int horizon,
                           Header header) {
  header.set("n", std::to_string(n));
  header.set("T", std::to_string(horizon));
  header.set("cascades", std::to_string(cascades.size()));
  header.write(os);
  os << "# cascade_id\tnode\toutcome\n";
  for (std::size_t c = 0; c < cascades.size(); ++c) {
    const auto& oc = cascades[c];
    if (oc.times.size() != n || oc.horizon != horizon) detail::fail("cascade ", c, " disagrees with the file header");
    os << "#seed\t" << c << '\t' << oc.seed << '\n';
    for (NodeId i = 0; i < n; ++i) os << c << '\t' << i << '\t' << format_outcome(oc.times[i]) << '\n';
  }
}

inline CascadeFile read_cascades(std::istream& is) {
  CascadeFile f;
  std::string line;
  std::size_t lineno = 0;
  bool sized = false;
  auto ensure_sized = [&] {
    if (sized) return;
    f.num_nodes = parse_int<std::size_t>(f.header.require("n"));
    f.horizon = parse_int<int>(f.header.require("T"));
    if (f.horizon < 0) detail::fail("negative horizon");
    sized = true;
  };
  auto cascade = [&](std::size_t id, std::size_t at) -> ObservedCascade& {
    if (id == f.cascades.size()) {
      f.cascades.push_back({0, f.horizon, std::vector<Outcome>(f.num_nodes, Outcome::hidden())});
    } else if (id + 1 != f.cascades.size()) {
      detail::fail("line ", at, ": cascade ids must be contiguous and increasing");
    }
    return f.cascades.back();
  };
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.starts_with("#seed\t")) {
      ensure_sized();
      const auto cols = split(sv, '\t');
      if (cols.size() != 3) detail::fail("line ", lineno, ": malformed seed line");
      auto& c = cascade(parse_int<std::size_t>(cols[1]), lineno);
      c.seed = parse_int<NodeId>(cols[2]);
      if (c.seed >= f.num_nodes) detail::fail("line ", lineno, ": seed out of range");
      continue;
    }
    if (sv[0] == '#') {
      f.header.absorb(sv);
      continue;
    }
    ensure_sized();
    const auto cols = split(sv, '\t');
    if (cols.size() != 3) detail::fail("line ", lineno, ": expected cascade_id, node, outcome");
    const auto id = parse_int<std::size_t>(cols[0]);
    if (id + 1 != f.cascades.size()) detail::fail("line ", lineno, ": record for cascade ", id, " without its seed line");
    const auto node = parse_int<NodeId>(cols[1]);
    if (node >= f.num_nodes) detail::fail("line ", lineno, ": node out of range");
    try {
      f.cascades.back().times[node] = parse_outcome(cols[2], f.horizon);
    } catch (const Error& e) {
      detail::fail("line ", lineno, ": ", e.what());
    }
  }
  ensure_sized();
  for (std::size_t c = 0; c < f.cascades.size(); ++c) {
    const auto& oc = f.cascades[c];
    if (oc.times[oc.seed] != Outcome::exact(0)) detail::fail("cascade ", c, ": seed node is not active at time 0");
  }
  return f;
}

inline CascadeFile read_cascades(const std::string& path) {
  auto in = open_input(path);
  try {
    return read_cascades(in);
  } catch (const Error& e) {
    detail::fail(path, ": ", e.what());
  }
}

// ---------------------------------------------------------------------------
// Learner outputs
// ---------------------------------------------------------------------------

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace, const Header& header) {
  header.write(os);
  os << "iter,objective,max_delta,active_edges\n";
  for (const auto& r : trace)
    os << r.iteration << ',' << format_double(r.objective) << ',' << format_double(r.max_delta) << ',' << r.active_edges
       << '\n';
}

}  // namespace slicer
