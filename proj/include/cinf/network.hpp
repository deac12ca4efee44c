#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cinf/error.hpp"
#include "cinf/rng.hpp"

namespace cinf {

using NodeId = std::uint32_t;

/// Directed edge j -> i (exposure flows from j to i).
struct Edge {
  NodeId src;
  NodeId dst;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Static graph with optional categorical node covariates.
///
/// Edges are stored as sorted out- and in-adjacency lists. Immutable after
/// construction; share freely across threads.
class Network {
 public:
  Network() = default;

  /// Validates endpoints and rejects self-loops. Duplicate edges collapse.
  /// When `directed` is false the edge set is closed under reversal.
  static Network from_edges(std::size_t node_count, std::vector<Edge> edges, bool directed = true) {
    if (node_count == 0) throw DataError("degenerate graph: zero nodes");
    for (const auto& e : edges) {
      if (e.src >= node_count || e.dst >= node_count)
        throw DataError("edge endpoint out of range: " + std::to_string(e.src) + " " + std::to_string(e.dst));
      if (e.src == e.dst) throw DataError("self-loop on node " + std::to_string(e.src));
    }
    if (!directed) {
      const auto n = edges.size();
      edges.reserve(2 * n);
      for (std::size_t k = 0; k < n; ++k) edges.push_back({edges[k].dst, edges[k].src});
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    Network net;
    net.node_count_ = node_count;
    net.directed_ = directed;
    net.edges_ = std::move(edges);
    net.build_index();
    return net;
  }

  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool directed() const noexcept { return directed_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  std::span<const NodeId> out_neighbors(NodeId j) const noexcept {
    return {out_adj_.data() + out_off_[j], out_adj_.data() + out_off_[j + 1]};
  }
  std::span<const NodeId> in_neighbors(NodeId i) const noexcept {
    return {in_adj_.data() + in_off_[i], in_adj_.data() + in_off_[i + 1]};
  }
  std::size_t out_degree(NodeId j) const noexcept { return out_off_[j + 1] - out_off_[j]; }
  std::size_t in_degree(NodeId i) const noexcept { return in_off_[i + 1] - in_off_[i]; }

  bool has_edge(NodeId j, NodeId i) const noexcept {
    auto nb = out_neighbors(j);
    return std::binary_search(nb.begin(), nb.end(), i);
  }

  std::size_t max_in_degree() const noexcept {
    std::size_t m = 0;
    for (NodeId i = 0; i < node_count_; ++i) m = std::max(m, in_degree(i));
    return m;
  }

  // ---- covariates -------------------------------------------------------

  /// Attach a categorical attribute. `values` has one entry per node; an
  /// empty string means "missing" and never matches anything.
  void set_covariate(const std::string& name, std::vector<std::string> values) {
    if (values.size() != node_count_) throw DataError("covariate '" + name + "' has wrong length");
    std::map<std::string, int> codes;
    std::vector<int> coded(values.size(), -1);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i].empty()) continue;
      auto [it, inserted] = codes.try_emplace(values[i], static_cast<int>(codes.size()));
      coded[i] = it->second;
    }
    covariates_[name] = Covariate{std::move(values), std::move(coded), codes.size()};
  }

  bool has_covariate(const std::string& name) const { return covariates_.contains(name); }

  std::vector<std::string> covariate_names() const {
    std::vector<std::string> names;
    for (const auto& [k, v] : covariates_) names.push_back(k);
    return names;
  }

  const std::vector<std::string>& covariate_values(const std::string& name) const { return covariate(name).values; }

  /// Dense integer codes per node (-1 for missing) and the number of codes.
  const std::vector<int>& covariate_codes(const std::string& name) const { return covariate(name).codes; }
  std::size_t covariate_levels(const std::string& name) const { return covariate(name).levels; }

  /// FNV-1a over node count, directedness and the sorted edge list.
  std::uint64_t fingerprint() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    };
    mix(node_count_);
    mix(directed_ ? 1 : 0);
    for (const auto& e : edges_) mix((static_cast<std::uint64_t>(e.src) << 32) | e.dst);
    return h;
  }

 private:
  struct Covariate {
    std::vector<std::string> values;
    std::vector<int> codes;
    std::size_t levels = 0;
  };

  const Covariate& covariate(const std::string& name) const {
    auto it = covariates_.find(name);
    if (it == covariates_.end()) throw DataError("unknown covariate '" + name + "'");
    return it->second;
  }

  void build_index() {
    out_off_.assign(node_count_ + 1, 0);
    in_off_.assign(node_count_ + 1, 0);
    for (const auto& e : edges_) {
      ++out_off_[e.src + 1];
      ++in_off_[e.dst + 1];
    }
    std::partial_sum(out_off_.begin(), out_off_.end(), out_off_.begin());
    std::partial_sum(in_off_.begin(), in_off_.end(), in_off_.begin());
    out_adj_.resize(edges_.size());
    in_adj_.resize(edges_.size());
    std::vector<std::size_t> out_pos(out_off_.begin(), out_off_.end() - 1);
    std::vector<std::size_t> in_pos(in_off_.begin(), in_off_.end() - 1);
    // edges_ is sorted by (src, dst), so both lists come out sorted.
    for (const auto& e : edges_) {
      out_adj_[out_pos[e.src]++] = e.dst;
      in_adj_[in_pos[e.dst]++] = e.src;
    }
    for (NodeId i = 0; i < node_count_; ++i) std::sort(in_adj_.begin() + in_off_[i], in_adj_.begin() + in_off_[i + 1]);
  }

  std::size_t node_count_ = 0;
  bool directed_ = true;
  std::vector<Edge> edges_;
  std::vector<std::size_t> out_off_, in_off_;
  std::vector<NodeId> out_adj_, in_adj_;
  std::map<std::string, Covariate> covariates_;
};

/// Weakly connected components; returns a component label per node and the
/// label of the largest component (lowest label wins ties).
inline std::pair<std::vector<int>, int> weak_components(const Network& net) {
  const auto n = net.node_count();
  std::vector<int> label(n, -1);
  std::vector<std::size_t> sizes;
  std::vector<NodeId> stack;
  for (NodeId s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    const int c = static_cast<int>(sizes.size());
    sizes.push_back(0);
    label[s] = c;
    stack.push_back(s);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      ++sizes[c];
      for (auto nbrs : {net.out_neighbors(u), net.in_neighbors(u)})
        for (NodeId v : nbrs)
          if (label[v] < 0) {
            label[v] = c;
            stack.push_back(v);
          }
    }
  }
  int best = 0;
  for (int c = 1; c < static_cast<int>(sizes.size()); ++c)
    if (sizes[c] > sizes[best]) best = c;
  return {std::move(label), best};
}

/// Induced subgraph on the largest weakly connected component, nodes
/// relabelled in ascending original order. Covariates are carried over.
inline Network largest_weak_component(const Network& net) {
  auto [label, best] = weak_components(net);
  std::vector<NodeId> remap(net.node_count(), static_cast<NodeId>(-1));
  NodeId next = 0;
  for (NodeId i = 0; i < net.node_count(); ++i)
    if (label[i] == best) remap[i] = next++;
  if (next == net.node_count()) return net;
  std::vector<Edge> edges;
  for (const auto& e : net.edges())
    if (label[e.src] == best) edges.push_back({remap[e.src], remap[e.dst]});
  Network out = Network::from_edges(next, std::move(edges), net.directed());
  for (const auto& name : net.covariate_names()) {
    const auto& vals = net.covariate_values(name);
    std::vector<std::string> kept;
    for (NodeId i = 0; i < net.node_count(); ++i)
      if (label[i] == best) kept.push_back(vals[i]);
    out.set_covariate(name, std::move(kept));
  }
  return out;
}

enum class NetworkKind { erdos_renyi_directed, preferential_attachment };

inline std::optional<NetworkKind> parse_network_kind(std::string_view s) {
  if (s == "erdos_renyi_directed") return NetworkKind::erdos_renyi_directed;
  if (s == "preferential_attachment") return NetworkKind::preferential_attachment;
  return std::nullopt;
}

inline const char* to_string(NetworkKind k) {
  return k == NetworkKind::erdos_renyi_directed ? "erdos_renyi_directed" : "preferential_attachment";
}

/// Synthetic network generator, deterministic per seed.
///
/// erdos_renyi_directed: every ordered pair (j, i), j != i, is an edge with
/// probability `param`.
/// preferential_attachment: node t links to `param` distinct earlier nodes
/// chosen with probability proportional to (in-degree + 1); edges point from
/// the newcomer to the earlier node, so the graph is acyclic.
///
/// The largest weakly connected component is retained and relabelled.
inline Network generate_network(NetworkKind kind, std::size_t nodes, double param, std::uint64_t seed) {
  if (nodes < 10) throw DataError("generate_network: need at least 10 nodes");
  SeedStream rng(seed, 0x6e6574);
  std::vector<Edge> edges;
  if (kind == NetworkKind::erdos_renyi_directed) {
    if (!(param > 0.0 && param <= 1.0)) throw DataError("erdos_renyi_directed: p must lie in (0, 1]");
    for (NodeId j = 0; j < nodes; ++j)
      for (NodeId i = 0; i < nodes; ++i)
        if (i != j && rng.bernoulli(param)) edges.push_back({j, i});
  } else {
    const auto m = static_cast<std::size_t>(std::llround(param));
    if (m < 1) throw DataError("preferential_attachment: attachment count must be >= 1");
    std::vector<double> weight;  // in-degree + 1
    weight.reserve(nodes);
    weight.push_back(1.0);
    for (NodeId t = 1; t < nodes; ++t) {
      const std::size_t k = std::min<std::size_t>(m, t);
      std::vector<NodeId> chosen;
      double total = 0.0;
      for (NodeId u = 0; u < t; ++u) total += weight[u];
      while (chosen.size() < k) {
        double r = rng.uniform() * total;
        NodeId u = 0;
        for (; u + 1 < t; ++u) {
          if (r < weight[u]) break;
          r -= weight[u];
        }
        if (std::find(chosen.begin(), chosen.end(), u) != chosen.end()) continue;
        chosen.push_back(u);
      }
      for (NodeId u : chosen) {
        edges.push_back({t, u});
        weight[u] += 1.0;
      }
      weight.push_back(1.0);
    }
  }
  if (edges.empty()) throw DataError("generate_network: parameters produced an empty edge set");
  return largest_weak_component(Network::from_edges(nodes, std::move(edges), true));
}

// ---- edge list I/O -------------------------------------------------------

namespace detail {
inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline bool parse_node_id(const std::string& tok, NodeId& out) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) return false;
  try {
    const auto v = std::stoull(tok);
    if (v > 0xfffffffeULL) return false;
    out = static_cast<NodeId>(v);
    return true;
  } catch (...) {
    return false;
  }
}
}  // namespace detail

/// Parse the whitespace-separated "src dst" edge list format. '#' lines are
/// comments; a "# nodes=<M> directed=<0|1>" header, when present, fixes the
/// node count and directedness (otherwise M = max id + 1, directed).
inline Network parse_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::size_t max_id = 0;
  std::optional<std::size_t> declared_nodes;
  bool directed = true;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::istringstream hs(t.substr(1));
      std::string kv;
      while (hs >> kv) {
        if (kv.rfind("nodes=", 0) == 0) {
          NodeId v = 0;
          if (!detail::parse_node_id(kv.substr(6), v))
            throw DataError("edge list line " + std::to_string(lineno) + ": bad node count");
          declared_nodes = v;
        }
        if (kv.rfind("directed=", 0) == 0) directed = kv.substr(9) != "0" && kv.substr(9) != "false";
      }
      continue;
    }
    std::istringstream ls(t);
    std::string a, b, extra;
    NodeId s = 0, d = 0;
    if (!(ls >> a >> b) || (ls >> extra) || !detail::parse_node_id(a, s) || !detail::parse_node_id(b, d))
      throw DataError("edge list line " + std::to_string(lineno) + ": malformed '" + t + "'");
    if (s == d) throw DataError("edge list line " + std::to_string(lineno) + ": self-loop " + t);
    edges.push_back({s, d});
    max_id = std::max<std::size_t>(max_id, std::max(s, d));
  }
  std::size_t n = edges.empty() ? 0 : max_id + 1;
  if (declared_nodes) {
    if (*declared_nodes < n) throw DataError("edge list: declared node count smaller than max id + 1");
    n = *declared_nodes;
  }
  if (n == 0) throw DataError("edge list: no edges");
  return Network::from_edges(n, std::move(edges), directed);
}

inline Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open network file '" + path + "'");
  return parse_edge_list(in);
}

inline void write_edge_list(std::ostream& out, const Network& net) {
  out << "# nodes=" << net.node_count() << " directed=" << (net.directed() ? 1 : 0) << '\n';
  for (const auto& e : net.edges()) out << e.src << ' ' << e.dst << '\n';
}

inline void save_network(const std::string& path, const Network& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write network file '" + path + "'");
  write_edge_list(out, net);
}

/// Covariates CSV with header "node,attr_name,attr_value". Nodes without an
/// entry for an attribute get the missing value.
inline void parse_covariates(std::istream& in, Network& net) {
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::vector<std::string>> attrs;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header) {
      if (t != "node,attr_name,attr_value")
        throw DataError("covariates line " + std::to_string(lineno) + ": expected header 'node,attr_name,attr_value'");
      header = true;
      continue;
    }
    const auto c1 = t.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : t.find(',', c1 + 1);
    NodeId node = 0;
    if (c2 == std::string::npos || !detail::parse_node_id(t.substr(0, c1), node) || node >= net.node_count())
      throw DataError("covariates line " + std::to_string(lineno) + ": malformed '" + t + "'");
    auto& vals = attrs[t.substr(c1 + 1, c2 - c1 - 1)];
    vals.resize(net.node_count());
    vals[node] = t.substr(c2 + 1);
  }
  for (auto& [name, vals] : attrs) net.set_covariate(name, std::move(vals));
}

inline void read_covariates(const std::string& path, Network& net) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open covariates file '" + path + "'");
  parse_covariates(in, net);
}

}  // namespace cinf
