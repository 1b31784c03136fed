#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "semignn/error.hpp"

namespace semignn {

using NodeId = std::uint32_t;

enum class ViewKind { relation, bipartite };

struct EdgeInput {
  NodeId user;
  NodeId node;  // user id in the relation view, attribute id in bipartite views
  double weight;
};

struct Neighbor {
  NodeId node;
  double weight;
  bool operator==(const Neighbor& o) const { return node == o.node && weight == o.weight; }
};

// One view of the multiview graph in CSR form. The relation view is a
// homogeneous user-user graph stored symmetrically; bipartite views connect
// users to view-local attribute nodes and also keep the reverse adjacency.
class ViewGraph {
 public:
  int view_id = 0;
  ViewKind kind = ViewKind::relation;
  NodeId user_count = 0;
  NodeId attr_node_count = 0;  // 0 for the relation view

  static ViewGraph build(int view_id, ViewKind kind, NodeId user_count, NodeId attr_node_count,
                         const std::vector<EdgeInput>& edges) {
    ViewGraph g;
    g.view_id = view_id;
    g.kind = kind;
    g.user_count = user_count;
    g.attr_node_count = kind == ViewKind::relation ? 0 : attr_node_count;

    const NodeId node_limit = kind == ViewKind::relation ? user_count : attr_node_count;
    // Merge duplicates by summing; relation pairs are canonicalized first so
    // that (u,v) and (v,u) in the input land on the same undirected edge.
    std::map<std::pair<NodeId, NodeId>, double> merged;
    for (const auto& e : edges) {
      if (e.weight <= 0.0)
        fail(ErrorCode::NegativeWeight, "edge (" + std::to_string(e.user) + "," + std::to_string(e.node) +
                                            ") has non-positive weight " + std::to_string(e.weight));
      if (e.user >= user_count)
        fail(ErrorCode::NodeOutOfRange, "user id " + std::to_string(e.user) + " >= " + std::to_string(user_count));
      if (e.node >= node_limit)
        fail(ErrorCode::NodeOutOfRange, "node id " + std::to_string(e.node) + " >= " + std::to_string(node_limit));
      if (kind == ViewKind::relation && e.user == e.node)
        fail(ErrorCode::SelfLoopInRelationView, "self loop at user " + std::to_string(e.user));
      std::pair<NodeId, NodeId> key{e.user, e.node};
      if (kind == ViewKind::relation && key.first > key.second) std::swap(key.first, key.second);
      merged[key] += e.weight;
    }

    std::vector<std::vector<Neighbor>> adj(user_count);
    std::vector<std::vector<Neighbor>> radj(g.attr_node_count);
    for (const auto& [key, w] : merged) {
      adj[key.first].push_back({key.second, w});
      if (kind == ViewKind::relation)
        adj[key.second].push_back({key.first, w});
      else
        radj[key.second].push_back({key.first, w});
    }
    g.pack(adj, g.offsets_, g.edges_);
    g.pack(radj, g.roffsets_, g.redges_);
    return g;
  }

  // Neighbors of user u, ascending by node id.
  const Neighbor* neighbors_begin(NodeId u) const { return edges_.data() + offsets_[check_user(u)]; }
  const Neighbor* neighbors_end(NodeId u) const { return edges_.data() + offsets_[check_user(u) + 1]; }
  std::vector<Neighbor> neighbors(NodeId u) const {
    return std::vector<Neighbor>(neighbors_begin(u), neighbors_end(u));
  }
  std::size_t neighbor_count(NodeId u) const { return offsets_[check_user(u) + 1] - offsets_[check_user(u)]; }

  // Users attached to attribute node i (bipartite views only).
  std::vector<Neighbor> attr_users(NodeId i) const {
    if (kind != ViewKind::bipartite) fail(ErrorCode::NotBipartiteView, "attr_users on relation view");
    if (i >= attr_node_count) fail(ErrorCode::NodeOutOfRange, "attr node " + std::to_string(i));
    return std::vector<Neighbor>(redges_.data() + roffsets_[i], redges_.data() + roffsets_[i + 1]);
  }

  // Sum of incident edge weights of user u.
  double degree(NodeId u) const {
    double d = 0.0;
    for (auto it = neighbors_begin(u); it != neighbors_end(u); ++it) d += it->weight;
    return d;
  }

  std::size_t edge_count() const {
    return kind == ViewKind::relation ? edges_.size() / 2 : edges_.size();
  }

 private:
  NodeId check_user(NodeId u) const {
    if (u >= user_count) fail(ErrorCode::NodeOutOfRange, "user id " + std::to_string(u));
    return u;
  }

  static void pack(const std::vector<std::vector<Neighbor>>& lists, std::vector<std::uint64_t>& offsets,
                   std::vector<Neighbor>& flat) {
    offsets.assign(lists.size() + 1, 0);
    std::size_t total = 0;
    for (std::size_t i = 0; i < lists.size(); ++i) {
      offsets[i] = total;
      total += lists[i].size();
    }
    offsets[lists.size()] = total;
    flat.clear();
    flat.reserve(total);
    for (const auto& l : lists) flat.insert(flat.end(), l.begin(), l.end());
  }

  std::vector<std::uint64_t> offsets_;
  std::vector<Neighbor> edges_;
  std::vector<std::uint64_t> roffsets_;  // bipartite reverse adjacency
  std::vector<Neighbor> redges_;
};

// Degree of a user in the relation view.
inline double user_degree(const ViewGraph& relation, NodeId u) {
  if (relation.kind != ViewKind::relation) fail(ErrorCode::ValidationError, "user_degree needs the relation view");
  return relation.degree(u);
}

// Seeds plus their one-hop relation neighbors: the active user population.
inline std::vector<NodeId> expand_unlabeled(const ViewGraph& relation, const std::vector<NodeId>& seeds) {
  std::set<NodeId> result(seeds.begin(), seeds.end());
  for (NodeId u : seeds)
    for (auto it = relation.neighbors_begin(u); it != relation.neighbors_end(u); ++it) result.insert(it->node);
  return std::vector<NodeId>(result.begin(), result.end());
}

struct MultiViewGraph {
  NodeId user_count = 0;
  int class_count = 2;
  std::vector<std::pair<NodeId, int>> labeled;  // (user, label)
  std::vector<ViewGraph> views;                 // views[0] is the relation view
  std::vector<std::string> view_names;

  const ViewGraph& relation_view() const { return views.front(); }

  std::vector<NodeId> labeled_users() const {
    std::vector<NodeId> out;
    out.reserve(labeled.size());
    for (const auto& [u, y] : labeled) out.push_back(u);
    return out;
  }

  int label_of(NodeId u) const {
    for (const auto& [lu, y] : labeled)
      if (lu == u) return y;
    return -1;
  }

  void validate() const {
    if (views.empty()) fail(ErrorCode::MissingRelationView, "graph has no views");
    if (views.front().kind != ViewKind::relation)
      fail(ErrorCode::MissingRelationView, "view 0 must be the relation view");
    int relation_count = 0;
    for (std::size_t v = 0; v < views.size(); ++v) {
      if (views[v].view_id != static_cast<int>(v))
        fail(ErrorCode::ValidationError, "view ids must be 0..m-1 in order");
      if (views[v].user_count != user_count) fail(ErrorCode::ValidationError, "view user count mismatch");
      if (views[v].kind == ViewKind::relation) ++relation_count;
    }
    if (relation_count != 1) fail(ErrorCode::ValidationError, "exactly one relation view required");
    if (view_names.size() != views.size()) fail(ErrorCode::ValidationError, "view name per view required");
    std::set<NodeId> seen;
    for (const auto& [u, y] : labeled) {
      if (u >= user_count) fail(ErrorCode::ValidationError, "labeled user " + std::to_string(u) + " out of range");
      if (y < 0 || y >= class_count)
        fail(ErrorCode::ValidationError, "label " + std::to_string(y) + " outside [0," + std::to_string(class_count) + ")");
      if (!seen.insert(u).second) fail(ErrorCode::ValidationError, "duplicate label for user " + std::to_string(u));
    }
  }
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

inline bool parse_u32(const std::string& s, NodeId& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  unsigned long v = std::strtoul(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || v > 0xffffffffUL) return false;
  out = static_cast<NodeId>(v);
  return true;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// Edge-list file: `user<TAB>node<TAB>weight`, '#' comments, blank lines skipped.
inline std::vector<EdgeInput> read_edge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingArtifact, "cannot open edge file " + path);
  std::vector<EdgeInput> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto toks = split_ws(line);
    EdgeInput e;
    if (toks.size() != 3 || !parse_u32(toks[0], e.user) || !parse_u32(toks[1], e.node) ||
        !parse_double(toks[2], e.weight))
      fail(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected `user<TAB>node<TAB>weight`");
    edges.push_back(e);
  }
  return edges;
}

inline std::vector<std::pair<NodeId, int>> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingArtifact, "cannot open label file " + path);
  std::vector<std::pair<NodeId, int>> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto toks = split_ws(line);
    NodeId u, y;
    if (toks.size() != 2 || !parse_u32(toks[0], u) || !parse_u32(toks[1], y))
      fail(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected `user<TAB>label`");
    labels.emplace_back(u, static_cast<int>(y));
  }
  return labels;
}

}  // namespace detail

struct ViewSummary {
  std::string name;
  std::size_t node_count;
  std::size_t edge_count;
};

// Manifest: key-value text listing `users = N`, `classes = k`, `relation = path`,
// `view.<name> = path vocab_size`, `labels = path`. Paths are relative to the
// manifest's directory.
inline MultiViewGraph load_multiview(const std::string& manifest_path,
                                     std::vector<ViewSummary>* summaries = nullptr) {
  std::ifstream in(manifest_path);
  if (!in) fail(ErrorCode::MissingArtifact, "cannot open manifest " + manifest_path);
  const auto base = std::filesystem::path(manifest_path).parent_path();

  NodeId users = 0;
  int classes = 0;
  std::string relation_path, labels_path;
  std::vector<std::tuple<std::string, std::string, NodeId>> bipartite;  // name, path, vocab

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::ParseError, manifest_path + ":" + std::to_string(lineno) + ": expected `key = value`");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t"));
      auto p = s.find_last_not_of(" \t\r");
      s.erase(p == std::string::npos ? 0 : p + 1);
    };
    trim(key);
    trim(value);
    const std::string where = manifest_path + ":" + std::to_string(lineno);
    if (key == "users") {
      if (!detail::parse_u32(value, users)) fail(ErrorCode::ParseError, where + ": bad users count");
    } else if (key == "classes") {
      NodeId k;
      if (!detail::parse_u32(value, k)) fail(ErrorCode::ParseError, where + ": bad class count");
      classes = static_cast<int>(k);
    } else if (key == "relation") {
      relation_path = value;
    } else if (key == "labels") {
      labels_path = value;
    } else if (key.rfind("view.", 0) == 0) {
      auto toks = detail::split_ws(value);
      NodeId vocab;
      if (toks.size() != 2 || !detail::parse_u32(toks[1], vocab))
        fail(ErrorCode::ParseError, where + ": expected `view.<name> = path vocab_size`");
      bipartite.emplace_back(key.substr(5), toks[0], vocab);
    } else {
      fail(ErrorCode::ParseError, where + ": unknown manifest key `" + key + "`");
    }
  }
  if (relation_path.empty()) fail(ErrorCode::MissingRelationView, manifest_path + " names no relation view");
  if (users == 0) fail(ErrorCode::ValidationError, manifest_path + ": users must be positive");
  if (classes < 2) fail(ErrorCode::ValidationError, manifest_path + ": classes must be >= 2");

  MultiViewGraph g;
  g.user_count = users;
  g.class_count = classes;
  g.views.push_back(
      ViewGraph::build(0, ViewKind::relation, users, 0, detail::read_edge_file((base / relation_path).string())));
  g.view_names.push_back("relation");
  int vid = 1;
  for (const auto& [name, path, vocab] : bipartite) {
    g.views.push_back(
        ViewGraph::build(vid++, ViewKind::bipartite, users, vocab, detail::read_edge_file((base / path).string())));
    g.view_names.push_back(name);
  }
  if (!labels_path.empty()) g.labeled = detail::read_label_file((base / labels_path).string());
  g.validate();

  if (summaries) {
    summaries->clear();
    for (std::size_t v = 0; v < g.views.size(); ++v)
      summaries->push_back({g.view_names[v],
                            g.views[v].kind == ViewKind::relation
                                ? static_cast<std::size_t>(g.user_count)
                                : static_cast<std::size_t>(g.user_count) + g.views[v].attr_node_count,
                            g.views[v].edge_count()});
  }
  return g;
}

// Writes manifest + per-view edge files + label file under dir. Weights are
// printed with %.17g so load_multiview(save_multiview(g)) is bit-exact.
inline void save_multiview(const MultiViewGraph& g, const std::string& dir,
                           const std::string& manifest_name = "manifest.txt") {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);

  auto write_view = [&](const ViewGraph& view, const std::string& fname) {
    std::ofstream out(base / fname);
    for (NodeId u = 0; u < view.user_count; ++u)
      for (auto it = view.neighbors_begin(u); it != view.neighbors_end(u); ++it) {
        if (view.kind == ViewKind::relation && it->node < u) continue;  // one line per undirected edge
        out << u << '\t' << it->node << '\t' << detail::fmt_double(it->weight) << '\n';
      }
  };

  std::ofstream man(base / manifest_name);
  man << "users = " << g.user_count << '\n';
  man << "classes = " << g.class_count << '\n';
  man << "relation = relation.tsv\n";
  write_view(g.views[0], "relation.tsv");
  for (std::size_t v = 1; v < g.views.size(); ++v) {
    const std::string fname = "view_" + g.view_names[v] + ".tsv";
    man << "view." << g.view_names[v] << " = " << fname << ' ' << g.views[v].attr_node_count << '\n';
    write_view(g.views[v], fname);
  }
  if (!g.labeled.empty()) {
    man << "labels = labels.tsv\n";
    std::ofstream out(base / "labels.tsv");
    for (const auto& [u, y] : g.labeled) out << u << '\t' << y << '\n';
  }
}

}  // namespace semignn
