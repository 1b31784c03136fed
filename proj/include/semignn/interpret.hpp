#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "semignn/model.hpp"

namespace semignn {

struct NodeImportance {
  NodeId node = 0;
  double importance = 0.0;
};

// Global node importance in one bipartite view: the attention weight each
// given user assigns to the node, summed (or averaged over attending users).
// Descending by importance, ties ascending by node id.
inline std::vector<NodeImportance> node_importance(const MultiViewGraph& g, const ModelParams& p,
                                                   const std::vector<NodeId>& users, int view,
                                                   EdgeWeightTransform transform = EdgeWeightTransform::none,
                                                   bool mean = false) {
  if (view < 0 || view >= static_cast<int>(g.views.size()))
    fail(ErrorCode::NodeOutOfRange, "view " + std::to_string(view));
  if (g.views[view].kind != ViewKind::bipartite)
    fail(ErrorCode::NotBipartiteView, "node importance needs a bipartite view");
  std::vector<double> total(g.views[view].attr_node_count, 0.0);
  std::vector<int> attending(g.views[view].attr_node_count, 0);
  ViewTrace tr;
  for (NodeId u : users) {
    node_attention(g.views[view], p, u, transform, tr);
    for (const auto& [node, alpha] : tr.alphas) {
      total[node] += alpha;
      attending[node] += 1;
    }
  }
  std::vector<NodeImportance> ranking;
  ranking.reserve(total.size());
  for (NodeId i = 0; i < total.size(); ++i)
    ranking.push_back({i, mean && attending[i] > 0 ? total[i] / attending[i] : total[i]});
  std::stable_sort(ranking.begin(), ranking.end(), [](const NodeImportance& a, const NodeImportance& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.node < b.node;
  });
  return ranking;
}

// Mean view-level attention weight per view over the given users; sums to 1
// across views.
inline std::vector<double> view_importance(const MultiViewGraph& g, const ModelParams& p,
                                           const std::vector<NodeId>& users,
                                           EdgeWeightTransform transform = EdgeWeightTransform::none) {
  if (users.empty()) fail(ErrorCode::EmptyBatch, "view importance over an empty user list");
  std::vector<double> mean(g.views.size(), 0.0);
  for (NodeId u : users) {
    const auto tr = forward(g, p, u, transform);
    for (std::size_t v = 0; v < mean.size(); ++v) mean[v] += tr.view_alphas[v];
  }
  for (double& v : mean) v /= static_cast<double>(users.size());
  return mean;
}

// Per-view means split by the model's predicted class.
inline std::vector<std::vector<double>> view_importance_by_class(const MultiViewGraph& g, const ModelParams& p,
                                                                 const std::vector<NodeId>& users,
                                                                 EdgeWeightTransform transform
                                                                 = EdgeWeightTransform::none) {
  std::vector<std::vector<double>> sums(p.dims.k, std::vector<double>(g.views.size(), 0.0));
  std::vector<std::size_t> counts(p.dims.k, 0);
  for (NodeId u : users) {
    const auto tr = forward(g, p, u, transform);
    const auto probs = predict_proba(p, tr.a);
    const int cls = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    ++counts[cls];
    for (std::size_t v = 0; v < sums[cls].size(); ++v) sums[cls][v] += tr.view_alphas[v];
  }
  for (int c = 0; c < p.dims.k; ++c)
    if (counts[c] > 0)
      for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
  return sums;
}

// Report file: `rank<TAB>node_id<TAB>name<TAB>importance`, top N rows.
inline void write_importance_report(const std::vector<NodeImportance>& ranking, const std::string& view_name,
                                    const std::string& path, int top_n = 15) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::MissingArtifact, "cannot write report " + path);
  char buf[128];
  const int n = std::min<int>(top_n, static_cast<int>(ranking.size()));
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%d\t%u\t%s_%u\t%.17g\n", i + 1, ranking[i].node, view_name.c_str(),
                  ranking[i].node, ranking[i].importance);
    out << buf;
  }
}

}  // namespace semignn
