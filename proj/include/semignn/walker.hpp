#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "semignn/error.hpp"
#include "semignn/graph.hpp"
#include "semignn/rng.hpp"

namespace semignn {

struct WalkConfig {
  int walks_per_node = 5;
  int walk_length = 10;
  int window = 3;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (walks_per_node < 1 || walk_length < 1) fail(ErrorCode::InvalidConfig, "walk counts must be positive");
    if (window < 1 || window >= walk_length) fail(ErrorCode::InvalidConfig, "need 0 < window < walk_length");
  }
};

struct WalkCorpus {
  std::vector<std::vector<NodeId>> paths;
};

// Random-walk paths over the relation graph. Each active user with at least
// one neighbor starts walks_per_node paths; steps are sampled proportional to
// edge weight. Each (start, walk) owns an RNG substream, so generation is
// order-independent and replays bit-exactly for a given seed.
inline WalkCorpus generate_walks(const ViewGraph& relation, const std::vector<NodeId>& active_users,
                                 const WalkConfig& cfg, std::uint64_t epoch = 0) {
  cfg.validate();
  if (relation.kind != ViewKind::relation) fail(ErrorCode::NoRelationView, "walks need the relation view");
  WalkCorpus corpus;
  std::vector<double> cumulative;
  for (NodeId start : active_users) {
    if (relation.neighbor_count(start) == 0) continue;
    for (int w = 0; w < cfg.walks_per_node; ++w) {
      Rng rng = substream(cfg.rng_seed, stream::kWalks + epoch, start, static_cast<std::uint64_t>(w));
      std::vector<NodeId> path;
      path.reserve(cfg.walk_length);
      NodeId cur = start;
      path.push_back(cur);
      while (static_cast<int>(path.size()) < cfg.walk_length) {
        auto begin = relation.neighbors_begin(cur);
        auto end = relation.neighbors_end(cur);
        if (begin == end) break;  // sink; cannot happen mid-walk on an undirected graph, guarded anyway
        cumulative.clear();
        double total = 0.0;
        for (auto it = begin; it != end; ++it) cumulative.push_back(total += it->weight);
        const double r = rng.next_double() * total;
        std::size_t lo = 0, hi = cumulative.size() - 1;
        while (lo < hi) {
          std::size_t mid = (lo + hi) / 2;
          if (cumulative[mid] > r)
            hi = mid;
          else
            lo = mid + 1;
        }
        cur = (begin + lo)->node;
        path.push_back(cur);
      }
      corpus.paths.push_back(std::move(path));
    }
  }
  return corpus;
}

// (center, context) pairs within `window` positions on each path. Pairs whose
// two endpoints are the same user are dropped.
inline std::vector<std::pair<NodeId, NodeId>> window_pairs(const WalkCorpus& corpus, int window) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (const auto& path : corpus.paths) {
    const int n = static_cast<int>(path.size());
    for (int i = 0; i < n; ++i)
      for (int j = std::max(0, i - window); j <= std::min(n - 1, i + window); ++j) {
        if (j == i || path[i] == path[j]) continue;
        pairs.emplace_back(path[i], path[j]);
      }
  }
  return pairs;
}

inline void dump_corpus(const WalkCorpus& corpus, const std::string& path) {
  std::ofstream out(path);
  for (const auto& walk : corpus.paths) {
    for (std::size_t i = 0; i < walk.size(); ++i) out << (i ? " " : "") << walk[i];
    out << '\n';
  }
}

// Draws users with probability proportional to degree^0.75 over the active
// population, via a Walker alias table. Users with zero degree get zero mass.
class NegativeSampler {
 public:
  static constexpr double kPower = 0.75;

  NegativeSampler(const ViewGraph& relation, const std::vector<NodeId>& active_users, int q = 3) : q_(q) {
    users_ = active_users;
    std::vector<double> mass(users_.size());
    double total = 0.0;
    for (std::size_t i = 0; i < users_.size(); ++i)
      total += mass[i] = std::pow(user_degree(relation, users_[i]), kPower);
    if (!(total > 0.0)) fail(ErrorCode::DegenerateDistribution, "negative sampling distribution has zero mass");
    build_alias(mass, total);
  }

  int q() const { return q_; }
  std::size_t size() const { return users_.size(); }

  // One draw from the raw d^0.75 distribution.
  NodeId draw_raw(Rng& rng) const {
    const std::size_t i = rng.next_below(static_cast<std::uint32_t>(users_.size()));
    return rng.next_double() < accept_[i] ? users_[i] : users_[alias_[i]];
  }

  // Q i.i.d. draws; a draw equal to the center is rejected and redrawn.
  std::vector<NodeId> sample_negatives(NodeId center, Rng& rng) const {
    std::vector<NodeId> out;
    sample_negatives_into(center, rng, out);
    return out;
  }

  void sample_negatives_into(NodeId center, Rng& rng, std::vector<NodeId>& out) const {
    out.clear();
    out.reserve(q_);
    for (int k = 0; k < q_; ++k) {
      NodeId pick = center;
      for (int attempt = 0; attempt < 1 << 20 && pick == center; ++attempt) pick = draw_raw(rng);
      if (pick == center)
        fail(ErrorCode::DegenerateDistribution, "all sampling mass sits on the excluded center");
      out.push_back(pick);
    }
  }

 private:
  void build_alias(std::vector<double>& mass, double total) {
    const std::size_t n = mass.size();
    accept_.assign(n, 1.0);
    alias_.assign(n, 0);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      mass[i] = mass[i] * n / total;
      (mass[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back(), l = large.back();
      small.pop_back();
      large.pop_back();
      accept_[s] = mass[s];
      alias_[s] = l;
      mass[l] -= 1.0 - mass[s];
      (mass[l] < 1.0 ? small : large).push_back(l);
    }
    // Leftovers are 1.0 up to rounding.
  }

  std::vector<NodeId> users_;
  std::vector<double> accept_;
  std::vector<std::size_t> alias_;
  int q_;
};

}  // namespace semignn
