#include <catch2/catch.hpp>

#include <map>

#include "semignn/walker.hpp"

using namespace semignn;

namespace {

ViewGraph relation_from(const std::vector<std::pair<NodeId, NodeId>>& pairs, NodeId users) {
  std::vector<EdgeInput> edges;
  for (auto [a, b] : pairs) edges.push_back({a, b, 1.0});
  return ViewGraph::build(0, ViewKind::relation, users, 0, edges);
}

}  // namespace

TEST_CASE("walk on a two-node path is forced") {
  auto g = relation_from({{0, 1}}, 2);
  WalkConfig cfg;
  cfg.walks_per_node = 1;
  cfg.walk_length = 3;
  cfg.window = 1;
  cfg.rng_seed = 42;
  auto corpus = generate_walks(g, {0}, cfg);
  REQUIRE(corpus.paths.size() == 1);
  REQUIRE(corpus.paths[0] == std::vector<NodeId>{0, 1, 0});
}

TEST_CASE("isolated starts contribute no paths") {
  auto g = relation_from({{0, 1}}, 3);
  WalkConfig cfg;
  cfg.walks_per_node = 4;
  cfg.walk_length = 5;
  cfg.rng_seed = 1;
  auto corpus = generate_walks(g, {0, 2}, cfg);
  REQUIRE(corpus.paths.size() == 4);  // only user 0 walks
  for (const auto& p : corpus.paths) REQUIRE(p.front() == 0);
}

TEST_CASE("walks are deterministic given the seed") {
  Rng mk(5);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (int i = 0; i < 60; ++i) {
    NodeId a = mk.next_below(25), b = mk.next_below(25);
    if (a != b) pairs.emplace_back(a, b);
  }
  auto g = relation_from(pairs, 25);
  std::vector<NodeId> active;
  for (NodeId u = 0; u < 25; ++u) active.push_back(u);
  WalkConfig cfg;
  cfg.rng_seed = 77;
  auto c1 = generate_walks(g, active, cfg);
  auto c2 = generate_walks(g, active, cfg);
  REQUIRE(c1.paths == c2.paths);
  cfg.rng_seed = 78;
  auto c3 = generate_walks(g, active, cfg);
  REQUIRE(c1.paths != c3.paths);
}

TEST_CASE("corpus size is bounded by active users times walks_per_node") {
  auto g = relation_from({{0, 1}, {1, 2}, {2, 3}}, 5);
  WalkConfig cfg;
  cfg.walks_per_node = 3;
  cfg.rng_seed = 9;
  auto corpus = generate_walks(g, {0, 1, 2, 3, 4}, cfg);
  REQUIRE(corpus.paths.size() <= 5 * 3);
  for (const auto& path : corpus.paths) {
    REQUIRE(path.size() <= static_cast<std::size_t>(cfg.walk_length));
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      auto nbs = g.neighbors(path[i]);
      REQUIRE(std::any_of(nbs.begin(), nbs.end(), [&](const Neighbor& nb) { return nb.node == path[i + 1]; }));
    }
  }
}

TEST_CASE("window pairs enumerate two-sided co-occurrences") {
  WalkCorpus corpus;
  corpus.paths = {{0, 1, 2}};
  auto pairs = window_pairs(corpus, 1);
  REQUIRE(pairs == std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {1, 0}, {1, 2}, {2, 1}});
}

TEST_CASE("pairs with equal endpoints are dropped") {
  WalkCorpus corpus;
  corpus.paths = {{0, 1, 0}};
  auto pairs = window_pairs(corpus, 2);
  REQUIRE(pairs.size() == 4);
  for (auto [u, v] : pairs) REQUIRE(u != v);
}

TEST_CASE("singleton path yields no pairs") {
  WalkCorpus corpus;
  corpus.paths = {{5}};
  REQUIRE(window_pairs(corpus, 3).empty());
}

TEST_CASE("pair emission is exactly symmetric") {
  Rng mk(13);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int i = 0; i < 40; ++i) {
    NodeId a = mk.next_below(15), b = mk.next_below(15);
    if (a != b) edges.emplace_back(a, b);
  }
  auto g = relation_from(edges, 15);
  std::vector<NodeId> active;
  for (NodeId u = 0; u < 15; ++u) active.push_back(u);
  WalkConfig cfg;
  cfg.rng_seed = 4;
  auto corpus = generate_walks(g, active, cfg);
  auto pairs = window_pairs(corpus, cfg.window);
  std::map<std::pair<NodeId, NodeId>, int> count;
  for (auto p : pairs) ++count[p];
  for (const auto& [p, c] : count) REQUIRE(count[{p.second, p.first}] == c);

  // Every pair really co-occurs within the window on some path.
  for (auto [u, v] : pairs) {
    bool found = false;
    for (const auto& path : corpus.paths)
      for (int i = 0; i < static_cast<int>(path.size()) && !found; ++i)
        for (int j = std::max(0, i - cfg.window); j <= std::min<int>(path.size() - 1, i + cfg.window); ++j)
          if (j != i && path[i] == u && path[j] == v) {
            found = true;
            break;
          }
    REQUIRE(found);
  }
}

TEST_CASE("rejection forces the only other user") {
  auto g = relation_from({{0, 1}}, 2);
  NegativeSampler sampler(g, {0, 1}, 3);
  Rng rng(21);
  for (int i = 0; i < 50; ++i) {
    auto negs = sampler.sample_negatives(0, rng);
    REQUIRE(negs == std::vector<NodeId>{1, 1, 1});
  }
}

TEST_CASE("negative sampling follows the degree^0.75 law at ratio 16:1") {
  // Star with 16 leaves: center degree 16, each leaf degree 1.
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId leaf = 1; leaf <= 16; ++leaf) edges.emplace_back(0, leaf);
  auto g = relation_from(edges, 17);
  // Active set {center, one leaf}: masses 16^0.75 : 1^0.75 = 8 : 1.
  NegativeSampler sampler(g, {0, 1}, 3);
  Rng rng(2024);
  const int draws = 1'000'000;
  int center_hits = 0;
  for (int i = 0; i < draws; ++i) center_hits += sampler.draw_raw(rng) == 0;
  const double freq = static_cast<double>(center_hits) / draws;
  REQUIRE(freq > 8.0 / 9.0 - 0.01);
  REQUIRE(freq < 8.0 / 9.0 + 0.01);
}

TEST_CASE("zero total mass is a degenerate distribution") {
  auto g = relation_from({{5, 6}}, 7);
  try {
    NegativeSampler sampler(g, {0, 1, 2}, 3);  // all isolated
    FAIL("expected DegenerateDistribution");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::DegenerateDistribution);
  }
}

TEST_CASE("zero-degree users in the active set are never drawn") {
  auto g = relation_from({{0, 1}, {1, 2}}, 4);
  NegativeSampler sampler(g, {0, 1, 2, 3}, 3);  // user 3 isolated
  Rng rng(8);
  for (int i = 0; i < 20'000; ++i) REQUIRE(sampler.draw_raw(rng) != 3);
}

TEST_CASE("empirical frequencies match normalized degree^0.75 mass on a 10-node graph") {
  // Hub-and-spoke construction giving degrees 1..10 on nodes 0..9.
  // Nodes 10.. are auxiliary spokes excluded from the active set.
  std::vector<std::pair<NodeId, NodeId>> edges;
  NodeId aux = 10;
  std::vector<int> want_degree(10);
  for (int i = 0; i < 10; ++i) want_degree[i] = i + 1;
  for (NodeId u = 0; u < 10; ++u)
    for (int k = 0; k < want_degree[u]; ++k) edges.emplace_back(u, aux++);
  auto g = relation_from(edges, aux);
  std::vector<NodeId> active;
  for (NodeId u = 0; u < 10; ++u) active.push_back(u);
  for (NodeId u = 0; u < 10; ++u) REQUIRE(user_degree(g, u) == want_degree[u]);

  NegativeSampler sampler(g, active, 3);
  Rng rng(31337);
  const int draws = 1'000'000;
  std::vector<int> hits(10, 0);
  for (int i = 0; i < draws; ++i) ++hits[sampler.draw_raw(rng)];

  double total_mass = 0.0;
  for (int d : want_degree) total_mass += std::pow(d, 0.75);
  for (int u = 0; u < 10; ++u) {
    const double expected = std::pow(want_degree[u], 0.75) / total_mass;
    const double actual = static_cast<double>(hits[u]) / draws;
    REQUIRE(std::abs(actual - expected) / expected < 0.02);
  }
}
