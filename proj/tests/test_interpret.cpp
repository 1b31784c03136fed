#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>

#include "semignn/interpret.hpp"

using namespace semignn;

namespace {

ModelDims small_dims() {
  ModelDims d;
  d.d0 = 2;
  d.mlp = {2};
  d.d_final = 2;
  d.k = 2;
  return d;
}

MultiViewGraph two_user_graph(const std::vector<EdgeInput>& bip, NodeId vocab) {
  MultiViewGraph g;
  g.user_count = 2;
  g.class_count = 2;
  g.views.push_back(ViewGraph::build(0, ViewKind::relation, 2, 0, {{0, 1, 1.0}}));
  g.views.push_back(ViewGraph::build(1, ViewKind::bipartite, 2, vocab, bip));
  g.view_names = {"relation", "word"};
  g.labeled = {{0, 1}};
  g.validate();
  return g;
}

}  // namespace

TEST_CASE("a single user with a single neighbor puts importance one on it") {
  auto g = two_user_graph({{0, 2, 1.0}}, 4);
  auto p = init_params(g, small_dims(), ViewAttentionMode::shared, 1);
  auto ranking = node_importance(g, p, {0}, 1);
  REQUIRE(ranking[0].node == 2);
  REQUIRE(ranking[0].importance == Approx(1.0));
  for (std::size_t i = 1; i < ranking.size(); ++i) REQUIRE(ranking[i].importance == 0.0);
}

TEST_CASE("ties rank by ascending node id") {
  auto g = two_user_graph({{0, 3, 1.0}, {1, 1, 1.0}}, 4);
  auto p = init_params(g, small_dims(), ViewAttentionMode::shared, 2);
  auto ranking = node_importance(g, p, {0, 1}, 1);
  REQUIRE(ranking[0].importance == Approx(1.0));
  REQUIRE(ranking[1].importance == Approx(1.0));
  REQUIRE(ranking[0].node == 1);
  REQUIRE(ranking[1].node == 3);
}

TEST_CASE("attention mass is conserved across the ranking") {
  Rng mk(5);
  std::vector<EdgeInput> bip;
  for (int i = 0; i < 30; ++i) bip.push_back({mk.next_below(6), mk.next_below(9), 1.0 + mk.next_below(3)});
  MultiViewGraph g;
  g.user_count = 6;
  g.class_count = 2;
  g.views.push_back(ViewGraph::build(0, ViewKind::relation, 6, 0, {{0, 1, 1.0}}));
  g.views.push_back(ViewGraph::build(1, ViewKind::bipartite, 6, 9, bip));
  g.view_names = {"relation", "word"};
  auto p = init_params(g, small_dims(), ViewAttentionMode::shared, 3);
  std::vector<NodeId> users = {0, 1, 2, 3, 4, 5};
  auto ranking = node_importance(g, p, users, 1);
  double mass = 0.0;
  for (const auto& r : ranking) mass += r.importance;
  int attending = 0;
  for (NodeId u : users) attending += g.views[1].neighbor_count(u) > 0 ? 1 : 0;
  REQUIRE(mass == Approx(static_cast<double>(attending)).margin(1e-9));
}

TEST_CASE("node importance requires a bipartite view") {
  auto g = two_user_graph({{0, 0, 1.0}}, 2);
  auto p = init_params(g, small_dims(), ViewAttentionMode::shared, 4);
  try {
    node_importance(g, p, {0}, 0);
    FAIL("expected NotBipartiteView");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::NotBipartiteView);
  }
}

TEST_CASE("mean aggregation divides by attending users") {
  auto g = two_user_graph({{0, 1, 1.0}, {1, 1, 1.0}, {1, 2, 1.0}}, 4);
  auto p = init_params(g, small_dims(), ViewAttentionMode::shared, 5);
  auto sum_rank = node_importance(g, p, {0, 1}, 1, EdgeWeightTransform::none, false);
  auto mean_rank = node_importance(g, p, {0, 1}, 1, EdgeWeightTransform::none, true);
  auto find = [](const std::vector<NodeImportance>& r, NodeId node) {
    return std::find_if(r.begin(), r.end(), [&](const NodeImportance& x) { return x.node == node; })->importance;
  };
  REQUIRE(find(mean_rank, 1) == Approx(find(sum_rank, 1) / 2.0));
}

TEST_CASE("view importance means") {
  SECTION("single view is identically one") {
    MultiViewGraph g;
    g.user_count = 2;
    g.class_count = 2;
    g.views.push_back(ViewGraph::build(0, ViewKind::relation, 2, 0, {{0, 1, 1.0}}));
    g.view_names = {"relation"};
    auto p = init_params(g, small_dims(), ViewAttentionMode::shared, 6);
    auto vi = view_importance(g, p, {0, 1});
    REQUIRE(vi == std::vector<double>{1.0});
  }
  SECTION("symmetric parameters give uniform means") {
    auto g = two_user_graph({{0, 0, 1.0}}, 2);
    auto p = init_params(g, small_dims(), ViewAttentionMode::shared, 7);
    // Zero the attention inputs so both views lift the same vector.
    for (int v = 0; v < 2; ++v) {
      std::fill(p.store.tensor(p.M[v]).data.begin(), p.store.tensor(p.M[v]).data.end(), 0.0);
      p.store.tensor(p.phi[v]).data = {0.4, -0.2};
      p.store.tensor(p.W[v][0]).data = {1.0, 0.0, 0.0, 1.0};
      p.store.tensor(p.b[v][0]).data = {0.3, 0.1};
    }
    auto vi = view_importance(g, p, {0, 1});
    REQUIRE(vi[0] == Approx(0.5).margin(1e-9));
    REQUIRE(vi[1] == Approx(0.5).margin(1e-9));
  }
  SECTION("dots (ln 3, 0) for every user average to (0.75, 0.25)") {
    auto g = two_user_graph({{0, 0, 1.0}}, 2);
    auto p = init_params(g, small_dims(), ViewAttentionMode::shared, 8);
    for (int v = 0; v < 2; ++v) {
      std::fill(p.store.tensor(p.M[v]).data.begin(), p.store.tensor(p.M[v]).data.end(), 0.0);
      p.store.tensor(p.W[v][0]).data = {0.0, 0.0, 0.0, 0.0};
      p.store.tensor(p.b[v][0]).data = {1.0, 0.0};  // lifted = (1, 0) in both views
    }
    p.store.tensor(p.phi[0]).data = {std::log(3.0), 0.0};
    p.store.tensor(p.phi[1]).data = {0.0, 0.0};
    auto vi = view_importance(g, p, {0, 1});
    REQUIRE(vi[0] == Approx(0.75).margin(1e-9));
    REQUIRE(vi[1] == Approx(0.25).margin(1e-9));
    double sum = vi[0] + vi[1];
    REQUIRE(std::abs(sum - 1.0) < 1e-6);
  }
}

TEST_CASE("importance report writes rank, node, name and value") {
  auto g = two_user_graph({{0, 1, 1.0}, {1, 2, 1.0}}, 4);
  auto p = init_params(g, small_dims(), ViewAttentionMode::shared, 9);
  auto ranking = node_importance(g, p, {0, 1}, 1);
  const auto path = (std::filesystem::temp_directory_path() / "semignn_importance_test.tsv").string();
  write_importance_report(ranking, "word", path, 3);
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  REQUIRE(lines[0].rfind("1\t", 0) == 0);
  REQUIRE(lines[0].find("word_") != std::string::npos);
}
