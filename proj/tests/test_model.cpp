#include <catch2/catch.hpp>

#include "semignn/checkpoint.hpp"
#include "semignn/model.hpp"

using namespace semignn;

namespace {

// 2 views, 3 users, 2 attribute nodes; user 2 has no bipartite neighbors.
MultiViewGraph tiny_graph() {
  MultiViewGraph g;
  g.user_count = 3;
  g.class_count = 2;
  g.views.push_back(ViewGraph::build(0, ViewKind::relation, 3, 0, {{0, 1, 1.0}, {1, 2, 1.0}}));
  g.views.push_back(ViewGraph::build(1, ViewKind::bipartite, 3, 2, {{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, 1.0}}));
  g.view_names = {"relation", "word"};
  g.labeled = {{0, 1}, {2, 0}};
  g.validate();
  return g;
}

ModelDims tiny_dims() {
  ModelDims d;
  d.d0 = 2;
  d.mlp = {2};
  d.d_final = 2;
  d.k = 2;
  return d;
}

void set_tensor(ModelParams& p, int id, const std::vector<double>& vals) {
  REQUIRE(p.store.tensor(id).data.size() == vals.size());
  p.store.tensor(id).data = vals;
}

}  // namespace

TEST_CASE("single neighbor gets attention weight one") {
  auto g = tiny_graph();
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 1);
  ViewTrace tr;
  node_attention(g.views[1], p, 1, EdgeWeightTransform::none, tr);  // user 1: only word 0, weight 1
  REQUIRE(tr.alphas.size() == 1);
  REQUIRE(tr.alphas[0].second == Approx(1.0));
  const double* m0 = p.store.tensor(p.M[1]).row(0);
  REQUIRE(tr.h_low[0] == Approx(m0[0]));
  REQUIRE(tr.h_low[1] == Approx(m0[1]));
}

TEST_CASE("identical neighbors split attention evenly") {
  MultiViewGraph g;
  g.user_count = 1;
  g.class_count = 2;
  g.views.push_back(ViewGraph::build(0, ViewKind::relation, 1, 0, {}));
  g.views.push_back(ViewGraph::build(1, ViewKind::bipartite, 1, 2, {{0, 0, 1.0}, {0, 1, 1.0}}));
  g.view_names = {"relation", "word"};
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 1);
  set_tensor(p, p.M[1], {0.3, -0.4, 0.3, -0.4});
  set_tensor(p, p.H[1], {0.9, 0.1, 0.9, 0.1});
  ViewTrace tr;
  node_attention(g.views[1], p, 0, EdgeWeightTransform::none, tr);
  REQUIRE(tr.alphas[0].second == Approx(0.5));
  REQUIRE(tr.alphas[1].second == Approx(0.5));
}

TEST_CASE("node attention softmax matches the hand-computed two-neighbor case") {
  // e_0 = (1,0), e_1 = (0,1); H rows (1,0) and (2,0) give scores (1, 0).
  MultiViewGraph g;
  g.user_count = 1;
  g.class_count = 2;
  g.views.push_back(ViewGraph::build(0, ViewKind::relation, 1, 0, {}));
  g.views.push_back(ViewGraph::build(1, ViewKind::bipartite, 1, 2, {{0, 0, 1.0}, {0, 1, 1.0}}));
  g.view_names = {"relation", "word"};
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 1);
  set_tensor(p, p.M[1], {1.0, 0.0, 0.0, 1.0});
  set_tensor(p, p.H[1], {1.0, 0.0, 2.0, 0.0});
  ViewTrace tr;
  node_attention(g.views[1], p, 0, EdgeWeightTransform::none, tr);
  const double a0 = std::exp(1.0) / (std::exp(1.0) + 1.0);
  REQUIRE(tr.alphas[0].second == Approx(a0).epsilon(1e-12));
  REQUIRE(tr.alphas[1].second == Approx(1.0 - a0).epsilon(1e-12));
  REQUIRE(a0 == Approx(0.7311).margin(5e-5));
  REQUIRE(tr.h_low[0] == Approx(a0).epsilon(1e-12));
  REQUIRE(tr.h_low[1] == Approx(1.0 - a0).epsilon(1e-12));
}

TEST_CASE("doubling the edge weight doubles the weighted embedding") {
  MultiViewGraph g;
  g.user_count = 1;
  g.class_count = 2;
  g.views.push_back(ViewGraph::build(0, ViewKind::relation, 1, 0, {}));
  g.views.push_back(ViewGraph::build(1, ViewKind::bipartite, 1, 1, {{0, 0, 2.0}}));
  g.view_names = {"relation", "word"};
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 3);
  ViewTrace tr;
  node_attention(g.views[1], p, 0, EdgeWeightTransform::none, tr);
  const double* m = p.store.tensor(p.M[1]).row(0);
  REQUIRE(tr.h_low[0] == Approx(2.0 * m[0]).epsilon(1e-12));
  REQUIRE(tr.h_low[1] == Approx(2.0 * m[1]).epsilon(1e-12));
}

TEST_CASE("view mlp basics") {
  auto g = tiny_graph();
  ModelDims d = tiny_dims();
  auto p = init_params(g, d, ViewAttentionMode::shared, 2);

  SECTION("zero input and zero bias give zero output") {
    set_tensor(p, p.b[0][0], {0.0, 0.0});
    auto y = view_mlp(p, 0, {0.0, 0.0});
    REQUIRE(y == std::vector<double>{0.0, 0.0});
  }
  SECTION("identity weights pass non-negative input through") {
    set_tensor(p, p.W[0][0], {1.0, 0.0, 0.0, 1.0});
    set_tensor(p, p.b[0][0], {0.0, 0.0});
    auto y = view_mlp(p, 0, {0.25, 3.0});
    REQUIRE(y[0] == Approx(0.25));
    REQUIRE(y[1] == Approx(3.0));
  }
}

TEST_CASE("relu clamps a negative pre-activation to zero") {
  MultiViewGraph g;
  g.user_count = 1;
  g.class_count = 2;
  g.views.push_back(ViewGraph::build(0, ViewKind::relation, 1, 0, {}));
  g.view_names = {"relation"};
  ModelDims d;
  d.d0 = 2;
  d.mlp = {1};
  d.d_final = 1;
  auto p = init_params(g, d, ViewAttentionMode::shared, 2);
  set_tensor(p, p.W[0][0], {1.0, -2.0});
  set_tensor(p, p.b[0][0], {0.5});
  auto y = view_mlp(p, 0, {1.0, 1.0});  // relu(1 - 2 + 0.5) = 0
  REQUIRE(y == std::vector<double>{0.0});
}

TEST_CASE("view attention closed forms") {
  auto g = tiny_graph();
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 4);

  SECTION("single view takes all the weight") {
    MultiViewGraph g1;
    g1.user_count = 1;
    g1.class_count = 2;
    g1.views.push_back(ViewGraph::build(0, ViewKind::relation, 1, 0, {}));
    g1.view_names = {"relation"};
    auto p1 = init_params(g1, tiny_dims(), ViewAttentionMode::shared, 4);
    std::vector<double> joint, va;
    view_attention(p1, 0, {{0.4, -0.2}}, joint, va);
    REQUIRE(va == std::vector<double>{1.0});
    REQUIRE(joint[0] == Approx(0.4));
    REQUIRE(joint[1] == Approx(-0.2));
  }
  SECTION("identical views split evenly") {
    set_tensor(p, p.phi[0], {0.7, -0.3});
    set_tensor(p, p.phi[1], {0.7, -0.3});
    std::vector<double> joint, va;
    view_attention(p, 0, {{1.0, 2.0}, {1.0, 2.0}}, joint, va);
    REQUIRE(va[0] == Approx(0.5));
    REQUIRE(va[1] == Approx(0.5));
  }
  SECTION("dots (ln 3, 0) give weights (0.75, 0.25)") {
    set_tensor(p, p.phi[0], {std::log(3.0), 0.0});
    set_tensor(p, p.phi[1], {1.0, 1.0});
    std::vector<double> joint, va;
    view_attention(p, 0, {{1.0, 0.0}, {0.0, 0.0}}, joint, va);
    REQUIRE(va[0] == Approx(0.75).epsilon(1e-12));
    REQUIRE(va[1] == Approx(0.25).epsilon(1e-12));
    REQUIRE(joint[0] == Approx(0.75).epsilon(1e-12));
    REQUIRE(joint[2] == Approx(0.0));
  }
}

TEST_CASE("all-zero parameters park the forward pass at zero") {
  auto g = tiny_graph();
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 5);
  for (int id = 0; id < p.store.count(); ++id)
    std::fill(p.store.tensor(id).data.begin(), p.store.tensor(id).data.end(), 0.0);
  auto tr = forward(g, p, 0);
  for (double v : tr.a) REQUIRE(v == 0.0);
  for (double v : tr.view_alphas) REQUIRE(v == Approx(0.5));
  for (const auto& vt : tr.views)
    for (const auto& [node, alpha] : vt.alphas) REQUIRE(alpha >= 0.0);
}

TEST_CASE("a user isolated in every view still gets a finite embedding") {
  MultiViewGraph g;
  g.user_count = 2;
  g.class_count = 2;
  g.views.push_back(ViewGraph::build(0, ViewKind::relation, 2, 0, {}));
  g.views.push_back(ViewGraph::build(1, ViewKind::bipartite, 2, 2, {{1, 0, 1.0}}));
  g.view_names = {"relation", "word"};
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 6);
  auto tr = forward(g, p, 0);
  REQUIRE(tr.views[0].alphas.empty());
  REQUIRE(tr.views[1].alphas.empty());
  for (double v : tr.a) REQUIRE(std::isfinite(v));
  // lifted vectors are MLP(0), not necessarily zero because of biases
  auto lifted0 = view_mlp(p, 0, {0.0, 0.0});
  REQUIRE(tr.views[0].lifted == lifted0);
}

TEST_CASE("forward matches an independently coded straight-line recomputation") {
  auto g = tiny_graph();
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 7);

  for (NodeId u = 0; u < 3; ++u) {
    auto tr = forward(g, p, u);

    // Straight-line recomputation with explicit index arithmetic.
    const int d0 = 2, dv = 2, m = 2;
    std::vector<std::vector<double>> lifted;
    for (int v = 0; v < m; ++v) {
      const Tensor& M = p.store.tensor(p.M[v]);
      const Tensor& H = p.store.tensor(p.H[v]);
      auto nbs = g.views[v].neighbors(u);
      std::vector<double> h(d0, 0.0);
      if (!nbs.empty()) {
        std::vector<double> scores;
        for (const auto& nb : nbs) {
          double s = 0.0;
          for (int dd = 0; dd < d0; ++dd)
            s += nb.weight * M.data[nb.node * d0 + dd] * H.data[nb.node * d0 + dd];
          scores.push_back(s);
        }
        double mx = *std::max_element(scores.begin(), scores.end());
        double z = 0.0;
        for (double& s : scores) z += (s = std::exp(s - mx));
        for (double& s : scores) s /= z;
        for (std::size_t i = 0; i < nbs.size(); ++i)
          for (int dd = 0; dd < d0; ++dd)
            h[dd] += scores[i] * nbs[i].weight * M.data[nbs[i].node * d0 + dd];
      }
      const Tensor& W = p.store.tensor(p.W[v][0]);
      const Tensor& bias = p.store.tensor(p.b[v][0]);
      std::vector<double> y(dv);
      for (int j = 0; j < dv; ++j) {
        double acc = bias.data[j];
        for (int i = 0; i < d0; ++i) acc += h[i] * W.data[i * dv + j];
        y[j] = acc > 0.0 ? acc : 0.0;
      }
      lifted.push_back(y);
    }
    std::vector<double> dots(m);
    for (int v = 0; v < m; ++v) {
      const Tensor& phi = p.store.tensor(p.phi[v]);
      dots[v] = lifted[v][0] * phi.data[0] + lifted[v][1] * phi.data[1];
    }
    double mx = std::max(dots[0], dots[1]);
    double z = std::exp(dots[0] - mx) + std::exp(dots[1] - mx);
    std::vector<double> va = {std::exp(dots[0] - mx) / z, std::exp(dots[1] - mx) / z};
    std::vector<double> joint = {va[0] * lifted[0][0], va[0] * lifted[0][1], va[1] * lifted[1][0],
                                 va[1] * lifted[1][1]};
    const Tensor& Wf = p.store.tensor(p.W_f);
    const Tensor& bf = p.store.tensor(p.b_f);
    std::vector<double> a(2);
    for (int j = 0; j < 2; ++j) {
      double acc = bf.data[j];
      for (int i = 0; i < 4; ++i) acc += joint[i] * Wf.data[i * 2 + j];
      a[j] = acc;
    }

    for (int j = 0; j < 2; ++j) REQUIRE(tr.a[j] == Approx(a[j]).margin(1e-12));
    for (int v = 0; v < m; ++v) REQUIRE(tr.view_alphas[v] == Approx(va[v]).margin(1e-12));
  }
}

TEST_CASE("tape forward agrees with the plain forward") {
  auto g = tiny_graph();
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 8);
  Tape t(p.store);
  for (NodeId u = 0; u < 3; ++u) {
    for (bool fused : {true, false}) {
      t.clear();
      const int a = tape_forward(t, g, p, u, EdgeWeightTransform::none, fused);
      auto tr = forward(g, p, u);
      REQUIRE(t.len(a) == 2);
      for (int j = 0; j < 2; ++j) REQUIRE(t.value(a)[j] == Approx(tr.a[j]).margin(1e-14));
    }
  }
}

TEST_CASE("fused attention matches the primitive-op composition in values and gradients") {
  auto g = tiny_graph();
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 23);
  for (NodeId u = 0; u < 3; ++u) {
    GradMap g_fused(p.store), g_prim(p.store);
    double v_fused = 0.0, v_prim = 0.0;
    for (bool fused : {true, false}) {
      Tape t(p.store);
      const int a = tape_forward(t, g, p, u, EdgeWeightTransform::log1p, fused);
      const int loss = t.dot(a, a);
      (fused ? v_fused : v_prim) = t.scalar(loss);
      t.backward(loss, fused ? g_fused : g_prim);
    }
    REQUIRE(v_fused == Approx(v_prim).margin(1e-13));
    for (int v = 0; v < 2; ++v) {
      const Tensor& M = p.store.tensor(p.M[v]);
      for (int r = 0; r < M.rows; ++r)
        for (int c = 0; c < M.cols; ++c) {
          REQUIRE(g_fused.entry(p.M[v], r, c) == Approx(g_prim.entry(p.M[v], r, c)).margin(1e-13));
          REQUIRE(g_fused.entry(p.H[v], r, c) == Approx(g_prim.entry(p.H[v], r, c)).margin(1e-13));
        }
    }
  }
}

TEST_CASE("predict_proba closed forms") {
  auto g = tiny_graph();
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 9);
  SECTION("zero theta gives the uniform distribution") {
    set_tensor(p, p.theta, {0, 0, 0, 0});
    auto probs = predict_proba(p, {0.3, -0.8});
    REQUIRE(probs[0] == Approx(0.5));
    REQUIRE(probs[1] == Approx(0.5));
  }
  SECTION("logits (ln 4, 0) give (0.8, 0.2)") {
    set_tensor(p, p.theta, {std::log(4.0), 0.0, 0.0, 0.0});
    auto probs = predict_proba(p, {1.0, 0.0});
    REQUIRE(probs[0] == Approx(0.8).epsilon(1e-12));
    REQUIRE(probs[1] == Approx(0.2).epsilon(1e-12));
  }
  SECTION("equal logits split evenly") {
    set_tensor(p, p.theta, {0.4, 0.4, 0.1, 0.1});
    auto probs = predict_proba(p, {0.77, 0.1});
    REQUIRE(probs[0] == Approx(0.5));
    REQUIRE(probs[1] == Approx(0.5));
  }
}

TEST_CASE("attention weights always form a distribution") {
  Rng mk(12);
  for (int trial = 0; trial < 30; ++trial) {
    MultiViewGraph g;
    g.user_count = 8;
    g.class_count = 2;
    std::vector<EdgeInput> rel, bip;
    for (int i = 0; i < 12; ++i) {
      NodeId a = mk.next_below(8), b = mk.next_below(8);
      if (a != b) rel.push_back({a, b, 1.0});
    }
    for (int i = 0; i < 20; ++i) bip.push_back({mk.next_below(8), mk.next_below(6), 1.0 + mk.next_below(4)});
    g.views.push_back(ViewGraph::build(0, ViewKind::relation, 8, 0, rel));
    g.views.push_back(ViewGraph::build(1, ViewKind::bipartite, 8, 6, bip));
    g.view_names = {"relation", "word"};
    auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 100 + trial);
    for (NodeId u = 0; u < 8; ++u) {
      auto tr = forward(g, p, u);
      double vsum = 0.0;
      for (double v : tr.view_alphas) {
        REQUIRE(v >= 0.0);
        vsum += v;
      }
      REQUIRE(std::abs(vsum - 1.0) < 1e-9);
      for (const auto& vt : tr.views) {
        if (vt.alphas.empty()) continue;
        double nsum = 0.0;
        for (const auto& [node, a] : vt.alphas) {
          REQUIRE(a >= 0.0);
          nsum += a;
        }
        REQUIRE(std::abs(nsum - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("softmax argmax is invariant to shifting all scores") {
  // Shift every H-derived score by a constant via a common offset direction.
  MultiViewGraph g;
  g.user_count = 1;
  g.class_count = 2;
  g.views.push_back(ViewGraph::build(0, ViewKind::relation, 1, 0, {}));
  g.views.push_back(
      ViewGraph::build(1, ViewKind::bipartite, 1, 3, {{0, 0, 1.0}, {0, 1, 1.0}, {0, 2, 1.0}}));
  g.view_names = {"relation", "word"};
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 13);
  set_tensor(p, p.M[1], {1.0, 0.0, 1.0, 0.0, 1.0, 0.0});
  set_tensor(p, p.H[1], {0.3, 0.0, 1.2, 0.0, -0.4, 0.0});
  ViewTrace before;
  node_attention(g.views[1], p, 0, EdgeWeightTransform::none, before);
  // Adding c to H[:,0] shifts every score by c because e rows are (1,0).
  set_tensor(p, p.H[1], {0.3 + 5.0, 0.0, 1.2 + 5.0, 0.0, -0.4 + 5.0, 0.0});
  ViewTrace after;
  node_attention(g.views[1], p, 0, EdgeWeightTransform::none, after);
  auto argmax = [](const ViewTrace& t) {
    return std::max_element(t.alphas.begin(), t.alphas.end(),
                            [](auto& a, auto& b) { return a.second < b.second; })
        ->first;
  };
  REQUIRE(argmax(before) == argmax(after));
  for (std::size_t i = 0; i < 3; ++i)
    REQUIRE(before.alphas[i].second == Approx(after.alphas[i].second).margin(1e-9));
}

TEST_CASE("forward is a pure function of graph, params and user") {
  auto g = tiny_graph();
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 14);
  auto t1 = forward(g, p, 1);
  auto t2 = forward(g, p, 1);
  REQUIRE(t1.a == t2.a);
  REQUIRE(t1.view_alphas == t2.view_alphas);
  REQUIRE(t1.joint == t2.joint);
}

TEST_CASE("aggregation is invariant to neighbor permutation") {
  // Same edge multiset inserted in different orders builds the same graph,
  // and the aggregated embedding is identical.
  std::vector<EdgeInput> edges = {{0, 2, 1.5}, {0, 0, 2.0}, {0, 1, 0.5}};
  auto g1 = ViewGraph::build(1, ViewKind::bipartite, 1, 3, edges);
  std::reverse(edges.begin(), edges.end());
  auto g2 = ViewGraph::build(1, ViewKind::bipartite, 1, 3, edges);
  MultiViewGraph g;
  g.user_count = 1;
  g.class_count = 2;
  g.views.push_back(ViewGraph::build(0, ViewKind::relation, 1, 0, {}));
  g.views.push_back(g1);
  g.view_names = {"relation", "word"};
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 15);
  ViewTrace t1, t2;
  node_attention(g1, p, 0, EdgeWeightTransform::none, t1);
  node_attention(g2, p, 0, EdgeWeightTransform::none, t2);
  REQUIRE(t1.h_low == t2.h_low);
}

TEST_CASE("per-user view attention starts uniform and is user-specific") {
  auto g = tiny_graph();
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::per_user, 16);
  REQUIRE(p.store.tensor(p.phi[0]).rows == 3);
  auto tr = forward(g, p, 0);
  REQUIRE(tr.view_alphas[0] == Approx(0.5));  // zero-initialized preference table
  REQUIRE(tr.view_alphas[1] == Approx(0.5));
}

TEST_CASE("checkpoint save/load round-trips bit-exactly") {
  auto g = tiny_graph();
  auto p = init_params(g, tiny_dims(), ViewAttentionMode::shared, 17);
  auto path = (std::filesystem::temp_directory_path() / "semignn_ckpt_test.txt").string();
  save_checkpoint(p, 1234, path, EdgeWeightTransform::log1p);
  auto ck = load_checkpoint(path);
  REQUIRE(ck.rng_seed == 1234);
  REQUIRE(ck.transform == EdgeWeightTransform::log1p);
  REQUIRE(ck.params.dims == p.dims);
  REQUIRE(ck.params.store.count() == p.store.count());
  for (int id = 0; id < p.store.count(); ++id) {
    REQUIRE(ck.params.store.meta(id).name == p.store.meta(id).name);
    REQUIRE(ck.params.store.tensor(id).data == p.store.tensor(id).data);
  }
  validate_against(ck.params, g);

  // Mismatched graph is rejected.
  MultiViewGraph other = tiny_graph();
  other.views[1] = ViewGraph::build(1, ViewKind::bipartite, 3, 5, {{0, 4, 1.0}});
  REQUIRE_THROWS_AS(validate_against(ck.params, other), Error);
}
