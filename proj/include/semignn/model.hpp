#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "semignn/graph.hpp"
#include "semignn/rng.hpp"
#include "semignn/tape.hpp"
#include "semignn/tensor.hpp"

namespace semignn {

enum class ViewAttentionMode { shared, per_user };
enum class EdgeWeightTransform { none, log1p, per_user_normalize };

inline const char* to_string(ViewAttentionMode m) { return m == ViewAttentionMode::shared ? "shared" : "per_user"; }
inline const char* to_string(EdgeWeightTransform t) {
  switch (t) {
    case EdgeWeightTransform::none: return "none";
    case EdgeWeightTransform::log1p: return "log1p";
    case EdgeWeightTransform::per_user_normalize: return "per_user_normalize";
  }
  return "none";
}

struct ModelDims {
  int d0 = 128;
  std::vector<int> mlp = {64, 32};
  int d_final = 32;
  int m = 0;
  int k = 2;

  int d_view() const { return mlp.empty() ? d0 : mlp.back(); }
  int joint_width() const { return m * d_view(); }

  void validate() const {
    if (d0 < 1 || d_final < 1 || m < 1 || k < 2) fail(ErrorCode::InvalidConfig, "model dims must be positive");
    for (int w : mlp)
      if (w < 1) fail(ErrorCode::InvalidConfig, "mlp widths must be positive");
  }

  bool operator==(const ModelDims&) const = default;
};

// Every learnable tensor of the model, held in a ParamStore so the gradient
// tape can address them uniformly.
struct ModelParams {
  ModelDims dims;
  ViewAttentionMode view_mode = ViewAttentionMode::shared;
  ParamStore store;
  std::vector<int> M;               // per view: node embedding table (n_v x d0)
  std::vector<int> H;               // per view: attention table, row-indexed by neighbor node
  std::vector<std::vector<int>> W;  // per view, per layer
  std::vector<std::vector<int>> b;
  std::vector<int> phi;  // per view: 1 x d_view (shared) or |U| x d_view (per_user)
  int W_f = -1;
  int b_f = -1;
  int theta = -1;
};

// Uniform init: matrices on (-1/sqrt(fan_in), +1/sqrt(fan_in)), embedding
// tables on (-0.5/d0, +0.5/d0), per-user preference tables start at zero.
inline ModelParams init_params(const MultiViewGraph& g, ModelDims dims, ViewAttentionMode mode,
                               std::uint64_t seed) {
  dims.m = static_cast<int>(g.views.size());
  dims.k = g.class_count;
  dims.validate();

  ModelParams p;
  p.dims = dims;
  p.view_mode = mode;
  Rng rng = substream(seed, stream::kParamInit);

  const double emb = 0.5 / dims.d0;
  for (int v = 0; v < dims.m; ++v) {
    const ViewGraph& view = g.views[v];
    const int n_v = view.kind == ViewKind::relation ? static_cast<int>(g.user_count)
                                                    : static_cast<int>(view.attr_node_count);
    const std::string tag = std::to_string(v);
    p.M.push_back(p.store.add("M" + tag, n_v, dims.d0, true, true));
    p.H.push_back(p.store.add("H" + tag, n_v, dims.d0, true, true));
    p.store.tensor(p.M.back()).fill_uniform(rng, -emb, emb);
    p.store.tensor(p.H.back()).fill_uniform(rng, -emb, emb);

    std::vector<int> Wv, bv;
    int in = dims.d0;
    for (std::size_t l = 0; l < dims.mlp.size(); ++l) {
      const int out = dims.mlp[l];
      const std::string ltag = tag + "_" + std::to_string(l);
      Wv.push_back(p.store.add("W" + ltag, in, out, false, true));
      bv.push_back(p.store.add("b" + ltag, 1, out, false, false));
      p.store.tensor(Wv.back()).fill_uniform(rng, -1.0 / std::sqrt(in), 1.0 / std::sqrt(in));
      in = out;
    }
    p.W.push_back(Wv);
    p.b.push_back(bv);
  }
  const int d_view = dims.d_view();
  for (int v = 0; v < dims.m; ++v) {
    if (mode == ViewAttentionMode::shared) {
      p.phi.push_back(p.store.add("phi" + std::to_string(v), 1, d_view, false, true));
      p.store.tensor(p.phi.back()).fill_uniform(rng, -1.0 / std::sqrt(d_view), 1.0 / std::sqrt(d_view));
    } else {
      p.phi.push_back(p.store.add("phi" + std::to_string(v), static_cast<int>(g.user_count), d_view, true, true));
    }
  }
  p.W_f = p.store.add("W_f", dims.joint_width(), dims.d_final, false, true);
  p.store.tensor(p.W_f).fill_uniform(rng, -1.0 / std::sqrt(dims.joint_width()), 1.0 / std::sqrt(dims.joint_width()));
  p.b_f = p.store.add("b_f", 1, dims.d_final, false, false);
  p.theta = p.store.add("theta", dims.d_final, dims.k, false, true);
  p.store.tensor(p.theta).fill_uniform(rng, -1.0 / std::sqrt(dims.d_final), 1.0 / std::sqrt(dims.d_final));
  return p;
}

namespace detail {

inline void softmax_inplace(std::vector<double>& z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double total = 0.0;
  for (double& v : z) total += v = std::exp(v - mx);
  for (double& v : z) v /= total;
}

inline double transformed_weight(EdgeWeightTransform t, double w, double user_total) {
  switch (t) {
    case EdgeWeightTransform::none: return w;
    case EdgeWeightTransform::log1p: return std::log1p(w);
    case EdgeWeightTransform::per_user_normalize: return w / user_total;
  }
  return w;
}

}  // namespace detail

struct ViewTrace {
  std::vector<std::pair<NodeId, double>> alphas;  // node-level attention over u's neighbors
  std::vector<double> h_low;                      // d0
  std::vector<double> lifted;                     // d_view
};

struct ForwardTrace {
  std::vector<ViewTrace> views;
  std::vector<double> view_alphas;  // m
  std::vector<double> joint;        // m * d_view
  std::vector<double> a;            // d_final
};

// Node-level attention in one view: e_i = w_ui * M[i], scores against H[i],
// softmax over u's neighbors, weighted sum. Empty neighborhoods yield the
// zero vector and an empty weight list.
inline void node_attention(const ViewGraph& view, const ModelParams& p, NodeId u, EdgeWeightTransform transform,
                           ViewTrace& out) {
  const int v = view.view_id;
  const int d0 = p.dims.d0;
  const Tensor& M = p.store.tensor(p.M[v]);
  const Tensor& H = p.store.tensor(p.H[v]);
  out.alphas.clear();
  out.h_low.assign(d0, 0.0);

  auto begin = view.neighbors_begin(u);
  auto end = view.neighbors_end(u);
  const std::size_t n = static_cast<std::size_t>(end - begin);
  if (n == 0) return;

  double user_total = 0.0;
  if (transform == EdgeWeightTransform::per_user_normalize && view.kind == ViewKind::bipartite)
    for (auto it = begin; it != end; ++it) user_total += it->weight;

  std::vector<double> weights(n), scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nb = begin[i];
    const double w = view.kind == ViewKind::bipartite ? detail::transformed_weight(transform, nb.weight, user_total)
                                                      : nb.weight;
    weights[i] = w;
    const double* mrow = M.row(nb.node);
    const double* hrow = H.row(nb.node);
    double s = 0.0;
    for (int d = 0; d < d0; ++d) s += w * mrow[d] * hrow[d];
    scores[i] = s;
  }
  detail::softmax_inplace(scores);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nb = begin[i];
    out.alphas.emplace_back(nb.node, scores[i]);
    const double c = scores[i] * weights[i];
    const double* mrow = M.row(nb.node);
    for (int d = 0; d < d0; ++d) out.h_low[d] += c * mrow[d];
  }
}

// L ReLU layers lifting the low-level view embedding to width d_view.
inline std::vector<double> view_mlp(const ModelParams& p, int v, const std::vector<double>& h) {
  std::vector<double> x = h;
  for (std::size_t l = 0; l < p.W[v].size(); ++l) {
    const Tensor& W = p.store.tensor(p.W[v][l]);
    const Tensor& bias = p.store.tensor(p.b[v][l]);
    std::vector<double> y(W.cols);
    for (int j = 0; j < W.cols; ++j) y[j] = bias.data[j];
    for (int i = 0; i < W.rows; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      const double* wrow = W.row(i);
      for (int j = 0; j < W.cols; ++j) y[j] += xi * wrow[j];
    }
    for (double& v_ : y) v_ = std::max(0.0, v_);
    x = std::move(y);
  }
  return x;
}

// View-level attention: softmax over dot(lifted_v, phi_v), then the
// attention-scaled concatenation in view order.
inline void view_attention(const ModelParams& p, NodeId u, const std::vector<std::vector<double>>& lifted,
                           std::vector<double>& joint, std::vector<double>& view_alphas) {
  const int m = p.dims.m;
  const int d_view = p.dims.d_view();
  view_alphas.assign(m, 0.0);
  for (int v = 0; v < m; ++v) {
    const Tensor& phi = p.store.tensor(p.phi[v]);
    const double* prow = phi.row(p.view_mode == ViewAttentionMode::shared ? 0 : static_cast<int>(u));
    double s = 0.0;
    for (int d = 0; d < d_view; ++d) s += lifted[v][d] * prow[d];
    view_alphas[v] = s;
  }
  detail::softmax_inplace(view_alphas);
  joint.assign(static_cast<std::size_t>(m) * d_view, 0.0);
  for (int v = 0; v < m; ++v)
    for (int d = 0; d < d_view; ++d) joint[static_cast<std::size_t>(v) * d_view + d] = view_alphas[v] * lifted[v][d];
}

// Full forward pass for one user; all intermediates recorded in the trace.
inline ForwardTrace forward(const MultiViewGraph& g, const ModelParams& p, NodeId u,
                            EdgeWeightTransform transform = EdgeWeightTransform::none) {
  ForwardTrace tr;
  tr.views.resize(p.dims.m);
  std::vector<std::vector<double>> lifted(p.dims.m);
  for (int v = 0; v < p.dims.m; ++v) {
    node_attention(g.views[v], p, u, transform, tr.views[v]);
    tr.views[v].lifted = view_mlp(p, v, tr.views[v].h_low);
    lifted[v] = tr.views[v].lifted;
  }
  view_attention(p, u, lifted, tr.joint, tr.view_alphas);

  const Tensor& Wf = p.store.tensor(p.W_f);
  const Tensor& bf = p.store.tensor(p.b_f);
  tr.a.assign(p.dims.d_final, 0.0);
  for (int j = 0; j < Wf.cols; ++j) tr.a[j] = bf.data[j];
  for (int i = 0; i < Wf.rows; ++i) {
    const double xi = tr.joint[i];
    if (xi == 0.0) continue;
    const double* wrow = Wf.row(i);
    for (int j = 0; j < Wf.cols; ++j) tr.a[j] += xi * wrow[j];
  }
  return tr;
}

// softmax(a_u . theta): class probabilities.
inline std::vector<double> predict_proba(const ModelParams& p, const std::vector<double>& a_u) {
  const Tensor& theta = p.store.tensor(p.theta);
  std::vector<double> logits(theta.cols, 0.0);
  for (int i = 0; i < theta.rows; ++i) {
    const double* trow = theta.row(i);
    for (int j = 0; j < theta.cols; ++j) logits[j] += a_u[i] * trow[j];
  }
  detail::softmax_inplace(logits);
  return logits;
}

// The same forward pass recorded on a gradient tape; returns the slot of a_u.
// The fused attention op is the default; the primitive-op composition stays
// available and tests pin the two paths against each other.
inline int tape_forward(Tape& t, const MultiViewGraph& g, const ModelParams& p, NodeId u,
                        EdgeWeightTransform transform = EdgeWeightTransform::none, bool fused = true) {
  const int m = p.dims.m;
  std::vector<int> lifted(m);
  std::vector<int> scratch;
  std::vector<int> nbr_rows;
  std::vector<double> nbr_weights;
  for (int v = 0; v < m; ++v) {
    const ViewGraph& view = g.views[v];
    auto begin = view.neighbors_begin(u);
    auto end = view.neighbors_end(u);
    const std::size_t n = static_cast<std::size_t>(end - begin);
    int h;
    if (n == 0) {
      h = t.input_zeros(p.dims.d0);
    } else {
      double user_total = 0.0;
      if (transform == EdgeWeightTransform::per_user_normalize && view.kind == ViewKind::bipartite)
        for (auto it = begin; it != end; ++it) user_total += it->weight;
      nbr_rows.clear();
      nbr_weights.clear();
      for (std::size_t i = 0; i < n; ++i) {
        const auto& nb = begin[i];
        nbr_rows.push_back(static_cast<int>(nb.node));
        nbr_weights.push_back(view.kind == ViewKind::bipartite
                                  ? detail::transformed_weight(transform, nb.weight, user_total)
                                  : nb.weight);
      }
      if (fused) {
        h = t.node_attention(p.M[v], p.H[v], nbr_rows.data(), nbr_weights.data(), static_cast<int>(n)).second;
      } else {
        std::vector<int> embeds(n), scores(n);
        for (std::size_t i = 0; i < n; ++i) {
          embeds[i] = t.lookup_scale(p.M[v], nbr_rows[i], nbr_weights[i]);
          scores[i] = t.dot_param(embeds[i], p.H[v], nbr_rows[i]);
        }
        const int alphas = t.softmax(t.concat(scores));
        h = t.weighted_sum(alphas, embeds);
      }
    }
    for (std::size_t l = 0; l < p.W[v].size(); ++l) h = t.relu(t.add_bias(p.b[v][l], t.matvec(p.W[v][l], h)));
    lifted[v] = h;
  }
  scratch.clear();
  for (int v = 0; v < m; ++v) {
    const int phi_row = p.view_mode == ViewAttentionMode::shared ? 0 : static_cast<int>(u);
    scratch.push_back(t.dot_param(lifted[v], p.phi[v], phi_row));
  }
  const int view_alphas = t.softmax(t.concat(scratch));
  scratch.clear();
  for (int v = 0; v < m; ++v) scratch.push_back(t.scale(t.index(view_alphas, v), lifted[v]));
  const int joint = t.concat(scratch);
  return t.add_bias(p.b_f, t.matvec(p.W_f, joint));
}

}  // namespace semignn
