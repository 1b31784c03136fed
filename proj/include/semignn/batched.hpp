#pragma once

#include <cstring>
#include <vector>

#include "semignn/model.hpp"

namespace semignn {

// Forward/backward over a set of users, numerically equivalent to running
// tape_forward user by user but with the dense stages blocked across users:
// each weight matrix streams once per user block instead of once per user.
// All accumulation orders are fixed (stage order, ascending user index), so
// results are bit-reproducible; parameters with no nonzero contribution stay
// absent from the GradMap, matching the tape's pruning.
class BatchedUserPass {
 public:
  BatchedUserPass(const MultiViewGraph& g, const ModelParams& p, EdgeWeightTransform transform)
      : g_(&g), p_(&p), tr_(transform) {
    const auto& dims = p.dims;
    widths_.push_back(dims.d0);
    for (int w : dims.mlp) widths_.push_back(w);
  }

  std::size_t count() const { return n_; }
  void set_shared_scores(const std::vector<std::vector<double>>* scores) { shared_scores_ = scores; }
  int d_final() const { return p_->dims.d_final; }
  const double* a(std::size_t i) const { return a_.data() + i * p_->dims.d_final; }

  void forward(const std::vector<NodeId>& users, std::size_t lo, std::size_t hi) {
    const auto& dims = p_->dims;
    const int m = dims.m;
    const int dv = dims.d_view();
    n_ = hi - lo;
    users_.assign(users.begin() + lo, users.begin() + hi);

    resize_buffers();
    for (int v = 0; v < m; ++v) {
      attention_forward(v);
      for (std::size_t l = 0; l + 1 < widths_.size(); ++l)
        layer_forward(X_[v][l].data(), widths_[l], p_->W[v][l], p_->b[v][l], X_[v][l + 1].data(), widths_[l + 1]);
    }
    // View-level attention: dots and row softmax.
    const Tensor& Wf = p_->store.tensor(p_->W_f);
    const Tensor& bf = p_->store.tensor(p_->b_f);
    const int df = dims.d_final;
    for (std::size_t u = 0; u < n_; ++u) {
      double* dots = va_.data() + u * m;
      for (int v = 0; v < m; ++v) {
        const Tensor& phi = p_->store.tensor(p_->phi[v]);
        const double* prow = phi.row(p_->view_mode == ViewAttentionMode::shared ? 0 : static_cast<int>(users_[u]));
        dots[v] = dot4(lifted(v, u), prow, dv);
      }
      double mx = dots[0];
      for (int v = 1; v < m; ++v) mx = std::max(mx, dots[v]);
      double total = 0.0;
      for (int v = 0; v < m; ++v) total += dots[v] = std::exp(dots[v] - mx);
      for (int v = 0; v < m; ++v) dots[v] /= total;
    }
    // Final projection, user-blocked so W_f streams once per block.
    constexpr std::size_t kBlock = 32;
    for (std::size_t u0 = 0; u0 < n_; u0 += kBlock) {
      const std::size_t u1 = std::min(n_, u0 + kBlock);
      for (std::size_t u = u0; u < u1; ++u) std::memcpy(a_.data() + u * df, bf.row(0), sizeof(double) * df);
      for (int v = 0; v < m; ++v)
        for (int i = 0; i < dv; ++i) {
          const double* wrow = Wf.row(v * dv + i);
          for (std::size_t u = u0; u < u1; ++u) {
            const double ji = va_[u * m + v] * lifted(v, u)[i];
            if (ji == 0.0) continue;
            double* au = a_.data() + u * df;
            for (int j = 0; j < df; ++j) au[j] += ji * wrow[j];
          }
        }
    }
  }

  // ga: contiguous [count x d_final] adjoint seeds in user order.
  void backward(const double* ga, GradMap& grads) {
    grads_ = &grads;
    const auto& dims = p_->dims;
    const int m = dims.m;
    const int dv = dims.d_view();
    const int df = dims.d_final;
    const Tensor& Wf = p_->store.tensor(p_->W_f);

    std::vector<char> active(n_, 0);
    bool any_active = false;
    for (std::size_t u = 0; u < n_; ++u) {
      active[u] = !all_zero(ga + u * df, df);
      any_active |= active[u] != 0;
    }
    if (!any_active) return;

    // Final projection: gb_f, gW_f, gjoint.
    {
      double* gb = grads.row_acc(p_->b_f, 0);
      for (std::size_t u = 0; u < n_; ++u) {
        if (!active[u]) continue;
        const double* gau = ga + u * df;
        for (int j = 0; j < df; ++j) gb[j] += gau[j];
      }
    }
    gjoint_.assign(n_ * static_cast<std::size_t>(m) * dv, 0.0);
    {
      double* gw = nullptr;
      constexpr std::size_t kBlock = 32;
      for (std::size_t u0 = 0; u0 < n_; u0 += kBlock) {
        const std::size_t u1 = std::min(n_, u0 + kBlock);
        bool block_active = false;
        for (std::size_t u = u0; u < u1; ++u) block_active |= active[u] != 0;
        if (!block_active) continue;
        for (int v = 0; v < m; ++v)
          for (int i = 0; i < dv; ++i) {
            const int row = v * dv + i;
            const double* wrow = Wf.row(row);
            double* gwrow = nullptr;
            for (std::size_t u = u0; u < u1; ++u) {
              if (!active[u]) continue;
              const double* gau = ga + u * df;
              gjoint_[u * static_cast<std::size_t>(m) * dv + row] = dot4(wrow, gau, df);
              const double ji = va_[u * m + v] * lifted(v, u)[i];
              if (ji != 0.0) {
                if (!gwrow) {
                  if (!gw) gw = grads.dense_acc(p_->W_f);
                  gwrow = gw + static_cast<std::size_t>(row) * df;
                }
                for (int j = 0; j < df; ++j) gwrow[j] += ji * gau[j];
              }
            }
          }
      }
    }

    // View attention backward: produces glifted (reusing gX buffers).
    for (int v = 0; v < m; ++v) gx_of(v, widths_.size() - 1).assign(n_ * static_cast<std::size_t>(dv), 0.0);
    {
      const bool shared = p_->view_mode == ViewAttentionMode::shared;
      std::vector<double> gva(m), gdots(m);
      for (std::size_t u = 0; u < n_; ++u) {
        if (!active[u]) continue;
        const double* va = va_.data() + u * m;
        const double* gj = gjoint_.data() + u * static_cast<std::size_t>(m) * dv;
        for (int v = 0; v < m; ++v) gva[v] = dot4(gj + v * dv, lifted(v, u), dv);
        double s = 0.0;
        for (int v = 0; v < m; ++v) s += gva[v] * va[v];
        for (int v = 0; v < m; ++v) gdots[v] = va[v] * (gva[v] - s);
        for (int v = 0; v < m; ++v) {
          double* gl = gx_of(v, widths_.size() - 1).data() + u * static_cast<std::size_t>(dv);
          const double* gjv = gj + v * dv;
          const Tensor& phi = p_->store.tensor(p_->phi[v]);
          const int phi_row = shared ? 0 : static_cast<int>(users_[u]);
          const double* prow = phi.row(phi_row);
          for (int i = 0; i < dv; ++i) gl[i] = va[v] * gjv[i] + gdots[v] * prow[i];
          if (gdots[v] != 0.0 && !all_zero(lifted(v, u), dv)) {
            double* gp = grads.row_acc(p_->phi[v], shared ? 0 : phi_row);
            const double* lift = lifted(v, u);
            for (int i = 0; i < dv; ++i) gp[i] += gdots[v] * lift[i];
          }
        }
      }
    }

    // MLP backward per view, then attention scatter.
    for (int v = 0; v < m; ++v) {
      for (std::size_t l = widths_.size() - 1; l > 0; --l)
        layer_backward(v, l - 1, active);
      attention_backward(v, active);
    }
  }

 private:
  static bool all_zero(const double* v, int n) {
    for (int i = 0; i < n; ++i)
      if (v[i] != 0.0) return false;
    return true;
  }

  const double* lifted(int v, std::size_t u) const {
    return X_[v].back().data() + u * static_cast<std::size_t>(widths_.back());
  }

  std::vector<double>& gx_of(int v, std::size_t l) { return gX_[v][l]; }

  void resize_buffers() {
    const std::size_t m = static_cast<std::size_t>(p_->dims.m);
    if (X_.size() != m) {
      X_.resize(m);
      gX_.resize(m);
      aoff_.resize(m);
      arow_.resize(m);
      aweight_.resize(m);
      aalpha_.resize(m);
      for (std::size_t v = 0; v < m; ++v) {
        X_[v].resize(widths_.size());
        gX_[v].resize(widths_.size());
      }
    }
    index_.resize(m);
    for (std::size_t v = 0; v < m; ++v)
      for (std::size_t l = 0; l < widths_.size(); ++l)
        X_[v][l].assign(n_ * static_cast<std::size_t>(widths_[l]), 0.0);
    va_.assign(n_ * m, 0.0);
    a_.assign(n_ * static_cast<std::size_t>(p_->dims.d_final), 0.0);
  }

  void attention_forward(int v) {
    const ViewGraph& view = g_->views[v];
    const Tensor& M = p_->store.tensor(p_->M[v]);
    const Tensor& H = p_->store.tensor(p_->H[v]);
    const int d0 = p_->dims.d0;
    // Attention scores are w_ui * dot(M_i, H_i); the dot is user-independent,
    // so it is hoisted to one pass over the tables (shared across shards when
    // the engine provides it).
    const double* mh;
    if (shared_scores_ && !(*shared_scores_)[v].empty()) {
      mh = (*shared_scores_)[v].data();
    } else {
      mh_scores_.assign(M.rows, 0.0);
      for (int i = 0; i < M.rows; ++i) mh_scores_[i] = dot4(M.row(i), H.row(i), d0);
      mh = mh_scores_.data();
    }
    auto& aoff = aoff_[v];
    auto& arow = arow_[v];
    auto& aweight = aweight_[v];
    auto& aalpha = aalpha_[v];
    aoff.assign(n_ + 1, 0);
    arow.clear();
    aweight.clear();
    aalpha.clear();
    for (std::size_t u = 0; u < n_; ++u) {
      aoff[u] = arow.size();
      const NodeId user = users_[u];
      auto begin = view.neighbors_begin(user);
      auto end = view.neighbors_end(user);
      const std::size_t deg = static_cast<std::size_t>(end - begin);
      if (deg == 0) continue;
      double user_total = 0.0;
      if (tr_ == EdgeWeightTransform::per_user_normalize && view.kind == ViewKind::bipartite)
        for (auto it = begin; it != end; ++it) user_total += it->weight;
      const std::size_t base = arow.size();
      for (auto it = begin; it != end; ++it) {
        arow.push_back(static_cast<int>(it->node));
        aweight.push_back(view.kind == ViewKind::bipartite
                              ? detail::transformed_weight(tr_, it->weight, user_total)
                              : it->weight);
      }
      aalpha.resize(arow.size());
      double* alphas = aalpha.data() + base;
      for (std::size_t i = 0; i < deg; ++i) alphas[i] = aweight[base + i] * mh[arow[base + i]];
      // mh indexing matches the tape path bit for bit: same dot4, same product.
      double mx = alphas[0];
      for (std::size_t i = 1; i < deg; ++i) mx = std::max(mx, alphas[i]);
      double total = 0.0;
      for (std::size_t i = 0; i < deg; ++i) total += alphas[i] = std::exp(alphas[i] - mx);
      for (std::size_t i = 0; i < deg; ++i) alphas[i] /= total;
    }
    aoff[n_] = arow.size();

    // Group touches by table row once; the forward pool and the backward
    // scatter both run row-major off this index.
    RowIndex& idx = index_[v];
    idx.count.assign(M.rows + 1, 0);
    for (int r : arow) ++idx.count[r + 1];
    for (int r = 0; r < M.rows; ++r) idx.count[r + 1] += idx.count[r];
    idx.touch.resize(arow.size());
    idx.user.resize(arow.size());
    idx.fill = idx.count;
    for (std::size_t u = 0; u < n_; ++u)
      for (std::size_t t = aoff[u]; t < aoff[u + 1]; ++t) {
        const std::size_t pos = idx.fill[arow[t]]++;
        idx.touch[pos] = t;
        idx.user[pos] = static_cast<int>(u);
      }

    double* h0 = X_[v][0].data();
    for (int r = 0; r < M.rows; ++r) {
      const std::size_t lo = idx.count[r], hi = idx.count[r + 1];
      if (lo == hi) continue;
      const double* mrow = M.row(r);
      for (std::size_t k = lo; k < hi; ++k) {
        const std::size_t t = idx.touch[k];
        const double c = aalpha[t] * aweight[t];
        double* h = h0 + idx.user[k] * static_cast<std::size_t>(d0);
        for (int j = 0; j < d0; ++j) h[j] += c * mrow[j];
      }
    }
  }

  // Y = relu(X . W + b), blocked over users so W streams once per block.
  void layer_forward(const double* X, int in, int w_id, int b_id, double* Y, int out) {
    const Tensor& W = p_->store.tensor(w_id);
    const Tensor& B = p_->store.tensor(b_id);
    constexpr std::size_t kBlock = 32;
    for (std::size_t u0 = 0; u0 < n_; u0 += kBlock) {
      const std::size_t u1 = std::min(n_, u0 + kBlock);
      for (std::size_t u = u0; u < u1; ++u) std::memcpy(Y + u * out, B.row(0), sizeof(double) * out);
      for (int i = 0; i < in; ++i) {
        const double* wrow = W.row(i);
        for (std::size_t u = u0; u < u1; ++u) {
          const double xi = X[u * in + i];
          if (xi == 0.0) continue;
          double* yu = Y + u * out;
          for (int j = 0; j < out; ++j) yu[j] += xi * wrow[j];
        }
      }
      for (std::size_t u = u0; u < u1; ++u) {
        double* yu = Y + u * out;
        for (int j = 0; j < out; ++j) yu[j] = yu[j] > 0.0 ? yu[j] : 0.0;
      }
    }
  }

  // Backward through layer l of view v: consumes gX_[v][l+1], fills gX_[v][l].
  void layer_backward(int v, std::size_t l, const std::vector<char>& active) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    const Tensor& W = p_->store.tensor(p_->W[v][l]);
    const double* X = X_[v][l].data();
    const double* Y = X_[v][l + 1].data();
    std::vector<double>& gY = gX_[v][l + 1];
    std::vector<double>& gX = gX_[v][l];
    gX.assign(n_ * static_cast<std::size_t>(in), 0.0);

    // Mask by relu activity in place; track which users still carry gradient.
    mask_.assign(n_, 0);
    bool any = false;
    for (std::size_t u = 0; u < n_; ++u) {
      if (!active[u]) continue;
      double* gyu = gY.data() + u * out;
      const double* yu = Y + u * out;
      bool nz = false;
      for (int j = 0; j < out; ++j) {
        gyu[j] = yu[j] > 0.0 ? gyu[j] : 0.0;
        nz |= gyu[j] != 0.0;
      }
      mask_[u] = nz;
      any |= nz;
    }
    if (!any) return;

    double* gb = nullptr;
    for (std::size_t u = 0; u < n_; ++u) {
      if (!mask_[u]) continue;
      if (!gb) gb = grads_->row_acc(p_->b[v][l], 0);
      const double* gyu = gY.data() + u * out;
      for (int j = 0; j < out; ++j) gb[j] += gyu[j];
    }

    constexpr std::size_t kBlock = 32;
    double* gw = nullptr;
    for (std::size_t u0 = 0; u0 < n_; u0 += kBlock) {
      const std::size_t u1 = std::min(n_, u0 + kBlock);
      bool block_active = false;
      for (std::size_t u = u0; u < u1; ++u) block_active |= mask_[u] != 0;
      if (!block_active) continue;
      for (int i = 0; i < in; ++i) {
        const double* wrow = W.row(i);
        double* gwrow = nullptr;
        for (std::size_t u = u0; u < u1; ++u) {
          if (!mask_[u]) continue;
          const double* gyu = gY.data() + u * out;
          gX[u * in + i] = dot4(wrow, gyu, out);
          const double xi = X[u * in + i];
          if (xi != 0.0) {
            if (!gwrow) {
              if (!gw) gw = grads_->dense_acc(p_->W[v][l]);
              gwrow = gw + static_cast<std::size_t>(i) * out;
            }
            for (int j = 0; j < out; ++j) gwrow[j] += xi * gyu[j];
          }
        }
      }
    }
  }

  // Row-major attention backward. Per touch (u, i) the exact gradients are
  //   gM_i += c_pool(u,i) * gh_u + c_score(u,i) * H_i
  //   gH_i += c_score(u,i) * M_i
  // and the table rows factor out of the score terms, so after computing the
  // per-touch coefficients each touched row is written once:
  //   gM_i = sum_u c_pool * gh_u + (sum_u c_score) * H_i
  //   gH_i = (sum_u c_score) * M_i
  // Touches are grouped by row with a counting sort; within a row they stay
  // in ascending user order, so the pass is deterministic.
  void attention_backward(int v, const std::vector<char>& active) {
    GradMap& grads = *grads_;
    const Tensor& M = p_->store.tensor(p_->M[v]);
    const Tensor& H = p_->store.tensor(p_->H[v]);
    const int d0 = p_->dims.d0;
    const auto& aoff = aoff_[v];
    const auto& arow = arow_[v];
    const auto& aweight = aweight_[v];
    const auto& aalpha = aalpha_[v];
    const std::vector<double>& gH0 = gX_[v][0];
    const std::size_t touches = arow.size();

    // Users whose pooled gradient is nonzero; the trainer never seeds alphas.
    pooled_.assign(n_, 0);
    for (std::size_t u = 0; u < n_; ++u)
      if (active[u] && aoff[u + 1] > aoff[u])
        pooled_[u] = !all_zero(gH0.data() + u * static_cast<std::size_t>(d0), d0);

    bool any_pooled = false;
    for (std::size_t u = 0; u < n_; ++u) any_pooled |= pooled_[u] != 0;
    if (!any_pooled) return;
    const RowIndex& idx = index_[v];

    // Pass A, row-major: raw dots dot(gh_u, M_row) per pooled touch.
    rawdot_.assign(touches, 0.0);
    for (int r = 0; r < M.rows; ++r) {
      const std::size_t lo = idx.count[r], hi = idx.count[r + 1];
      if (lo == hi) continue;
      const double* mrow = M.row(r);
      for (std::size_t k = lo; k < hi; ++k) {
        if (!pooled_[idx.user[k]]) continue;
        rawdot_[idx.touch[k]] = dot4(gH0.data() + idx.user[k] * static_cast<std::size_t>(d0), mrow, d0);
      }
    }

    // Pass B, user-major: softmax backward to per-touch coefficients.
    cscore_.assign(touches, 0.0);
    cpool_.assign(touches, 0.0);
    for (std::size_t u = 0; u < n_; ++u) {
      if (!pooled_[u]) continue;
      const std::size_t base = aoff[u], deg = aoff[u + 1] - base;
      const double* y = aalpha.data() + base;
      double s = 0.0;
      for (std::size_t i = 0; i < deg; ++i) s += aweight[base + i] * rawdot_[base + i] * y[i];
      for (std::size_t i = 0; i < deg; ++i) {
        const double galpha = aweight[base + i] * rawdot_[base + i];
        const double gs = y[i] * (galpha - s);
        cscore_[base + i] = aweight[base + i] * gs;
        cpool_[base + i] = y[i] * aweight[base + i];
      }
    }

    // Pass C, row-major: one write per row touched by a pooled user.
    for (int r = 0; r < M.rows; ++r) {
      const std::size_t lo = idx.count[r], hi = idx.count[r + 1];
      if (lo == hi) continue;
      bool touched = false;
      double csum = 0.0;
      for (std::size_t k = lo; k < hi; ++k) {
        touched |= pooled_[idx.user[k]] != 0;
        csum += cscore_[idx.touch[k]];
      }
      if (!touched) continue;
      double* gm = grads.row_acc(p_->M[v], r);
      for (std::size_t k = lo; k < hi; ++k) {
        if (!pooled_[idx.user[k]]) continue;
        const double c = cpool_[idx.touch[k]];
        const double* gh = gH0.data() + idx.user[k] * static_cast<std::size_t>(d0);
        for (int j = 0; j < d0; ++j) gm[j] += c * gh[j];
      }
      const double* hrow = H.row(r);
      for (int j = 0; j < d0; ++j) gm[j] += csum * hrow[j];
      const double* mrow = M.row(r);
      double* ghr = grads.row_acc(p_->H[v], r);
      for (int j = 0; j < d0; ++j) ghr[j] += csum * mrow[j];
    }
  }

  const MultiViewGraph* g_;
  const ModelParams* p_;
  EdgeWeightTransform tr_;
  std::vector<int> widths_;
  std::size_t n_ = 0;
  std::vector<NodeId> users_;
  std::vector<std::vector<std::vector<double>>> X_;   // [view][layer][user x width]
  std::vector<std::vector<std::vector<double>>> gX_;  // same shapes
  std::vector<std::vector<std::size_t>> aoff_;
  std::vector<std::vector<int>> arow_;
  std::vector<std::vector<double>> aweight_;
  std::vector<std::vector<double>> aalpha_;
  std::vector<double> va_;
  std::vector<double> a_;
  std::vector<double> gjoint_;
  std::vector<double> mh_scores_;
  const std::vector<std::vector<double>>* shared_scores_ = nullptr;
  std::vector<char> pooled_;
  struct RowIndex {
    std::vector<std::size_t> count;  // prefix offsets per table row
    std::vector<std::size_t> fill;
    std::vector<std::size_t> touch;
    std::vector<int> user;
  };
  std::vector<RowIndex> index_;
  std::vector<double> rawdot_;
  std::vector<double> cscore_;
  std::vector<double> cpool_;
  std::vector<double> scratch_;
  std::vector<char> mask_;
  GradMap* grads_ = nullptr;
};

}  // namespace semignn
