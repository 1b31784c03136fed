#pragma once

#include <cmath>
#include <cstring>
#include <functional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "semignn/error.hpp"
#include "semignn/tensor.hpp"

namespace semignn {

// Sparse gradient holder: embedding-style parameters appear row by row, dense
// parameters as whole tensors, and only parameters with a nonzero loss
// contribution appear at all. Insertion order is recorded so that merges and
// updates run in a deterministic order.
class GradMap {
 public:
  GradMap() = default;
  explicit GradMap(const ParamStore& store) { attach(store); }

  void attach(const ParamStore& store) {
    store_ = &store;
    dense_.assign(store.count(), {});
    dense_present_.assign(store.count(), 0);
    dense_order_.clear();
    row_slot_.assign(store.count(), {});
    row_stamp_.assign(store.count(), {});
    generation_ = 1;
    for (int id = 0; id < store.count(); ++id)
      if (store.meta(id).sparse_rows) {
        row_slot_[id].assign(store.tensor(id).rows, 0);
        row_stamp_[id].assign(store.tensor(id).rows, 0);
      }
    sparse_order_.clear();
    row_data_.clear();
  }

  void clear() {
    for (int id : dense_order_) {
      std::fill(dense_[id].begin(), dense_[id].end(), 0.0);
      dense_present_[id] = 0;
    }
    dense_order_.clear();
    sparse_order_.clear();
    row_data_.clear();
    ++generation_;  // stamp-invalidates every sparse row slot in O(1)
  }

  // Accumulator over the whole tensor of a dense parameter.
  double* dense_acc(int param) {
    if (!dense_present_[param]) {
      dense_present_[param] = 1;
      dense_order_.push_back(param);
      if (dense_[param].empty()) dense_[param].assign(store_->tensor(param).size(), 0.0);
    }
    return dense_[param].data();
  }

  // Accumulator over one row; dense parameters alias into the full buffer.
  double* row_acc(int param, int row) {
    const int cols = store_->tensor(param).cols;
    if (!store_->meta(param).sparse_rows) return dense_acc(param) + static_cast<std::size_t>(row) * cols;
    if (row_stamp_[param][row] != generation_) {
      row_stamp_[param][row] = generation_;
      row_slot_[param][row] = row_data_.size();
      sparse_order_.emplace_back(param, row);
      row_data_.resize(row_data_.size() + cols, 0.0);
    }
    return row_data_.data() + row_slot_[param][row];
  }

  bool present(int param) const {
    if (dense_present_[param]) return true;
    for (const auto& [id, row] : sparse_order_)
      if (id == param) return true;
    return false;
  }

  const double* dense_data(int param) const { return dense_present_[param] ? dense_[param].data() : nullptr; }

  const double* row_data(int param, int row) const {
    if (!store_->meta(param).sparse_rows) {
      if (!dense_present_[param]) return nullptr;
      return dense_[param].data() + static_cast<std::size_t>(row) * store_->tensor(param).cols;
    }
    if (row_stamp_[param][row] != generation_) return nullptr;
    return row_data_.data() + row_slot_[param][row];
  }

  double entry(int param, int row, int col) const {
    const double* r = row_data(param, row);
    return r ? r[col] : 0.0;
  }

  const std::vector<int>& dense_order() const { return dense_order_; }
  const std::vector<std::pair<int, int>>& sparse_order() const { return sparse_order_; }

  // Adds `other` into this map; iteration follows other's insertion order, so
  // merging shard maps in a fixed shard order is deterministic.
  void add_from(const GradMap& other) {
    for (int id : other.dense_order_) {
      double* dst = dense_acc(id);
      const auto& src = other.dense_[id];
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    }
    for (const auto& [param, row] : other.sparse_order_) {
      const int cols = store_->tensor(param).cols;
      const double* src = other.row_data(param, row);
      double* dst = row_acc(param, row);
      for (int i = 0; i < cols; ++i) dst[i] += src[i];
    }
  }

 private:
  const ParamStore* store_ = nullptr;
  std::vector<std::vector<double>> dense_;
  std::vector<char> dense_present_;
  std::vector<int> dense_order_;
  std::vector<std::vector<std::size_t>> row_slot_;   // sparse params: row -> offset
  std::vector<std::vector<std::uint32_t>> row_stamp_;
  std::uint32_t generation_ = 1;
  std::vector<std::pair<int, int>> sparse_order_;
  std::vector<double> row_data_;
};

// Deterministically reassociated dot product: four fixed-stride partial sums
// keep the loop vectorizable without -ffast-math. Must inline: callers issue
// hundreds of thousands of short dots per training step.
[[gnu::always_inline]] inline double dot4(const double* a, const double* b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// Reverse-mode tape over the fixed operator set the model needs: table
// lookup/scatter, scalar scaling, matrix-vector product, bias add, ReLU,
// softmax, dot, concat, indexing, sigmoid, log, negate, sums and a symmetric
// clamp. Values live in one flat arena; clear() keeps capacity so a tape can
// be rebuilt every training step without reallocating.
class Tape {
 public:
  explicit Tape(const ParamStore& store) : store_(&store) {}

  void clear() {
    nodes_.clear();
    vals_.clear();
    args_.clear();
    nbr_rows_.clear();
    nbr_weights_.clear();
  }

  int input(const double* v, int n) {
    const int slot = push(OpKind::Input, n);
    std::memcpy(val(slot), v, sizeof(double) * n);
    return slot;
  }

  int input_zeros(int n) { return push(OpKind::Input, n); }

  int lookup(int param, int row) {
    const Tensor& t = store_->tensor(param);
    const int slot = push(OpKind::Lookup, t.cols);
    node(slot).param = param;
    node(slot).row = row;
    std::memcpy(val(slot), t.row(row), sizeof(double) * t.cols);
    return slot;
  }

  // w * P[row]
  int lookup_scale(int param, int row, double w) {
    const Tensor& t = store_->tensor(param);
    const int slot = push(OpKind::LookupScale, t.cols);
    Node& nd = node(slot);
    nd.param = param;
    nd.row = row;
    nd.c0 = w;
    const double* src = t.row(row);
    double* dst = val(slot);
    for (int i = 0; i < t.cols; ++i) dst[i] = w * src[i];
    return slot;
  }

  // y = x . P  with P of shape (len(x), out)
  int matvec(int param, int x) {
    const Tensor& t = store_->tensor(param);
    const int n = len(x);
    const int slot = push(OpKind::MatVec, t.cols);
    Node& nd = node(slot);
    nd.a = x;
    nd.param = param;
    const double* xv = val(x);
    double* y = val(slot);
    for (int i = 0; i < n; ++i) {
      const double xi = xv[i];
      if (xi == 0.0) continue;
      const double* prow = t.row(i);
      for (int j = 0; j < t.cols; ++j) y[j] += xi * prow[j];
    }
    return slot;
  }

  // y = x + bias (bias stored as a 1 x n tensor)
  int add_bias(int param, int x) {
    const int n = len(x);
    const int slot = push(OpKind::AddBias, n);
    Node& nd = node(slot);
    nd.a = x;
    nd.param = param;
    const double* b = store_->tensor(param).row(0);
    const double* xv = val(x);
    double* y = val(slot);
    for (int i = 0; i < n; ++i) y[i] = xv[i] + b[i];
    return slot;
  }

  int relu(int x) {
    const int n = len(x);
    const int slot = push(OpKind::Relu, n);
    node(slot).a = x;
    const double* xv = val(x);
    double* y = val(slot);
    for (int i = 0; i < n; ++i) y[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    return slot;
  }

  // Max-subtracted softmax.
  int softmax(int x) {
    const int n = len(x);
    const int slot = push(OpKind::Softmax, n);
    node(slot).a = x;
    const double* xv = val(x);
    double* y = val(slot);
    double mx = xv[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, xv[i]);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += y[i] = std::exp(xv[i] - mx);
    for (int i = 0; i < n; ++i) y[i] /= total;
    return slot;
  }

  int dot(int a, int b) {
    const int n = len(a);
    const int slot = push(OpKind::Dot, 1);
    Node& nd = node(slot);
    nd.a = a;
    nd.b = b;
    *val(slot) = dot4(val(a), val(b), n);
    return slot;
  }

  // dot(x, P[row]) without materializing the looked-up row.
  int dot_param(int x, int param, int row) {
    const int n = len(x);
    const int slot = push(OpKind::DotParam, 1);
    Node& nd = node(slot);
    nd.a = x;
    nd.param = param;
    nd.row = row;
    *val(slot) = dot4(val(x), store_->tensor(param).row(row), n);
    return slot;
  }

  int concat(std::span<const int> xs) {
    int total = 0;
    for (int x : xs) total += len(x);
    const int slot = push_with_args(OpKind::Concat, total, xs);
    double* y = val(slot);
    for (int x : xs) {
      std::memcpy(y, val(x), sizeof(double) * len(x));
      y += len(x);
    }
    return slot;
  }

  int index(int x, int i) {
    const int slot = push(OpKind::Index, 1);
    Node& nd = node(slot);
    nd.a = x;
    nd.row = i;
    *val(slot) = val(x)[i];
    return slot;
  }

  // y = s * x with scalar slot s.
  int scale(int s, int x) {
    const int n = len(x);
    const int slot = push(OpKind::Scale, n);
    Node& nd = node(slot);
    nd.a = s;
    nd.b = x;
    const double sv = *val(s);
    const double* xv = val(x);
    double* y = val(slot);
    for (int i = 0; i < n; ++i) y[i] = sv * xv[i];
    return slot;
  }

  int scale_const(double c, int x) {
    const int n = len(x);
    const int slot = push(OpKind::ScaleConst, n);
    Node& nd = node(slot);
    nd.a = x;
    nd.c0 = c;
    const double* xv = val(x);
    double* y = val(slot);
    for (int i = 0; i < n; ++i) y[i] = c * xv[i];
    return slot;
  }

  int add_n(std::span<const int> xs) {
    const int n = len(xs.front());
    const int slot = push_with_args(OpKind::AddN, n, xs);
    double* y = val(slot);
    for (int x : xs) {
      const double* xv = val(x);
      for (int i = 0; i < n; ++i) y[i] += xv[i];
    }
    return slot;
  }

  // y = sum_i coeff[i] * xs[i]; the fused scale+sum used by attention pooling.
  int weighted_sum(int coeff, std::span<const int> xs) {
    const int n = len(xs.front());
    const int slot = push_with_args(OpKind::WeightedSum, n, xs);
    node(slot).a = coeff;
    const double* cv = val(coeff);
    double* y = val(slot);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double c = cv[k];
      const double* xv = val(xs[k]);
      for (int i = 0; i < n; ++i) y[i] += c * xv[i];
    }
    return slot;
  }

  int sigmoid(int x) {
    const int n = len(x);
    const int slot = push(OpKind::Sigmoid, n);
    node(slot).a = x;
    const double* xv = val(x);
    double* y = val(slot);
    for (int i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-xv[i]));
    return slot;
  }

  int log(int x) {
    const int n = len(x);
    const int slot = push(OpKind::Log, n);
    node(slot).a = x;
    const double* xv = val(x);
    double* y = val(slot);
    for (int i = 0; i < n; ++i) y[i] = std::log(xv[i]);
    return slot;
  }

  int neg(int x) {
    const int n = len(x);
    const int slot = push(OpKind::Neg, n);
    node(slot).a = x;
    const double* xv = val(x);
    double* y = val(slot);
    for (int i = 0; i < n; ++i) y[i] = -xv[i];
    return slot;
  }

  // Fused node-level attention over a neighborhood: scores s_i = w_i *
  // dot(M[row_i], H[row_i]), alphas = softmax(s), pooled = sum_i alpha_i w_i
  // M[row_i]. Reads the tables in place instead of materializing per-neighbor
  // embeddings, which keeps the arena small; gradients are identical to the
  // lookup_scale/dot_param/softmax/weighted_sum composition. The value slot
  // holds [alphas | pooled]; the returned pair is two zero-copy views.
  std::pair<int, int> node_attention(int param_M, int param_H, const int* rows, const double* weights, int n) {
    const Tensor& M = store_->tensor(param_M);
    const Tensor& H = store_->tensor(param_H);
    const int d = M.cols;
    const int nb_off = static_cast<int>(nbr_rows_.size());
    nbr_rows_.insert(nbr_rows_.end(), rows, rows + n);
    nbr_weights_.insert(nbr_weights_.end(), weights, weights + n);

    const int fused = push(OpKind::AttnFused, n + d);
    {
      Node& nd = node(fused);
      nd.param = param_M;
      nd.param2 = param_H;
      nd.args_off = nb_off;
      nd.args_len = n;
      double* y = val(fused);
      for (int i = 0; i < n; ++i) y[i] = weights[i] * dot4(M.row(rows[i]), H.row(rows[i]), d);
      double mx = y[0];
      for (int i = 1; i < n; ++i) mx = std::max(mx, y[i]);
      double total = 0.0;
      for (int i = 0; i < n; ++i) total += y[i] = std::exp(y[i] - mx);
      for (int i = 0; i < n; ++i) y[i] /= total;
      double* h = y + n;
      for (int i = 0; i < n; ++i) {
        const double c = y[i] * weights[i];
        const double* mrow = M.row(rows[i]);
        for (int j = 0; j < d; ++j) h[j] += c * mrow[j];
      }
    }
    return {view(fused, 0, n), view(fused, n, d)};
  }

  // Zero-copy window into a slot; adjoints flow through shared arena storage.
  int view(int parent, int start, int n) {
    Node nd;
    nd.op = OpKind::View;
    nd.a = parent;
    nd.off = nodes_[parent].off + start;
    nd.len = n;
    nodes_.push_back(nd);
    return static_cast<int>(nodes_.size()) - 1;
  }

  // y = clamp(x, -bound, +bound)
  int clamp_sym(int x, double bound) {
    const int n = len(x);
    const int slot = push(OpKind::ClampSym, n);
    Node& nd = node(slot);
    nd.a = x;
    nd.c0 = bound;
    const double* xv = val(x);
    double* y = val(slot);
    for (int i = 0; i < n; ++i) y[i] = std::min(bound, std::max(-bound, xv[i]));
    return slot;
  }

  int len(int slot) const { return nodes_[slot].len; }
  const double* value(int slot) const { return vals_.data() + nodes_[slot].off; }
  double scalar(int slot) const { return *value(slot); }
  std::size_t node_count() const { return nodes_.size(); }

  // Adjoint of a slot after backward; valid until the next clear/backward.
  const double* adjoint(int slot) const { return adj_.data() + nodes_[slot].off; }

  void backward(int loss_slot, GradMap& grads) {
    if (len(loss_slot) != 1) fail(ErrorCode::NonScalarLoss, "loss slot must hold a scalar");
    const double one = 1.0;
    backward_from({{loss_slot, &one}}, grads);
  }

  // Seeds the given slots' adjoints and runs one reverse sweep.
  void backward_from(const std::vector<std::pair<int, const double*>>& seeds, GradMap& grads) {
    adj_.assign(vals_.size(), 0.0);
    for (const auto& [slot, seed] : seeds) {
      double* a = adj_.data() + nodes_[slot].off;
      for (int i = 0; i < nodes_[slot].len; ++i) a[i] += seed[i];
    }
    for (int idx = static_cast<int>(nodes_.size()) - 1; idx >= 0; --idx) {
      const Node& nd = nodes_[idx];
      const double* gy = adj_.data() + nd.off;
      if (all_zero(gy, nd.len)) continue;
      switch (nd.op) {
        case OpKind::Input:
          break;
        case OpKind::Lookup: {
          double* g = grads.row_acc(nd.param, nd.row);
          for (int i = 0; i < nd.len; ++i) g[i] += gy[i];
          break;
        }
        case OpKind::LookupScale: {
          double* g = grads.row_acc(nd.param, nd.row);
          for (int i = 0; i < nd.len; ++i) g[i] += nd.c0 * gy[i];
          break;
        }
        case OpKind::MatVec: {
          const Tensor& t = store_->tensor(nd.param);
          const int n = nodes_[nd.a].len;
          const double* xv = vals_.data() + nodes_[nd.a].off;
          double* gx = adj_.data() + nodes_[nd.a].off;
          for (int i = 0; i < n; ++i) gx[i] += dot4(t.row(i), gy, t.cols);
          if (!all_zero(xv, n)) {
            double* gp = grads.dense_acc(nd.param);
            for (int i = 0; i < n; ++i) {
              const double xi = xv[i];
              if (xi == 0.0) continue;
              double* gprow = gp + static_cast<std::size_t>(i) * t.cols;
              for (int j = 0; j < t.cols; ++j) gprow[j] += xi * gy[j];
            }
          }
          break;
        }
        case OpKind::AddBias: {
          double* gx = adj_.data() + nodes_[nd.a].off;
          double* gb = grads.row_acc(nd.param, 0);
          for (int i = 0; i < nd.len; ++i) {
            gx[i] += gy[i];
            gb[i] += gy[i];
          }
          break;
        }
        case OpKind::Relu: {
          const double* xv = vals_.data() + nodes_[nd.a].off;
          double* gx = adj_.data() + nodes_[nd.a].off;
          for (int i = 0; i < nd.len; ++i)
            if (xv[i] > 0.0) gx[i] += gy[i];
          break;
        }
        case OpKind::Softmax: {
          const double* y = vals_.data() + nd.off;
          double* gx = adj_.data() + nodes_[nd.a].off;
          double s = 0.0;
          for (int i = 0; i < nd.len; ++i) s += gy[i] * y[i];
          for (int i = 0; i < nd.len; ++i) gx[i] += y[i] * (gy[i] - s);
          break;
        }
        case OpKind::Dot: {
          const double g0 = gy[0];
          const int n = nodes_[nd.a].len;
          const double* av = vals_.data() + nodes_[nd.a].off;
          const double* bv = vals_.data() + nodes_[nd.b].off;
          double* ga = adj_.data() + nodes_[nd.a].off;
          double* gb = adj_.data() + nodes_[nd.b].off;
          for (int i = 0; i < n; ++i) {
            ga[i] += g0 * bv[i];
            gb[i] += g0 * av[i];
          }
          break;
        }
        case OpKind::DotParam: {
          const double g0 = gy[0];
          const int n = nodes_[nd.a].len;
          const double* xv = vals_.data() + nodes_[nd.a].off;
          const double* p = store_->tensor(nd.param).row(nd.row);
          double* gx = adj_.data() + nodes_[nd.a].off;
          for (int i = 0; i < n; ++i) gx[i] += g0 * p[i];
          if (!all_zero(xv, n)) {
            double* gp = grads.row_acc(nd.param, nd.row);
            for (int i = 0; i < n; ++i) gp[i] += g0 * xv[i];
          }
          break;
        }
        case OpKind::Concat: {
          const double* g = gy;
          for (int k = 0; k < nd.args_len; ++k) {
            const Node& src = nodes_[args_[nd.args_off + k]];
            double* gx = adj_.data() + src.off;
            for (int i = 0; i < src.len; ++i) gx[i] += g[i];
            g += src.len;
          }
          break;
        }
        case OpKind::Index: {
          adj_[nodes_[nd.a].off + nd.row] += gy[0];
          break;
        }
        case OpKind::Scale: {
          const double sv = vals_[nodes_[nd.a].off];
          const double* xv = vals_.data() + nodes_[nd.b].off;
          double* gs = adj_.data() + nodes_[nd.a].off;
          double* gx = adj_.data() + nodes_[nd.b].off;
          gs[0] += dot4(gy, xv, nd.len);
          for (int i = 0; i < nd.len; ++i) gx[i] += sv * gy[i];
          break;
        }
        case OpKind::ScaleConst: {
          double* gx = adj_.data() + nodes_[nd.a].off;
          for (int i = 0; i < nd.len; ++i) gx[i] += nd.c0 * gy[i];
          break;
        }
        case OpKind::AddN: {
          for (int k = 0; k < nd.args_len; ++k) {
            double* gx = adj_.data() + nodes_[args_[nd.args_off + k]].off;
            for (int i = 0; i < nd.len; ++i) gx[i] += gy[i];
          }
          break;
        }
        case OpKind::WeightedSum: {
          const double* cv = vals_.data() + nodes_[nd.a].off;
          double* gc = adj_.data() + nodes_[nd.a].off;
          for (int k = 0; k < nd.args_len; ++k) {
            const Node& src = nodes_[args_[nd.args_off + k]];
            const double* xv = vals_.data() + src.off;
            double* gx = adj_.data() + src.off;
            const double c = cv[k];
            double acc = 0.0;
            for (int i = 0; i < nd.len; ++i) {
              acc += gy[i] * xv[i];
              gx[i] += c * gy[i];
            }
            gc[k] += acc;
          }
          break;
        }
        case OpKind::Sigmoid: {
          const double* y = vals_.data() + nd.off;
          double* gx = adj_.data() + nodes_[nd.a].off;
          for (int i = 0; i < nd.len; ++i) gx[i] += gy[i] * y[i] * (1.0 - y[i]);
          break;
        }
        case OpKind::Log: {
          const double* xv = vals_.data() + nodes_[nd.a].off;
          double* gx = adj_.data() + nodes_[nd.a].off;
          for (int i = 0; i < nd.len; ++i) gx[i] += gy[i] / xv[i];
          break;
        }
        case OpKind::Neg: {
          double* gx = adj_.data() + nodes_[nd.a].off;
          for (int i = 0; i < nd.len; ++i) gx[i] -= gy[i];
          break;
        }
        case OpKind::ClampSym: {
          const double* xv = vals_.data() + nodes_[nd.a].off;
          double* gx = adj_.data() + nodes_[nd.a].off;
          for (int i = 0; i < nd.len; ++i)
            if (xv[i] > -nd.c0 && xv[i] < nd.c0) gx[i] += gy[i];
          break;
        }
        case OpKind::View:
          break;  // shares the parent's arena; adjoints already land there
        case OpKind::AttnFused: {
          const Tensor& M = store_->tensor(nd.param);
          const Tensor& H = store_->tensor(nd.param2);
          const int d = M.cols;
          const int n = nd.args_len;
          const int* rows = nbr_rows_.data() + nd.args_off;
          const double* weights = nbr_weights_.data() + nd.args_off;
          const double* y = vals_.data() + nd.off;  // alphas
          const double* gh_out = gy + n;            // adjoint of the pooled part
          scratch_.assign(n, 0.0);
          // Total alpha adjoints: direct plus the pooled-sum path.
          for (int i = 0; i < n; ++i) scratch_[i] = gy[i] + weights[i] * dot4(gh_out, M.row(rows[i]), d);
          double s = 0.0;
          for (int i = 0; i < n; ++i) s += scratch_[i] * y[i];
          const bool pooled_active = !all_zero(gh_out, d);
          for (int i = 0; i < n; ++i) {
            const double gs = y[i] * (scratch_[i] - s);
            const double c_score = weights[i] * gs;        // flows into M and H via the score
            const double c_pool = y[i] * weights[i];       // flows into M via the pooled sum
            const double* mrow = M.row(rows[i]);
            const double* hrow = H.row(rows[i]);
            if (c_score != 0.0 || (c_pool != 0.0 && pooled_active)) {
              double* gm = grads.row_acc(nd.param, rows[i]);
              for (int j = 0; j < d; ++j) gm[j] += c_pool * gh_out[j] + c_score * hrow[j];
            }
            if (c_score != 0.0) {
              double* gh = grads.row_acc(nd.param2, rows[i]);
              for (int j = 0; j < d; ++j) gh[j] += c_score * mrow[j];
            }
          }
          break;
        }
      }
    }
  }

 private:
  enum class OpKind : std::uint8_t {
    Input,
    Lookup,
    LookupScale,
    MatVec,
    AddBias,
    Relu,
    Softmax,
    Dot,
    DotParam,
    Concat,
    Index,
    Scale,
    ScaleConst,
    AddN,
    WeightedSum,
    Sigmoid,
    Log,
    Neg,
    ClampSym,
    View,
    AttnFused,
  };

  struct Node {
    OpKind op;
    int a = -1;
    int b = -1;
    int param = -1;
    int param2 = -1;
    int row = -1;
    double c0 = 0.0;
    int args_off = 0;
    int args_len = 0;
    int off = 0;
    int len = 0;
  };

  static bool all_zero(const double* v, int n) {
    for (int i = 0; i < n; ++i)
      if (v[i] != 0.0) return false;
    return true;
  }

  int push(OpKind op, int n) {
    Node nd;
    nd.op = op;
    nd.off = static_cast<int>(vals_.size());
    nd.len = n;
    vals_.resize(vals_.size() + n, 0.0);
    nodes_.push_back(nd);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int push_with_args(OpKind op, int n, std::span<const int> xs) {
    const int slot = push(op, n);
    Node& nd = node(slot);
    nd.args_off = static_cast<int>(args_.size());
    nd.args_len = static_cast<int>(xs.size());
    args_.insert(args_.end(), xs.begin(), xs.end());
    return slot;
  }

  Node& node(int slot) { return nodes_[slot]; }
  double* val(int slot) { return vals_.data() + nodes_[slot].off; }

  const ParamStore* store_;
  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::vector<double> adj_;
  std::vector<int> args_;
  std::vector<int> nbr_rows_;
  std::vector<double> nbr_weights_;
  std::vector<double> scratch_;
};

// Central finite differences, (f(p+eps) - f(p-eps)) / 2eps per scalar
// parameter. The test-side oracle for the tape engine; `analytic` entries come
// from a GradMap, absent parameters count as zero.
struct FdResult {
  int param = -1;
  int row = 0;
  int col = 0;
  double max_rel_err = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
};

inline std::vector<FdResult> fd_check(const std::function<double()>& loss_fn, ParamStore& params,
                                      const GradMap& analytic, double eps, double abs_floor = 1e-8) {
  const double base1 = loss_fn();
  const double base2 = loss_fn();
  if (base1 != base2) fail(ErrorCode::NonDeterministicLoss, "loss function disagrees with itself at the base point");

  std::vector<FdResult> report;
  for (int id = 0; id < params.count(); ++id) {
    Tensor& t = params.tensor(id);
    FdResult res;
    res.param = id;
    for (int r = 0; r < t.rows; ++r)
      for (int c = 0; c < t.cols; ++c) {
        double& p = t.data[static_cast<std::size_t>(r) * t.cols + c];
        const double saved = p;
        p = saved + eps;
        const double up = loss_fn();
        p = saved - eps;
        const double down = loss_fn();
        p = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = analytic.entry(id, r, c);
        const double denom = std::max(std::abs(numeric), std::max(std::abs(a), abs_floor));
        const double rel = std::abs(numeric - a) / denom;
        if (rel > res.max_rel_err) {
          res.max_rel_err = rel;
          res.row = r;
          res.col = c;
          res.analytic = a;
          res.numeric = numeric;
        }
      }
    report.push_back(res);
  }
  return report;
}

}  // namespace semignn
