#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semignn/error.hpp"
#include "semignn/rng.hpp"

namespace semignn {

// Row-major dense tensor of doubles. Vectors are 1 x cols.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  std::size_t size() const { return data.size(); }

  void fill_uniform(Rng& rng, double lo, double hi) {
    for (auto& v : data) v = rng.uniform(lo, hi);
  }
};

// Named learnable tensors. Embedding-style tables get sparse row gradients,
// dense parameters accumulate whole-tensor gradients; biases are exempt from
// L2 regularization.
class ParamStore {
 public:
  struct Meta {
    std::string name;
    bool sparse_rows = false;
    bool regularized = true;
  };

  int add(const std::string& name, int rows, int cols, bool sparse_rows, bool regularized) {
    metas_.push_back({name, sparse_rows, regularized});
    tensors_.emplace_back(rows, cols);
    return static_cast<int>(tensors_.size()) - 1;
  }

  int count() const { return static_cast<int>(tensors_.size()); }
  Tensor& tensor(int id) { return tensors_[id]; }
  const Tensor& tensor(int id) const { return tensors_[id]; }
  const Meta& meta(int id) const { return metas_[id]; }

  bool all_finite() const {
    for (const auto& t : tensors_)
      for (double v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

 private:
  std::vector<Tensor> tensors_;
  std::vector<Meta> metas_;
};

}  // namespace semignn
