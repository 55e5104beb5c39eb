#pragma once

#include <cstdint>
#include <vector>

#include "perfsage/error.hpp"

namespace perfsage {

// Dense row-major matrix of 64-bit floats. Row vectors are 1 x n.
struct Tensor2 {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  static Tensor2 zeros(int r, int c) { return Tensor2(r, c); }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
  size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool finite() const;
  bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
};

using TensorId = int;

enum class MseVariant { kAsPrinted, kSquared };

// Record-replay reverse-mode differentiation over the primitives the
// predictor needs. One tape per forward pass; replay in reverse computes
// gradients of a recorded scalar with respect to every leaf.
class Tape {
 public:
  // Leaf holding its own copy of v. Rejects non-finite input.
  TensorId leaf(Tensor2 v);
  // Leaf referencing caller-owned storage; must outlive the tape.
  TensorId leaf_ref(const Tensor2* v);

  TensorId matmul(TensorId a, TensorId b);
  TensorId add_bias(TensorId a, TensorId bias_row);    // bias_row is 1 x cols
  TensorId relu(TensorId a);
  TensorId add(TensorId a, TensorId b);                // same-shape elementwise
  TensorId concat_cols(TensorId a, TensorId b);
  // For each index set S, the elementwise sum of rows in S; empty sets give
  // zero rows. `sets` is caller-owned and must outlive the tape.
  TensorId sum_rows(TensorId a, const std::vector<std::vector<int>>* sets);
  // Per-column maximum over all rows -> 1 x cols. Gradient routes to the
  // first maximal row (lowest index).
  TensorId max_cols_over_rows(TensorId a);
  TensorId select_rows(TensorId a, std::vector<int> rows);
  // Rows of a scattered into an n_rows-tall zero matrix at dst positions.
  TensorId scatter_rows(TensorId a, std::vector<int> dst, int n_rows);
  TensorId repeat_row(TensorId a, int times);          // a is 1 x cols
  // MAPE(x, y) + alpha * MSE(x, y) on a recorded 1x1 prediction; y > 0.
  TensorId hybrid_loss(TensorId pred, double y, double alpha, MseVariant variant);

  const Tensor2& value(TensorId id) const;
  // Gradient of the last backward() scalar; empty tensor if never touched.
  const Tensor2& grad(TensorId id) const;

  // Gradients of a recorded scalar w.r.t. every leaf reachable from it.
  void backward(TensorId loss);

 private:
  struct Op;
  TensorId push(Op op, Tensor2 value);
  Tensor2& grad_slot(TensorId id);

  std::vector<Op> ops_;
  std::vector<Tensor2> values_;
  std::vector<Tensor2> grads_;
};

struct Tape::Op {
  enum Kind {
    kLeaf, kLeafRef, kMatmul, kAddBias, kRelu, kAdd, kConcatCols, kSumRows,
    kMaxColsOverRows, kSelectRows, kScatterRows, kRepeatRow, kHybridLoss,
  };
  Kind kind = kLeaf;
  TensorId a = -1;
  TensorId b = -1;
  const Tensor2* external = nullptr;
  const std::vector<std::vector<int>>* sets = nullptr;
  std::vector<int> rows;
  int n = 0;
  double y = 0.0;
  double alpha = 0.0;
  MseVariant variant = MseVariant::kAsPrinted;
};

}  // namespace perfsage
