#include "perfsage/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace perfsage {

bool Tensor2::finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

namespace {

// c (m x n) += a (m x k) * b (k x n)
void mm_acc(const double* a, int m, int k, const double* b, int n, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c (m x k) += dC (m x n) * b^T (n x k), b given as k x n
void mm_abT_acc(const double* dc, int m, int n, const double* b, int k, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* drow = dc + static_cast<size_t>(i) * n;
    double* crow = c + static_cast<size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double* brow = b + static_cast<size_t>(p) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += drow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

// c (k x n) += a^T (k x m) * dC (m x n), a given as m x k
void mm_aTb_acc(const double* a, int m, int k, const double* dc, int n, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    const double* drow = dc + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * drow[j];
    }
  }
}

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

TensorId Tape::push(Op op, Tensor2 value) {
  ops_.push_back(std::move(op));
  values_.push_back(std::move(value));
  return static_cast<TensorId>(ops_.size()) - 1;
}

const Tensor2& Tape::value(TensorId id) const {
  const Op& op = ops_.at(id);
  return op.kind == Op::kLeafRef ? *op.external : values_[id];
}

const Tensor2& Tape::grad(TensorId id) const {
  static const Tensor2 kEmpty;
  if (id < 0 || id >= static_cast<TensorId>(grads_.size())) return kEmpty;
  return grads_[id];
}

Tensor2& Tape::grad_slot(TensorId id) {
  Tensor2& g = grads_[id];
  if (g.empty()) {
    const Tensor2& v = value(id);
    g = Tensor2::zeros(v.rows, v.cols);
  }
  return g;
}

TensorId Tape::leaf(Tensor2 v) {
  if (!v.finite()) throw Error(ErrorCode::kInvalidArgument, "non-finite leaf tensor");
  Op op;
  op.kind = Op::kLeaf;
  return push(op, std::move(v));
}

TensorId Tape::leaf_ref(const Tensor2* v) {
  Op op;
  op.kind = Op::kLeafRef;
  op.external = v;
  return push(op, Tensor2());
}

TensorId Tape::matmul(TensorId a, TensorId b) {
  const Tensor2& ta = value(a);
  const Tensor2& tb = value(b);
  if (ta.cols != tb.rows) throw Error(ErrorCode::kInvalidArgument, "matmul shape mismatch");
  Tensor2 out(ta.rows, tb.cols);
  mm_acc(ta.data.data(), ta.rows, ta.cols, tb.data.data(), tb.cols, out.data.data());
  Op op;
  op.kind = Op::kMatmul;
  op.a = a;
  op.b = b;
  return push(op, std::move(out));
}

TensorId Tape::add_bias(TensorId a, TensorId bias_row) {
  const Tensor2& ta = value(a);
  const Tensor2& tb = value(bias_row);
  if (tb.rows != 1 || tb.cols != ta.cols)
    throw Error(ErrorCode::kInvalidArgument, "add_bias shape mismatch");
  Tensor2 out = ta;
  for (int i = 0; i < out.rows; ++i) {
    double* row = out.row(i);
    for (int j = 0; j < out.cols; ++j) row[j] += tb.data[j];
  }
  Op op;
  op.kind = Op::kAddBias;
  op.a = a;
  op.b = bias_row;
  return push(op, std::move(out));
}

TensorId Tape::relu(TensorId a) {
  Tensor2 out = value(a);
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  Op op;
  op.kind = Op::kRelu;
  op.a = a;
  return push(op, std::move(out));
}

TensorId Tape::add(TensorId a, TensorId b) {
  const Tensor2& ta = value(a);
  const Tensor2& tb = value(b);
  if (!ta.same_shape(tb)) throw Error(ErrorCode::kInvalidArgument, "add shape mismatch");
  Tensor2 out = ta;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] += tb.data[i];
  Op op;
  op.kind = Op::kAdd;
  op.a = a;
  op.b = b;
  return push(op, std::move(out));
}

TensorId Tape::concat_cols(TensorId a, TensorId b) {
  const Tensor2& ta = value(a);
  const Tensor2& tb = value(b);
  if (ta.rows != tb.rows) throw Error(ErrorCode::kInvalidArgument, "concat_cols row mismatch");
  Tensor2 out(ta.rows, ta.cols + tb.cols);
  for (int i = 0; i < ta.rows; ++i) {
    std::copy(ta.row(i), ta.row(i) + ta.cols, out.row(i));
    std::copy(tb.row(i), tb.row(i) + tb.cols, out.row(i) + ta.cols);
  }
  Op op;
  op.kind = Op::kConcatCols;
  op.a = a;
  op.b = b;
  return push(op, std::move(out));
}

TensorId Tape::sum_rows(TensorId a, const std::vector<std::vector<int>>* sets) {
  const Tensor2& ta = value(a);
  Tensor2 out(static_cast<int>(sets->size()), ta.cols);
  for (int s = 0; s < out.rows; ++s) {
    double* orow = out.row(s);
    for (int r : (*sets)[s]) {
      const double* arow = ta.row(r);
      for (int j = 0; j < ta.cols; ++j) orow[j] += arow[j];
    }
  }
  Op op;
  op.kind = Op::kSumRows;
  op.a = a;
  op.sets = sets;
  return push(op, std::move(out));
}

TensorId Tape::max_cols_over_rows(TensorId a) {
  const Tensor2& ta = value(a);
  if (ta.rows < 1) throw Error(ErrorCode::kInvalidArgument, "max over empty tensor");
  Tensor2 out(1, ta.cols);
  std::copy(ta.row(0), ta.row(0) + ta.cols, out.row(0));
  for (int i = 1; i < ta.rows; ++i) {
    const double* arow = ta.row(i);
    for (int j = 0; j < ta.cols; ++j)
      if (arow[j] > out.data[j]) out.data[j] = arow[j];
  }
  Op op;
  op.kind = Op::kMaxColsOverRows;
  op.a = a;
  return push(op, std::move(out));
}

TensorId Tape::select_rows(TensorId a, std::vector<int> rows) {
  const Tensor2& ta = value(a);
  Tensor2 out(static_cast<int>(rows.size()), ta.cols);
  for (int i = 0; i < out.rows; ++i)
    std::copy(ta.row(rows[i]), ta.row(rows[i]) + ta.cols, out.row(i));
  Op op;
  op.kind = Op::kSelectRows;
  op.a = a;
  op.rows = std::move(rows);
  return push(op, std::move(out));
}

TensorId Tape::scatter_rows(TensorId a, std::vector<int> dst, int n_rows) {
  const Tensor2& ta = value(a);
  if (static_cast<int>(dst.size()) != ta.rows)
    throw Error(ErrorCode::kInvalidArgument, "scatter_rows index count mismatch");
  Tensor2 out(n_rows, ta.cols);
  for (int i = 0; i < ta.rows; ++i)
    std::copy(ta.row(i), ta.row(i) + ta.cols, out.row(dst[i]));
  Op op;
  op.kind = Op::kScatterRows;
  op.a = a;
  op.rows = std::move(dst);
  op.n = n_rows;
  return push(op, std::move(out));
}

TensorId Tape::repeat_row(TensorId a, int times) {
  const Tensor2& ta = value(a);
  if (ta.rows != 1) throw Error(ErrorCode::kInvalidArgument, "repeat_row expects a row vector");
  Tensor2 out(times, ta.cols);
  for (int i = 0; i < times; ++i) std::copy(ta.row(0), ta.row(0) + ta.cols, out.row(i));
  Op op;
  op.kind = Op::kRepeatRow;
  op.a = a;
  op.n = times;
  return push(op, std::move(out));
}

TensorId Tape::hybrid_loss(TensorId pred, double y, double alpha, MseVariant variant) {
  const Tensor2& tp = value(pred);
  if (tp.rows != 1 || tp.cols != 1)
    throw Error(ErrorCode::kInvalidArgument, "hybrid_loss expects a 1x1 prediction");
  if (y <= 0.0) throw Error(ErrorCode::kInvalidArgument, "hybrid_loss label must be positive");
  const double x = tp.data[0];
  const double diff = x - y;
  const double ad = std::abs(diff);
  const double mse = variant == MseVariant::kAsPrinted ? ad : diff * diff;
  Tensor2 out(1, 1);
  out.data[0] = ad / y + alpha * mse;
  Op op;
  op.kind = Op::kHybridLoss;
  op.a = pred;
  op.y = y;
  op.alpha = alpha;
  op.variant = variant;
  return push(op, std::move(out));
}

void Tape::backward(TensorId loss) {
  const Tensor2& lv = value(loss);
  if (lv.rows != 1 || lv.cols != 1)
    throw Error(ErrorCode::kInvalidArgument, "backward expects a recorded scalar");
  grads_.assign(ops_.size(), Tensor2());
  grad_slot(loss).data[0] = 1.0;

  for (TensorId id = loss; id >= 0; --id) {
    if (grads_[id].empty()) continue;
    const Op& op = ops_[id];
    const Tensor2& g = grads_[id];
    switch (op.kind) {
      case Op::kLeaf:
      case Op::kLeafRef:
        break;
      case Op::kMatmul: {
        const Tensor2& ta = value(op.a);
        const Tensor2& tb = value(op.b);
        mm_abT_acc(g.data.data(), g.rows, g.cols, tb.data.data(), tb.rows,
                   grad_slot(op.a).data.data());
        mm_aTb_acc(ta.data.data(), ta.rows, ta.cols, g.data.data(), g.cols,
                   grad_slot(op.b).data.data());
        break;
      }
      case Op::kAddBias: {
        Tensor2& ga = grad_slot(op.a);
        for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
        Tensor2& gb = grad_slot(op.b);
        for (int i = 0; i < g.rows; ++i) {
          const double* grow = g.row(i);
          for (int j = 0; j < g.cols; ++j) gb.data[j] += grow[j];
        }
        break;
      }
      case Op::kRelu: {
        const Tensor2& ta = value(op.a);
        Tensor2& ga = grad_slot(op.a);
        for (size_t i = 0; i < g.size(); ++i)
          if (ta.data[i] > 0.0) ga.data[i] += g.data[i];
        break;
      }
      case Op::kAdd: {
        Tensor2& ga = grad_slot(op.a);
        for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
        Tensor2& gb = grad_slot(op.b);
        for (size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i];
        break;
      }
      case Op::kConcatCols: {
        const Tensor2& ta = value(op.a);
        Tensor2& ga = grad_slot(op.a);
        Tensor2& gb = grad_slot(op.b);
        for (int i = 0; i < g.rows; ++i) {
          const double* grow = g.row(i);
          double* garow = ga.row(i);
          double* gbrow = gb.row(i);
          for (int j = 0; j < ta.cols; ++j) garow[j] += grow[j];
          for (int j = ta.cols; j < g.cols; ++j) gbrow[j - ta.cols] += grow[j];
        }
        break;
      }
      case Op::kSumRows: {
        Tensor2& ga = grad_slot(op.a);
        for (int s = 0; s < g.rows; ++s) {
          const double* grow = g.row(s);
          for (int r : (*op.sets)[s]) {
            double* garow = ga.row(r);
            for (int j = 0; j < g.cols; ++j) garow[j] += grow[j];
          }
        }
        break;
      }
      case Op::kMaxColsOverRows: {
        const Tensor2& ta = value(op.a);
        Tensor2& ga = grad_slot(op.a);
        for (int j = 0; j < ta.cols; ++j) {
          int arg = 0;
          double best = ta.at(0, j);
          for (int i = 1; i < ta.rows; ++i)
            if (ta.at(i, j) > best) {
              best = ta.at(i, j);
              arg = i;
            }
          ga.at(arg, j) += g.data[j];
        }
        break;
      }
      case Op::kSelectRows: {
        Tensor2& ga = grad_slot(op.a);
        for (int i = 0; i < g.rows; ++i) {
          const double* grow = g.row(i);
          double* garow = ga.row(op.rows[i]);
          for (int j = 0; j < g.cols; ++j) garow[j] += grow[j];
        }
        break;
      }
      case Op::kScatterRows: {
        Tensor2& ga = grad_slot(op.a);
        for (int i = 0; i < ga.rows; ++i) {
          const double* grow = g.row(op.rows[i]);
          double* garow = ga.row(i);
          for (int j = 0; j < g.cols; ++j) garow[j] += grow[j];
        }
        break;
      }
      case Op::kRepeatRow: {
        Tensor2& ga = grad_slot(op.a);
        for (int i = 0; i < g.rows; ++i) {
          const double* grow = g.row(i);
          for (int j = 0; j < g.cols; ++j) ga.data[j] += grow[j];
        }
        break;
      }
      case Op::kHybridLoss: {
        const double x = value(op.a).data[0];
        const double diff = x - op.y;
        double d = sign0(diff) / op.y;
        d += op.variant == MseVariant::kAsPrinted ? op.alpha * sign0(diff)
                                                  : op.alpha * 2.0 * diff;
        grad_slot(op.a).data[0] += g.data[0] * d;
        break;
      }
    }
  }
}

}  // namespace perfsage
