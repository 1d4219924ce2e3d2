#include "vihoi/nn/ops.hpp"

#include <cmath>

#include "vihoi/common/error.hpp"

namespace vihoi::nn {

namespace {

template <typename T>
void check_same_shape(const Tape<T>& t, Var a, Var b, const char* op) {
  const auto& x = t.value(a);
  const auto& y = t.value(b);
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    fail(ErrorCode::kShapeMismatch, std::string(op) + ": operand shapes differ");
  }
}

template <typename T>
bool any_grad(const Tape<T>& t, std::initializer_list<Var> vars) {
  for (Var v : vars)
    if (t.needs_grad(v)) return true;
  return false;
}

}  // namespace

template <typename T>
Var matmul(Tape<T>& t, Var a, Var b) {
  using M = Matrix<T>;
  if (t.value(a).cols() != t.value(b).rows()) fail(ErrorCode::kShapeMismatch, "matmul: inner dimensions differ");
  M out = t.value(a) * t.value(b);
  return t.record(std::move(out), any_grad(t, {a, b}), [&t, a, b](const M& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.needs_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

template <typename T>
Var matmul_nt(Tape<T>& t, Var a, Var b) {
  using M = Matrix<T>;
  if (t.value(a).cols() != t.value(b).cols()) fail(ErrorCode::kShapeMismatch, "matmul_nt: inner dimensions differ");
  M out = t.value(a) * t.value(b).transpose();
  return t.record(std::move(out), any_grad(t, {a, b}), [&t, a, b](const M& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * t.value(b));
    if (t.needs_grad(b)) t.accumulate(b, g.transpose() * t.value(a));
  });
}

template <typename T>
Var transpose(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  M out = t.value(a).transpose();
  return t.record(std::move(out), t.needs_grad(a), [&t, a](const M& g) { t.accumulate(a, g.transpose()); });
}

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
  using M = Matrix<T>;
  check_same_shape(t, a, b, "add");
  M out = t.value(a) + t.value(b);
  return t.record(std::move(out), any_grad(t, {a, b}), [&t, a, b](const M& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

template <typename T>
Var sub(Tape<T>& t, Var a, Var b) {
  using M = Matrix<T>;
  check_same_shape(t, a, b, "sub");
  M out = t.value(a) - t.value(b);
  return t.record(std::move(out), any_grad(t, {a, b}), [&t, a, b](const M& g) {
    t.accumulate(a, g);
    if (t.needs_grad(b)) t.accumulate(b, -g);
  });
}

template <typename T>
Var mul(Tape<T>& t, Var a, Var b) {
  using M = Matrix<T>;
  check_same_shape(t, a, b, "mul");
  M out = t.value(a).cwiseProduct(t.value(b));
  return t.record(std::move(out), any_grad(t, {a, b}), [&t, a, b](const M& g) {
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
    if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

template <typename T>
Var add_row(Tape<T>& t, Var a, Var row) {
  using M = Matrix<T>;
  const auto& r = t.value(row);
  if (r.rows() != 1 || r.cols() != t.value(a).cols()) fail(ErrorCode::kShapeMismatch, "add_row: row width mismatch");
  M out = t.value(a).rowwise() + r.row(0);
  return t.record(std::move(out), any_grad(t, {a, row}), [&t, a, row](const M& g) {
    t.accumulate(a, g);
    if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

template <typename T>
Var mul_row(Tape<T>& t, Var a, Var row) {
  using M = Matrix<T>;
  const auto& r = t.value(row);
  if (r.rows() != 1 || r.cols() != t.value(a).cols()) fail(ErrorCode::kShapeMismatch, "mul_row: row width mismatch");
  M out = t.value(a).array().rowwise() * r.row(0).array();
  return t.record(std::move(out), any_grad(t, {a, row}), [&t, a, row](const M& g) {
    if (t.needs_grad(a)) t.accumulate(a, (g.array().rowwise() * t.value(row).row(0).array()).matrix());
    if (t.needs_grad(row)) t.accumulate(row, g.cwiseProduct(t.value(a)).colwise().sum());
  });
}

template <typename T>
Var mul_col(Tape<T>& t, Var a, Var col) {
  using M = Matrix<T>;
  const auto& c = t.value(col);
  if (c.cols() != 1 || c.rows() != t.value(a).rows()) fail(ErrorCode::kShapeMismatch, "mul_col: column height mismatch");
  M out = t.value(a).array().colwise() * c.col(0).array();
  return t.record(std::move(out), any_grad(t, {a, col}), [&t, a, col](const M& g) {
    if (t.needs_grad(a)) t.accumulate(a, (g.array().colwise() * t.value(col).col(0).array()).matrix());
    if (t.needs_grad(col)) t.accumulate(col, g.cwiseProduct(t.value(a)).rowwise().sum());
  });
}

template <typename T>
Var affine(Tape<T>& t, Var a, T scale, T offset) {
  using M = Matrix<T>;
  M out = (t.value(a) * scale).array() + offset;
  return t.record(std::move(out), t.needs_grad(a), [&t, a, scale](const M& g) { t.accumulate(a, g * scale); });
}

template <typename T>
Var relu(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  M out = t.value(a).cwiseMax(T(0));
  return t.record(std::move(out), t.needs_grad(a), [&t, a](const M& g) {
    t.accumulate(a, (t.value(a).array() > T(0)).select(g, T(0)).matrix());
  });
}

template <typename T>
Var gelu(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  // tanh approximation
  const T c = T(0.7978845608028654);
  const T k = T(0.044715);
  M out = t.value(a).unaryExpr([c, k](T x) { return T(0.5) * x * (T(1) + std::tanh(c * (x + k * x * x * x))); });
  return t.record(std::move(out), t.needs_grad(a), [&t, a, c, k](const M& g) {
    M d = t.value(a).unaryExpr([c, k](T x) {
      const T u = c * (x + k * x * x * x);
      const T th = std::tanh(u);
      const T du = c * (T(1) + T(3) * k * x * x);
      return T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * du;
    });
    t.accumulate(a, g.cwiseProduct(d));
  });
}

template <typename T>
Var silu(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  M out = t.value(a).unaryExpr([](T x) { return x / (T(1) + std::exp(-x)); });
  return t.record(std::move(out), t.needs_grad(a), [&t, a](const M& g) {
    M d = t.value(a).unaryExpr([](T x) {
      const T s = T(1) / (T(1) + std::exp(-x));
      return s * (T(1) + x * (T(1) - s));
    });
    t.accumulate(a, g.cwiseProduct(d));
  });
}

template <typename T>
Var tanh(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  M out = t.value(a).array().tanh().matrix();
  const int id = static_cast<int>(t.size());
  return t.record(std::move(out), t.needs_grad(a), [&t, a, id](const M& g) {
    const M& y = t.value(Var{id});
    t.accumulate(a, g.cwiseProduct((T(1) - y.array().square()).matrix()));
  });
}

template <typename T>
Var sigmoid(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  M out = t.value(a).unaryExpr([](T x) { return T(1) / (T(1) + std::exp(-x)); });
  const int id = static_cast<int>(t.size());
  return t.record(std::move(out), t.needs_grad(a), [&t, a, id](const M& g) {
    const M& y = t.value(Var{id});
    t.accumulate(a, g.cwiseProduct((y.array() * (T(1) - y.array())).matrix()));
  });
}

template <typename T>
Var square(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  M out = t.value(a).array().square().matrix();
  return t.record(std::move(out), t.needs_grad(a), [&t, a](const M& g) {
    t.accumulate(a, (g.cwiseProduct(t.value(a)) * T(2)));
  });
}

template <typename T>
Var softmax_rows(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  const M& x = t.value(a);
  M out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T mx = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - mx).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  const int id = static_cast<int>(t.size());
  return t.record(std::move(out), t.needs_grad(a), [&t, a, id](const M& g) {
    const M& y = t.value(Var{id});
    const auto dots = g.cwiseProduct(y).rowwise().sum();
    M d = y.cwiseProduct((g.colwise() - dots).matrix());
    t.accumulate(a, d);
  });
}

template <typename T>
Var log_softmax_rows(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  const M& x = t.value(a);
  M out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T mx = x.row(r).maxCoeff();
    const T lse = mx + std::log((x.row(r).array() - mx).exp().sum());
    out.row(r) = x.row(r).array() - lse;
  }
  const int id = static_cast<int>(t.size());
  return t.record(std::move(out), t.needs_grad(a), [&t, a, id](const M& g) {
    const M p = t.value(Var{id}).array().exp().matrix();
    const auto sums = g.rowwise().sum();
    M d = g - (p.array().colwise() * sums.array()).matrix();
    t.accumulate(a, d);
  });
}

template <typename T>
Var layer_norm(Tape<T>& t, Var x, Var gain, Var bias, T eps) {
  using M = Matrix<T>;
  const M& in = t.value(x);
  const Eigen::Index n = in.cols();
  if (t.value(gain).cols() != n || t.value(bias).cols() != n) fail(ErrorCode::kShapeMismatch, "layer_norm: affine width mismatch");
  M xhat(in.rows(), n);
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(in.rows());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const T mu = in.row(r).mean();
    const T var = (in.row(r).array() - mu).square().mean();
    inv_std(r) = T(1) / std::sqrt(var + eps);
    xhat.row(r) = (in.row(r).array() - mu) * inv_std(r);
  }
  M out = (xhat.array().rowwise() * t.value(gain).row(0).array()).rowwise() + t.value(bias).row(0).array();
  return t.record(std::move(out), any_grad(t, {x, gain, bias}),
                  [&t, x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](const M& g) {
                    if (t.needs_grad(gain)) t.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
                    if (t.needs_grad(bias)) t.accumulate(bias, g.colwise().sum());
                    if (t.needs_grad(x)) {
                      M dxhat = g.array().rowwise() * t.value(gain).row(0).array();
                      const auto mean_d = dxhat.rowwise().mean();
                      const auto mean_dx = dxhat.cwiseProduct(xhat).rowwise().mean();
                      M dx(g.rows(), g.cols());
                      for (Eigen::Index r = 0; r < g.rows(); ++r) {
                        dx.row(r) = (dxhat.row(r).array() - mean_d(r) - xhat.row(r).array() * mean_dx(r)) * inv_std(r);
                      }
                      t.accumulate(x, dx);
                    }
                  });
}

template <typename T>
Var l2_normalize_rows(Tape<T>& t, Var a, T eps) {
  using M = Matrix<T>;
  const M& x = t.value(a);
  Eigen::Matrix<T, Eigen::Dynamic, 1> norms = (x.rowwise().squaredNorm().array() + eps).sqrt().matrix();
  M out = x.array().colwise() / norms.array();
  const int id = static_cast<int>(t.size());
  return t.record(std::move(out), t.needs_grad(a), [&t, a, id, norms = std::move(norms)](const M& g) {
    const M& y = t.value(Var{id});
    const auto dots = g.cwiseProduct(y).rowwise().sum();
    M d = ((g - (y.array().colwise() * dots.array()).matrix()).array().colwise() / norms.array()).matrix();
    t.accumulate(a, d);
  });
}

template <typename T>
Var concat_rows(Tape<T>& t, std::span<const Var> parts) {
  using M = Matrix<T>;
  if (parts.empty()) fail(ErrorCode::kShapeMismatch, "concat_rows: no inputs");
  const Eigen::Index cols = t.value(parts[0]).cols();
  Eigen::Index rows = 0;
  bool grad = false;
  for (Var p : parts) {
    if (t.value(p).cols() != cols) fail(ErrorCode::kShapeMismatch, "concat_rows: width mismatch");
    rows += t.value(p).rows();
    grad = grad || t.needs_grad(p);
  }
  M out(rows, cols);
  std::vector<std::pair<Var, Eigen::Index>> offsets;
  Eigen::Index r = 0;
  for (Var p : parts) {
    out.middleRows(r, t.value(p).rows()) = t.value(p);
    offsets.emplace_back(p, r);
    r += t.value(p).rows();
  }
  return t.record(std::move(out), grad, [&t, offsets = std::move(offsets)](const M& g) {
    for (const auto& [p, off] : offsets)
      if (t.needs_grad(p)) t.accumulate(p, g.middleRows(off, t.value(p).rows()));
  });
}

template <typename T>
Var concat_cols(Tape<T>& t, std::span<const Var> parts) {
  using M = Matrix<T>;
  if (parts.empty()) fail(ErrorCode::kShapeMismatch, "concat_cols: no inputs");
  const Eigen::Index rows = t.value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool grad = false;
  for (Var p : parts) {
    if (t.value(p).rows() != rows) fail(ErrorCode::kShapeMismatch, "concat_cols: height mismatch");
    cols += t.value(p).cols();
    grad = grad || t.needs_grad(p);
  }
  M out(rows, cols);
  std::vector<std::pair<Var, Eigen::Index>> offsets;
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, t.value(p).cols()) = t.value(p);
    offsets.emplace_back(p, c);
    c += t.value(p).cols();
  }
  return t.record(std::move(out), grad, [&t, offsets = std::move(offsets)](const M& g) {
    for (const auto& [p, off] : offsets)
      if (t.needs_grad(p)) t.accumulate(p, g.middleCols(off, t.value(p).cols()));
  });
}

template <typename T>
Var slice_rows(Tape<T>& t, Var a, int start, int count) {
  using M = Matrix<T>;
  const auto& x = t.value(a);
  if (start < 0 || count < 0 || start + count > x.rows()) fail(ErrorCode::kShapeMismatch, "slice_rows out of range");
  M out = x.middleRows(start, count);
  return t.record(std::move(out), t.needs_grad(a), [&t, a, start, count](const M& g) {
    M full = M::Zero(t.value(a).rows(), t.value(a).cols());
    full.middleRows(start, count) = g;
    t.accumulate(a, full);
  });
}

template <typename T>
Var slice_cols(Tape<T>& t, Var a, int start, int count) {
  using M = Matrix<T>;
  const auto& x = t.value(a);
  if (start < 0 || count < 0 || start + count > x.cols()) fail(ErrorCode::kShapeMismatch, "slice_cols out of range");
  M out = x.middleCols(start, count);
  return t.record(std::move(out), t.needs_grad(a), [&t, a, start, count](const M& g) {
    M full = M::Zero(t.value(a).rows(), t.value(a).cols());
    full.middleCols(start, count) = g;
    t.accumulate(a, full);
  });
}

template <typename T>
Var gather_rows(Tape<T>& t, Var table, std::span<const int> rows) {
  using M = Matrix<T>;
  const auto& x = t.value(table);
  M out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows()) fail(ErrorCode::kShapeMismatch, "gather_rows index out of range");
    out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return t.record(std::move(out), t.needs_grad(table), [&t, table, idx = std::move(idx)](const M& g) {
    M full = M::Zero(t.value(table).rows(), t.value(table).cols());
    for (std::size_t i = 0; i < idx.size(); ++i) full.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    t.accumulate(table, full);
  });
}

template <typename T>
Var sum(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  M out(1, 1);
  out(0, 0) = t.value(a).sum();
  return t.record(std::move(out), t.needs_grad(a), [&t, a](const M& g) {
    t.accumulate(a, M::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0)));
  });
}

template <typename T>
Var mean(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  const T n = static_cast<T>(t.value(a).size());
  M out(1, 1);
  out(0, 0) = t.value(a).sum() / n;
  return t.record(std::move(out), t.needs_grad(a), [&t, a, n](const M& g) {
    t.accumulate(a, M::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0) / n));
  });
}

template <typename T>
Var mean_rows(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  const T n = static_cast<T>(t.value(a).rows());
  M out = t.value(a).colwise().mean();
  return t.record(std::move(out), t.needs_grad(a), [&t, a, n](const M& g) {
    M full = g.replicate(t.value(a).rows(), 1) / n;
    t.accumulate(a, full);
  });
}

template <typename T>
Var mean_row_sq_norm(Tape<T>& t, Var a) {
  using M = Matrix<T>;
  const T n = static_cast<T>(t.value(a).rows());
  M out(1, 1);
  out(0, 0) = t.value(a).squaredNorm() / n;
  return t.record(std::move(out), t.needs_grad(a), [&t, a, n](const M& g) {
    t.accumulate(a, t.value(a) * (T(2) * g(0, 0) / n));
  });
}

#define VIHOI_INSTANTIATE_OPS(T)                                                  \
  template Var matmul<T>(Tape<T>&, Var, Var);                                     \
  template Var matmul_nt<T>(Tape<T>&, Var, Var);                                  \
  template Var transpose<T>(Tape<T>&, Var);                                       \
  template Var add<T>(Tape<T>&, Var, Var);                                        \
  template Var sub<T>(Tape<T>&, Var, Var);                                        \
  template Var mul<T>(Tape<T>&, Var, Var);                                        \
  template Var add_row<T>(Tape<T>&, Var, Var);                                    \
  template Var mul_row<T>(Tape<T>&, Var, Var);                                    \
  template Var mul_col<T>(Tape<T>&, Var, Var);                                    \
  template Var affine<T>(Tape<T>&, Var, T, T);                                    \
  template Var relu<T>(Tape<T>&, Var);                                            \
  template Var gelu<T>(Tape<T>&, Var);                                            \
  template Var silu<T>(Tape<T>&, Var);                                            \
  template Var tanh<T>(Tape<T>&, Var);                                            \
  template Var sigmoid<T>(Tape<T>&, Var);                                         \
  template Var square<T>(Tape<T>&, Var);                                          \
  template Var softmax_rows<T>(Tape<T>&, Var);                                    \
  template Var log_softmax_rows<T>(Tape<T>&, Var);                                \
  template Var layer_norm<T>(Tape<T>&, Var, Var, Var, T);                         \
  template Var l2_normalize_rows<T>(Tape<T>&, Var, T);                            \
  template Var concat_rows<T>(Tape<T>&, std::span<const Var>);                    \
  template Var concat_cols<T>(Tape<T>&, std::span<const Var>);                    \
  template Var slice_rows<T>(Tape<T>&, Var, int, int);                            \
  template Var slice_cols<T>(Tape<T>&, Var, int, int);                            \
  template Var gather_rows<T>(Tape<T>&, Var, std::span<const int>);               \
  template Var sum<T>(Tape<T>&, Var);                                             \
  template Var mean<T>(Tape<T>&, Var);                                            \
  template Var mean_rows<T>(Tape<T>&, Var);                                       \
  template Var mean_row_sq_norm<T>(Tape<T>&, Var);

VIHOI_INSTANTIATE_OPS(float)
VIHOI_INSTANTIATE_OPS(double)

}  // namespace vihoi::nn
