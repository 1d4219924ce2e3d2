#include "vihoi/nn/layers.hpp"

#include <cmath>

#include "vihoi/common/error.hpp"

namespace vihoi::nn {

template <typename T>
Linear<T> Linear<T>::make(ParameterStore<T>& store, const std::string& name, int in, int out, Rng& rng, bool with_bias) {
  Linear l;
  l.weight = &store.add(name + ".weight", uniform_init(rng, in, out, in).template cast<T>());
  if (with_bias) l.bias = &store.add(name + ".bias", bias_init(rng, out, in).template cast<T>());
  return l;
}

template <typename T>
Var Linear<T>::operator()(Tape<T>& t, Var x) const {
  Var y = matmul(t, x, t.parameter(*weight));
  if (bias) y = add_row(t, y, t.parameter(*bias));
  return y;
}

template <typename T>
LayerNorm<T> LayerNorm<T>::make(ParameterStore<T>& store, const std::string& name, int width) {
  LayerNorm n;
  n.gain = &store.add(name + ".gain", Matrix<T>::Ones(1, width));
  n.bias = &store.add(name + ".bias", Matrix<T>::Zero(1, width));
  return n;
}

template <typename T>
Var LayerNorm<T>::operator()(Tape<T>& t, Var x) const {
  return layer_norm(t, x, t.parameter(*gain), t.parameter(*bias));
}

template <typename T>
MultiHeadAttention<T> MultiHeadAttention<T>::make(ParameterStore<T>& store, const std::string& name, int width, int heads,
                                                  Rng& rng) {
  if (heads <= 0 || width % heads != 0) fail(ErrorCode::kInvalidArgument, "attention width must be divisible by heads");
  MultiHeadAttention a;
  a.heads = heads;
  a.wq = &store.add(name + ".wq", uniform_init(rng, width, width, width).template cast<T>());
  a.wk = &store.add(name + ".wk", uniform_init(rng, width, width, width).template cast<T>());
  a.wv = &store.add(name + ".wv", uniform_init(rng, width, width, width).template cast<T>());
  a.wo = &store.add(name + ".wo", uniform_init(rng, width, width, width).template cast<T>());
  return a;
}

template <typename T>
Var MultiHeadAttention<T>::operator()(Tape<T>& t, Var queries, Var keys_values, const Matrix<T>* key_bias) const {
  const int width = static_cast<int>(wq->value.rows());
  if (t.value(queries).cols() != width || t.value(keys_values).cols() != width) {
    fail(ErrorCode::kWidthMismatch, "attention input width mismatch");
  }
  const int head_dim = width / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(head_dim));
  Var q = matmul(t, queries, t.parameter(*wq));
  Var k = matmul(t, keys_values, t.parameter(*wk));
  Var v = matmul(t, keys_values, t.parameter(*wv));
  Var bias;
  if (key_bias) {
    if (key_bias->rows() != 1 || key_bias->cols() != t.value(keys_values).rows()) {
      fail(ErrorCode::kShapeMismatch, "attention key mask width mismatch");
    }
    bias = t.constant(*key_bias);
  }
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? q : slice_cols(t, q, h * head_dim, head_dim);
    Var kh = heads == 1 ? k : slice_cols(t, k, h * head_dim, head_dim);
    Var vh = heads == 1 ? v : slice_cols(t, v, h * head_dim, head_dim);
    Var scores = affine(t, matmul_nt(t, qh, kh), scale);
    if (key_bias) scores = add_row(t, scores, bias);
    outs.push_back(matmul(t, softmax_rows(t, scores), vh));
  }
  Var merged = heads == 1 ? outs[0] : concat_cols<T>(t, outs);
  return matmul(t, merged, t.parameter(*wo));
}

template <typename T>
TransformerBlock<T> TransformerBlock<T>::make(ParameterStore<T>& store, const std::string& name, int width, int heads,
                                              int ff_width, Rng& rng) {
  TransformerBlock b;
  b.norm1 = LayerNorm<T>::make(store, name + ".norm1", width);
  b.attn = MultiHeadAttention<T>::make(store, name + ".attn", width, heads, rng);
  b.norm2 = LayerNorm<T>::make(store, name + ".norm2", width);
  b.ff1 = Linear<T>::make(store, name + ".ff1", width, ff_width, rng);
  b.ff2 = Linear<T>::make(store, name + ".ff2", ff_width, width, rng);
  return b;
}

template <typename T>
Var TransformerBlock<T>::operator()(Tape<T>& t, Var x, const Matrix<T>* key_bias) const {
  Var h = norm1(t, x);
  x = add(t, x, attn(t, h, h, key_bias));
  Var f = ff2(t, gelu(t, ff1(t, norm2(t, x))));
  return add(t, x, f);
}

template <typename T>
RowVector<T> sinusoidal_embedding(double position, int width) {
  RowVector<T> out(width);
  const int half = width / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / std::max(1, half));
    out(i) = static_cast<T>(std::sin(position * freq));
    out(half + i) = static_cast<T>(std::cos(position * freq));
  }
  if (width % 2) out(width - 1) = T(0);
  return out;
}

template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct MultiHeadAttention<float>;
template struct MultiHeadAttention<double>;
template struct TransformerBlock<float>;
template struct TransformerBlock<double>;
template RowVector<float> sinusoidal_embedding<float>(double, int);
template RowVector<double> sinusoidal_embedding<double>(double, int);

}  // namespace vihoi::nn
