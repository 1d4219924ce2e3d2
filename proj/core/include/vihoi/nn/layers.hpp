#pragma once

#include <optional>
#include <string>

#include "vihoi/nn/ops.hpp"
#include "vihoi/nn/parameter.hpp"

namespace vihoi::nn {

template <typename T>
struct Linear {
  Parameter<T>* weight = nullptr;  // in × out
  Parameter<T>* bias = nullptr;    // 1 × out, optional

  static Linear make(ParameterStore<T>& store, const std::string& name, int in, int out, Rng& rng, bool with_bias = true);
  Var operator()(Tape<T>& t, Var x) const;
};

template <typename T>
struct LayerNorm {
  Parameter<T>* gain = nullptr;
  Parameter<T>* bias = nullptr;

  static LayerNorm make(ParameterStore<T>& store, const std::string& name, int width);
  Var operator()(Tape<T>& t, Var x) const;
};

// Multi-head scaled dot-product attention without biases on the projections.
template <typename T>
struct MultiHeadAttention {
  Parameter<T>* wq = nullptr;
  Parameter<T>* wk = nullptr;
  Parameter<T>* wv = nullptr;
  Parameter<T>* wo = nullptr;
  int heads = 1;

  static MultiHeadAttention make(ParameterStore<T>& store, const std::string& name, int width, int heads, Rng& rng);
  // key_bias: optional 1×n_keys additive row (0 for valid keys, large
  // negative for masked ones).
  Var operator()(Tape<T>& t, Var queries, Var keys_values, const Matrix<T>* key_bias = nullptr) const;
};

// Pre-norm transformer block: x + MHA(LN(x)); x + FFN(LN(x)).
template <typename T>
struct TransformerBlock {
  LayerNorm<T> norm1;
  MultiHeadAttention<T> attn;
  LayerNorm<T> norm2;
  Linear<T> ff1;
  Linear<T> ff2;

  static TransformerBlock make(ParameterStore<T>& store, const std::string& name, int width, int heads, int ff_width, Rng& rng);
  Var operator()(Tape<T>& t, Var x, const Matrix<T>* key_bias = nullptr) const;
};

// Sinusoidal features of a scalar position; row vector of the given width.
template <typename T>
RowVector<T> sinusoidal_embedding(double position, int width);

}  // namespace vihoi::nn
