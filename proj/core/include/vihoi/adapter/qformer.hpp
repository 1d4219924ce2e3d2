#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>

#include "vihoi/nn/layers.hpp"

namespace vihoi::adapter {

using nn::Matrix;
using nn::Parameter;
using nn::ParameterStore;
using nn::Tape;
using nn::Var;

struct QFormerConfig {
  int d_enc = 256;
  int d_model = 64;
  int queries = 1;
  int heads = 4;
  // Feed-forward sublayer after each cross-attention layer.
  bool feed_forward = false;

  // Throws InvalidArgument.
  void validate() const;
};

// Learnable-query adapter: Z = LayerNorm(E·W + b), then two cross-attention
// layers from the queries onto Z, each with a residual connection and
// post-norm. Z carries no positions, so the output does not depend on the
// order of the rows of E.
template <typename T>
struct QFormer {
  struct Layer {
    nn::MultiHeadAttention<T> attn;
    nn::LayerNorm<T> norm;
    nn::Linear<T> ff1;
    nn::Linear<T> ff2;
    nn::LayerNorm<T> ff_norm;
  };

  QFormerConfig config;
  nn::Linear<T> proj;
  nn::LayerNorm<T> proj_norm;
  Parameter<T>* queries = nullptr;  // k × d_model
  std::array<Layer, 2> layers;

  static QFormer make(ParameterStore<T>& store, const std::string& prefix, const QFormerConfig& config, Rng& rng);

  // Throws WidthMismatch unless E is n × d_enc with n >= 1.
  Var project_normalize(Tape<T>& t, Var e) const;
  // k × d_model prior tokens.
  Var operator()(Tape<T>& t, Var e) const;
};

// Number of QFormer forward passes in this process.
std::uint64_t qformer_calls();

// Mean over the rows of E followed by a linear map to d_model; stands in for
// the Q-Former in the pooling ablation.
template <typename T>
struct PoolAdapter {
  nn::Linear<T> proj;
  int d_enc = 0;

  static PoolAdapter make(ParameterStore<T>& store, const std::string& prefix, int d_enc, int d_model, Rng& rng);
  // 1 × d_model. Throws WidthMismatch.
  Var operator()(Tape<T>& t, Var e) const;
};

// Visual and text adapters under "<prefix>visual." and "<prefix>text.",
// initialized from independent streams derived from `seed`.
template <typename T>
std::pair<QFormer<T>, QFormer<T>> make_adapters(ParameterStore<T>& store, const std::string& prefix, int d_enc,
                                                int d_model, int k_visual, int k_text, std::uint64_t seed,
                                                int heads = 4, bool feed_forward = false);

}  // namespace vihoi::adapter
