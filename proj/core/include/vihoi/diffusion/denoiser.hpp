#pragma once

#include <string>
#include <vector>

#include "vihoi/motion/motion_sequence.hpp"
#include "vihoi/nn/layers.hpp"

namespace vihoi::diffusion {

using nn::Matrix;
using nn::Parameter;
using nn::ParameterStore;
using nn::Tape;
using nn::Var;

enum class GeometryMode {
  kBps,         // BPS distances, embedded and added to every motion token
  kKeypoint24,  // 24 surface keypoints, embedded as one extra token
};

std::string to_string(GeometryMode mode);
// Throws Config.
GeometryMode parse_geometry_mode(const std::string& name);

struct DenoiserConfig {
  int d_model = 256;
  int layers = 6;
  int heads = 4;
  int max_len = 196;
  int geometry_embed_dim = 256;
  int ff_multiplier = 4;
  int motion_width = motion::kModelWidth;
  int bps_points = 1024;
  GeometryMode geometry = GeometryMode::kBps;

  int geometry_width() const { return geometry == GeometryMode::kBps ? bps_points : 72; }
  // Throws InvalidArgument.
  void validate() const;
};

// Transformer denoiser predicting x̂0. The token sequence is
// [time | c_v rows | c_t rows | geometry (keypoint mode only) | L motion rows]
// under full self-attention; the prediction is read back from the motion
// rows.
template <typename T>
struct Denoiser {
  DenoiserConfig config;
  nn::Linear<T> time1;
  nn::Linear<T> time2;
  Parameter<T>* visual_segment = nullptr;  // 1 × d_model
  Parameter<T>* text_segment = nullptr;
  nn::Linear<T> geom1;
  nn::Linear<T> geom2;
  nn::Linear<T> motion_in;
  std::vector<nn::TransformerBlock<T>> blocks;
  nn::LayerNorm<T> out_norm;
  nn::Linear<T> out;

  static Denoiser make(ParameterStore<T>& store, const std::string& prefix, const DenoiserConfig& config, Rng& rng);

  // x_t is L × motion_width; rows at or beyond valid_len are padding that
  // no token attends to (valid_len < 0 means all rows). c_v and c_t are
  // k × d_model, geom is 1 × geometry_width. Returns L × motion_width.
  // Throws ShapeMismatch and BadT (t < 0).
  Var operator()(Tape<T>& t, Var x_t, int step, Var c_v, Var c_t, Var geom, int valid_len = -1) const;
};

}  // namespace vihoi::diffusion
