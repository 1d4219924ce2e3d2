#include "vihoi/diffusion/denoiser.hpp"

#include <array>

#include "vihoi/common/error.hpp"

namespace vihoi::diffusion {

std::string to_string(GeometryMode mode) { return mode == GeometryMode::kBps ? "bps" : "keypoint24"; }

GeometryMode parse_geometry_mode(const std::string& name) {
  if (name == "bps") return GeometryMode::kBps;
  if (name == "keypoint24") return GeometryMode::kKeypoint24;
  fail(ErrorCode::kConfig, "unknown generator variant: " + name);
}

void DenoiserConfig::validate() const {
  if (d_model < 2 || layers < 1 || max_len < 1 || geometry_embed_dim < 1 || ff_multiplier < 1 || motion_width < 1 ||
      bps_points < 1) {
    fail(ErrorCode::kInvalidArgument, "denoiser sizes must be positive");
  }
  if (heads < 1 || d_model % heads != 0) fail(ErrorCode::kInvalidArgument, "d_model must be divisible by heads");
}

template <typename T>
Denoiser<T> Denoiser<T>::make(ParameterStore<T>& store, const std::string& prefix, const DenoiserConfig& config,
                              Rng& rng) {
  config.validate();
  const int d = config.d_model;
  Denoiser m;
  m.config = config;
  m.time1 = nn::Linear<T>::make(store, prefix + "time1", d, d, rng);
  m.time2 = nn::Linear<T>::make(store, prefix + "time2", d, d, rng);
  m.visual_segment = &store.add(prefix + "visual_segment", nn::normal_init(rng, 1, d, 0.02).template cast<T>());
  m.text_segment = &store.add(prefix + "text_segment", nn::normal_init(rng, 1, d, 0.02).template cast<T>());
  if (config.geometry == GeometryMode::kBps) {
    m.geom1 = nn::Linear<T>::make(store, prefix + "geom1", config.bps_points, config.geometry_embed_dim, rng);
    m.geom2 = nn::Linear<T>::make(store, prefix + "geom2", config.geometry_embed_dim, d, rng);
  } else {
    m.geom1 = nn::Linear<T>::make(store, prefix + "geom1", 72, d, rng);
  }
  m.motion_in = nn::Linear<T>::make(store, prefix + "motion_in", config.motion_width, d, rng);
  for (int i = 0; i < config.layers; ++i) {
    m.blocks.push_back(nn::TransformerBlock<T>::make(store, prefix + "block" + std::to_string(i), d, config.heads,
                                                     config.ff_multiplier * d, rng));
  }
  m.out_norm = nn::LayerNorm<T>::make(store, prefix + "out_norm", d);
  m.out = nn::Linear<T>::make(store, prefix + "out", d, config.motion_width, rng);
  // A small output layer starts predictions near zero, the data mean.
  m.out.weight->value *= T(0.1);
  m.out.bias->value.setZero();
  return m;
}

template <typename T>
Var Denoiser<T>::operator()(Tape<T>& t, Var x_t, int step, Var c_v, Var c_t, Var geom, int valid_len) const {
  const int d = config.d_model;
  const int L = static_cast<int>(t.value(x_t).rows());
  if (L < 1 || L > config.max_len || t.value(x_t).cols() != config.motion_width) {
    fail(ErrorCode::kShapeMismatch, "denoiser expects L×" + std::to_string(config.motion_width) + " with 1 <= L <= " +
                                        std::to_string(config.max_len));
  }
  if (t.value(c_v).cols() != d || t.value(c_t).cols() != d || t.value(c_v).rows() < 1 || t.value(c_t).rows() < 1) {
    fail(ErrorCode::kShapeMismatch, "prior tokens must be k×" + std::to_string(d));
  }
  if (t.value(geom).rows() != 1 || t.value(geom).cols() != config.geometry_width()) {
    fail(ErrorCode::kShapeMismatch, "geometry input must be 1×" + std::to_string(config.geometry_width()));
  }
  if (step < 0) fail(ErrorCode::kBadT, "negative timestep");
  if (valid_len < 0) valid_len = L;
  if (valid_len < 1 || valid_len > L) fail(ErrorCode::kShapeMismatch, "valid length outside [1, L]");

  const Var time_tok =
      time2(t, nn::silu(t, time1(t, t.constant(nn::sinusoidal_embedding<T>(static_cast<double>(step), d)))));
  const Var visual = nn::add_row(t, c_v, t.parameter(*visual_segment));
  const Var text = nn::add_row(t, c_t, t.parameter(*text_segment));

  Matrix<T> positions(L, d);
  for (int i = 0; i < L; ++i) positions.row(i) = nn::sinusoidal_embedding<T>(static_cast<double>(i), d);
  Var motion = nn::add(t, motion_in(t, x_t), t.constant(std::move(positions)));

  std::vector<Var> parts = {time_tok, visual, text};
  if (config.geometry == GeometryMode::kBps) {
    motion = nn::add_row(t, motion, geom2(t, nn::gelu(t, geom1(t, geom))));
  } else {
    parts.push_back(geom1(t, geom));
  }
  parts.push_back(motion);
  Var h = nn::concat_rows<T>(t, parts);

  const int n = static_cast<int>(t.value(h).rows());
  const int motion_start = n - L;
  Matrix<T> key_bias;
  const Matrix<T>* bias_ptr = nullptr;
  if (valid_len < L) {
    key_bias = Matrix<T>::Zero(1, n);
    key_bias.rightCols(L - valid_len).setConstant(T(-1e9));
    bias_ptr = &key_bias;
  }
  for (const auto& block : blocks) h = block(t, h, bias_ptr);
  return out(t, out_norm(t, nn::slice_rows(t, h, motion_start, L)));
}

template struct Denoiser<float>;
template struct Denoiser<double>;

}  // namespace vihoi::diffusion
