#include "vihoi/diffusion/model.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "vihoi/common/error.hpp"

namespace vihoi::diffusion {

using nlohmann::json;

std::string to_string(AdapterKind kind) { return kind == AdapterKind::kQFormer ? "qformer" : "pool"; }

AdapterKind parse_adapter_kind(const std::string& name) {
  if (name == "qformer") return AdapterKind::kQFormer;
  if (name == "pool") return AdapterKind::kPool;
  fail(ErrorCode::kConfig, "unknown adapter kind: " + name);
}

void ModelConfig::validate() const {
  denoiser.validate();
  if (d_enc < 1 || k_visual < 1 || k_text < 1) fail(ErrorCode::kInvalidArgument, "adapter sizes must be positive");
  if (adapter_heads < 1 || denoiser.d_model % adapter_heads != 0) {
    fail(ErrorCode::kInvalidArgument, "d_model must be divisible by adapter heads");
  }
  if (timesteps < 2) fail(ErrorCode::kBadT, "timesteps must be >= 2");
  if (sample_steps < 1 || sample_steps > timesteps) {
    fail(ErrorCode::kInvalidArgument, "sample_steps must lie in [1, timesteps]");
  }
  if (dropout_prob < 0 || dropout_prob > 1) fail(ErrorCode::kInvalidArgument, "dropout_prob outside [0, 1]");
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::kConfig, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) fail(ErrorCode::kConfig, "unknown key " + where + "." + key);
  }
}

template <typename V>
void read(const json& j, const char* key, V& out) {
  if (j.contains(key)) out = j.at(key).get<V>();
}

}  // namespace

std::string ModelConfig::to_json() const {
  json d = {{"d_model", denoiser.d_model},
            {"layers", denoiser.layers},
            {"heads", denoiser.heads},
            {"max_len", denoiser.max_len},
            {"geometry_embed_dim", denoiser.geometry_embed_dim},
            {"ff_multiplier", denoiser.ff_multiplier},
            {"motion_width", denoiser.motion_width},
            {"bps_points", denoiser.bps_points},
            {"geometry", diffusion::to_string(denoiser.geometry)}};
  json j = {{"denoiser", d},
            {"d_enc", d_enc},
            {"k_visual", k_visual},
            {"k_text", k_text},
            {"adapter_heads", adapter_heads},
            {"adapter_feed_forward", adapter_feed_forward},
            {"adapter", diffusion::to_string(adapter)},
            {"schedule", diffusion::to_string(schedule)},
            {"timesteps", timesteps},
            {"sample_steps", sample_steps},
            {"condition_dropout", condition_dropout},
            {"dropout_prob", dropout_prob}};
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("model config: ") + e.what());
  }
  reject_unknown(j,
                 {"denoiser", "d_enc", "k_visual", "k_text", "adapter_heads", "adapter_feed_forward", "adapter",
                  "schedule", "timesteps", "sample_steps", "condition_dropout", "dropout_prob"},
                 "model");
  ModelConfig c;
  try {
    if (j.contains("denoiser")) {
      const json& d = j.at("denoiser");
      reject_unknown(d,
                     {"d_model", "layers", "heads", "max_len", "geometry_embed_dim", "ff_multiplier", "motion_width",
                      "bps_points", "geometry"},
                     "model.denoiser");
      read(d, "d_model", c.denoiser.d_model);
      read(d, "layers", c.denoiser.layers);
      read(d, "heads", c.denoiser.heads);
      read(d, "max_len", c.denoiser.max_len);
      read(d, "geometry_embed_dim", c.denoiser.geometry_embed_dim);
      read(d, "ff_multiplier", c.denoiser.ff_multiplier);
      read(d, "motion_width", c.denoiser.motion_width);
      read(d, "bps_points", c.denoiser.bps_points);
      if (d.contains("geometry")) c.denoiser.geometry = parse_geometry_mode(d.at("geometry").get<std::string>());
    }
    read(j, "d_enc", c.d_enc);
    read(j, "k_visual", c.k_visual);
    read(j, "k_text", c.k_text);
    read(j, "adapter_heads", c.adapter_heads);
    read(j, "adapter_feed_forward", c.adapter_feed_forward);
    if (j.contains("adapter")) c.adapter = parse_adapter_kind(j.at("adapter").get<std::string>());
    if (j.contains("schedule")) c.schedule = parse_schedule_kind(j.at("schedule").get<std::string>());
    read(j, "timesteps", c.timesteps);
    read(j, "sample_steps", c.sample_steps);
    read(j, "condition_dropout", c.condition_dropout);
    read(j, "dropout_prob", c.dropout_prob);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

Normalizer Normalizer::fit(std::span<const motion::RowMatrix> sequences) {
  long frames = 0;
  int width = -1;
  for (const auto& s : sequences) {
    if (width < 0) width = static_cast<int>(s.cols());
    if (s.cols() != width) fail(ErrorCode::kShapeMismatch, "sequences differ in width");
    frames += s.rows();
  }
  if (frames == 0) fail(ErrorCode::kInvalidArgument, "normalizer needs at least one frame");
  Normalizer n;
  n.mean = Eigen::RowVectorXd::Zero(width);
  for (const auto& s : sequences) n.mean += s.colwise().sum();
  n.mean /= static_cast<double>(frames);
  Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(width);
  for (const auto& s : sequences) var += (s.rowwise() - n.mean).array().square().matrix().colwise().sum();
  var /= static_cast<double>(frames);
  n.std = var.array().sqrt().max(kStdFloor).matrix();
  return n;
}

Matrix<double> Normalizer::normalize(const motion::RowMatrix& x) const {
  if (x.cols() != mean.size()) fail(ErrorCode::kShapeMismatch, "normalizer width mismatch");
  return ((x.rowwise() - mean).array().rowwise() / std.array()).matrix();
}

motion::RowMatrix Normalizer::denormalize(const Matrix<double>& x) const {
  if (x.cols() != mean.size()) fail(ErrorCode::kShapeMismatch, "normalizer width mismatch");
  return ((x.array().rowwise() * std.array()).rowwise() + mean.array()).matrix();
}

std::string Normalizer::to_json() const {
  json j = {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
            {"std", std::vector<double>(std.data(), std.data() + std.size())}};
  return j.dump();
}

Normalizer Normalizer::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const auto m = j.at("mean").get<std::vector<double>>();
    const auto s = j.at("std").get<std::vector<double>>();
    if (m.size() != s.size()) fail(ErrorCode::kFormat, "normalizer mean/std sizes differ");
    Normalizer n;
    n.mean = Eigen::Map<const Eigen::RowVectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
    n.std = Eigen::Map<const Eigen::RowVectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    return n;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("normalizer: ") + e.what());
  }
}

template <typename T>
Var PriorAdapters<T>::visual(Tape<T>& t, Var e) const {
  return kind == AdapterKind::kQFormer ? visual_qformer(t, e) : visual_pool(t, e);
}

template <typename T>
Var PriorAdapters<T>::text(Tape<T>& t, Var e) const {
  return kind == AdapterKind::kQFormer ? text_qformer(t, e) : text_pool(t, e);
}

template <typename T>
HoiModel<T>::HoiModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const int d = config_.denoiser.d_model;
  adapters_.kind = config_.adapter;
  if (config_.adapter == AdapterKind::kQFormer) {
    auto [v, t] = adapter::make_adapters<T>(store_, "adapter.", config_.d_enc, d, config_.k_visual, config_.k_text, seed,
                                            config_.adapter_heads, config_.adapter_feed_forward);
    adapters_.visual_qformer = v;
    adapters_.text_qformer = t;
  } else {
    Rng visual_rng(derive_seed(seed, "adapter.visual"));
    Rng text_rng(derive_seed(seed, "adapter.text"));
    adapters_.visual_pool = adapter::PoolAdapter<T>::make(store_, "adapter.visual.", config_.d_enc, d, visual_rng);
    adapters_.text_pool = adapter::PoolAdapter<T>::make(store_, "adapter.text.", config_.d_enc, d, text_rng);
  }
  Rng rng(derive_seed(seed, "denoiser"));
  denoiser_ = Denoiser<T>::make(store_, "denoiser.", config_.denoiser, rng);
}

template <typename T>
std::pair<Var, Var> HoiModel<T>::prior_tokens(Tape<T>& t, const priors::Priors& priors) const {
  if (priors.visual.rows() == 0 || priors.text.rows() == 0) {
    fail(ErrorCode::kMissingReferenceImages, "condition has no prior embeddings");
  }
  const Var ev = t.constant(priors.visual.template cast<T>());
  const Var et = t.constant(priors.text.template cast<T>());
  return {adapters_.visual(t, ev), adapters_.text(t, et)};
}

template <typename T>
Var HoiModel<T>::predict(Tape<T>& t, Var x_t, int step, const Condition& cond, int valid_len) const {
  auto [c_v, c_t] = prior_tokens(t, cond.priors);
  const Var geom = t.constant(cond.geometry.template cast<T>());
  return denoiser_(t, x_t, step, c_v, c_t, geom, valid_len);
}

template <typename T>
Matrix<double> HoiModel<T>::predict_x0(const Matrix<double>& x_t, int step, const Condition& cond) const {
  Tape<T> t(false);
  const Var x = t.constant(x_t.template cast<T>());
  return t.value(predict(t, x, step, cond)).template cast<double>();
}

namespace {

priors::Priors zeroed(const priors::Priors& p) {
  return {priors::FloatMatrix::Zero(p.visual.rows(), p.visual.cols()),
          priors::FloatMatrix::Zero(p.text.rows(), p.text.cols())};
}

}  // namespace

template <typename T>
Var item_loss(Tape<T>& t, const HoiModel<T>& model, const TrainItem& item, int step, const Matrix<double>& eps,
              const NoiseSchedule& sched, bool drop_condition) {
  const Matrix<T> x0 = item.x0.template cast<T>();
  const Var x_t = t.constant(q_sample<T>(x0, step, eps.template cast<T>(), sched));
  Var pred;
  if (drop_condition) {
    const Condition dropped{zeroed(item.condition.priors), item.condition.geometry};
    pred = model.predict(t, x_t, step, dropped);
  } else {
    pred = model.predict(t, x_t, step, item.condition);
  }
  return nn::mean(t, nn::square(t, nn::sub(t, pred, t.constant(x0))));
}

template <typename T>
Var training_loss(Tape<T>& t, const HoiModel<T>& model, std::span<const TrainItem* const> batch,
                  const NoiseSchedule& sched, std::uint64_t seed) {
  if (batch.empty()) fail(ErrorCode::kInvalidArgument, "empty training batch");
  const ModelConfig& cfg = model.config();
  Var total;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const TrainItem& item = *batch[b];
    if (item.condition.priors.visual.rows() == 0 || item.condition.priors.text.rows() == 0) {
      fail(ErrorCode::kMissingReferenceImages, "no reference-image priors for " + item.id);
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    const int step = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(sched.steps())));
    const Matrix<double> eps = standard_normal(rng, static_cast<int>(item.x0.rows()), static_cast<int>(item.x0.cols()));
    const bool drop = cfg.condition_dropout && rng.uniform() < cfg.dropout_prob;
    const Var l = item_loss(t, model, item, step, eps, sched, drop);
    total = total.valid() ? nn::add(t, total, l) : l;
  }
  return nn::affine(t, total, static_cast<T>(1.0 / static_cast<double>(batch.size())));
}

template <typename T>
Matrix<double> sample_normalized(const HoiModel<T>& model, const Condition& cond, int length, std::uint64_t seed,
                                 int steps) {
  const ModelConfig& cfg = model.config();
  const NoiseSchedule sched = make_schedule(cfg.schedule, cfg.timesteps);
  const auto predict = [&](const Matrix<double>& x_t, int step) { return model.predict_x0(x_t, step, cond); };
  return ddpm_sample(predict, sched, length, cfg.denoiser.motion_width, seed, steps > 0 ? steps : cfg.sample_steps);
}

template struct PriorAdapters<float>;
template struct PriorAdapters<double>;
template class HoiModel<float>;
template class HoiModel<double>;
template Var item_loss<float>(Tape<float>&, const HoiModel<float>&, const TrainItem&, int, const Matrix<double>&,
                              const NoiseSchedule&, bool);
template Var item_loss<double>(Tape<double>&, const HoiModel<double>&, const TrainItem&, int, const Matrix<double>&,
                               const NoiseSchedule&, bool);
template Var training_loss<float>(Tape<float>&, const HoiModel<float>&, std::span<const TrainItem* const>,
                                  const NoiseSchedule&, std::uint64_t);
template Var training_loss<double>(Tape<double>&, const HoiModel<double>&, std::span<const TrainItem* const>,
                                   const NoiseSchedule&, std::uint64_t);
template Matrix<double> sample_normalized<float>(const HoiModel<float>&, const Condition&, int, std::uint64_t, int);
template Matrix<double> sample_normalized<double>(const HoiModel<double>&, const Condition&, int, std::uint64_t, int);

}  // namespace vihoi::diffusion
