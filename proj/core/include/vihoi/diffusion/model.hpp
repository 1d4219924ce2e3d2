#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vihoi/adapter/qformer.hpp"
#include "vihoi/diffusion/denoiser.hpp"
#include "vihoi/diffusion/schedule.hpp"
#include "vihoi/priors/encoder.hpp"

namespace vihoi::diffusion {

enum class AdapterKind { kQFormer, kPool };

std::string to_string(AdapterKind kind);
// Throws Config.
AdapterKind parse_adapter_kind(const std::string& name);

struct ModelConfig {
  DenoiserConfig denoiser;
  int d_enc = 256;
  int k_visual = 1;
  int k_text = 1;
  int adapter_heads = 4;
  bool adapter_feed_forward = false;
  AdapterKind adapter = AdapterKind::kQFormer;
  ScheduleKind schedule = ScheduleKind::kCosine;
  int timesteps = 1000;
  int sample_steps = 100;
  // Replaces both prior inputs with zeros with probability dropout_prob
  // during training.
  bool condition_dropout = false;
  double dropout_prob = 0.1;

  // Throws InvalidArgument.
  void validate() const;
  std::string to_json() const;
  // Missing keys keep their defaults; unknown keys throw Config.
  static ModelConfig from_json(const std::string& text);
};

// Encoder outputs and object geometry for one sequence.
struct Condition {
  priors::Priors priors;
  Eigen::RowVectorXd geometry;
};

// One training sequence: normalized generator matrix plus its condition.
struct TrainItem {
  std::string id;
  Matrix<double> x0;
  Condition condition;
};

// Per-dimension standardization of the generator representation.
struct Normalizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd std;

  static constexpr double kStdFloor = 0.01;

  // Pools every frame of every sequence. Throws InvalidArgument when empty.
  static Normalizer fit(std::span<const motion::RowMatrix> sequences);
  Matrix<double> normalize(const motion::RowMatrix& x) const;
  motion::RowMatrix denormalize(const Matrix<double>& x) const;

  std::string to_json() const;
  static Normalizer from_json(const std::string& text);
};

template <typename T>
struct PriorAdapters {
  AdapterKind kind = AdapterKind::kQFormer;
  adapter::QFormer<T> visual_qformer;
  adapter::QFormer<T> text_qformer;
  adapter::PoolAdapter<T> visual_pool;
  adapter::PoolAdapter<T> text_pool;

  Var visual(Tape<T>& t, Var e) const;
  Var text(Tape<T>& t, Var e) const;
};

// Adapters and denoiser over one parameter store; names are prefixed
// "adapter.visual.", "adapter.text." and "denoiser.".
template <typename T>
class HoiModel {
 public:
  HoiModel(const ModelConfig& config, std::uint64_t seed);
  HoiModel(const HoiModel&) = delete;
  HoiModel& operator=(const HoiModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ParameterStore<T>& store() { return store_; }
  const ParameterStore<T>& store() const { return store_; }
  const PriorAdapters<T>& adapters() const { return adapters_; }
  const Denoiser<T>& denoiser() const { return denoiser_; }

  // Prior tokens (c_v, c_t) from raw encoder outputs.
  std::pair<Var, Var> prior_tokens(Tape<T>& t, const priors::Priors& priors) const;

  // x̂0 for a noisy L × D input. Throws ShapeMismatch.
  Var predict(Tape<T>& t, Var x_t, int step, const Condition& cond, int valid_len = -1) const;
  Matrix<double> predict_x0(const Matrix<double>& x_t, int step, const Condition& cond) const;

 private:
  ModelConfig config_;
  ParameterStore<T> store_;
  PriorAdapters<T> adapters_;
  Denoiser<T> denoiser_;
};

// Squared error between x̂0 and x0 for one item at a given step and noise,
// averaged over elements.
template <typename T>
Var item_loss(Tape<T>& t, const HoiModel<T>& model, const TrainItem& item, int step, const Matrix<double>& eps,
              const NoiseSchedule& sched, bool drop_condition = false);

// Mean over the batch of the item losses, with each item's timestep
// (uniform over [0, T)) and noise drawn from derive_seed(seed, position).
// Throws MissingReferenceImages for an item without priors.
template <typename T>
Var training_loss(Tape<T>& t, const HoiModel<T>& model, std::span<const TrainItem* const> batch,
                  const NoiseSchedule& sched, std::uint64_t seed);

// Normalized L × D sample; the schedule is rebuilt from the model config.
template <typename T>
Matrix<double> sample_normalized(const HoiModel<T>& model, const Condition& cond, int length, std::uint64_t seed,
                                 int steps = -1);

}  // namespace vihoi::diffusion
