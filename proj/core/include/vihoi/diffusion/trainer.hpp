#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vihoi/common/io.hpp"
#include "vihoi/dataset/corpus.hpp"
#include "vihoi/diffusion/model.hpp"
#include "vihoi/nn/adam.hpp"

namespace vihoi::diffusion {

// 1 × 1024 BPS distances or 1 × 72 stacked keypoints of a catalog object.
Eigen::RowVectorXd geometry_features(const std::string& object_id, GeometryMode mode);

// Builds the condition for one sequence from its reference images.
Condition make_condition(const priors::MultimodalEncoder& encoder, const ImageTriple& images, const std::string& text,
                         const std::string& object_id, const priors::ExtractionConfig& extraction,
                         GeometryMode mode);

// Unnormalized sequence plus condition, as loaded from a corpus.
struct CorpusItem {
  std::string id;
  motion::RowMatrix x;
  Condition condition;
};

// Loads each listed sequence and its keyframe PNGs and runs the extractor.
// Throws MissingReferenceImages when a sequence has no keyframes on disk.
std::vector<CorpusItem> load_corpus_items(const std::filesystem::path& corpus_dir, const dataset::CorpusIndex& index,
                                          const std::vector<std::string>& ids,
                                          const priors::MultimodalEncoder& encoder,
                                          const priors::ExtractionConfig& extraction, GeometryMode mode);

Normalizer fit_normalizer(std::span<const CorpusItem> items);
std::vector<TrainItem> normalize_items(std::span<const CorpusItem> items, const Normalizer& normalizer);

struct TrainConfig {
  int steps = 2000;
  int batch = 16;
  nn::AdamConfig adam;  // lr 1e-4, global-norm clip 1.0
  // Checkpoint interval in steps for train(); 0 writes only the final one.
  int checkpoint_every = 0;
  // Cosine decay of the learning rate from adam.lr to 0 over `steps`.
  bool cosine_decay = false;

  // Learning rate used for the update at `step`.
  double lr_at(long step) const;
  // Throws InvalidArgument.
  void validate() const;
};

inline constexpr const char* kCheckpointFormat = "vihoi-checkpoint";
inline constexpr int kCheckpointVersion = 1;

// Single-writer training state: model, optimizer, normalizer, step counter
// and seeds. Batches and noise are drawn from seeds derived from (seed,
// step), so a resumed run continues exactly where the saved one stopped.
class Trainer {
 public:
  Trainer(const ModelConfig& model_config, const TrainConfig& train_config, Normalizer normalizer, std::uint64_t seed,
          std::string extractor_checksum);

  // Throws Format for a foreign or newer checkpoint.
  static std::unique_ptr<Trainer> from_checkpoint(const io::Archive& archive);

  HoiModel<float>& model() { return *model_; }
  const HoiModel<float>& model() const { return *model_; }
  const Normalizer& normalizer() const { return normalizer_; }
  const TrainConfig& train_config() const { return train_config_; }
  std::uint64_t seed() const { return seed_; }
  long step() const { return step_; }
  const std::string& extractor_checksum() const { return extractor_checksum_; }
  const std::vector<double>& loss_log() const { return losses_; }
  const NoiseSchedule& schedule() const { return schedule_; }

  // Indices of the batch used at `step`.
  std::vector<int> batch_indices(long step, int n_items) const;
  // One optimizer step on the batch for the current step; returns its loss.
  double train_step(std::span<const TrainItem> items);
  // Loss over all items with timesteps and noise from `probe_seed`, without
  // gradients.
  double probe_loss(std::span<const TrainItem> items, std::uint64_t probe_seed) const;

  // Throws FrozenViolation if the extractor differs from the one training
  // started with.
  void check_extractor(const priors::MultimodalEncoder& extractor) const;

  io::Archive checkpoint() const;
  void save(const std::filesystem::path& path) const;

 private:
  ModelConfig model_config_;
  TrainConfig train_config_;
  Normalizer normalizer_;
  std::uint64_t seed_;
  std::string extractor_checksum_;
  NoiseSchedule schedule_;
  std::unique_ptr<HoiModel<float>> model_;
  std::unique_ptr<nn::Adam<float>> optimizer_;
  long step_ = 0;
  std::vector<double> losses_;
};

using StepCallback = std::function<void(long step, double loss)>;

// Trains until train_config().steps (or step `stop_at` when it is
// non-negative), verifying the extractor checksum before and after and at
// every checkpoint. Checkpoints go to `checkpoint_path` when it is non-empty;
// the last one is written when the loop ends.
void train(Trainer& trainer, std::span<const TrainItem> items, const priors::MultimodalEncoder& extractor,
           const std::filesystem::path& checkpoint_path = {}, const StepCallback& on_step = {}, long stop_at = -1);

// Model and normalizer from a checkpoint, for sampling.
struct LoadedModel {
  std::unique_ptr<HoiModel<float>> model;
  Normalizer normalizer;
  std::string extractor_checksum;
  long step = 0;
};
LoadedModel load_model(const io::Archive& archive);

// Denormalized sample as a motion sequence.
motion::MotionSequence generate(const HoiModel<float>& model, const Normalizer& normalizer, const Condition& cond,
                                int length, std::uint64_t seed, double fps, const std::string& text, int steps = -1);

}  // namespace vihoi::diffusion
