#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "vihoi/dataset/corpus.hpp"
#include "vihoi/diffusion/model.hpp"
#include "vihoi/eval/evaluate.hpp"
#include "vihoi/priors/encoder.hpp"
#include "vihoi_cli/run_config.hpp"

namespace vihoi::cli {

inline constexpr const char* kRunFormat = "vihoi-run";
inline constexpr const char* kDatasetManifest = "manifest.json";
inline constexpr const char* kEncoderEndpointEnv = "VIHOI_ENCODER_ENDPOINT";

struct CommandOptions {
  bool force = false;
  // train only: stop after this global step, leaving a resumable checkpoint.
  long stop_after = -1;
  std::ostream* log = nullptr;
};

struct CommandResult {
  std::filesystem::path run_json;
  // Files the command promises to leave behind.
  std::vector<std::filesystem::path> outputs;
};

// Throws Io if a declared output is missing.
void verify_outputs(const CommandResult& result);

CommandResult cmd_gen_data(const RunConfig& config, const CommandOptions& options);
CommandResult cmd_train_evaluator(const RunConfig& config, const CommandOptions& options);
CommandResult cmd_train(const RunConfig& config, const CommandOptions& options);
CommandResult cmd_sample(const RunConfig& config, const CommandOptions& options);
CommandResult cmd_evaluate(const RunConfig& config, const CommandOptions& options);
// Keyframe PNGs per sequence, or with `grid` one contact strip per sequence.
CommandResult cmd_render(const RunConfig& config, const CommandOptions& options, bool grid);
CommandResult cmd_ablate(const RunConfig& config, const CommandOptions& options);

void cmd_make_primitive(const std::string& kind, const std::vector<double>& dims, int segments,
                        const std::filesystem::path& out);
// Blocks serving the configured toy encoder on host:port.
void cmd_serve_encoder(const RunConfig& config, const std::string& host, int port, const CommandOptions& options);

// Shared plumbing, exposed for tests.

// Dataset directory after checking that gen-data completed.
dataset::CorpusIndex open_dataset(const RunConfig& config);
dataset::Split dataset_split(const RunConfig& config, const dataset::CorpusIndex& index);

priors::ToyEncoderConfig toy_encoder_config(const RunConfig& config);
// Warmed-up and frozen toy encoder, cached in paths.encoder (or `cache_dir`)
// keyed by its config and seed; or the remote encoder at
// VIHOI_ENCODER_ENDPOINT ("host:port") when encoder.backend = external.
std::unique_ptr<priors::MultimodalEncoder> obtain_encoder(const RunConfig& config, const CommandOptions& options);
std::unique_ptr<priors::ToyEncoder> obtain_toy_encoder(const priors::ToyEncoderConfig& encoder_config,
                                                       const RunConfig& config,
                                                       const std::filesystem::path& cache_dir,
                                                       const CommandOptions& options);

priors::ExtractionConfig extraction_config(const RunConfig& config);
diffusion::ModelConfig model_config(const RunConfig& config, int d_enc);
eval::EvaluatorConfig evaluator_config(const RunConfig& config);
eval::EvaluateConfig evaluate_config(const RunConfig& config);

// Test items conditioned on reference images from the configured
// text-to-image client and the A-pose seed image.
std::vector<eval::EvalItem> inference_items(const RunConfig& config, const dataset::CorpusIndex& index,
                                            const std::vector<std::string>& ids,
                                            const priors::MultimodalEncoder& encoder,
                                            const priors::ExtractionConfig& extraction);

struct AblationVariant {
  std::string label;  // row label of the comparison table
  std::string group;  // "layers", "adapter" or "k"
  priors::ExtractionConfig extraction;
  diffusion::AdapterKind adapter = diffusion::AdapterKind::kQFormer;
  bool joint_attention = true;
  int k = 1;
};

// Layer grid, T12-only, ViHOI-Pool, ViHOI-CLIP and the k grid.
std::vector<AblationVariant> ablation_variants(const RunConfig& config);

}  // namespace vihoi::cli
