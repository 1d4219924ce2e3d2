#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vihoi/common/image.hpp"
#include "vihoi/common/io.hpp"
#include "vihoi/nn/layers.hpp"
#include "vihoi/priors/prompt.hpp"

namespace vihoi::priors {

using FloatMatrix = nn::Matrix<float>;

// Residual-stream states after selected encoder blocks over the unified
// sequence [visual patch tokens | prompt tokens]. Layer l is the output of
// block l (1-based).
struct LayeredEmbeddings {
  std::map<int, FloatMatrix> states;
  Span visual_span;
  Span text_span;
  int d_enc = 0;
  int blocks_evaluated = 0;

  int tokens() const;
  // Throws LayerMissing.
  const FloatMatrix& layer(int l) const;
};

class MultimodalEncoder {
 public:
  virtual ~MultimodalEncoder() = default;

  virtual int depth() const = 0;
  virtual int width() const = 0;
  virtual int image_size() const = 0;
  virtual std::string checksum() const = 0;
  // Throws BadImageShape unless all three images are image_size² and
  // LayerMissing for a requested layer outside [1, depth].
  virtual LayeredEmbeddings encode(const ImageTriple& images, const PromptBundle& prompt,
                                   std::span<const int> layers) const = 0;
};

// Bilinear resize of all three images to the encoder resolution.
ImageTriple fit_images(const ImageTriple& images, int size);

struct ToyEncoderConfig {
  int depth = 16;
  int width = 256;
  int heads = 4;
  int patch = 16;
  int image_size = 224;
  int ff_multiplier = 2;
  // false encodes images and prompt as two separate sequences through the
  // same blocks, so neither modality attends to the other.
  bool joint_attention = true;

  int patches_per_image() const { return (image_size / patch) * (image_size / patch); }
  // Throws DepthTooSmall for depth < 12 and InvalidArgument otherwise.
  void validate() const;
};

struct CaptionedImages {
  ImageTriple images;
  std::string caption;
};

struct WarmupConfig {
  int epochs = 200;
  int batch = 50;
  double lr = 3e-3;
  double temperature = 0.1;
  std::uint64_t seed = 0;
};

struct WarmupReport {
  double initial_loss = 0;
  double final_loss = 0;
  int steps = 0;
};

// Desk-scale vision-language transformer: 16×16 patch embedding and a token
// embedding table feed a stack of pre-norm blocks with sinusoidal positions
// over the unified sequence.
class ToyEncoder final : public MultimodalEncoder {
 public:
  ToyEncoder(ToyEncoderConfig config, std::uint64_t seed, const Tokenizer& tokenizer = Tokenizer::toy());

  const ToyEncoderConfig& config() const { return config_; }
  int depth() const override { return config_.depth; }
  int width() const override { return config_.width; }
  int image_size() const override { return config_.image_size; }
  std::string checksum() const override { return store_.checksum(); }
  LayeredEmbeddings encode(const ImageTriple& images, const PromptBundle& prompt,
                           std::span<const int> layers) const override;

  // Contrastive alignment of the input embeddings on image/caption pairs:
  // mean patch embedding of the three images against mean caption token
  // embedding, with every pair sharing a caption counted as positive. The
  // reported losses are full-set losses before and after training. Throws
  // FrozenViolation once frozen and InvalidArgument for fewer than 2 pairs.
  WarmupReport warm_up(const std::vector<CaptionedImages>& pairs, const WarmupConfig& cfg);
  double alignment_loss(const std::vector<CaptionedImages>& pairs, double temperature) const;

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  void save(io::Archive& archive, const std::string& prefix) const;
  // Loads parameters, config and frozen flag written by save.
  static std::unique_ptr<ToyEncoder> load(const io::Archive& archive, const std::string& prefix,
                                          const Tokenizer& tokenizer = Tokenizer::toy());

 private:
  FloatMatrix patchify(const Image& image) const;

  ToyEncoderConfig config_;
  std::uint64_t seed_;
  const Tokenizer* tokenizer_;
  nn::ParameterStore<float> store_;
  nn::Linear<float> patch_proj_;
  nn::Parameter<float>* token_embed_ = nullptr;
  nn::Parameter<float>* image_embed_ = nullptr;
  std::vector<nn::TransformerBlock<float>> blocks_;
  bool frozen_ = false;
};

struct ExtractionConfig {
  int visual_layer = 3;
  int text_layer = 12;
  // Replace E_v with a single all-zero token.
  bool text_only = false;

  // Throws LayerMissing unless both layers lie in [1, depth].
  void validate(int depth) const;
  std::vector<int> layers() const;
};

struct Priors {
  FloatMatrix visual;  // E_v: L_v × d_enc
  FloatMatrix text;    // E_t: L_t × d_enc
};

// Throws LayerMissing.
Priors extract_priors(const LayeredEmbeddings& emb, const ExtractionConfig& cfg);

// Prompt construction, encoding at the configured layers and extraction.
Priors extract_priors(const MultimodalEncoder& encoder, const ImageTriple& images, const std::string& text,
                      const ExtractionConfig& cfg);

}  // namespace vihoi::priors
