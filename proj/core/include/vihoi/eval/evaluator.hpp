#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vihoi/common/io.hpp"
#include "vihoi/eval/metrics.hpp"
#include "vihoi/nn/layers.hpp"
#include "vihoi/priors/tokenizer.hpp"

namespace vihoi::eval {

inline constexpr int kMinEvaluatorPairs = 32;

struct EvaluatorConfig {
  int hidden = 64;        // per GRU direction
  int embed_dim = 512;
  int token_dim = 64;
  double margin = 0.2;
  int epochs = 40;
  int batch = 32;
  double lr = 1e-3;
  // Only the jointly trained toy text encoder is available.
  std::string text_encoder = "toy";

  // Throws InvalidArgument or Config.
  void validate() const;
  std::string to_json() const;
  // Unknown keys throw Config.
  static EvaluatorConfig from_json(const std::string& text);
};

// Matched motion (evaluator representation, L × 147) and annotation.
struct EvalPair {
  motion::RowMatrix motion;
  std::string text;
};

template <typename T>
struct BiGru {
  nn::Linear<T> fwd_in;   // input → 3H (update, reset, candidate)
  nn::Parameter<T>* fwd_rec = nullptr;  // H × 3H
  nn::Linear<T> bwd_in;
  nn::Parameter<T>* bwd_rec = nullptr;
  int hidden = 0;

  static BiGru make(nn::ParameterStore<T>& store, const std::string& name, int input, int hidden, Rng& rng);
  // 1 × 2H: final forward state next to final backward state.
  nn::Var operator()(nn::Tape<T>& t, nn::Var x) const;
};

// Contrastive text/motion embedding model: a BiGRU over normalized motion
// frames and a BiGRU over token embeddings, each followed by a linear map
// to embed_dim and unit normalization.
class EvaluatorModel {
 public:
  EvaluatorModel(const EvaluatorConfig& config, std::uint64_t seed,
                 const priors::Tokenizer& tokenizer = priors::Tokenizer::toy());
  EvaluatorModel(const EvaluatorModel&) = delete;
  EvaluatorModel& operator=(const EvaluatorModel&) = delete;

  const EvaluatorConfig& config() const { return config_; }
  nn::ParameterStore<float>& store() { return store_; }
  const nn::ParameterStore<float>& store() const { return store_; }

  // Per-dimension motion standardization (std floored at 0.01).
  void fit_normalization(const std::vector<EvalPair>& pairs);

  FeatureMatrix embed_motions(const std::vector<motion::RowMatrix>& motions) const;
  FeatureMatrix embed_texts(const std::vector<std::string>& texts) const;

  nn::Var motion_embedding(nn::Tape<float>& t, const motion::RowMatrix& motion) const;
  nn::Var text_embedding(nn::Tape<float>& t, const std::string& text) const;

  void save(io::Archive& archive, const std::string& prefix) const;
  static std::unique_ptr<EvaluatorModel> load(const io::Archive& archive, const std::string& prefix,
                                              const priors::Tokenizer& tokenizer = priors::Tokenizer::toy());

 private:
  EvaluatorConfig config_;
  std::uint64_t seed_;
  const priors::Tokenizer* tokenizer_;
  nn::ParameterStore<float> store_;
  BiGru<float> motion_gru_;
  nn::Linear<float> motion_out_;
  nn::Parameter<float>* token_embed_ = nullptr;
  BiGru<float> text_gru_;
  nn::Linear<float> text_out_;
  Eigen::RowVectorXf mean_;
  Eigen::RowVectorXf std_;
};

// Bidirectional hinge loss over in-batch negatives on cosine similarity:
// mean of max(0, margin − s(i,i) + s(i,j)) over j ≠ i, text→motion and
// motion→text.
nn::Var contrastive_loss(nn::Tape<float>& t, nn::Var text, nn::Var motion, float margin);

struct EvaluatorReport {
  double initial_loss = 0;
  double final_loss = 0;
  int steps = 0;
};

// Throws CorpusTooSmall below 32 pairs.
std::unique_ptr<EvaluatorModel> train_evaluator(const std::vector<EvalPair>& pairs, const EvaluatorConfig& config,
                                                std::uint64_t seed, EvaluatorReport* report = nullptr);

}  // namespace vihoi::eval
