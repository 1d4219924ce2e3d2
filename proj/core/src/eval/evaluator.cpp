#include "vihoi/eval/evaluator.hpp"

#include <numeric>
#include <set>

#include <json.hpp>

#include "vihoi/common/error.hpp"
#include "vihoi/nn/adam.hpp"

namespace vihoi::eval {

using nlohmann::json;
using nn::Tape;
using nn::Var;

void EvaluatorConfig::validate() const {
  if (hidden < 1 || embed_dim < 1 || token_dim < 1 || epochs < 0 || batch < 2 || lr <= 0 || margin < 0) {
    fail(ErrorCode::kInvalidArgument, "invalid evaluator configuration");
  }
  if (text_encoder != "toy") fail(ErrorCode::kConfig, "unsupported evaluator text encoder: " + text_encoder);
}

std::string EvaluatorConfig::to_json() const {
  return json{{"hidden", hidden}, {"embed_dim", embed_dim}, {"token_dim", token_dim}, {"margin", margin},
              {"epochs", epochs}, {"batch", batch},         {"lr", lr},               {"text_encoder", text_encoder}}
      .dump(2);
}

EvaluatorConfig EvaluatorConfig::from_json(const std::string& text) {
  EvaluatorConfig c;
  try {
    const json j = json::parse(text);
    static const std::set<std::string> known = {"hidden", "embed_dim", "token_dim", "margin",
                                                "epochs", "batch",     "lr",        "text_encoder"};
    for (const auto& [key, value] : j.items())
      if (!known.count(key)) fail(ErrorCode::kConfig, "unknown evaluator key " + key);
    c.hidden = j.value("hidden", c.hidden);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.token_dim = j.value("token_dim", c.token_dim);
    c.margin = j.value("margin", c.margin);
    c.epochs = j.value("epochs", c.epochs);
    c.batch = j.value("batch", c.batch);
    c.lr = j.value("lr", c.lr);
    c.text_encoder = j.value("text_encoder", c.text_encoder);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("evaluator config: ") + e.what());
  }
  c.validate();
  return c;
}

template <typename T>
BiGru<T> BiGru<T>::make(nn::ParameterStore<T>& store, const std::string& name, int input, int hidden, Rng& rng) {
  BiGru g;
  g.hidden = hidden;
  g.fwd_in = nn::Linear<T>::make(store, name + ".fwd_in", input, 3 * hidden, rng);
  g.fwd_rec = &store.add(name + ".fwd_rec", nn::uniform_init(rng, hidden, 3 * hidden, hidden).template cast<T>());
  g.bwd_in = nn::Linear<T>::make(store, name + ".bwd_in", input, 3 * hidden, rng);
  g.bwd_rec = &store.add(name + ".bwd_rec", nn::uniform_init(rng, hidden, 3 * hidden, hidden).template cast<T>());
  return g;
}

namespace {

template <typename T>
Var run_direction(Tape<T>& t, Var xw, Var rec, int hidden, bool reverse) {
  const int n = static_cast<int>(t.value(xw).rows());
  const int H = hidden;
  Var h = t.constant(nn::Matrix<T>::Zero(1, H));
  for (int k = 0; k < n; ++k) {
    const Var xf = nn::slice_rows(t, xw, reverse ? n - 1 - k : k, 1);
    const Var hu = nn::matmul(t, h, rec);
    const Var z = nn::sigmoid(t, nn::add(t, nn::slice_cols(t, xf, 0, H), nn::slice_cols(t, hu, 0, H)));
    const Var r = nn::sigmoid(t, nn::add(t, nn::slice_cols(t, xf, H, H), nn::slice_cols(t, hu, H, H)));
    const Var c = nn::tanh(t, nn::add(t, nn::slice_cols(t, xf, 2 * H, H), nn::mul(t, r, nn::slice_cols(t, hu, 2 * H, H))));
    h = nn::add(t, c, nn::mul(t, z, nn::sub(t, h, c)));
  }
  return h;
}

}  // namespace

template <typename T>
Var BiGru<T>::operator()(Tape<T>& t, Var x) const {
  if (t.value(x).rows() < 1) fail(ErrorCode::kInvalidArgument, "empty sequence");
  const Var f = run_direction(t, fwd_in(t, x), t.parameter(*fwd_rec), hidden, false);
  const Var b = run_direction(t, bwd_in(t, x), t.parameter(*bwd_rec), hidden, true);
  const Var parts[] = {f, b};
  return nn::concat_cols<T>(t, parts);
}

template struct BiGru<float>;
template struct BiGru<double>;

EvaluatorModel::EvaluatorModel(const EvaluatorConfig& config, std::uint64_t seed, const priors::Tokenizer& tokenizer)
    : config_(config), seed_(seed), tokenizer_(&tokenizer) {
  config_.validate();
  Rng rng(derive_seed(seed, "evaluator"));
  motion_gru_ = BiGru<float>::make(store_, "motion.gru", motion::kEvalWidth, config_.hidden, rng);
  motion_out_ = nn::Linear<float>::make(store_, "motion.out", 2 * config_.hidden, config_.embed_dim, rng);
  token_embed_ = &store_.add("text.embed", nn::normal_init(rng, tokenizer.size(), config_.token_dim, 1.0).cast<float>());
  text_gru_ = BiGru<float>::make(store_, "text.gru", config_.token_dim, config_.hidden, rng);
  text_out_ = nn::Linear<float>::make(store_, "text.out", 2 * config_.hidden, config_.embed_dim, rng);
  mean_ = Eigen::RowVectorXf::Zero(motion::kEvalWidth);
  std_ = Eigen::RowVectorXf::Ones(motion::kEvalWidth);
}

void EvaluatorModel::fit_normalization(const std::vector<EvalPair>& pairs) {
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(motion::kEvalWidth);
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(motion::kEvalWidth);
  double frames = 0;
  for (const auto& p : pairs) {
    if (p.motion.cols() != motion::kEvalWidth) fail(ErrorCode::kShapeMismatch, "evaluator expects L×147 motions");
    sum += p.motion.colwise().sum();
    sq += p.motion.array().square().matrix().colwise().sum();
    frames += static_cast<double>(p.motion.rows());
  }
  if (frames == 0) fail(ErrorCode::kInvalidArgument, "no frames to normalize");
  const Eigen::RowVectorXd mean = sum / frames;
  const Eigen::RowVectorXd var = (sq / frames - mean.cwiseProduct(mean)).cwiseMax(0.0);
  mean_ = mean.cast<float>();
  std_ = var.cwiseSqrt().cwiseMax(0.01).cast<float>();
}

Var EvaluatorModel::motion_embedding(Tape<float>& t, const motion::RowMatrix& motion) const {
  if (motion.cols() != motion::kEvalWidth || motion.rows() < 1) {
    fail(ErrorCode::kShapeMismatch, "evaluator expects L×147 motions");
  }
  const nn::Matrix<float> x = ((motion.cast<float>().rowwise() - mean_).array().rowwise() / std_.array()).matrix();
  return nn::l2_normalize_rows(t, motion_out_(t, motion_gru_(t, t.constant(x))));
}

Var EvaluatorModel::text_embedding(Tape<float>& t, const std::string& text) const {
  std::vector<int> ids;
  for (const auto& tok : tokenizer_->tokenize(text)) ids.push_back(tok.id);
  if (ids.empty()) ids.push_back(priors::Tokenizer::kPad);
  const Var emb = nn::gather_rows(t, t.parameter(*token_embed_), std::span<const int>(ids));
  return nn::l2_normalize_rows(t, text_out_(t, text_gru_(t, emb)));
}

FeatureMatrix EvaluatorModel::embed_motions(const std::vector<motion::RowMatrix>& motions) const {
  FeatureMatrix out(static_cast<Eigen::Index>(motions.size()), config_.embed_dim);
  for (std::size_t i = 0; i < motions.size(); ++i) {
    Tape<float> t(false);
    out.row(static_cast<Eigen::Index>(i)) = t.value(motion_embedding(t, motions[i])).cast<double>();
  }
  return out;
}

FeatureMatrix EvaluatorModel::embed_texts(const std::vector<std::string>& texts) const {
  FeatureMatrix out(static_cast<Eigen::Index>(texts.size()), config_.embed_dim);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Tape<float> t(false);
    out.row(static_cast<Eigen::Index>(i)) = t.value(text_embedding(t, texts[i])).cast<double>();
  }
  return out;
}

void EvaluatorModel::save(io::Archive& archive, const std::string& prefix) const {
  const json norm = {{"mean", std::vector<float>(mean_.data(), mean_.data() + mean_.size())},
                     {"std", std::vector<float>(std_.data(), std_.data() + std_.size())},
                     {"seed", seed_}};
  archive.add_text(prefix + "config.json", config_.to_json());
  archive.add_text(prefix + "normalization.json", norm.dump());
  store_.save(archive, prefix + "params/");
}

std::unique_ptr<EvaluatorModel> EvaluatorModel::load(const io::Archive& archive, const std::string& prefix,
                                                     const priors::Tokenizer& tokenizer) {
  const EvaluatorConfig config = EvaluatorConfig::from_json(archive.get_text(prefix + "config.json"));
  json norm;
  try {
    norm = json::parse(archive.get_text(prefix + "normalization.json"));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("evaluator normalization: ") + e.what());
  }
  auto model = std::make_unique<EvaluatorModel>(config, norm.at("seed").get<std::uint64_t>(), tokenizer);
  const auto mean = norm.at("mean").get<std::vector<float>>();
  const auto sd = norm.at("std").get<std::vector<float>>();
  if (mean.size() != static_cast<std::size_t>(motion::kEvalWidth) || sd.size() != mean.size()) {
    fail(ErrorCode::kFormat, "evaluator normalization has the wrong width");
  }
  model->mean_ = Eigen::Map<const Eigen::RowVectorXf>(mean.data(), motion::kEvalWidth);
  model->std_ = Eigen::Map<const Eigen::RowVectorXf>(sd.data(), motion::kEvalWidth);
  model->store_.load(archive, prefix + "params/");
  return model;
}

Var contrastive_loss(Tape<float>& t, Var text, Var motion, float margin) {
  const int B = static_cast<int>(t.value(text).rows());
  const int E = static_cast<int>(t.value(text).cols());
  if (B < 2 || t.value(motion).rows() != B) fail(ErrorCode::kShapeMismatch, "contrastive batch needs >= 2 pairs");
  const Var s = nn::matmul_nt(t, text, motion);
  const Var own = nn::matmul(t, nn::mul(t, text, motion), t.constant(nn::Matrix<float>::Ones(E, 1)));
  const Var own_rows = nn::matmul(t, own, t.constant(nn::Matrix<float>::Ones(1, B)));
  const Var off = t.constant(nn::Matrix<float>::Ones(B, B) - nn::Matrix<float>::Identity(B, B));
  const Var text_to_motion = nn::mul(t, nn::relu(t, nn::affine(t, nn::sub(t, s, own_rows), 1.0f, margin)), off);
  const Var motion_to_text =
      nn::mul(t, nn::relu(t, nn::affine(t, nn::sub(t, nn::transpose(t, s), own_rows), 1.0f, margin)), off);
  return nn::affine(t, nn::add(t, nn::sum(t, text_to_motion), nn::sum(t, motion_to_text)),
                    1.0f / (2.0f * static_cast<float>(B) * static_cast<float>(B - 1)));
}

std::unique_ptr<EvaluatorModel> train_evaluator(const std::vector<EvalPair>& pairs, const EvaluatorConfig& config,
                                                std::uint64_t seed, EvaluatorReport* report) {
  if (static_cast<int>(pairs.size()) < kMinEvaluatorPairs) {
    fail(ErrorCode::kCorpusTooSmall, "evaluator training needs at least " + std::to_string(kMinEvaluatorPairs) +
                                         " pairs, got " + std::to_string(pairs.size()));
  }
  auto model = std::make_unique<EvaluatorModel>(config, seed);
  model->fit_normalization(pairs);
  nn::AdamConfig adam;
  adam.lr = config.lr;
  nn::Adam<float> optimizer(model->store().all(), adam);

  std::vector<int> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "evaluator.shuffle"));
  EvaluatorReport rep;
  const std::size_t B = static_cast<std::size_t>(std::min<int>(config.batch, static_cast<int>(pairs.size())));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    double epoch_loss = 0;
    int batches = 0;
    for (std::size_t start = 0; start + B <= order.size(); start += B) {
      Tape<float> t;
      std::vector<Var> texts, motions;
      for (std::size_t k = start; k < start + B; ++k) {
        const EvalPair& p = pairs[static_cast<std::size_t>(order[k])];
        texts.push_back(model->text_embedding(t, p.text));
        motions.push_back(model->motion_embedding(t, p.motion));
      }
      const Var loss = contrastive_loss(t, nn::concat_rows<float>(t, texts), nn::concat_rows<float>(t, motions),
                                        static_cast<float>(config.margin));
      optimizer.zero_grad();
      epoch_loss += t.scalar(loss);
      t.backward(loss);
      optimizer.step();
      ++batches;
      ++rep.steps;
    }
    epoch_loss /= std::max(1, batches);
    if (epoch == 0) rep.initial_loss = epoch_loss;
    rep.final_loss = epoch_loss;
  }
  if (report) *report = rep;
  return model;
}

}  // namespace vihoi::eval
