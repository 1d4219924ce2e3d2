#include "vihoi/priors/encoder.hpp"

#include <algorithm>
#include <functional>
#include <json.hpp>
#include <numeric>
#include <set>

#include "vihoi/common/error.hpp"
#include "vihoi/nn/adam.hpp"

namespace vihoi::priors {

using nn::Tape;
using nn::Var;

int LayeredEmbeddings::tokens() const { return states.empty() ? 0 : static_cast<int>(states.begin()->second.rows()); }

const FloatMatrix& LayeredEmbeddings::layer(int l) const {
  const auto it = states.find(l);
  if (it == states.end()) fail(ErrorCode::kLayerMissing, "layer " + std::to_string(l) + " was not captured");
  return it->second;
}

ImageTriple fit_images(const ImageTriple& images, int size) {
  ImageTriple out;
  for (std::size_t i = 0; i < 3; ++i) {
    const Image& img = images[i];
    out[i] = img.height == size && img.width == size ? img : resize_bilinear(img, size, size);
  }
  return out;
}

void ToyEncoderConfig::validate() const {
  if (depth < 12) fail(ErrorCode::kDepthTooSmall, "encoder depth must be at least 12, got " + std::to_string(depth));
  if (width <= 0 || heads <= 0 || width % heads != 0) fail(ErrorCode::kInvalidArgument, "encoder width must be divisible by heads");
  if (patch <= 0 || image_size <= 0 || image_size % patch != 0) {
    fail(ErrorCode::kInvalidArgument, "image size must be a positive multiple of the patch size");
  }
  if (ff_multiplier <= 0) fail(ErrorCode::kInvalidArgument, "feed-forward multiplier must be positive");
}

ToyEncoder::ToyEncoder(ToyEncoderConfig config, std::uint64_t seed, const Tokenizer& tokenizer)
    : config_(config), seed_(seed), tokenizer_(&tokenizer) {
  config_.validate();
  Rng rng(derive_seed(seed, "toy-encoder"));
  const int d = config_.width;
  patch_proj_ = nn::Linear<float>::make(store_, "patch_proj", 3 * config_.patch * config_.patch, d, rng);
  token_embed_ = &store_.add("token_embed", nn::normal_init(rng, tokenizer.size(), d, 1.0).cast<float>());
  image_embed_ = &store_.add("image_embed", nn::normal_init(rng, 3, d, 0.02).cast<float>());
  for (int l = 0; l < config_.depth; ++l) {
    blocks_.push_back(nn::TransformerBlock<float>::make(store_, "block" + std::to_string(l + 1), d, config_.heads,
                                                        config_.ff_multiplier * d, rng));
  }
}

FloatMatrix ToyEncoder::patchify(const Image& image) const {
  const int p = config_.patch, grid = config_.image_size / p;
  FloatMatrix out(grid * grid, 3 * p * p);
  for (int gy = 0; gy < grid; ++gy)
    for (int gx = 0; gx < grid; ++gx)
      for (int py = 0; py < p; ++py)
        for (int px = 0; px < p; ++px)
          for (int c = 0; c < 3; ++c) {
            out(gy * grid + gx, (py * p + px) * 3 + c) = image.at(gy * p + py, gx * p + px, c) - 0.5f;
          }
  return out;
}

namespace {

FloatMatrix positions(int first, int count, int width) {
  FloatMatrix out(count, width);
  for (int i = 0; i < count; ++i) out.row(i) = nn::sinusoidal_embedding<float>(first + i, width);
  return out;
}

}  // namespace

LayeredEmbeddings ToyEncoder::encode(const ImageTriple& images, const PromptBundle& prompt,
                                     std::span<const int> layers) const {
  for (const Image& img : images) {
    if (img.height != config_.image_size || img.width != config_.image_size) {
      fail(ErrorCode::kBadImageShape, "expected " + std::to_string(config_.image_size) + "x" +
                                          std::to_string(config_.image_size) + " images, got " +
                                          std::to_string(img.height) + "x" + std::to_string(img.width));
    }
  }
  if (prompt.tokens.empty()) fail(ErrorCode::kInvalidArgument, "prompt has no tokens");
  std::set<int> wanted;
  for (const int l : layers) {
    if (l < 1 || l > config_.depth) {
      fail(ErrorCode::kLayerMissing, "layer " + std::to_string(l) + " outside encoder depth " + std::to_string(config_.depth));
    }
    wanted.insert(l);
  }

  const int d = config_.width, per_image = config_.patches_per_image();
  const int n_vis = 3 * per_image, n_txt = static_cast<int>(prompt.tokens.size());
  FloatMatrix vis(n_vis, d), txt(n_txt, d);
  {
    Tape<float> t(false);
    FloatMatrix patches(n_vis, 3 * config_.patch * config_.patch);
    for (int i = 0; i < 3; ++i) patches.middleRows(i * per_image, per_image) = patchify(images[static_cast<std::size_t>(i)]);
    std::vector<int> image_index(static_cast<std::size_t>(n_vis));
    for (int i = 0; i < n_vis; ++i) image_index[static_cast<std::size_t>(i)] = i / per_image;
    Var v = nn::add(t, patch_proj_(t, t.constant(std::move(patches))),
                    nn::gather_rows(t, t.parameter(*image_embed_), image_index));
    vis = t.value(v) + positions(0, n_vis, d);
    const std::vector<int> ids = prompt.ids();
    txt = t.value(nn::gather_rows(t, t.parameter(*token_embed_), ids)) +
          positions(config_.joint_attention ? n_vis : 0, n_txt, d);
  }

  LayeredEmbeddings out;
  out.d_enc = d;
  out.visual_span = {0, n_vis};
  out.text_span = {n_vis + prompt.text_span.start, n_vis + prompt.text_span.end};
  const int last = wanted.empty() ? 0 : *wanted.rbegin();
  FloatMatrix x(n_vis + n_txt, d);
  x << vis, txt;
  for (int l = 1; l <= last; ++l) {
    const auto& block = blocks_[static_cast<std::size_t>(l - 1)];
    Tape<float> t(false);
    if (config_.joint_attention) {
      x = t.value(block(t, t.constant(std::move(x))));
    } else {
      const FloatMatrix v = t.value(block(t, t.constant(x.topRows(n_vis))));
      const FloatMatrix w = t.value(block(t, t.constant(x.bottomRows(n_txt))));
      x.topRows(n_vis) = v;
      x.bottomRows(n_txt) = w;
    }
    if (wanted.count(l)) out.states.emplace(l, x);
  }
  out.blocks_evaluated = last;
  return out;
}

namespace {

struct WarmupData {
  FloatMatrix mean_patches;           // pairs × patch dim
  std::vector<std::vector<int>> ids;  // per unique caption
  std::vector<int> caption_of;        // pair → unique caption
};

// Image→caption cross-entropy over the unique captions of the set, on
// l2-normalized mean input embeddings.
Var alignment_objective(Tape<float>& t, const nn::Linear<float>& proj, nn::Parameter<float>& token_embed,
                               nn::Parameter<float>& image_embed, const WarmupData& data, std::span<const int> rows,
                               double temperature) {
  const int b = static_cast<int>(rows.size());
  FloatMatrix m(b, data.mean_patches.cols());
  FloatMatrix target = FloatMatrix::Zero(b, static_cast<int>(data.ids.size()));
  for (int i = 0; i < b; ++i) {
    m.row(i) = data.mean_patches.row(rows[static_cast<std::size_t>(i)]);
    target(i, data.caption_of[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])]) = 1.0f;
  }
  Var img = nn::add_row(t, proj(t, t.constant(std::move(m))), nn::mean_rows(t, t.parameter(image_embed)));
  Var table = t.parameter(token_embed);
  std::vector<Var> captions;
  for (const auto& ids : data.ids) captions.push_back(nn::mean_rows(t, nn::gather_rows(t, table, ids)));
  Var txt = nn::concat_rows<float>(t, captions);
  Var logits = nn::affine(t, nn::matmul_nt(t, nn::l2_normalize_rows(t, img), nn::l2_normalize_rows(t, txt)),
                          static_cast<float>(1.0 / temperature));
  return nn::affine(t, nn::sum(t, nn::mul(t, t.constant(std::move(target)), nn::log_softmax_rows(t, logits))),
                    -1.0f / static_cast<float>(b));
}

WarmupData prepare_warmup(const std::vector<CaptionedImages>& pairs, const ToyEncoderConfig& cfg,
                                 const Tokenizer& tokenizer, const std::function<FloatMatrix(const Image&)>& patchify) {
  if (pairs.size() < 2) fail(ErrorCode::kInvalidArgument, "warm-up needs at least 2 image/caption pairs");
  WarmupData data;
  data.mean_patches.resize(static_cast<int>(pairs.size()), 3 * cfg.patch * cfg.patch);
  std::map<std::string, int> unique;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    Eigen::RowVectorXf acc = Eigen::RowVectorXf::Zero(data.mean_patches.cols());
    for (const Image& img : fit_images(pairs[i].images, cfg.image_size)) acc += patchify(img).colwise().mean();
    data.mean_patches.row(static_cast<int>(i)) = acc / 3.0f;
    const auto [it, inserted] = unique.emplace(pairs[i].caption, static_cast<int>(data.ids.size()));
    if (inserted) {
      std::vector<int> ids;
      for (const Token& tok : tokenizer.tokenize(pairs[i].caption)) ids.push_back(tok.id);
      if (ids.empty()) fail(ErrorCode::kInvalidArgument, "warm-up caption has no tokens");
      data.ids.push_back(std::move(ids));
    }
    data.caption_of.push_back(it->second);
  }
  return data;
}

}  // namespace

double ToyEncoder::alignment_loss(const std::vector<CaptionedImages>& pairs, double temperature) const {
  const WarmupData data = prepare_warmup(pairs, config_, *tokenizer_, [this](const Image& i) { return patchify(i); });
  std::vector<int> rows(pairs.size());
  std::iota(rows.begin(), rows.end(), 0);
  Tape<float> t(false);
  return t.scalar(alignment_objective(t, patch_proj_, *token_embed_, *image_embed_, data, rows, temperature));
}

WarmupReport ToyEncoder::warm_up(const std::vector<CaptionedImages>& pairs, const WarmupConfig& cfg) {
  if (frozen_) fail(ErrorCode::kFrozenViolation, "encoder is frozen");
  if (cfg.epochs < 0 || cfg.batch < 2) fail(ErrorCode::kInvalidArgument, "warm-up needs epochs >= 0 and batch >= 2");
  const WarmupData data = prepare_warmup(pairs, config_, *tokenizer_, [this](const Image& i) { return patchify(i); });
  WarmupReport report;
  report.initial_loss = alignment_loss(pairs, cfg.temperature);

  std::vector<nn::Parameter<float>*> trained = {patch_proj_.weight, patch_proj_.bias, token_embed_, image_embed_};
  nn::Adam<float> opt(trained, nn::AdamConfig{.lr = cfg.lr, .clip_norm = 0.0});
  Rng rng(derive_seed(cfg.seed, "encoder-warmup"));
  std::vector<int> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t n = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch));
      if (n < 2) continue;
      opt.zero_grad();
      Tape<float> t;
      t.backward(alignment_objective(t, patch_proj_, *token_embed_, *image_embed_, data,
                                     std::span<const int>(order).subspan(start, n), cfg.temperature));
      opt.step();
      ++report.steps;
    }
  }
  report.final_loss = alignment_loss(pairs, cfg.temperature);
  return report;
}

void ToyEncoder::save(io::Archive& archive, const std::string& prefix) const {
  const nlohmann::json meta = {{"depth", config_.depth},
                               {"width", config_.width},
                               {"heads", config_.heads},
                               {"patch", config_.patch},
                               {"image_size", config_.image_size},
                               {"ff_multiplier", config_.ff_multiplier},
                               {"joint_attention", config_.joint_attention},
                               {"seed", seed_},
                               {"frozen", frozen_},
                               {"checksum", checksum()}};
  archive.add_text(prefix + "encoder.json", meta.dump(2));
  store_.save(archive, prefix);
}

std::unique_ptr<ToyEncoder> ToyEncoder::load(const io::Archive& archive, const std::string& prefix,
                                             const Tokenizer& tokenizer) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(archive.get_text(prefix + "encoder.json"));
    ToyEncoderConfig cfg;
    cfg.depth = meta.at("depth");
    cfg.width = meta.at("width");
    cfg.heads = meta.at("heads");
    cfg.patch = meta.at("patch");
    cfg.image_size = meta.at("image_size");
    cfg.ff_multiplier = meta.at("ff_multiplier");
    cfg.joint_attention = meta.at("joint_attention");
    auto enc = std::make_unique<ToyEncoder>(cfg, meta.at("seed").get<std::uint64_t>(), tokenizer);
    enc->store_.load(archive, prefix);
    enc->frozen_ = meta.at("frozen");
    if (enc->checksum() != meta.at("checksum").get<std::string>()) {
      fail(ErrorCode::kFormat, "encoder parameters do not match the stored checksum");
    }
    return enc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("bad encoder metadata: ") + e.what());
  }
}

void ExtractionConfig::validate(int depth) const {
  for (const int l : {visual_layer, text_layer}) {
    if (l < 1 || l > depth) {
      fail(ErrorCode::kLayerMissing, "layer " + std::to_string(l) + " outside encoder depth " + std::to_string(depth));
    }
  }
}

std::vector<int> ExtractionConfig::layers() const {
  if (text_only || visual_layer == text_layer) return {text_layer};
  return {std::min(visual_layer, text_layer), std::max(visual_layer, text_layer)};
}

Priors extract_priors(const LayeredEmbeddings& emb, const ExtractionConfig& cfg) {
  Priors out;
  const FloatMatrix& text_states = emb.layer(cfg.text_layer);
  out.text = text_states.middleRows(emb.text_span.start, emb.text_span.size());
  if (cfg.text_only) {
    out.visual = FloatMatrix::Zero(1, emb.d_enc);
  } else {
    out.visual = emb.layer(cfg.visual_layer).middleRows(emb.visual_span.start, emb.visual_span.size());
  }
  return out;
}

Priors extract_priors(const MultimodalEncoder& encoder, const ImageTriple& images, const std::string& text,
                      const ExtractionConfig& cfg) {
  cfg.validate(encoder.depth());
  const PromptBundle prompt = build_extraction_prompt(text);
  const std::vector<int> layers = cfg.layers();
  return extract_priors(encoder.encode(fit_images(images, encoder.image_size()), prompt, layers), cfg);
}

}  // namespace vihoi::priors
