#include "vihoi/diffusion/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "vihoi/common/error.hpp"
#include "vihoi/dataset/catalog.hpp"
#include "vihoi/render/reference_store.hpp"

namespace vihoi::diffusion {

using nlohmann::json;

Eigen::RowVectorXd geometry_features(const std::string& object_id, GeometryMode mode) {
  const geometry::ObjectSpec& spec = dataset::catalog_object_spec(object_id);
  if (mode == GeometryMode::kBps) return spec.bps.distances.transpose();
  const auto kp = spec.keypoints.stacked();
  return Eigen::Map<const Eigen::RowVectorXd>(kp.data(), kp.size());
}

Condition make_condition(const priors::MultimodalEncoder& encoder, const ImageTriple& images, const std::string& text,
                         const std::string& object_id, const priors::ExtractionConfig& extraction,
                         GeometryMode mode) {
  return {priors::extract_priors(encoder, images, text, extraction), geometry_features(object_id, mode)};
}

std::vector<CorpusItem> load_corpus_items(const std::filesystem::path& corpus_dir, const dataset::CorpusIndex& index,
                                          const std::vector<std::string>& ids,
                                          const priors::MultimodalEncoder& encoder,
                                          const priors::ExtractionConfig& extraction, GeometryMode mode) {
  std::vector<CorpusItem> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    const dataset::CorpusEntry& entry = index.find(id);
    const ImageTriple images = render::read_reference_images(corpus_dir / entry.path);
    const motion::SequenceRecord record = dataset::load_sequence(corpus_dir, entry);
    out.push_back({id, motion::to_model_matrix(record.motion),
                   make_condition(encoder, images, record.motion.text, entry.object_id, extraction, mode)});
  }
  return out;
}

Normalizer fit_normalizer(std::span<const CorpusItem> items) {
  std::vector<motion::RowMatrix> xs;
  xs.reserve(items.size());
  for (const auto& item : items) xs.push_back(item.x);
  return Normalizer::fit(xs);
}

std::vector<TrainItem> normalize_items(std::span<const CorpusItem> items, const Normalizer& normalizer) {
  std::vector<TrainItem> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back({item.id, normalizer.normalize(item.x), item.condition});
  return out;
}

void TrainConfig::validate() const {
  if (steps < 0 || batch < 1 || checkpoint_every < 0) fail(ErrorCode::kInvalidArgument, "bad training schedule");
  if (adam.lr <= 0) fail(ErrorCode::kInvalidArgument, "learning rate must be positive");
}

double TrainConfig::lr_at(long step) const {
  if (!cosine_decay || steps == 0) return adam.lr;
  const double progress = std::min(1.0, static_cast<double>(step) / static_cast<double>(steps));
  return adam.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

json train_config_json(const TrainConfig& c) {
  return {{"steps", c.steps},          {"batch", c.batch},         {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},     {"beta2", c.adam.beta2},    {"eps", c.adam.eps},
          {"clip_norm", c.adam.clip_norm}, {"checkpoint_every", c.checkpoint_every}, {"cosine_decay", c.cosine_decay}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.steps = j.at("steps").get<int>();
  c.batch = j.at("batch").get<int>();
  c.adam.lr = j.at("lr").get<double>();
  c.adam.beta1 = j.at("beta1").get<double>();
  c.adam.beta2 = j.at("beta2").get<double>();
  c.adam.eps = j.at("eps").get<double>();
  c.adam.clip_norm = j.at("clip_norm").get<double>();
  c.checkpoint_every = j.at("checkpoint_every").get<int>();
  c.cosine_decay = j.at("cosine_decay").get<bool>();
  return c;
}

json read_manifest(const io::Archive& archive) {
  if (!archive.contains("manifest.json")) fail(ErrorCode::kFormat, "checkpoint has no manifest");
  json m;
  try {
    m = json::parse(archive.get_text("manifest.json"));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("checkpoint manifest: ") + e.what());
  }
  if (m.value("format", "") != kCheckpointFormat) fail(ErrorCode::kFormat, "not a vihoi checkpoint");
  if (m.value("version", 0) < 1 || m.value("version", 0) > kCheckpointVersion) {
    fail(ErrorCode::kFormat, "unsupported checkpoint version");
  }
  return m;
}

}  // namespace

Trainer::Trainer(const ModelConfig& model_config, const TrainConfig& train_config, Normalizer normalizer,
                 std::uint64_t seed, std::string extractor_checksum)
    : model_config_(model_config),
      train_config_(train_config),
      normalizer_(std::move(normalizer)),
      seed_(seed),
      extractor_checksum_(std::move(extractor_checksum)),
      schedule_(make_schedule(model_config.schedule, model_config.timesteps)) {
  train_config_.validate();
  model_ = std::make_unique<HoiModel<float>>(model_config_, derive_seed(seed_, "model"));
  optimizer_ = std::make_unique<nn::Adam<float>>(model_->store().all(), train_config_.adam);
}

std::unique_ptr<Trainer> Trainer::from_checkpoint(const io::Archive& archive) {
  const json m = read_manifest(archive);
  auto trainer = std::make_unique<Trainer>(ModelConfig::from_json(m.at("model").dump()),
                                           train_config_from_json(m.at("train")),
                                           Normalizer::from_json(m.at("normalizer").dump()),
                                           m.at("seeds").at("train").get<std::uint64_t>(),
                                           m.at("extractor_checksum").get<std::string>());
  trainer->model_->store().load(archive, "params/");
  trainer->optimizer_->load(archive, "optimizer/");
  trainer->step_ = m.at("step").get<long>();
  trainer->losses_ = m.at("losses").get<std::vector<double>>();
  return trainer;
}

std::vector<int> Trainer::batch_indices(long step, int n_items) const {
  if (n_items < 1) fail(ErrorCode::kInvalidArgument, "no training items");
  Rng rng(derive_seed(derive_seed(seed_, "train.batch"), static_cast<std::uint64_t>(step)));
  std::vector<int> out(static_cast<std::size_t>(train_config_.batch));
  for (int& i : out) i = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_items)));
  return out;
}

double Trainer::train_step(std::span<const TrainItem> items) {
  std::vector<const TrainItem*> batch;
  for (int i : batch_indices(step_, static_cast<int>(items.size()))) batch.push_back(&items[static_cast<std::size_t>(i)]);
  const std::uint64_t noise_seed = derive_seed(derive_seed(seed_, "train.noise"), static_cast<std::uint64_t>(step_));
  optimizer_->zero_grad();
  optimizer_->set_lr(train_config_.lr_at(step_));
  nn::Tape<float> tape;
  const nn::Var loss = training_loss<float>(tape, *model_, batch, schedule_, noise_seed);
  const double value = tape.scalar(loss);
  tape.backward(loss);
  optimizer_->step();
  ++step_;
  losses_.push_back(value);
  return value;
}

double Trainer::probe_loss(std::span<const TrainItem> items, std::uint64_t probe_seed) const {
  if (items.empty()) fail(ErrorCode::kInvalidArgument, "no probe items");
  double total = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    nn::Tape<float> tape(false);
    const TrainItem* item = &items[i];
    const nn::Var loss = training_loss<float>(tape, *model_, std::span(&item, 1), schedule_, derive_seed(probe_seed, i));
    total += tape.scalar(loss);
  }
  return total / static_cast<double>(items.size());
}

void Trainer::check_extractor(const priors::MultimodalEncoder& extractor) const {
  if (extractor.checksum() != extractor_checksum_) {
    fail(ErrorCode::kFrozenViolation, "extractor parameters changed during training");
  }
}

io::Archive Trainer::checkpoint() const {
  io::Archive archive;
  const json manifest = {{"format", kCheckpointFormat},
                         {"version", kCheckpointVersion},
                         {"model", json::parse(model_config_.to_json())},
                         {"train", train_config_json(train_config_)},
                         {"step", step_},
                         {"seeds", {{"train", seed_}, {"model", derive_seed(seed_, "model")}}},
                         {"extractor_checksum", extractor_checksum_},
                         {"normalizer", json::parse(normalizer_.to_json())},
                         {"losses", losses_}};
  archive.add_text("manifest.json", manifest.dump(2));
  model_->store().save(archive, "params/");
  optimizer_->save(archive, "optimizer/");
  return archive;
}

void Trainer::save(const std::filesystem::path& path) const { checkpoint().save(path); }

void train(Trainer& trainer, std::span<const TrainItem> items, const priors::MultimodalEncoder& extractor,
           const std::filesystem::path& checkpoint_path, const StepCallback& on_step, long stop_at) {
  trainer.check_extractor(extractor);
  const TrainConfig& cfg = trainer.train_config();
  const long last = stop_at >= 0 ? std::min<long>(stop_at, cfg.steps) : cfg.steps;
  while (trainer.step() < last) {
    const double loss = trainer.train_step(items);
    if (on_step) on_step(trainer.step(), loss);
    if (cfg.checkpoint_every > 0 && trainer.step() % cfg.checkpoint_every == 0 && trainer.step() < last) {
      trainer.check_extractor(extractor);
      if (!checkpoint_path.empty()) trainer.save(checkpoint_path);
    }
  }
  trainer.check_extractor(extractor);
  if (!checkpoint_path.empty()) trainer.save(checkpoint_path);
}

LoadedModel load_model(const io::Archive& archive) {
  const json m = read_manifest(archive);
  LoadedModel out;
  out.model = std::make_unique<HoiModel<float>>(ModelConfig::from_json(m.at("model").dump()),
                                                m.at("seeds").at("model").get<std::uint64_t>());
  out.model->store().load(archive, "params/");
  out.normalizer = Normalizer::from_json(m.at("normalizer").dump());
  out.extractor_checksum = m.at("extractor_checksum").get<std::string>();
  out.step = m.at("step").get<long>();
  return out;
}

motion::MotionSequence generate(const HoiModel<float>& model, const Normalizer& normalizer, const Condition& cond,
                                int length, std::uint64_t seed, double fps, const std::string& text, int steps) {
  const Matrix<double> x = sample_normalized(model, cond, length, seed, steps);
  return motion::from_model_matrix(normalizer.denormalize(x), fps, text);
}

}  // namespace vihoi::diffusion
