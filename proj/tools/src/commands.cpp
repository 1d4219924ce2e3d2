#include "vihoi_cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vihoi/adapter/qformer.hpp"
#include "vihoi/common/error.hpp"
#include "vihoi/common/io.hpp"
#include "vihoi/dataset/catalog.hpp"
#include "vihoi/dataset/generator.hpp"
#include "vihoi/diffusion/trainer.hpp"
#include "vihoi/geometry/distance.hpp"
#include "vihoi/geometry/primitives.hpp"
#include "vihoi/motion/container.hpp"
#include "vihoi/priors/backend.hpp"
#include "vihoi/priors/prompt.hpp"
#include "vihoi/priors/warmup.hpp"
#include "vihoi/render/keyframes.hpp"
#include "vihoi/render/rasterizer.hpp"
#include "vihoi/render/reference_store.hpp"
#include "vihoi/render/t2i.hpp"

namespace vihoi::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kEncoderArchive = "encoder.vhar";
constexpr const char* kEvaluatorArchive = "evaluator.vhar";
constexpr const char* kCheckpointFile = "checkpoint.vhar";
constexpr const char* kRunFile = "run.json";

void say(const CommandOptions& options, const std::string& message) {
  if (options.log != nullptr) *options.log << message << std::endl;
}

std::string file_sha(const fs::path& path) { return io::sha256_hex(io::read_file(path)); }

// Regular files under `root`, relative, sorted.
std::vector<std::string> list_files(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

class RunRecord {
 public:
  RunRecord(std::string command, const RunConfig& config)
      : command_(std::move(command)), config_(config), start_(std::chrono::steady_clock::now()) {}

  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void input(const std::string& name, const std::string& checksum) { inputs_[name] = checksum; }
  void note(const std::string& key, json value) { notes_[key] = std::move(value); }

  // Writes run.json into `dir` with checksums of `outputs` (relative to dir).
  fs::path write(const fs::path& dir, const std::vector<fs::path>& outputs) const {
    json config = json::object();
    for (const auto& [k, v] : config_.values()) config[k] = v;
    json out = json::object();
    for (const auto& p : outputs) out[fs::relative(p, dir).generic_string()] = file_sha(p);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const json run = {{"format", kRunFormat}, {"version", 1},     {"command", command_},
                      {"config", config},     {"seeds", seeds_},  {"inputs", inputs_},
                      {"outputs", out},       {"notes", notes_},  {"wall_time_s", wall}};
    const fs::path path = dir / kRunFile;
    io::write_text_atomic(path, run.dump(2) + "\n");
    return path;
  }

 private:
  std::string command_;
  const RunConfig& config_;
  std::chrono::steady_clock::time_point start_;
  json seeds_ = json::object();
  json inputs_ = json::object();
  json notes_ = json::object();
};

diffusion::GeometryMode geometry_mode(const RunConfig& config) {
  return diffusion::parse_geometry_mode(config.str("diffusion.variant"));
}

fs::path checkpoint_path(const RunConfig& config) { return config.path("paths.model") / kCheckpointFile; }

std::string dataset_checksum(const RunConfig& config) {
  return file_sha(config.path("paths.data") / kDatasetManifest);
}

motion::Skeleton subject_skeleton(int subject) { return motion::Skeleton::standard(dataset::subject_scale(subject)); }

std::vector<std::string> select_ids(const RunConfig& config, const dataset::CorpusIndex& index) {
  const dataset::Split split = dataset_split(config, index);
  const std::string which = config.str("sample.split");
  std::vector<std::string> ids;
  if (which == "test") {
    ids = split.test;
  } else if (which == "train") {
    ids = split.train;
  } else {
    for (const auto& e : index.entries) ids.push_back(e.id);
  }
  const long limit = config.integer("sample.limit");
  if (limit > 0 && static_cast<long>(ids.size()) > limit) ids.resize(static_cast<std::size_t>(limit));
  return ids;
}

struct InferenceInput {
  eval::EvalItem item;
  ImageTriple images;
};

std::vector<InferenceInput> inference_inputs(const RunConfig& config, const dataset::CorpusIndex& index,
                                             const std::vector<std::string>& ids,
                                             const priors::MultimodalEncoder& encoder,
                                             const priors::ExtractionConfig& extraction) {
  const fs::path dir = config.path("paths.data");
  const auto t2i = render::make_t2i_client(config.str("sample.t2i"));
  const int resolution = static_cast<int>(config.integer("dataset.image_size"));
  const diffusion::GeometryMode mode = geometry_mode(config);
  std::map<std::pair<std::string, int>, Image> seed_images;
  std::vector<InferenceInput> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const dataset::CorpusEntry& entry = index.find(id);
    motion::SequenceRecord rec = dataset::load_sequence(dir, entry);
    const auto key = std::make_pair(entry.object_id, entry.subject);
    auto it = seed_images.find(key);
    if (it == seed_images.end()) {
      const Image seed = render::render_seed_image(dataset::find_object(entry.object_id).mesh(),
                                                   subject_skeleton(entry.subject), resolution);
      it = seed_images.emplace(key, seed).first;
    }
    ImageTriple images = t2i->generate(priors::build_t2i_prompt(entry.text), it->second);
    diffusion::Condition cond =
        diffusion::make_condition(encoder, images, entry.text, entry.object_id, extraction, mode);
    out.push_back({{entry.id, std::move(rec.motion), entry.object_id, entry.subject, std::move(cond)},
                   std::move(images)});
  }
  return out;
}

std::unique_ptr<eval::EvaluatorModel> load_evaluator(const RunConfig& config) {
  const fs::path path = config.path("paths.evaluator") / kEvaluatorArchive;
  if (!fs::exists(path)) fail(ErrorCode::kIo, "no evaluator at " + path.string() + "; run train-evaluator first");
  return eval::EvaluatorModel::load(io::Archive::load(path), "evaluator/");
}

diffusion::LoadedModel load_checkpoint(const RunConfig& config, const priors::MultimodalEncoder& encoder) {
  const fs::path path = checkpoint_path(config);
  if (!fs::exists(path)) fail(ErrorCode::kIo, "no checkpoint at " + path.string() + "; run train first");
  diffusion::LoadedModel loaded = diffusion::load_model(io::Archive::load(path));
  if (loaded.extractor_checksum != encoder.checksum()) {
    fail(ErrorCode::kFrozenViolation, "encoder differs from the one the checkpoint was trained with");
  }
  return loaded;
}

std::pair<std::string, int> parse_endpoint(const std::string& endpoint) {
  std::string s = endpoint;
  if (s.rfind("tcp://", 0) == 0) s = s.substr(6);
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon == 0) fail(ErrorCode::kConfig, "endpoint must be host:port, got " + endpoint);
  int port = 0;
  try {
    port = std::stoi(s.substr(colon + 1));
  } catch (const std::exception&) {
    fail(ErrorCode::kConfig, "bad port in endpoint " + endpoint);
  }
  return {s.substr(0, colon), port};
}

std::string encoder_cache_key(const priors::ToyEncoderConfig& c, const RunConfig& config) {
  const json key = {{"depth", c.depth},
                    {"width", c.width},
                    {"heads", c.heads},
                    {"patch", c.patch},
                    {"image_size", c.image_size},
                    {"ff_multiplier", c.ff_multiplier},
                    {"joint_attention", c.joint_attention},
                    {"seed", config.seed("encoder")},
                    {"warmup_pairs", config.integer("encoder.warmup_pairs")},
                    {"warmup_epochs", config.integer("encoder.warmup_epochs")},
                    {"warmup_lr", config.real("encoder.warmup_lr")}};
  return key.dump();
}

}  // namespace

void verify_outputs(const CommandResult& result) {
  for (const auto& p : result.outputs)
    if (!fs::exists(p)) fail(ErrorCode::kIo, "declared output missing: " + p.string());
  if (!result.run_json.empty() && !fs::exists(result.run_json)) fail(ErrorCode::kIo, "run.json missing");
}

dataset::CorpusIndex open_dataset(const RunConfig& config) {
  const fs::path dir = config.path("paths.data");
  if (!fs::exists(dir / kDatasetManifest)) {
    fail(ErrorCode::kIo, "no complete dataset at " + dir.string() + "; run gen-data first");
  }
  return dataset::load_index(dir);
}

dataset::Split dataset_split(const RunConfig& config, const dataset::CorpusIndex& index) {
  dataset::SplitSpec spec;
  spec.mode = dataset::SplitMode::kBySubject;
  for (int s : config.int_list("dataset.held_out_subjects")) spec.held_out.push_back(std::to_string(s));
  return dataset::make_split(index, spec);
}

priors::ToyEncoderConfig toy_encoder_config(const RunConfig& config) {
  priors::ToyEncoderConfig c;
  c.depth = static_cast<int>(config.integer("encoder.depth"));
  c.width = static_cast<int>(config.integer("encoder.width"));
  c.heads = static_cast<int>(config.integer("encoder.heads"));
  c.patch = static_cast<int>(config.integer("encoder.patch"));
  c.image_size = static_cast<int>(config.integer("encoder.image_size"));
  c.ff_multiplier = static_cast<int>(config.integer("encoder.ff_multiplier"));
  c.joint_attention = config.flag("encoder.joint_attention");
  c.validate();
  return c;
}

std::unique_ptr<priors::ToyEncoder> obtain_toy_encoder(const priors::ToyEncoderConfig& encoder_config,
                                                       const RunConfig& config, const fs::path& cache_dir,
                                                       const CommandOptions& options) {
  const std::string key = encoder_cache_key(encoder_config, config);
  const fs::path path = cache_dir / kEncoderArchive;
  if (fs::exists(path)) {
    const io::Archive archive = io::Archive::load(path);
    if (archive.contains("key.json") && archive.get_text("key.json") == key) {
      auto encoder = priors::ToyEncoder::load(archive, "encoder/");
      if (encoder->frozen()) return encoder;
    }
  }
  say(options, "warming up toy encoder (depth " + std::to_string(encoder_config.depth) + ")");
  auto encoder = std::make_unique<priors::ToyEncoder>(encoder_config, config.seed("encoder"));
  const auto pairs = priors::make_warmup_pairs(static_cast<int>(config.integer("encoder.warmup_pairs")),
                                               config.seed("encoder.warmup"), encoder_config.image_size);
  priors::WarmupConfig wc;
  wc.epochs = static_cast<int>(config.integer("encoder.warmup_epochs"));
  wc.lr = config.real("encoder.warmup_lr");
  wc.seed = config.seed("encoder.warmup.order");
  const priors::WarmupReport report = encoder->warm_up(pairs, wc);
  encoder->freeze();
  std::ostringstream msg;
  msg << "encoder warm-up loss " << report.initial_loss << " -> " << report.final_loss;
  say(options, msg.str());
  io::Archive archive;
  archive.add_text("key.json", key);
  encoder->save(archive, "encoder/");
  fs::create_directories(cache_dir);
  archive.save(path);
  return encoder;
}

std::unique_ptr<priors::MultimodalEncoder> obtain_encoder(const RunConfig& config, const CommandOptions& options) {
  if (config.str("encoder.backend") == "external") {
    const char* endpoint = std::getenv(kEncoderEndpointEnv);
    if (endpoint == nullptr || *endpoint == '\0') {
      fail(ErrorCode::kBackendUnavailable, std::string(kEncoderEndpointEnv) + " is not set");
    }
    const auto [host, port] = parse_endpoint(endpoint);
    return std::make_unique<priors::RemoteEncoder>(host, port);
  }
  return obtain_toy_encoder(toy_encoder_config(config), config, config.path("paths.encoder"), options);
}

priors::ExtractionConfig extraction_config(const RunConfig& config) {
  priors::ExtractionConfig c;
  c.visual_layer = static_cast<int>(config.integer("extraction.visual_layer"));
  c.text_layer = static_cast<int>(config.integer("extraction.text_layer"));
  c.text_only = config.flag("extraction.text_only");
  return c;
}

diffusion::ModelConfig model_config(const RunConfig& config, int d_enc) {
  diffusion::ModelConfig c;
  c.denoiser.d_model = static_cast<int>(config.integer("diffusion.d_model"));
  c.denoiser.layers = static_cast<int>(config.integer("diffusion.layers"));
  c.denoiser.heads = static_cast<int>(config.integer("diffusion.heads"));
  c.denoiser.max_len = static_cast<int>(config.integer("diffusion.max_len"));
  c.denoiser.geometry_embed_dim = static_cast<int>(config.integer("diffusion.geometry_embed_dim"));
  c.denoiser.ff_multiplier = static_cast<int>(config.integer("diffusion.ff_multiplier"));
  c.denoiser.geometry = geometry_mode(config);
  c.d_enc = d_enc;
  c.k_visual = static_cast<int>(config.integer("adapter.k_visual"));
  c.k_text = static_cast<int>(config.integer("adapter.k_text"));
  c.adapter_heads = static_cast<int>(config.integer("adapter.heads"));
  c.adapter_feed_forward = config.flag("adapter.feed_forward");
  c.adapter = diffusion::parse_adapter_kind(config.str("adapter.kind"));
  c.schedule = diffusion::parse_schedule_kind(config.str("diffusion.schedule"));
  c.timesteps = static_cast<int>(config.integer("diffusion.timesteps"));
  c.sample_steps = static_cast<int>(config.integer("diffusion.sample_steps"));
  c.condition_dropout = config.flag("diffusion.condition_dropout");
  c.dropout_prob = config.real("diffusion.dropout_prob");
  c.validate();
  return c;
}

eval::EvaluatorConfig evaluator_config(const RunConfig& config) {
  eval::EvaluatorConfig c;
  c.hidden = static_cast<int>(config.integer("evaluator.hidden"));
  c.embed_dim = static_cast<int>(config.integer("evaluator.embed_dim"));
  c.token_dim = static_cast<int>(config.integer("evaluator.token_dim"));
  c.margin = config.real("evaluator.margin");
  c.epochs = static_cast<int>(config.integer("evaluator.epochs"));
  c.batch = static_cast<int>(config.integer("evaluator.batch"));
  c.lr = config.real("evaluator.lr");
  c.validate();
  return c;
}

eval::EvaluateConfig evaluate_config(const RunConfig& config) {
  eval::EvaluateConfig c;
  c.seed = config.seed("eval");
  c.sample_steps = static_cast<int>(config.integer("diffusion.sample_steps"));
  c.r_precision_batch = static_cast<int>(config.integer("metrics.r_precision_batch"));
  c.diversity_pairs = static_cast<int>(config.integer("metrics.diversity_pairs"));
  c.contact_threshold = config.real("metrics.contact_threshold");
  c.penetration_tolerance = config.real("metrics.penetration_tolerance");
  c.foot_height_max = config.real("metrics.foot_height_max");
  return c;
}

std::vector<eval::EvalItem> inference_items(const RunConfig& config, const dataset::CorpusIndex& index,
                                            const std::vector<std::string>& ids,
                                            const priors::MultimodalEncoder& encoder,
                                            const priors::ExtractionConfig& extraction) {
  std::vector<eval::EvalItem> out;
  for (auto& input : inference_inputs(config, index, ids, encoder, extraction)) out.push_back(std::move(input.item));
  return out;
}

// ---------------------------------------------------------------------------

CommandResult cmd_gen_data(const RunConfig& config, const CommandOptions& options) {
  const fs::path dir = config.path("paths.data");
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!options.force) fail(ErrorCode::kIo, dir.string() + " already exists; pass --force to regenerate");
    fs::remove_all(dir);
  }
  RunRecord record("gen-data", config);
  dataset::CorpusConfig cc;
  cc.n_sequences = static_cast<int>(config.integer("dataset.n_sequences"));
  cc.n_subjects = static_cast<int>(config.integer("dataset.n_subjects"));
  cc.held_out_subjects = config.int_list("dataset.held_out_subjects");
  cc.duration_frames = static_cast<int>(config.integer("dataset.duration"));
  const std::uint64_t seed = config.seed("data");
  record.seed("data", seed);
  say(options, "building " + std::to_string(cc.n_sequences) + " sequences in " + dir.string());
  const dataset::CorpusIndex index = dataset::build_corpus(dir, cc, seed);

  const int resolution = static_cast<int>(config.integer("dataset.image_size"));
  for (const auto& entry : index.entries) {
    const motion::SequenceRecord rec = dataset::load_sequence(dir, entry);
    const motion::Skeleton skel = subject_skeleton(entry.subject);
    const geometry::ObjectMesh mesh = dataset::find_object(entry.object_id).mesh();
    const render::Camera cam = render::frame_sequence(rec.motion, resolution);
    render::write_reference_images(dir / entry.path, render::render_keyframes(rec.motion, mesh, skel, cam));
  }

  json files = json::object();
  std::vector<fs::path> outputs;
  for (const auto& rel : list_files(dir)) {
    files[rel] = file_sha(dir / rel);
    outputs.push_back(dir / rel);
  }
  const dataset::Split split = dataset_split(config, index);
  record.note("train_items", split.train.size());
  record.note("test_items", split.test.size());
  CommandResult result;
  result.run_json = record.write(dir, {dir / "index.json"});
  const json manifest = {{"format", "vihoi-dataset"},
                         {"version", 1},
                         {"seed", seed},
                         {"n_sequences", index.entries.size()},
                         {"files", files}};
  io::write_text_atomic(dir / kDatasetManifest, manifest.dump(2) + "\n");
  outputs.push_back(dir / kDatasetManifest);
  result.outputs = std::move(outputs);
  say(options, "wrote " + std::to_string(index.entries.size()) + " sequences (" + std::to_string(split.train.size()) +
                   " train, " + std::to_string(split.test.size()) + " test)");
  return result;
}

CommandResult cmd_train_evaluator(const RunConfig& config, const CommandOptions& options) {
  const dataset::CorpusIndex index = open_dataset(config);
  const dataset::Split split = dataset_split(config, index);
  const fs::path data = config.path("paths.data");
  RunRecord record("train-evaluator", config);
  record.input("dataset", dataset_checksum(config));
  std::vector<eval::EvalPair> pairs;
  for (const auto& id : split.train) {
    const motion::SequenceRecord rec = dataset::load_sequence(data, index.find(id));
    pairs.push_back({motion::to_eval_representation(rec.motion), rec.motion.text});
  }
  const std::uint64_t seed = config.seed("evaluator");
  record.seed("evaluator", seed);
  say(options, "training evaluator on " + std::to_string(pairs.size()) + " pairs");
  eval::EvaluatorReport report;
  const auto model = eval::train_evaluator(pairs, evaluator_config(config), seed, &report);
  record.note("initial_loss", report.initial_loss);
  record.note("final_loss", report.final_loss);
  record.note("steps", report.steps);

  const fs::path dir = config.path("paths.evaluator");
  fs::create_directories(dir);
  io::Archive archive;
  model->save(archive, "evaluator/");
  archive.save(dir / kEvaluatorArchive);
  CommandResult result;
  result.outputs = {dir / kEvaluatorArchive};
  result.run_json = record.write(dir, result.outputs);
  std::ostringstream msg;
  msg << "evaluator loss " << report.initial_loss << " -> " << report.final_loss;
  say(options, msg.str());
  return result;
}

CommandResult cmd_train(const RunConfig& config, const CommandOptions& options) {
  const dataset::CorpusIndex index = open_dataset(config);
  const dataset::Split split = dataset_split(config, index);
  RunRecord record("train", config);
  record.input("dataset", dataset_checksum(config));
  const auto encoder = obtain_encoder(config, options);
  record.input("encoder", encoder->checksum());
  const priors::ExtractionConfig extraction = extraction_config(config);
  say(options, "extracting priors for " + std::to_string(split.train.size()) + " training sequences");
  const auto raw = diffusion::load_corpus_items(config.path("paths.data"), index, split.train, *encoder, extraction,
                                                geometry_mode(config));

  const diffusion::ModelConfig mc = model_config(config, encoder->width());
  diffusion::TrainConfig tc;
  tc.steps = static_cast<int>(config.integer("diffusion.steps"));
  tc.batch = static_cast<int>(config.integer("diffusion.batch"));
  tc.adam.lr = config.real("diffusion.lr");
  tc.cosine_decay = config.flag("diffusion.cosine_decay");
  tc.checkpoint_every = static_cast<int>(config.integer("diffusion.checkpoint_every"));
  const std::uint64_t seed = config.seed("train");
  record.seed("train", seed);

  const fs::path ckpt = checkpoint_path(config);
  fs::create_directories(ckpt.parent_path());
  std::unique_ptr<diffusion::Trainer> trainer;
  if (fs::exists(ckpt) && !options.force) {
    trainer = diffusion::Trainer::from_checkpoint(io::Archive::load(ckpt));
    const diffusion::TrainConfig& old = trainer->train_config();
    const bool same = trainer->model().config().to_json() == mc.to_json() && trainer->seed() == seed &&
                      old.steps == tc.steps && old.batch == tc.batch && old.adam.lr == tc.adam.lr &&
                      old.cosine_decay == tc.cosine_decay && old.checkpoint_every == tc.checkpoint_every;
    if (!same) {
      fail(ErrorCode::kConfig, "existing checkpoint " + ckpt.string() +
                                   " was trained with a different configuration; pass --force to start over");
    }
    say(options, "resuming from step " + std::to_string(trainer->step()));
  } else {
    const auto normalizer = diffusion::fit_normalizer(raw);
    trainer = std::make_unique<diffusion::Trainer>(mc, tc, normalizer, seed, encoder->checksum());
  }
  const auto items = diffusion::normalize_items(raw, trainer->normalizer());
  const long start = trainer->step();
  diffusion::train(
      *trainer, items, *encoder, ckpt,
      [&](long step, double loss) {
        if (step % 100 == 0 || step == tc.steps) {
          std::ostringstream msg;
          msg << "step " << step << " loss " << loss;
          say(options, msg.str());
        }
      },
      options.stop_after);
  record.note("start_step", start);
  record.note("step", trainer->step());
  record.note("complete", trainer->step() >= tc.steps);
  if (!trainer->loss_log().empty()) {
    record.note("first_loss", trainer->loss_log().front());
    record.note("last_loss", trainer->loss_log().back());
  }
  CommandResult result;
  result.outputs = {ckpt};
  result.run_json = record.write(ckpt.parent_path(), result.outputs);
  return result;
}

CommandResult cmd_sample(const RunConfig& config, const CommandOptions& options) {
  const dataset::CorpusIndex index = open_dataset(config);
  const std::vector<std::string> ids = select_ids(config, index);
  RunRecord record("sample", config);
  record.input("dataset", dataset_checksum(config));
  const auto encoder = obtain_encoder(config, options);
  const diffusion::LoadedModel model = load_checkpoint(config, *encoder);
  record.input("checkpoint", file_sha(checkpoint_path(config)));
  const std::uint64_t seed = config.seed("sample");
  record.seed("sample", seed);
  const int steps = static_cast<int>(config.integer("diffusion.sample_steps"));

  say(options, "sampling " + std::to_string(ids.size()) + " sequences with t2i=" + config.str("sample.t2i"));
  const auto inputs = inference_inputs(config, index, ids, *encoder, extraction_config(config));
  const fs::path dir = config.path("paths.samples");
  fs::create_directories(dir);
  CommandResult result;
  for (const auto& input : inputs) {
    const dataset::CorpusEntry& entry = index.find(input.item.id);
    motion::SequenceRecord rec;
    rec.motion = diffusion::generate(*model.model, model.normalizer, input.item.condition, input.item.gt.length(),
                                     derive_seed(seed, entry.id), input.item.gt.fps, entry.text, steps);
    rec.meta = {entry.id, entry.object_id, entry.object_kind, entry.verb, entry.subject, entry.split_tags, false};
    const fs::path out = dir / entry.id;
    motion::write_sequence_dir(out, rec);
    render::write_reference_images(out / "reference", input.images);
    result.outputs.push_back(out / "meta.json");
    for (const char* name : render::kKeyframeFiles) result.outputs.push_back(out / "reference" / name);
  }
  record.note("items", ids);
  result.run_json = record.write(dir, result.outputs);
  return result;
}

CommandResult cmd_evaluate(const RunConfig& config, const CommandOptions& options) {
  const dataset::CorpusIndex index = open_dataset(config);
  const dataset::Split split = dataset_split(config, index);
  RunRecord record("evaluate", config);
  record.input("dataset", dataset_checksum(config));
  const auto encoder = obtain_encoder(config, options);
  const diffusion::LoadedModel model = load_checkpoint(config, *encoder);
  record.input("checkpoint", file_sha(checkpoint_path(config)));
  const auto evaluator = load_evaluator(config);
  record.input("evaluator", file_sha(config.path("paths.evaluator") / kEvaluatorArchive));
  const eval::EvaluateConfig ec = evaluate_config(config);
  record.seed("eval", ec.seed);

  say(options, "evaluating " + std::to_string(split.test.size()) + " test sequences");
  const auto items = inference_items(config, index, split.test, *encoder, extraction_config(config));
  eval::MetricReport report = eval::evaluate(*model.model, model.normalizer, items, *evaluator, ec);
  report.text_encoder = evaluator->config().text_encoder;

  const fs::path dir = config.path("paths.eval");
  eval::write_report(dir, report);
  eval::MetricReport::from_json(io::read_text(dir / "report.json")).validate();
  CommandResult result;
  result.outputs = {dir / "report.json", dir / "report.csv"};
  result.run_json = record.write(dir, result.outputs);
  say(options, report.csv());
  return result;
}

CommandResult cmd_render(const RunConfig& config, const CommandOptions& options, bool grid) {
  const bool from_data = config.str("render.source") == "data";
  std::vector<fs::path> sources;
  if (from_data) {
    const dataset::CorpusIndex index = open_dataset(config);
    for (const auto& e : index.entries) sources.push_back(config.path("paths.data") / e.path);
  } else {
    const fs::path dir = config.path("paths.samples");
    if (!fs::exists(dir)) fail(ErrorCode::kIo, "no samples at " + dir.string() + "; run sample first");
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_directory() && fs::exists(e.path() / "meta.json")) sources.push_back(e.path());
    std::sort(sources.begin(), sources.end());
  }
  RunRecord record(grid ? "render --grid" : "render", config);
  const int resolution = static_cast<int>(config.integer("render.resolution"));
  const fs::path out = config.path("paths.render");
  fs::create_directories(out);
  CommandResult result;
  for (const auto& src : sources) {
    motion::SequenceRecord rec = motion::read_sequence_dir(src);
    const motion::Skeleton skel = subject_skeleton(rec.meta.subject);
    const geometry::ObjectMesh mesh = dataset::find_object(rec.meta.object_id).mesh();
    if (!rec.meta.has_contact_labels) {
      rec.motion.contact = eval::predicted_contact(rec.motion, geometry::SdfQuery(mesh), skel,
                                                   config.real("metrics.contact_threshold"));
    }
    const render::Camera cam = render::frame_sequence(rec.motion, resolution);
    if (grid) {
      const fs::path file = out / (rec.meta.id + "_strip.png");
      io::write_file_atomic(file, encode_png(render::contact_strip(rec.motion, mesh, skel, cam)));
      result.outputs.push_back(file);
    } else {
      render::write_reference_images(out / rec.meta.id, render::render_keyframes(rec.motion, mesh, skel, cam));
      for (const char* name : render::kKeyframeFiles) result.outputs.push_back(out / rec.meta.id / name);
    }
  }
  record.note("sequences", sources.size());
  result.run_json = record.write(out, result.outputs);
  say(options, "rendered " + std::to_string(sources.size()) + " sequences into " + out.string());
  return result;
}

// ---------------------------------------------------------------------------

std::vector<AblationVariant> ablation_variants(const RunConfig& config) {
  std::vector<AblationVariant> out;
  const std::vector<std::pair<int, int>> layers = {{3, 12}, {3, 24}, {12, 12}, {12, 36}, {24, 24}, {36, 36}, {3, 36}};
  for (const auto& [v, t] : layers) {
    AblationVariant a;
    a.label = "V" + std::to_string(v) + "-T" + std::to_string(t);
    a.group = "layers";
    a.extraction = {v, t, false};
    out.push_back(a);
  }
  const priors::ExtractionConfig base = extraction_config(config);
  AblationVariant text_only;
  text_only.label = "T" + std::to_string(base.text_layer) + "-only";
  text_only.group = "layers";
  text_only.extraction = {base.visual_layer, base.text_layer, true};
  out.push_back(text_only);

  AblationVariant pool;
  pool.label = "ViHOI-Pool";
  pool.group = "adapter";
  pool.extraction = base;
  pool.adapter = diffusion::AdapterKind::kPool;
  out.push_back(pool);

  AblationVariant clip;
  clip.label = "ViHOI-CLIP";
  clip.group = "adapter";
  clip.extraction = base;
  clip.joint_attention = false;
  out.push_back(clip);

  for (int k : config.int_list("ablation.k_grid")) {
    AblationVariant a;
    a.label = "k=" + std::to_string(k);
    a.group = "k";
    a.extraction = base;
    a.k = k;
    out.push_back(a);
  }
  return out;
}

namespace {

// Embeddings of one item at every layer the grid needs, computed once per
// encoder and shared by all cells.
struct CachedItem {
  std::string id;
  std::string object_id;
  motion::MotionSequence motion;
  int subject = 0;
  priors::LayeredEmbeddings train_emb;  // ground-truth keyframes
};

struct CachedTest {
  std::string id;
  std::string object_id;
  motion::MotionSequence motion;
  int subject = 0;
  priors::LayeredEmbeddings emb;  // text-to-image references
};

struct EncoderCache {
  std::unique_ptr<priors::MultimodalEncoder> encoder;
  std::vector<CachedItem> train;
  std::vector<CachedTest> test;
  std::string error;
};

EncoderCache build_cache(std::unique_ptr<priors::MultimodalEncoder> encoder, const RunConfig& config,
                         const dataset::CorpusIndex& index, const dataset::Split& split,
                         const std::vector<int>& layers) {
  EncoderCache cache;
  const fs::path data = config.path("paths.data");
  for (const auto& id : split.train) {
    const dataset::CorpusEntry& entry = index.find(id);
    motion::SequenceRecord rec = dataset::load_sequence(data, entry);
    const ImageTriple images = render::read_reference_images(data / entry.path);
    const priors::PromptBundle prompt = priors::build_extraction_prompt(entry.text);
    cache.train.push_back({entry.id, entry.object_id, std::move(rec.motion), entry.subject,
                           encoder->encode(priors::fit_images(images, encoder->image_size()), prompt, layers)});
  }
  const auto t2i = render::make_t2i_client(config.str("sample.t2i"));
  const int resolution = static_cast<int>(config.integer("dataset.image_size"));
  for (const auto& id : split.test) {
    const dataset::CorpusEntry& entry = index.find(id);
    motion::SequenceRecord rec = dataset::load_sequence(data, entry);
    const Image seed = render::render_seed_image(dataset::find_object(entry.object_id).mesh(),
                                                 subject_skeleton(entry.subject), resolution);
    const ImageTriple images = t2i->generate(priors::build_t2i_prompt(entry.text), seed);
    const priors::PromptBundle prompt = priors::build_extraction_prompt(entry.text);
    cache.test.push_back({entry.id, entry.object_id, std::move(rec.motion), entry.subject,
                          encoder->encode(priors::fit_images(images, encoder->image_size()), prompt, layers)});
  }
  cache.encoder = std::move(encoder);
  return cache;
}

struct CellResult {
  eval::MetricReport report;
  std::uint64_t qformer_calls = 0;
  double final_loss = 0;
  std::string error;
};

CellResult run_cell(const AblationVariant& v, const EncoderCache& cache, const RunConfig& config,
                    const eval::EvaluatorModel& evaluator) {
  CellResult cell;
  const std::uint64_t calls_before = adapter::qformer_calls();
  const diffusion::GeometryMode mode = geometry_mode(config);
  v.extraction.validate(cache.encoder->depth());

  std::vector<diffusion::CorpusItem> raw;
  for (const auto& item : cache.train) {
    raw.push_back({item.id, motion::to_model_matrix(item.motion),
                   {priors::extract_priors(item.train_emb, v.extraction),
                    diffusion::geometry_features(item.object_id, mode)}});
  }
  const diffusion::Normalizer normalizer = diffusion::fit_normalizer(raw);
  const auto items = diffusion::normalize_items(raw, normalizer);

  RunConfig cell_config = config;
  cell_config.set("adapter.kind", diffusion::to_string(v.adapter));
  cell_config.set("adapter.k_visual", std::to_string(v.k));
  cell_config.set("adapter.k_text", std::to_string(v.k));
  cell_config.set("diffusion.sample_steps", config.get("ablation.sample_steps"));
  const diffusion::ModelConfig mc = model_config(cell_config, cache.encoder->width());
  diffusion::TrainConfig tc;
  tc.steps = static_cast<int>(config.integer("ablation.train_steps"));
  tc.batch = static_cast<int>(config.integer("diffusion.batch"));
  tc.adam.lr = config.real("diffusion.lr");
  tc.cosine_decay = config.flag("diffusion.cosine_decay");
  diffusion::Trainer trainer(mc, tc, normalizer, config.seed("train"), cache.encoder->checksum());
  diffusion::train(trainer, items, *cache.encoder);
  cell.final_loss = trainer.loss_log().empty() ? 0.0 : trainer.loss_log().back();

  std::vector<eval::EvalItem> test;
  for (const auto& item : cache.test) {
    test.push_back({item.id, item.motion, item.object_id, item.subject,
                    {priors::extract_priors(item.emb, v.extraction), diffusion::geometry_features(item.object_id, mode)}});
  }
  eval::EvaluateConfig ec = evaluate_config(cell_config);
  cell.report = eval::evaluate(trainer.model(), normalizer, test, evaluator, ec);
  cell.report.text_encoder = evaluator.config().text_encoder;
  cell.qformer_calls = adapter::qformer_calls() - calls_before;
  return cell;
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

CommandResult cmd_ablate(const RunConfig& config, const CommandOptions& options) {
  const dataset::CorpusIndex index = open_dataset(config);
  const dataset::Split split = dataset_split(config, index);
  const auto evaluator = load_evaluator(config);
  RunRecord record("ablate", config);
  record.input("dataset", dataset_checksum(config));
  record.input("evaluator", file_sha(config.path("paths.evaluator") / kEvaluatorArchive));
  const std::uint64_t data_seed = index.seed;
  const std::uint64_t train_seed = config.seed("train");
  const std::uint64_t eval_seed = config.seed("eval");
  record.seed("data", data_seed);
  record.seed("train", train_seed);
  record.seed("eval", eval_seed);

  const std::vector<AblationVariant> variants = ablation_variants(config);
  std::set<int> layer_set;
  for (const auto& v : variants) {
    layer_set.insert(v.extraction.text_layer);
    if (!v.extraction.text_only) layer_set.insert(v.extraction.visual_layer);
  }
  const std::vector<int> layers(layer_set.begin(), layer_set.end());
  const fs::path dir = config.path("paths.ablation");
  fs::create_directories(dir);

  // One cache per attention mode; the CLIP-style encoder shares the joint
  // encoder's weights and only changes how the two modalities are mixed.
  std::map<bool, EncoderCache> caches;
  for (bool joint : {true, false}) {
    const bool needed = std::any_of(variants.begin(), variants.end(),
                                    [&](const AblationVariant& v) { return v.joint_attention == joint; });
    if (!needed) continue;
    try {
      std::unique_ptr<priors::MultimodalEncoder> encoder;
      if (config.str("encoder.backend") == "external") {
        if (!joint) fail(ErrorCode::kConfig, "separate-modality encoding needs the toy encoder");
        encoder = obtain_encoder(config, options);
      } else {
        priors::ToyEncoderConfig ec = toy_encoder_config(config);
        ec.depth = static_cast<int>(config.integer("ablation.encoder_depth"));
        ec.joint_attention = joint;
        encoder = obtain_toy_encoder(ec, config, dir / (joint ? "encoder" : "encoder-separate"), options);
      }
      say(options, std::string("encoding corpus with ") + (joint ? "joint" : "separate") + " attention");
      caches[joint] = build_cache(std::move(encoder), config, index, split, layers);
    } catch (const Error& e) {
      caches[joint].error = std::string(to_string(e.code())) + ": " + e.what();
    }
  }

  std::vector<CellResult> cells;
  for (const auto& v : variants) {
    say(options, "cell " + v.label);
    CellResult cell;
    const EncoderCache& cache = caches.at(v.joint_attention);
    try {
      if (!cache.error.empty()) fail(ErrorCode::kConfig, cache.error);
      cell = run_cell(v, cache, config, *evaluator);
      io::write_text_atomic(dir / "cells" / (v.label + ".json"), cell.report.to_json() + "\n");
    } catch (const Error& e) {
      cell.error = std::string(to_string(e.code())) + ": " + e.what();
      say(options, "  failed: " + cell.error);
    }
    cells.push_back(std::move(cell));
  }

  std::ostringstream csv;
  csv << "variant,group,visual_layer,text_layer,text_only,adapter,joint_attention,k,data_seed,train_seed,eval_seed";
  for (const char* c : eval::kReportColumns) csv << ',' << c;
  csv << ",final_loss,qformer_calls,error\n";
  std::ostringstream md;
  md << "| Variant | Group |";
  for (const char* c : eval::kReportColumns) md << ' ' << c << " |";
  md << "\n|---|---|";
  for (std::size_t i = 0; i < eval::kReportColumns.size(); ++i) md << "---|";
  md << '\n';
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const AblationVariant& v = variants[i];
    const CellResult& cell = cells[i];
    std::string error = cell.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    csv << v.label << ',' << v.group << ',' << v.extraction.visual_layer << ',' << v.extraction.text_layer << ','
        << (v.extraction.text_only ? "true" : "false") << ',' << diffusion::to_string(v.adapter) << ','
        << (v.joint_attention ? "true" : "false") << ',' << v.k << ',' << data_seed << ',' << train_seed << ','
        << eval_seed;
    md << "| " << v.label << " | " << v.group << " |";
    if (error.empty()) {
      for (double value : cell.report.values()) {
        csv << ',' << fixed(value, 6);
        md << ' ' << fixed(value, 3) << " |";
      }
      csv << ',' << fixed(cell.final_loss, 6) << ',' << cell.qformer_calls << ",\n";
    } else {
      for (std::size_t c = 0; c < eval::kReportColumns.size(); ++c) {
        csv << ',';
        md << " – |";
      }
      csv << ",," << error << '\n';
    }
    md << '\n';
  }
  md << "\nShared seeds: data " << data_seed << ", train " << train_seed << ", eval " << eval_seed << ".\n";
  for (std::size_t i = 0; i < variants.size(); ++i)
    if (!cells[i].error.empty()) md << "\n" << variants[i].label << " failed: " << cells[i].error << "\n";

  io::write_text_atomic(dir / "ablation.csv", csv.str());
  io::write_text_atomic(dir / "ablation.md", md.str());
  CommandResult result;
  result.outputs = {dir / "ablation.csv", dir / "ablation.md"};
  result.run_json = record.write(dir, result.outputs);
  say(options, md.str());
  return result;
}

// ---------------------------------------------------------------------------

void cmd_make_primitive(const std::string& kind, const std::vector<double>& dims, int segments, const fs::path& out) {
  const geometry::ObjectMesh mesh = geometry::make_primitive(geometry::parse_primitive_kind(kind), dims, segments);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  geometry::write_obj(out, mesh);
}

void cmd_serve_encoder(const RunConfig& config, const std::string& host, int port, const CommandOptions& options) {
  const auto encoder = obtain_toy_encoder(toy_encoder_config(config), config, config.path("paths.encoder"), options);
  priors::EncoderServer server(*encoder, host, port);
  say(options, "serving encoder " + encoder->checksum() + " on " + host + ":" + std::to_string(server.port()));
  server.serve();
}

}  // namespace vihoi::cli
