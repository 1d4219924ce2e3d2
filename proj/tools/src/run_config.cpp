#include "vihoi_cli/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "vihoi/common/error.hpp"
#include "vihoi/common/io.hpp"
#include "vihoi/common/random.hpp"

namespace vihoi::cli {
namespace {

using Type = RunConfig::Type;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_long(const std::string& s, long& out) {
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, out);
  return r.ec == std::errc() && r.ptr == end;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size() && std::isfinite(out);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

const RunConfig::KeySpec* find_spec(const std::string& key) {
  for (const auto& spec : RunConfig::schema())
    if (spec.key == key) return &spec;
  return nullptr;
}

void check_value(const RunConfig::KeySpec& spec, const std::string& value) {
  const auto bad = [&](const char* what) {
    fail(ErrorCode::kConfig, spec.key + ": expected " + what + ", got '" + value + "'");
  };
  long l = 0;
  double d = 0;
  switch (spec.type) {
    case Type::kString:
      break;
    case Type::kInt:
      if (!parse_long(value, l)) bad("an integer");
      break;
    case Type::kReal:
      if (!parse_double(value, d)) bad("a number");
      break;
    case Type::kBool:
      if (value != "true" && value != "false") bad("true or false");
      break;
    case Type::kIntList:
      for (const auto& part : split_list(value))
        if (!parse_long(part, l)) bad("a comma-separated integer list");
      break;
  }
  if (!spec.choices.empty() && std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
    std::string options;
    for (const auto& c : spec.choices) options += (options.empty() ? "" : "|") + c;
    fail(ErrorCode::kConfig, spec.key + ": expected one of " + options + ", got '" + value + "'");
  }
}

}  // namespace

const std::vector<RunConfig::KeySpec>& RunConfig::schema() {
  static const std::vector<KeySpec> keys = {
      {"seeds.base", Type::kInt, "0", {}},

      {"paths.data", Type::kString, "runs/data", {}},
      {"paths.encoder", Type::kString, "runs/encoder", {}},
      {"paths.evaluator", Type::kString, "runs/evaluator", {}},
      {"paths.model", Type::kString, "runs/model", {}},
      {"paths.samples", Type::kString, "runs/samples", {}},
      {"paths.eval", Type::kString, "runs/eval", {}},
      {"paths.render", Type::kString, "runs/render", {}},
      {"paths.ablation", Type::kString, "runs/ablation", {}},

      {"dataset.n_sequences", Type::kInt, "64", {}},
      {"dataset.n_subjects", Type::kInt, "10", {}},
      {"dataset.held_out_subjects", Type::kIntList, "8,9", {}},
      {"dataset.duration", Type::kInt, "40", {}},
      {"dataset.image_size", Type::kInt, "128", {}},

      {"encoder.backend", Type::kString, "toy", {"toy", "external"}},
      {"encoder.depth", Type::kInt, "16", {}},
      {"encoder.width", Type::kInt, "64", {}},
      {"encoder.heads", Type::kInt, "4", {}},
      {"encoder.patch", Type::kInt, "16", {}},
      {"encoder.image_size", Type::kInt, "64", {}},
      {"encoder.ff_multiplier", Type::kInt, "2", {}},
      {"encoder.joint_attention", Type::kBool, "true", {}},
      {"encoder.warmup_pairs", Type::kInt, "100", {}},
      {"encoder.warmup_epochs", Type::kInt, "100", {}},
      {"encoder.warmup_lr", Type::kReal, "0.003", {}},

      {"extraction.visual_layer", Type::kInt, "3", {}},
      {"extraction.text_layer", Type::kInt, "12", {}},
      {"extraction.text_only", Type::kBool, "false", {}},

      {"adapter.kind", Type::kString, "qformer", {"qformer", "pool"}},
      {"adapter.k_visual", Type::kInt, "1", {}},
      {"adapter.k_text", Type::kInt, "1", {}},
      {"adapter.heads", Type::kInt, "4", {}},
      {"adapter.feed_forward", Type::kBool, "false", {}},

      {"diffusion.variant", Type::kString, "bps", {"bps", "keypoint24"}},
      {"diffusion.d_model", Type::kInt, "128", {}},
      {"diffusion.layers", Type::kInt, "4", {}},
      {"diffusion.heads", Type::kInt, "4", {}},
      {"diffusion.max_len", Type::kInt, "64", {}},
      {"diffusion.geometry_embed_dim", Type::kInt, "128", {}},
      {"diffusion.ff_multiplier", Type::kInt, "4", {}},
      {"diffusion.schedule", Type::kString, "cosine", {"cosine", "linear"}},
      {"diffusion.timesteps", Type::kInt, "1000", {}},
      {"diffusion.sample_steps", Type::kInt, "100", {}},
      {"diffusion.condition_dropout", Type::kBool, "false", {}},
      {"diffusion.dropout_prob", Type::kReal, "0.1", {}},
      {"diffusion.steps", Type::kInt, "2000", {}},
      {"diffusion.batch", Type::kInt, "16", {}},
      {"diffusion.lr", Type::kReal, "0.001", {}},
      {"diffusion.cosine_decay", Type::kBool, "true", {}},
      {"diffusion.checkpoint_every", Type::kInt, "500", {}},

      {"evaluator.hidden", Type::kInt, "64", {}},
      {"evaluator.embed_dim", Type::kInt, "512", {}},
      {"evaluator.token_dim", Type::kInt, "64", {}},
      {"evaluator.margin", Type::kReal, "0.2", {}},
      {"evaluator.epochs", Type::kInt, "40", {}},
      {"evaluator.batch", Type::kInt, "32", {}},
      {"evaluator.lr", Type::kReal, "0.001", {}},

      {"metrics.contact_threshold", Type::kReal, "0.05", {}},
      {"metrics.penetration_tolerance", Type::kReal, "0.005", {}},
      {"metrics.foot_height_max", Type::kReal, "0.05", {}},
      {"metrics.r_precision_batch", Type::kInt, "32", {}},
      {"metrics.diversity_pairs", Type::kInt, "300", {}},

      {"sample.t2i", Type::kString, "stub", {"stub", "external"}},
      {"sample.split", Type::kString, "test", {"test", "train", "all"}},
      {"sample.limit", Type::kInt, "0", {}},

      {"render.source", Type::kString, "samples", {"samples", "data"}},
      {"render.resolution", Type::kInt, "128", {}},

      {"ablation.encoder_depth", Type::kInt, "36", {}},
      {"ablation.train_steps", Type::kInt, "300", {}},
      {"ablation.sample_steps", Type::kInt, "50", {}},
      {"ablation.k_grid", Type::kIntList, "1,2,4,8", {}},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& spec : schema()) values_[spec.key] = spec.default_value;
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  c.merge_text(text);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kConfig, "config file not found: " + path.string());
  const std::string text = io::read_text(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos || text[first] != '{') return parse(text);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  if (!j.contains("config") || !j["config"].is_object()) fail(ErrorCode::kConfig, path.string() + ": no config object");
  RunConfig c;
  for (const auto& [key, value] : j["config"].items()) {
    if (!value.is_string()) fail(ErrorCode::kConfig, key + ": expected a string value");
    c.set(key, value.get<std::string>());
  }
  return c;
}

void RunConfig::merge_text(std::string_view text) {
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      if (line.back() != ']') fail(ErrorCode::kConfig, where + "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) fail(ErrorCode::kConfig, where + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kConfig, where + "expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) fail(ErrorCode::kConfig, where + "empty key");
    if (!value.empty() && value[0] == '"') {
      const auto close = value.find('"', 1);
      if (close == std::string::npos) fail(ErrorCode::kConfig, where + "unterminated string");
      const std::string rest = trim(std::string_view(value).substr(close + 1));
      if (!rest.empty() && rest[0] != '#') fail(ErrorCode::kConfig, where + "text after closing quote");
      value = value.substr(1, close - 1);
    } else if (const auto hash = value.find('#'); hash != std::string::npos) {
      value = trim(std::string_view(value).substr(0, hash));
    }
    if (!section.empty()) key = section + "." + key;
    try {
      set(key, value);
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, where + e.what());
    }
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_spec(key);
  if (spec == nullptr) fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
  check_value(*spec, value);
  values_[key] = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) fail(ErrorCode::kConfig, "override '" + assignment + "' is not key=value");
  set(trim(std::string_view(assignment).substr(0, eq)), trim(std::string_view(assignment).substr(eq + 1)));
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
  return it->second;
}

long RunConfig::integer(const std::string& key) const {
  long v = 0;
  if (!parse_long(get(key), v)) fail(ErrorCode::kConfig, key + " is not an integer");
  return v;
}

double RunConfig::real(const std::string& key) const {
  double v = 0;
  if (!parse_double(get(key), v)) fail(ErrorCode::kConfig, key + " is not a number");
  return v;
}

bool RunConfig::flag(const std::string& key) const {
  const std::string& v = get(key);
  if (v != "true" && v != "false") fail(ErrorCode::kConfig, key + " is not a boolean");
  return v == "true";
}

std::vector<int> RunConfig::int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& part : split_list(get(key))) {
    long v = 0;
    if (!parse_long(part, v)) fail(ErrorCode::kConfig, key + " is not an integer list");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::uint64_t RunConfig::seed(std::string_view stage) const {
  return derive_seed(static_cast<std::uint64_t>(integer("seeds.base")), stage);
}

std::string RunConfig::format() const {
  std::string out;
  std::string current;
  for (const auto& [key, value] : values_) {
    const auto dot = key.rfind('.');
    const std::string section = key.substr(0, dot);
    if (section != current) {
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
      current = section;
    }
    const bool quote = value.find('#') != std::string::npos || value != trim(value);
    out += key.substr(dot + 1) + " = " + (quote ? "\"" + value + "\"" : value) + "\n";
  }
  return out;
}

}  // namespace vihoi::cli
