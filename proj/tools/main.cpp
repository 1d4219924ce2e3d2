#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vihoi/common/error.hpp"
#include "vihoi_cli/commands.hpp"

namespace {

struct GlobalFlags {
  std::string config;
  std::vector<std::string> overrides;
  long long seed = -1;
  bool force = false;
  std::string t2i;
  std::string encoder;
  std::string variant;
};

vihoi::cli::RunConfig resolve(const GlobalFlags& flags) {
  vihoi::cli::RunConfig config =
      flags.config.empty() ? vihoi::cli::RunConfig() : vihoi::cli::RunConfig::load(flags.config);
  for (const auto& o : flags.overrides) config.set_assignment(o);
  if (flags.seed >= 0) config.set("seeds.base", std::to_string(flags.seed));
  if (!flags.t2i.empty()) config.set("sample.t2i", flags.t2i);
  if (!flags.encoder.empty()) config.set("encoder.backend", flags.encoder);
  if (!flags.variant.empty()) config.set("diffusion.variant", flags.variant);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-to-HOI motion generation with visual and textual priors, toy scale"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  app.add_option("--config", flags.config, "Config file (key-value text or a run.json)");
  app.add_option("--set", flags.overrides, "Override a config key, e.g. --set diffusion.steps=500");
  app.add_option("--seed", flags.seed, "Base seed (seeds.base)");
  app.add_flag("--force", flags.force, "Overwrite existing outputs");
  app.add_option("--t2i", flags.t2i, "Text-to-image client")->check(CLI::IsMember({"stub", "external"}));
  app.add_option("--encoder", flags.encoder, "Encoder backend")->check(CLI::IsMember({"toy", "external"}));
  app.add_option("--generator-variant", flags.variant, "Object geometry encoding")
      ->check(CLI::IsMember({"bps", "keypoint24"}));

  auto* gen_data = app.add_subcommand("gen-data", "Generate the toy corpus with keyframe reference images");
  auto* train_evaluator = app.add_subcommand("train-evaluator", "Train the contrastive text/motion evaluator");
  auto* train = app.add_subcommand("train", "Train (or resume) the generator");
  long stop_after = -1;
  train->add_option("--stop-after", stop_after, "Stop at this step, leaving a resumable checkpoint");
  auto* sample = app.add_subcommand("sample", "Sample motions for the selected split");
  auto* evaluate = app.add_subcommand("evaluate", "Sample the test split and write report.json/report.csv");
  auto* render = app.add_subcommand("render", "Render keyframes of samples or dataset sequences");
  bool grid = false;
  render->add_flag("--grid", grid, "One 3-keyframe contact strip per sequence");
  auto* ablate = app.add_subcommand("ablate", "Run the layer, adapter and k ablation grid");
  auto* print_config = app.add_subcommand("print-config", "Print the resolved configuration");

  auto* make_primitive = app.add_subcommand("make-primitive", "Write a primitive object mesh as OBJ");
  std::string kind, out;
  std::vector<double> dims;
  int segments = 64;
  make_primitive->add_option("--kind", kind, "box, cylinder, lamp_composite or table_composite")->required();
  make_primitive->add_option("--dims", dims, "Dimensions in meters")->required()->delimiter(',');
  make_primitive->add_option("--segments", segments, "Segments around round parts");
  make_primitive->add_option("--out", out, "Output .obj path")->required();

  auto* serve_encoder = app.add_subcommand("serve-encoder", "Serve the toy encoder over the backend protocol");
  std::string host = "127.0.0.1";
  int port = 0;
  serve_encoder->add_option("--host", host, "Bind address");
  serve_encoder->add_option("--port", port, "Port (0 picks a free one)");

  CLI11_PARSE(app, argc, argv);

  try {
    const vihoi::cli::RunConfig config = resolve(flags);
    vihoi::cli::CommandOptions options;
    options.force = flags.force;
    options.log = &std::cerr;
    vihoi::cli::CommandResult result;
    if (*gen_data) {
      result = vihoi::cli::cmd_gen_data(config, options);
    } else if (*train_evaluator) {
      result = vihoi::cli::cmd_train_evaluator(config, options);
    } else if (*train) {
      options.stop_after = stop_after;
      result = vihoi::cli::cmd_train(config, options);
    } else if (*sample) {
      result = vihoi::cli::cmd_sample(config, options);
    } else if (*evaluate) {
      result = vihoi::cli::cmd_evaluate(config, options);
    } else if (*render) {
      result = vihoi::cli::cmd_render(config, options, grid);
    } else if (*ablate) {
      result = vihoi::cli::cmd_ablate(config, options);
    } else if (*print_config) {
      std::cout << config.format();
      return 0;
    } else if (*make_primitive) {
      vihoi::cli::cmd_make_primitive(kind, dims, segments, out);
      return 0;
    } else if (*serve_encoder) {
      vihoi::cli::cmd_serve_encoder(config, host, port, options);
      return 0;
    }
    vihoi::cli::verify_outputs(result);
    if (!result.run_json.empty()) std::cout << result.run_json.string() << '\n';
  } catch (const vihoi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
