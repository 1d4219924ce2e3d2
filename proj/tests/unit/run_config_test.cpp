#include <gtest/gtest.h>

#include <filesystem>
#include <optional>

#include "vihoi/common/error.hpp"
#include "vihoi/common/io.hpp"
#include "vihoi_cli/run_config.hpp"

namespace {

using vihoi::Error;
using vihoi::ErrorCode;
using vihoi::cli::RunConfig;

template <typename F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

TEST(RunConfig, EveryKeyHasADefault) {
  const RunConfig c;
  for (const auto& spec : RunConfig::schema()) EXPECT_EQ(c.get(spec.key), spec.default_value) << spec.key;
  EXPECT_EQ(c.int_list("dataset.held_out_subjects"), (std::vector<int>{8, 9}));
  EXPECT_EQ(c.str("encoder.backend"), "toy");
}

TEST(RunConfig, SectionsCommentsAndQuotes) {
  const RunConfig c = RunConfig::parse(R"(
# leading comment
seeds.base = 5
[diffusion]
steps = 30   # trailing comment
lr = 0.01
[paths]
data = "runs/a#b"
[dataset]
held_out_subjects = 1,2, 3
)");
  EXPECT_EQ(c.integer("seeds.base"), 5);
  EXPECT_EQ(c.integer("diffusion.steps"), 30);
  EXPECT_DOUBLE_EQ(c.real("diffusion.lr"), 0.01);
  EXPECT_EQ(c.str("paths.data"), "runs/a#b");
  EXPECT_EQ(c.int_list("dataset.held_out_subjects"), (std::vector<int>{1, 2, 3}));
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  RunConfig c;
  EXPECT_EQ(code_of([&] { c.set("diffusion.stepz", "3"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { c.set("diffusion.steps", "many"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { c.set("diffusion.cosine_decay", "yes please"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { c.set("encoder.backend", "other"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { c.set_assignment("no_equals_sign"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { RunConfig::parse("[diffusion\nsteps = 3\n"); }), ErrorCode::kConfig);
}

TEST(RunConfig, FormatRoundTrips) {
  RunConfig c;
  c.set_assignment("diffusion.steps=77");
  c.set("paths.model", "some dir/model");
  const RunConfig back = RunConfig::parse(c.format());
  EXPECT_EQ(back.values(), c.values());
}

TEST(RunConfig, StageSeedsFollowTheBase) {
  RunConfig a, b;
  b.set("seeds.base", "1");
  EXPECT_EQ(a.seed("train"), RunConfig().seed("train"));
  EXPECT_NE(a.seed("train"), a.seed("sample"));
  EXPECT_NE(a.seed("train"), b.seed("train"));
}

TEST(RunConfig, LoadsRunJsonConfigObject) {
  RunConfig c;
  c.set("diffusion.layers", "2");
  std::string json = "{\"format\": \"vihoi-run\", \"config\": {";
  bool first = true;
  for (const auto& [k, v] : c.values()) {
    json += (first ? "\"" : ", \"") + k + "\": \"" + v + "\"";
    first = false;
  }
  json += "}}";
  const auto path = std::filesystem::temp_directory_path() / "vihoi_run_config_test.json";
  vihoi::io::write_text_atomic(path, json);
  EXPECT_EQ(RunConfig::load(path).values(), c.values());
  std::filesystem::remove(path);
}

}  // namespace
