#include <benchmark/benchmark.h>

#include "vihoi/common/random.hpp"
#include "vihoi/dataset/catalog.hpp"
#include "vihoi/diffusion/model.hpp"
#include "vihoi/diffusion/schedule.hpp"
#include "vihoi/geometry/bps.hpp"
#include "vihoi/geometry/distance.hpp"
#include "vihoi/nn/layers.hpp"

using namespace vihoi;

namespace {

void BM_BpsEncode(benchmark::State& state) {
  const geometry::ObjectMesh mesh = dataset::find_object("table").mesh();
  const auto basis = geometry::sample_basis_points(static_cast<int>(state.range(0)), 1.0, 7);
  for (auto _ : state) benchmark::DoNotOptimize(geometry::bps_encode(mesh, basis));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BpsEncode)->Arg(256)->Arg(1024);

void BM_SignedDistance(benchmark::State& state) {
  const geometry::SdfQuery sdf(dataset::find_object("lamp").mesh());
  Rng rng(1);
  std::vector<geometry::Vec3> points;
  for (int i = 0; i < 1024; ++i) points.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  for (auto _ : state)
    for (const auto& p : points) benchmark::DoNotOptimize(sdf(p));
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_SignedDistance);

void BM_DenoiserForward(benchmark::State& state) {
  diffusion::ModelConfig c;
  c.denoiser.d_model = static_cast<int>(state.range(0));
  c.denoiser.layers = 4;
  c.denoiser.max_len = 64;
  c.denoiser.geometry_embed_dim = 128;
  c.d_enc = 64;
  const diffusion::HoiModel<float> model(c, 3);
  Rng rng(2);
  diffusion::Condition cond;
  cond.priors.visual = nn::normal_init(rng, 16, c.d_enc, 1.0).cast<float>();
  cond.priors.text = nn::normal_init(rng, 8, c.d_enc, 1.0).cast<float>();
  cond.geometry = nn::normal_init(rng, 1, c.denoiser.geometry_width(), 0.3).row(0);
  const auto x = diffusion::standard_normal(rng, 40, c.denoiser.motion_width);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict_x0(x, 500, cond));
}
BENCHMARK(BM_DenoiserForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
