#include "vihoi/priors/warmup.hpp"

#include "vihoi/common/error.hpp"
#include "vihoi/dataset/catalog.hpp"
#include "vihoi/dataset/generator.hpp"
#include "vihoi/render/rasterizer.hpp"

namespace vihoi::priors {

std::vector<CaptionedImages> make_warmup_pairs(int n, std::uint64_t seed, int image_size) {
  if (n < 0) fail(ErrorCode::kInvalidArgument, "pair count must be non-negative");
  std::vector<CaptionedImages> out;
  Rng rng(derive_seed(seed, "warmup-pairs"));
  for (std::uint64_t i = 0; static_cast<int>(out.size()) < n; ++i) {
    const auto verb = dataset::kAllVerbs[out.size() % dataset::kAllVerbs.size()];
    const dataset::ToyTask task = dataset::sample_task(verb, rng, 40);
    const int subject = static_cast<int>(rng.uniform_index(10));
    motion::MotionSequence seq;
    try {
      seq = dataset::generate_sequence(task, subject, derive_seed(seed, i));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasibleTask) throw;
      continue;
    }
    const auto mesh = dataset::find_object(task.object_id).mesh();
    const auto skel = motion::Skeleton::standard(dataset::subject_scale(subject));
    out.push_back({render::render_keyframes(seq, mesh, skel, render::frame_sequence(seq, image_size)),
                   dataset::annotation(task)});
  }
  return out;
}

}  // namespace vihoi::priors
