#include "vihoi/dataset/toy_task.hpp"

#include <cmath>
#include <numbers>

#include "vihoi/common/error.hpp"
#include "vihoi/geometry/mesh.hpp"

namespace vihoi::dataset {

std::string to_string(Verb v) {
  switch (v) {
    case Verb::kLift: return "lift";
    case Verb::kPush: return "push";
    case Verb::kPull: return "pull";
    case Verb::kKick: return "kick";
    case Verb::kRotate: return "rotate";
  }
  return "unknown";
}

Verb parse_verb(std::string_view name) {
  for (Verb v : kAllVerbs)
    if (to_string(v) == name) return v;
  fail(ErrorCode::kInvalidArgument, "unknown verb: " + std::string(name));
}

namespace {

constexpr double kWorkspaceHalf = 2.0;

std::vector<const ObjectEntry*> candidates(Verb verb) {
  std::vector<const ObjectEntry*> out;
  for (const auto& e : default_catalog())
    if (verb != Verb::kKick || e.kickable) out.push_back(&e);
  return out;
}

double half_depth(const ObjectEntry& e) { return 0.5 * geometry::bounding_box(e.mesh()).extent().z(); }

}  // namespace

void validate(const ToyTask& task) {
  if (task.duration_frames < 30) fail(ErrorCode::kInvalidArgument, "toy task duration must be at least 30 frames");
  const ObjectEntry& obj = find_object(task.object_id);
  if (task.verb == Verb::kKick && !obj.kickable) fail(ErrorCode::kInvalidArgument, obj.id + " cannot be kicked");
  if (!(task.distance > 0) || task.support < 0) fail(ErrorCode::kInvalidArgument, "bad task geometry");
  const double reach = task.distance + std::abs(task.verb == Verb::kRotate ? 0.0 : task.target) + 0.3;
  if (std::abs(task.origin_x) + reach > kWorkspaceHalf || std::abs(task.origin_z) + reach > kWorkspaceHalf) {
    fail(ErrorCode::kInvalidArgument, "task waypoints leave the 4 m workspace");
  }
}

ToyTask sample_task(Verb verb, Rng& rng, int duration_frames) {
  const auto objs = candidates(verb);
  ToyTask t;
  t.verb = verb;
  t.object_id = objs[rng.uniform_index(objs.size())]->id;
  t.duration_frames = duration_frames;
  const double hd = half_depth(find_object(t.object_id));
  switch (verb) {
    case Verb::kLift:
      t.support = 0.0;
      t.target = rng.uniform(0.25, 0.40);
      t.distance = hd + rng.uniform(0.18, 0.25);
      break;
    case Verb::kPush:
      t.support = rng.uniform(0.25, 0.40);
      t.target = rng.uniform(0.20, 0.30);
      t.distance = hd + rng.uniform(0.18, 0.25);
      break;
    case Verb::kPull:
      t.support = rng.uniform(0.0, 0.20);
      t.target = rng.uniform(0.20, 0.30);
      t.distance = hd + rng.uniform(0.20, 0.27);
      break;
    case Verb::kRotate:
      t.support = rng.uniform(0.0, 0.20);
      t.target = (rng.uniform() < 0.5 ? -1.0 : 1.0) * std::numbers::pi / 4;
      t.distance = hd + rng.uniform(0.18, 0.25);
      break;
    case Verb::kKick:
      t.support = 0.0;
      t.target = rng.uniform(0.20, 0.30);
      t.distance = hd + rng.uniform(0.30, 0.38);
      break;
  }
  t.heading = rng.uniform(-0.4, 0.4);
  t.origin_x = rng.uniform(-0.8, 0.8);
  t.origin_z = rng.uniform(-0.8, 0.8);
  validate(t);
  return t;
}

std::string annotation(const ToyTask& task) {
  const std::string& noun = find_object(task.object_id).noun;
  switch (task.verb) {
    case Verb::kLift: return "Lift the " + noun + " and set it down on the platform.";
    case Verb::kPush: return "Push the " + noun + " off the platform.";
    case Verb::kPull: return "Pull the " + noun + " toward you.";
    case Verb::kKick: return "Kick the " + noun + " forward.";
    case Verb::kRotate: return std::string("Rotate the ") + noun + (task.target > 0 ? " to the left." : " to the right.");
  }
  return {};
}

}  // namespace vihoi::dataset
