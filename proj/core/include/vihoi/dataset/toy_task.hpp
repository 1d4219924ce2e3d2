#pragma once

#include <array>
#include <string>
#include <string_view>

#include "vihoi/common/random.hpp"
#include "vihoi/dataset/catalog.hpp"

namespace vihoi::dataset {

enum class Verb { kLift, kPush, kPull, kKick, kRotate };
inline constexpr std::array<Verb, 5> kAllVerbs = {Verb::kLift, Verb::kPush, Verb::kPull, Verb::kKick, Verb::kRotate};

std::string to_string(Verb v);
Verb parse_verb(std::string_view name);

// Parametric description of one interaction, in a local frame where the
// subject starts at the origin facing +z. The scene is then rotated by
// `heading` about +y and shifted by `origin`.
struct ToyTask {
  Verb verb = Verb::kLift;
  std::string object_id;
  double distance = 0.45;     // pelvis to object center along +z at the start
  double support = 0.0;       // object base height at rest: start (lift/pull/rotate) or start platform (push)
  double target = 0.0;        // lift: end platform height; push/pull/kick: travel; rotate: signed yaw (rad)
  double heading = 0.0;       // radians
  double origin_x = 0.0;      // meters
  double origin_z = 0.0;
  int duration_frames = 40;
};

// Throws InvalidArgument: duration < 30, unknown object, verb/object
// mismatch or waypoints outside the 4 m × 4 m workspace.
void validate(const ToyTask& task);

ToyTask sample_task(Verb verb, Rng& rng, int duration_frames);

std::string annotation(const ToyTask& task);

}  // namespace vihoi::dataset
