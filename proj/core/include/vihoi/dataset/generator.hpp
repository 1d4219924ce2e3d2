#pragma once

#include <cstdint>

#include "vihoi/dataset/toy_task.hpp"
#include "vihoi/geometry/distance.hpp"
#include "vihoi/motion/motion_sequence.hpp"

namespace vihoi::dataset {

inline constexpr double kContactThreshold = 0.05;  // meters

struct GeneratorConfig {
  double fps = 20.0;
  double contact_threshold = kContactThreshold;
};

// Subjects are skeleton scale factors in [0.9, 1.1], fixed per id.
double subject_scale(int subject_id);

// Approach → contact → manipulate → release, solved with two-bone IK for
// arms and legs and a spine/pelvis posture search. Contact labels come from
// forward kinematics: a hand is in contact on frames where its wrist lies
// within the threshold of the posed object surface. Throws InfeasibleTask
// when a target is out of reach.
motion::MotionSequence generate_sequence(const ToyTask& task, int subject_id, std::uint64_t seed,
                                         const GeneratorConfig& config = {});

// Distance from a world-space point to the object surface at `frame`.
double surface_distance(const motion::MotionSequence& seq, const geometry::SdfQuery& sdf, int frame,
                        const motion::Vec3& world_point);

}  // namespace vihoi::dataset
