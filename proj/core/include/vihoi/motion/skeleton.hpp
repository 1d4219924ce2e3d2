#pragma once

#include <array>
#include <string>
#include <string_view>

#include "vihoi/motion/rotation.hpp"

namespace vihoi::motion {

inline constexpr int kNumJoints = 22;

// Joint indices in SMPL-compatible order.
enum Joint : int {
  kPelvis = 0,
  kLeftHip = 1,
  kRightHip = 2,
  kSpine1 = 3,
  kLeftKnee = 4,
  kRightKnee = 5,
  kSpine2 = 6,
  kLeftAnkle = 7,
  kRightAnkle = 8,
  kSpine3 = 9,
  kLeftFoot = 10,
  kRightFoot = 11,
  kNeck = 12,
  kLeftCollar = 13,
  kRightCollar = 14,
  kHead = 15,
  kLeftShoulder = 16,
  kRightShoulder = 17,
  kLeftElbow = 18,
  kRightElbow = 19,
  kLeftWrist = 20,
  kRightWrist = 21,
};

// Contact and penetration are measured at the wrist joints.
inline constexpr std::array<int, 2> kHandJoints = {kLeftWrist, kRightWrist};
inline constexpr std::array<int, 2> kFootJoints = {kLeftFoot, kRightFoot};

struct Skeleton {
  std::array<int, kNumJoints> parent{};
  std::array<Vec3, kNumJoints> offset{};
  std::array<std::string, kNumJoints> name{};
  // Pelvis height at which the rest-pose feet touch y = 0.
  double rest_pelvis_height = 0.0;

  // The shipped 22-joint skeleton, uniformly scaled.
  static Skeleton standard(double scale = 1.0);
  static Skeleton from_json(std::string_view text);

  Skeleton scaled(double s) const;
  double bone_length(int joint) const { return offset[static_cast<std::size_t>(joint)].norm(); }
  // Throws InvalidArgument unless parents form a tree rooted at joint 0
  // (every parent index precedes its child) and offsets are finite.
  void validate() const;
};

}  // namespace vihoi::motion
