#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vihoi/motion/rotation.hpp"
#include "vihoi/motion/skeleton.hpp"

namespace vihoi::motion {

template <int Cols>
using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Cols, Cols == 1 ? Eigen::ColMajor : Eigen::RowMajor>;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Width of the generator-side representation: root(3) + 22·6 + obj(3) + obj 6D(6).
inline constexpr int kModelWidth = 3 + kNumJoints * 6 + 3 + 6;
// Width of the evaluator-side representation, with a 3×3 object rotation.
inline constexpr int kEvalWidth = 3 + kNumJoints * 6 + 3 + 9;

using ContactLabels = std::vector<std::array<bool, 2>>;  // [left hand, right hand]

struct MotionSequence {
  FrameMatrix<3> root_transl;            // L×3, meters
  FrameMatrix<kNumJoints * 6> joint_rot6d;  // L×132, joint-major local rotations
  FrameMatrix<3> obj_transl;             // L×3, meters
  FrameMatrix<6> obj_rot6d;              // L×6
  ContactLabels contact;                 // L×2
  double fps = 30.0;
  std::string text;

  int length() const { return static_cast<int>(root_transl.rows()); }

  static MotionSequence zeros(int length, double fps = 30.0);

  Rot6 joint_rotation(int frame, int joint) const { return joint_rot6d.block<1, 6>(frame, joint * 6).transpose(); }
  void set_joint_rotation(int frame, int joint, const Rot6& r) { joint_rot6d.block<1, 6>(frame, joint * 6) = r.transpose(); }
  Mat3 object_rotation(int frame) const { return rot6d_to_matrix(obj_rot6d.row(frame).transpose()); }
  Eigen::Isometry3d object_pose(int frame) const;
};

// Throws ShapeMismatch/InvalidArgument/DegenerateRotation on violations of
// the type invariants (L ≥ 2, shared leading dimension, valid rotations).
void validate(const MotionSequence& seq);

// L×144 generator representation and its inverse (contact labels cleared).
RowMatrix to_model_matrix(const MotionSequence& seq);
MotionSequence from_model_matrix(const RowMatrix& x, double fps, std::string text = {});

using Pose = std::array<Vec3, kNumJoints>;

struct FrameKinematics {
  Pose positions;
  std::array<Mat3, kNumJoints> rotations;  // global joint orientations
};

FrameKinematics forward_kinematics_frame(const MotionSequence& seq, int frame, const Skeleton& skel);
// L poses of 22 joint positions in meters.
std::vector<Pose> forward_kinematics(const MotionSequence& seq, const Skeleton& skel);

// L×147: [root(3) | joints 6D(132) | obj transl(3) | obj rotation row-major(9)].
RowMatrix to_eval_representation(const MotionSequence& seq);

}  // namespace vihoi::motion
