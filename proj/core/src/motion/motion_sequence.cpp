#include "vihoi/motion/motion_sequence.hpp"

#include "vihoi/common/error.hpp"

namespace vihoi::motion {

MotionSequence MotionSequence::zeros(int length, double fps) {
  MotionSequence s;
  s.root_transl = FrameMatrix<3>::Zero(length, 3);
  s.joint_rot6d = FrameMatrix<kNumJoints * 6>::Zero(length, kNumJoints * 6);
  s.obj_transl = FrameMatrix<3>::Zero(length, 3);
  s.obj_rot6d = FrameMatrix<6>::Zero(length, 6);
  const Rot6 id = identity_rot6d();
  for (int f = 0; f < length; ++f) {
    for (int j = 0; j < kNumJoints; ++j) s.set_joint_rotation(f, j, id);
    s.obj_rot6d.row(f) = id.transpose();
  }
  s.contact.assign(static_cast<std::size_t>(length), {false, false});
  s.fps = fps;
  return s;
}

Eigen::Isometry3d MotionSequence::object_pose(int frame) const {
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
  pose.linear() = object_rotation(frame);
  pose.translation() = obj_transl.row(frame).transpose();
  return pose;
}

void validate(const MotionSequence& seq) {
  const auto L = seq.root_transl.rows();
  if (L < 2) fail(ErrorCode::kInvalidArgument, "motion sequence needs at least 2 frames");
  if (seq.joint_rot6d.rows() != L || seq.obj_transl.rows() != L || seq.obj_rot6d.rows() != L ||
      static_cast<Eigen::Index>(seq.contact.size()) != L) {
    fail(ErrorCode::kShapeMismatch, "motion sequence fields disagree on frame count");
  }
  if (!(seq.fps > 0)) fail(ErrorCode::kInvalidArgument, "fps must be positive");
  if (!seq.root_transl.allFinite() || !seq.obj_transl.allFinite()) fail(ErrorCode::kInvalidArgument, "non-finite translation");
  for (Eigen::Index f = 0; f < L; ++f) {
    for (int j = 0; j < kNumJoints; ++j) rot6d_to_matrix(seq.joint_rotation(static_cast<int>(f), j));
    rot6d_to_matrix(seq.obj_rot6d.row(f).transpose());
  }
}

RowMatrix to_model_matrix(const MotionSequence& seq) {
  const auto L = seq.length();
  RowMatrix x(L, kModelWidth);
  x.leftCols(3) = seq.root_transl;
  x.middleCols(3, kNumJoints * 6) = seq.joint_rot6d;
  x.middleCols(3 + kNumJoints * 6, 3) = seq.obj_transl;
  x.rightCols(6) = seq.obj_rot6d;
  return x;
}

MotionSequence from_model_matrix(const RowMatrix& x, double fps, std::string text) {
  if (x.cols() != kModelWidth) fail(ErrorCode::kShapeMismatch, "model matrix must be L×144");
  MotionSequence s;
  s.root_transl = x.leftCols(3);
  s.joint_rot6d = x.middleCols(3, kNumJoints * 6);
  s.obj_transl = x.middleCols(3 + kNumJoints * 6, 3);
  s.obj_rot6d = x.rightCols(6);
  s.contact.assign(static_cast<std::size_t>(x.rows()), {false, false});
  s.fps = fps;
  s.text = std::move(text);
  return s;
}

FrameKinematics forward_kinematics_frame(const MotionSequence& seq, int frame, const Skeleton& skel) {
  FrameKinematics k;
  for (int j = 0; j < kNumJoints; ++j) {
    const Mat3 local = rot6d_to_matrix(seq.joint_rotation(frame, j));
    const int p = skel.parent[static_cast<std::size_t>(j)];
    if (p < 0) {
      k.rotations[j] = local;
      k.positions[j] = seq.root_transl.row(frame).transpose();
    } else {
      k.rotations[j] = k.rotations[p] * local;
      k.positions[j] = k.positions[p] + k.rotations[p] * skel.offset[j];
    }
  }
  return k;
}

std::vector<Pose> forward_kinematics(const MotionSequence& seq, const Skeleton& skel) {
  std::vector<Pose> out;
  out.reserve(static_cast<std::size_t>(seq.length()));
  for (int f = 0; f < seq.length(); ++f) out.push_back(forward_kinematics_frame(seq, f, skel).positions);
  return out;
}

RowMatrix to_eval_representation(const MotionSequence& seq) {
  const auto L = seq.length();
  RowMatrix x(L, kEvalWidth);
  x.leftCols(3) = seq.root_transl;
  x.middleCols(3, kNumJoints * 6) = seq.joint_rot6d;
  x.middleCols(3 + kNumJoints * 6, 3) = seq.obj_transl;
  for (int f = 0; f < L; ++f) {
    const Mat3 r = seq.object_rotation(f);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) x(f, 3 + kNumJoints * 6 + 3 + i * 3 + j) = r(i, j);
  }
  return x;
}

}  // namespace vihoi::motion
