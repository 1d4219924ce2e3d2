#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace vihoi::motion {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
// Continuous 6D rotation: the first two columns of the rotation matrix,
// stacked as [c0.x c0.y c0.z c1.x c1.y c1.z].
using Rot6 = Eigen::Matrix<double, 6, 1>;

// Gram–Schmidt completion. Throws DegenerateRotation when either column
// has norm < 1e-8 or the two are parallel within 1e-8.
Mat3 rot6d_to_matrix(const Rot6& r);

// Throws NotARotation unless M is orthonormal within 1e-5 with det +1.
Rot6 matrix_to_rot6d(const Mat3& m);

inline Rot6 identity_rot6d() {
  Rot6 r;
  r << 1, 0, 0, 0, 1, 0;
  return r;
}

Mat3 axis_angle(const Vec3& axis, double angle);

// Rotation taking the frame (a, pole) at rest to (b, target_pole); both
// pairs are orthogonalized first. Used to aim bones.
Mat3 align_frames(const Vec3& rest_dir, const Vec3& rest_pole, const Vec3& dir, const Vec3& pole);

}  // namespace vihoi::motion
