#include "vihoi/motion/rotation.hpp"

#include "vihoi/common/error.hpp"

namespace vihoi::motion {

Mat3 rot6d_to_matrix(const Rot6& r) {
  const Vec3 a1 = r.head<3>();
  const Vec3 a2 = r.tail<3>();
  const double n1 = a1.norm();
  const double n2 = a2.norm();
  if (!(n1 >= 1e-8) || !(n2 >= 1e-8)) fail(ErrorCode::kDegenerateRotation, "6D rotation has a near-zero column");
  if (a1.cross(a2).norm() / (n1 * n2) < 1e-8) fail(ErrorCode::kDegenerateRotation, "6D rotation columns are parallel");
  const Vec3 b1 = a1 / n1;
  const Vec3 b2 = (a2 - b1.dot(a2) * b1).normalized();
  Mat3 m;
  m.col(0) = b1;
  m.col(1) = b2;
  m.col(2) = b1.cross(b2);
  return m;
}

Rot6 matrix_to_rot6d(const Mat3& m) {
  if (!m.allFinite() || ((m.transpose() * m) - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-5) {
    fail(ErrorCode::kNotARotation, "matrix is not orthonormal");
  }
  if (m.determinant() <= 0.0) fail(ErrorCode::kNotARotation, "matrix is a reflection");
  Rot6 r;
  r.head<3>() = m.col(0);
  r.tail<3>() = m.col(1);
  return r;
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

namespace {

Mat3 frame_of(const Vec3& dir, const Vec3& pole) {
  const Vec3 x = dir.normalized();
  Vec3 y = pole - pole.dot(x) * x;
  if (y.norm() < 1e-9) {
    // Pole parallel to the bone; any perpendicular will do.
    y = x.unitOrthogonal();
  }
  y.normalize();
  Mat3 f;
  f.col(0) = x;
  f.col(1) = y;
  f.col(2) = x.cross(y);
  return f;
}

}  // namespace

Mat3 align_frames(const Vec3& rest_dir, const Vec3& rest_pole, const Vec3& dir, const Vec3& pole) {
  return frame_of(dir, pole) * frame_of(rest_dir, rest_pole).transpose();
}

}  // namespace vihoi::motion
