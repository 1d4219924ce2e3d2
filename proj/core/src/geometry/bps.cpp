#include "vihoi/geometry/bps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vihoi/common/error.hpp"
#include "vihoi/common/random.hpp"
#include "vihoi/geometry/distance.hpp"

namespace vihoi::geometry {

PointMatrix sample_basis_points(int count, double radius, std::uint64_t seed) {
  if (count < 1 || !(radius > 0)) fail(ErrorCode::kInvalidArgument, "basis needs count >= 1 and radius > 0");
  Rng rng(seed);
  PointMatrix out(count, 3);
  for (int i = 0; i < count; ++i) {
    Vec3 dir;
    do {
      dir = Vec3(rng.normal(), rng.normal(), rng.normal());
    } while (dir.squaredNorm() < 1e-12);
    const double r = radius * std::cbrt(rng.uniform());
    out.row(i) = (r / dir.norm()) * dir.transpose();
  }
  return out;
}

BpsEncoding bps_encode(const ObjectMesh& mesh, const PointMatrix& basis) {
  validate(mesh);
  const auto tris = canonical_triangles(mesh);
  BpsEncoding enc{basis, Eigen::VectorXd(basis.rows())};
  for (Eigen::Index i = 0; i < basis.rows(); ++i) {
    const Vec3 p = basis.row(i).transpose();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : tris) best = std::min(best, (p - closest_point_on_triangle(p, t[0], t[1], t[2])).squaredNorm());
    enc.distances[i] = std::sqrt(best);
  }
  return enc;
}

double basis_radius_for(const std::vector<ObjectMesh>& meshes) {
  if (meshes.empty()) fail(ErrorCode::kInvalidArgument, "no meshes given");
  double r = 0.0;
  for (const auto& m : meshes) r = std::max(r, bounding_box(m).half_diagonal());
  return kBasisRadiusFactor * r;
}

}  // namespace vihoi::geometry
