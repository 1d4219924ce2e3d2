#include "vihoi/geometry/keypoints.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "vihoi/common/error.hpp"
#include "vihoi/common/random.hpp"

namespace vihoi::geometry {

Eigen::Matrix<double, kKeypointCount, 3, Eigen::RowMajor> KeypointSet::stacked() const {
  Eigen::Matrix<double, kKeypointCount, 3, Eigen::RowMajor> out;
  for (int i = 0; i < 8; ++i) out.row(i) = aabb_points[static_cast<std::size_t>(i)].transpose();
  for (int i = 0; i < kPoissonKeypoints; ++i) out.row(8 + i) = poisson_points[static_cast<std::size_t>(i)].transpose();
  return out;
}

KeypointSet sample_keypoints(const ObjectMesh& mesh, std::uint64_t seed) {
  validate(mesh);
  KeypointSet out;
  out.aabb_points = bounding_box(mesh).corners();

  const auto tris = canonical_triangles(mesh);
  std::vector<double> cdf(tris.size());
  double total = 0.0;
  for (std::size_t i = 0; i < tris.size(); ++i) {
    total += 0.5 * (tris[i][1] - tris[i][0]).cross(tris[i][2] - tris[i][0]).norm();
    cdf[i] = total;
  }
  if (!(total > 0)) fail(ErrorCode::kSamplingFailed, "mesh has zero surface area");

  Rng rng(derive_seed(seed, geometry_hash(mesh)));
  auto sample = [&] {
    const double u = rng.uniform() * total;
    const auto idx = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()), tris.size() - 1);
    const Triangle& t = tris[idx];
    const double s = std::sqrt(rng.uniform());
    const double b = rng.uniform();
    return Vec3((1 - s) * t[0] + s * (1 - b) * t[1] + s * b * t[2]);
  };

  double radius = std::sqrt(total / (16.0 * std::numbers::pi));
  for (int round = 0; round <= kMaxRadiusHalvings; ++round, radius *= 0.5) {
    std::vector<Vec3> accepted;
    for (int dart = 0; dart < kDartsPerRadius && accepted.size() < kPoissonKeypoints; ++dart) {
      const Vec3 p = sample();
      const bool ok = std::all_of(accepted.begin(), accepted.end(), [&](const Vec3& q) { return (p - q).norm() >= radius; });
      if (ok) accepted.push_back(p);
    }
    if (accepted.size() == kPoissonKeypoints) {
      std::copy(accepted.begin(), accepted.end(), out.poisson_points.begin());
      out.radius = radius;
      return out;
    }
  }
  fail(ErrorCode::kSamplingFailed, "could not place 16 Poisson-disk keypoints on " + mesh.name);
}

}  // namespace vihoi::geometry
