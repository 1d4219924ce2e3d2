#pragma once

#include <array>
#include <cstdint>

#include "vihoi/geometry/mesh.hpp"

namespace vihoi::geometry {

inline constexpr int kPoissonKeypoints = 16;
inline constexpr int kKeypointCount = 24;
// Darts thrown per radius before the radius is halved.
inline constexpr int kDartsPerRadius = 4000;
inline constexpr int kMaxRadiusHalvings = 4;

struct KeypointSet {
  std::array<Vec3, 8> aabb_points;
  std::array<Vec3, kPoissonKeypoints> poisson_points;
  double radius = 0.0;  // final Poisson radius actually used

  // 24×3 row-major, AABB corners first.
  Eigen::Matrix<double, kKeypointCount, 3, Eigen::RowMajor> stacked() const;
};

// AABB corners plus dart-throwing Poisson-disk samples on the surface.
// Initial radius sqrt(area / (16π)); on failure the radius halves, up to 4
// times, then SamplingFailed. Triangles are visited in canonical order and
// the sampler seed is mixed with the geometry hash, so the result does not
// depend on vertex or face ordering.
KeypointSet sample_keypoints(const ObjectMesh& mesh, std::uint64_t seed);

}  // namespace vihoi::geometry
