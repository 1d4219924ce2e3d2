#pragma once

#include <cstdint>
#include <vector>

#include "vihoi/geometry/mesh.hpp"

namespace vihoi::geometry {

inline constexpr int kDefaultBasisPoints = 1024;
inline constexpr std::uint64_t kDefaultBasisSeed = 7;
inline constexpr double kBasisRadiusFactor = 1.2;

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct BpsEncoding {
  PointMatrix basis;         // B×3
  Eigen::VectorXd distances;  // B
};

// Uniform samples inside a ball centered at the origin.
PointMatrix sample_basis_points(int count, double radius, std::uint64_t seed);

// Exact minimum point-to-triangle distance for every basis point, measured
// in the mesh's own frame. Throws EmptyMesh.
BpsEncoding bps_encode(const ObjectMesh& mesh, const PointMatrix& basis);

// 1.2 × the largest AABB half-diagonal over the given meshes.
double basis_radius_for(const std::vector<ObjectMesh>& meshes);

}  // namespace vihoi::geometry
