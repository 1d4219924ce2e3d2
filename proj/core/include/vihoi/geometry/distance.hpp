#pragma once

#include <vector>

#include "vihoi/geometry/mesh.hpp"

namespace vihoi::geometry {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);
double point_triangle_distance(const Vec3& p, const Triangle& t);

// Generalized winding number: ≈1 inside a closed outward mesh, ≈0 outside.
double winding_number(const ObjectMesh& mesh, const Vec3& p);

// Exact unsigned distance to the surface (brute force over triangles).
double unsigned_distance(const ObjectMesh& mesh, const Vec3& p);

// Signed distance query bound to a watertight mesh. Negative inside; the
// sign comes from the winding number and the magnitude is exact.
class SdfQuery {
 public:
  // Throws EmptyMesh or NotWatertight.
  explicit SdfQuery(ObjectMesh mesh);

  double operator()(const Vec3& p) const;
  double unsigned_distance(const Vec3& p) const;
  bool inside(const Vec3& p) const;
  const ObjectMesh& mesh() const { return mesh_; }

 private:
  ObjectMesh mesh_;
  std::vector<Triangle> triangles_;
  Aabb box_;
};

// Convenience wrapper; builds an SdfQuery per call.
double signed_distance(const ObjectMesh& mesh, const Vec3& p);

}  // namespace vihoi::geometry
