#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace vihoi::geometry {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;
using Triangle = std::array<Vec3, 3>;

struct ObjectMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;  // counter-clockwise seen from outside
  std::string name;
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  double half_diagonal() const { return 0.5 * extent().norm(); }
  // Corner i has x from bit 0, y from bit 1, z from bit 2 (0 = min, 1 = max).
  std::array<Vec3, 8> corners() const;
};

// Throws EmptyMesh for a mesh without faces and InvalidArgument for
// out-of-range indices or non-finite vertices.
void validate(const ObjectMesh& mesh);

Aabb bounding_box(const ObjectMesh& mesh);
double surface_area(const ObjectMesh& mesh);
// Signed volume by the divergence theorem; positive for outward-facing
// closed meshes.
double volume(const ObjectMesh& mesh);
// Every undirected edge is used by exactly two faces, once in each direction.
bool is_watertight(const ObjectMesh& mesh);

ObjectMesh translated(const ObjectMesh& mesh, const Vec3& offset);
ObjectMesh scaled(const ObjectMesh& mesh, double s);
// Appends b to a (indices shifted).
void append(ObjectMesh& a, const ObjectMesh& b);

// Triangles with each triangle's vertices rotated to start at the
// lexicographically smallest one, sorted lexicographically. Independent of
// vertex and face ordering.
std::vector<Triangle> canonical_triangles(const ObjectMesh& mesh);
// Hex SHA-256 of the canonical triangle list.
std::string geometry_hash(const ObjectMesh& mesh);

// ASCII OBJ subset: v and f records. Polygons are fan-triangulated, texture
// and normal indices after '/' are ignored, negative indices are relative.
ObjectMesh parse_obj(std::string_view text, std::string name = {});
std::string format_obj(const ObjectMesh& mesh);
ObjectMesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const ObjectMesh& mesh);

}  // namespace vihoi::geometry
