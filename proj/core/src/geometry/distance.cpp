#include "vihoi/geometry/distance.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "vihoi/common/error.hpp"

namespace vihoi::geometry {

// Region-based closest point (Ericson, Real-Time Collision Detection 5.1.5).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double point_triangle_distance(const Vec3& p, const Triangle& t) {
  return (p - closest_point_on_triangle(p, t[0], t[1], t[2])).norm();
}

namespace {

// Signed solid angle of triangle (a, b, c) seen from p (Van Oosterom–Strackee).
double solid_angle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 x = a - p, y = b - p, z = c - p;
  const double lx = x.norm(), ly = y.norm(), lz = z.norm();
  const double num = x.dot(y.cross(z));
  const double den = lx * ly * lz + x.dot(y) * lz + y.dot(z) * lx + z.dot(x) * ly;
  return 2.0 * std::atan2(num, den);
}

double winding(const std::vector<Triangle>& tris, const Vec3& p) {
  double w = 0.0;
  for (const auto& t : tris) w += solid_angle(p, t[0], t[1], t[2]);
  return w / (4.0 * std::numbers::pi);
}

double min_distance(const std::vector<Triangle>& tris, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : tris) best = std::min(best, (p - closest_point_on_triangle(p, t[0], t[1], t[2])).squaredNorm());
  return std::sqrt(best);
}

std::vector<Triangle> triangles_of(const ObjectMesh& mesh) {
  std::vector<Triangle> tris;
  tris.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) tris.push_back({mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]});
  return tris;
}

}  // namespace

double winding_number(const ObjectMesh& mesh, const Vec3& p) { return winding(triangles_of(mesh), p); }

double unsigned_distance(const ObjectMesh& mesh, const Vec3& p) {
  validate(mesh);
  return min_distance(triangles_of(mesh), p);
}

SdfQuery::SdfQuery(ObjectMesh mesh) : mesh_(std::move(mesh)) {
  validate(mesh_);
  if (!is_watertight(mesh_)) fail(ErrorCode::kNotWatertight, "signed distance needs a watertight mesh: " + mesh_.name);
  triangles_ = triangles_of(mesh_);
  box_ = bounding_box(mesh_);
}

double SdfQuery::unsigned_distance(const Vec3& p) const { return min_distance(triangles_, p); }

bool SdfQuery::inside(const Vec3& p) const {
  if ((p.array() < box_.min.array()).any() || (p.array() > box_.max.array()).any()) return false;
  return winding(triangles_, p) > 0.5;
}

double SdfQuery::operator()(const Vec3& p) const {
  const double d = unsigned_distance(p);
  return inside(p) ? -d : d;
}

double signed_distance(const ObjectMesh& mesh, const Vec3& p) { return SdfQuery(mesh)(p); }

}  // namespace vihoi::geometry
