#include "vihoi/geometry/primitives.hpp"

#include <cmath>
#include <numbers>

#include "vihoi/common/error.hpp"

namespace vihoi::geometry {

PrimitiveKind parse_primitive_kind(std::string_view name) {
  if (name == "box") return PrimitiveKind::kBox;
  if (name == "cylinder") return PrimitiveKind::kCylinder;
  if (name == "lamp_composite") return PrimitiveKind::kLampComposite;
  if (name == "table_composite") return PrimitiveKind::kTableComposite;
  fail(ErrorCode::kInvalidArgument, "unknown primitive kind: " + std::string(name));
}

std::string to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::kBox: return "box";
    case PrimitiveKind::kCylinder: return "cylinder";
    case PrimitiveKind::kLampComposite: return "lamp_composite";
    case PrimitiveKind::kTableComposite: return "table_composite";
  }
  return "unknown";
}

namespace {

// Flips triangles of a convex piece so their normals point away from `inside`.
void orient_outward(ObjectMesh& mesh, std::size_t first_face, const Vec3& inside) {
  for (std::size_t i = first_face; i < mesh.faces.size(); ++i) {
    auto& f = mesh.faces[i];
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3 n = (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a);
    const Vec3 c = (a + mesh.vertices[f[1]] + mesh.vertices[f[2]]) / 3.0;
    if (n.dot(c - inside) < 0) std::swap(f[1], f[2]);
  }
}

void add_quad(ObjectMesh& m, int a, int b, int c, int d) {
  m.faces.push_back({a, b, c});
  m.faces.push_back({a, c, d});
}

}  // namespace

ObjectMesh make_box(const Vec3& min, const Vec3& max) {
  ObjectMesh m;
  for (const auto& c : Aabb{min, max}.corners()) m.vertices.push_back(c);
  add_quad(m, 0, 1, 3, 2);
  add_quad(m, 4, 5, 7, 6);
  add_quad(m, 0, 1, 5, 4);
  add_quad(m, 2, 3, 7, 6);
  add_quad(m, 0, 2, 6, 4);
  add_quad(m, 1, 3, 7, 5);
  orient_outward(m, 0, 0.5 * (min + max));
  return m;
}

ObjectMesh make_cylinder(double radius, double y0, double y1, int segments, const Vec3& axis_origin) {
  ObjectMesh m;
  const double step = 2.0 * std::numbers::pi / segments;
  for (const double y : {y0, y1})
    for (int i = 0; i < segments; ++i)
      m.vertices.emplace_back(axis_origin.x() + radius * std::cos(i * step), y, axis_origin.z() + radius * std::sin(i * step));
  const int bottom = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(axis_origin.x(), y0, axis_origin.z());
  m.vertices.emplace_back(axis_origin.x(), y1, axis_origin.z());
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    add_quad(m, i, j, segments + j, segments + i);
    m.faces.push_back({bottom, j, i});
    m.faces.push_back({bottom + 1, segments + i, segments + j});
  }
  orient_outward(m, 0, Vec3(axis_origin.x(), 0.5 * (y0 + y1), axis_origin.z()));
  return m;
}

ObjectMesh make_sphere(double radius, int stacks, int slices) {
  ObjectMesh m;
  m.vertices.emplace_back(0, radius, 0);
  for (int s = 1; s < stacks; ++s) {
    const double phi = std::numbers::pi * s / stacks;
    for (int k = 0; k < slices; ++k) {
      const double th = 2.0 * std::numbers::pi * k / slices;
      m.vertices.emplace_back(radius * std::sin(phi) * std::cos(th), radius * std::cos(phi), radius * std::sin(phi) * std::sin(th));
    }
  }
  m.vertices.emplace_back(0, -radius, 0);
  const int south = static_cast<int>(m.vertices.size()) - 1;
  auto ring = [&](int s, int k) { return 1 + (s - 1) * slices + (k % slices); };
  for (int k = 0; k < slices; ++k) {
    m.faces.push_back({0, ring(1, k), ring(1, k + 1)});
    m.faces.push_back({south, ring(stacks - 1, k + 1), ring(stacks - 1, k)});
    for (int s = 1; s + 1 < stacks; ++s) add_quad(m, ring(s, k), ring(s + 1, k), ring(s + 1, k + 1), ring(s, k + 1));
  }
  orient_outward(m, 0, Vec3::Zero());
  m.name = "sphere";
  return m;
}

ObjectMesh make_primitive(PrimitiveKind kind, const std::vector<double>& dims, int segments) {
  const std::size_t expected = (kind == PrimitiveKind::kBox || kind == PrimitiveKind::kTableComposite) ? 3 : 2;
  if (dims.size() != expected) fail(ErrorCode::kBadDims, to_string(kind) + " expects " + std::to_string(expected) + " dims");
  for (double d : dims)
    if (!(d > 0) || !std::isfinite(d)) fail(ErrorCode::kBadDims, "primitive dims must be positive");
  if (segments < 3) fail(ErrorCode::kBadDims, "need at least 3 segments");

  ObjectMesh m;
  switch (kind) {
    case PrimitiveKind::kBox:
      m = make_box(Vec3(-dims[0] / 2, 0, -dims[2] / 2), Vec3(dims[0] / 2, dims[1], dims[2] / 2));
      break;
    case PrimitiveKind::kCylinder:
      m = make_cylinder(dims[0], 0, dims[1], segments);
      break;
    case PrimitiveKind::kLampComposite: {
      const double r = dims[0], h = dims[1];
      const int seg = std::max(8, segments / 2);
      m = make_cylinder(r, 0, 0.08 * h, seg);
      append(m, make_cylinder(0.12 * r, 0.08 * h, 0.75 * h, seg));
      append(m, make_cylinder(0.7 * r, 0.75 * h, h, seg));
      break;
    }
    case PrimitiveKind::kTableComposite: {
      const double w = dims[0], h = dims[1], d = dims[2];
      const double top = std::min(0.06 * h, 0.04);
      const double leg = 0.08 * std::min(w, d);
      m = make_box(Vec3(-w / 2, h - top, -d / 2), Vec3(w / 2, h, d / 2));
      for (const double sx : {-1.0, 1.0})
        for (const double sz : {-1.0, 1.0}) {
          const Vec3 c(sx * (w / 2 - leg), 0, sz * (d / 2 - leg));
          append(m, make_box(Vec3(c.x() - leg / 2, 0, c.z() - leg / 2), Vec3(c.x() + leg / 2, h - top, c.z() + leg / 2)));
        }
      break;
    }
  }
  m.name = to_string(kind);
  return m;
}

}  // namespace vihoi::geometry
