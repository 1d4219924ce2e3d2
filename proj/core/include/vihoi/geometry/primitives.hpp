#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vihoi/geometry/mesh.hpp"

namespace vihoi::geometry {

enum class PrimitiveKind { kBox, kCylinder, kLampComposite, kTableComposite };

PrimitiveKind parse_primitive_kind(std::string_view name);
std::string to_string(PrimitiveKind kind);

inline constexpr int kDefaultSegments = 64;

// Canonical pose: centered on the y axis, resting on y = 0.
//   box             dims {width x, height y, depth z}
//   cylinder        dims {radius, height}
//   lamp_composite  dims {base radius, height}: disc base, pole, shade
//   table_composite dims {width x, height y, depth z}: top slab and 4 legs
// Composite parts touch but do not overlap. Throws BadDims.
ObjectMesh make_primitive(PrimitiveKind kind, const std::vector<double>& dims, int segments = kDefaultSegments);

ObjectMesh make_box(const Vec3& min, const Vec3& max);
ObjectMesh make_cylinder(double radius, double y0, double y1, int segments, const Vec3& axis_origin = Vec3::Zero());
// UV sphere centered at the origin.
ObjectMesh make_sphere(double radius, int stacks, int slices);

}  // namespace vihoi::geometry
