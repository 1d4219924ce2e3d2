#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vihoi/geometry/mesh.hpp"
#include "vihoi/geometry/object_spec.hpp"
#include "vihoi/geometry/primitives.hpp"

namespace vihoi::dataset {

struct ObjectEntry {
  std::string id;
  geometry::PrimitiveKind kind;
  std::vector<double> dims;
  std::string noun;  // used in text annotations
  bool kickable = false;

  geometry::ObjectMesh mesh() const;
};

// Fixed object set of the toy corpus: two boxes, two cylinders, a lamp and
// a table, all sized so that a standing subject can reach their sides.
const std::vector<ObjectEntry>& default_catalog();
const ObjectEntry& find_object(std::string_view id);

// BPS basis shared by every catalog object: 1024 points, seed 7, radius from
// basis_radius_for over the catalog meshes.
const geometry::PointMatrix& catalog_basis();
// Built once per object and cached; thread-safe.
const geometry::ObjectSpec& catalog_object_spec(std::string_view id);

}  // namespace vihoi::dataset
