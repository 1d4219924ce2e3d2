#include "vihoi/dataset/catalog.hpp"

#include <map>
#include <mutex>

#include "vihoi/common/error.hpp"
#include "vihoi/common/random.hpp"

namespace vihoi::dataset {

using geometry::PrimitiveKind;

geometry::ObjectMesh ObjectEntry::mesh() const {
  geometry::ObjectMesh m = geometry::make_primitive(kind, dims);
  m.name = id;
  return m;
}

const std::vector<ObjectEntry>& default_catalog() {
  static const std::vector<ObjectEntry> catalog = {
      {"box_small", PrimitiveKind::kBox, {0.34, 0.45, 0.30}, "small box", true},
      {"box_large", PrimitiveKind::kBox, {0.44, 0.50, 0.36}, "large box", false},
      {"cylinder_short", PrimitiveKind::kCylinder, {0.15, 0.45}, "trash can", true},
      {"cylinder_tall", PrimitiveKind::kCylinder, {0.13, 0.55}, "tall cylinder", false},
      {"lamp", PrimitiveKind::kLampComposite, {0.20, 0.75}, "floor lamp", false},
      {"table", PrimitiveKind::kTableComposite, {0.60, 0.45, 0.45}, "small table", false},
  };
  return catalog;
}

const ObjectEntry& find_object(std::string_view id) {
  for (const auto& e : default_catalog())
    if (e.id == id) return e;
  fail(ErrorCode::kInvalidArgument, "unknown object id: " + std::string(id));
}

const geometry::PointMatrix& catalog_basis() {
  static const geometry::PointMatrix basis = [] {
    std::vector<geometry::ObjectMesh> meshes;
    for (const auto& e : default_catalog()) meshes.push_back(e.mesh());
    return geometry::sample_basis_points(geometry::kDefaultBasisPoints, geometry::basis_radius_for(meshes),
                                         geometry::kDefaultBasisSeed);
  }();
  return basis;
}

const geometry::ObjectSpec& catalog_object_spec(std::string_view id) {
  static std::mutex mu;
  static std::map<std::string, geometry::ObjectSpec, std::less<>> cache;
  const ObjectEntry& entry = find_object(id);
  std::lock_guard lock(mu);
  if (auto it = cache.find(id); it != cache.end()) return it->second;
  auto spec = geometry::make_object_spec(entry.mesh(), catalog_basis(), derive_seed(0, entry.id));
  return cache.emplace(entry.id, std::move(spec)).first->second;
}

}  // namespace vihoi::dataset
