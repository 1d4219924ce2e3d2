#pragma once

#include <cstdint>
#include <memory>

#include "vihoi/geometry/bps.hpp"
#include "vihoi/geometry/distance.hpp"
#include "vihoi/geometry/keypoints.hpp"

namespace vihoi::geometry {

// Everything the pipeline needs to know about one object.
struct ObjectSpec {
  ObjectMesh mesh;  // canonical pose
  BpsEncoding bps;  // basis centered on the AABB center
  KeypointSet keypoints;
  std::shared_ptr<const SdfQuery> sdf;
};

ObjectSpec make_object_spec(const ObjectMesh& mesh, const PointMatrix& basis, std::uint64_t keypoint_seed);

}  // namespace vihoi::geometry
