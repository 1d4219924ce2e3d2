#include "vihoi/motion/skeleton.hpp"

#include <cmath>
#include <json.hpp>

#include "vihoi/common/embedded_data.hpp"
#include "vihoi/common/error.hpp"

namespace vihoi::motion {

Skeleton Skeleton::from_json(std::string_view text) {
  const auto doc = nlohmann::json::parse(text);
  const auto& joints = doc.at("joints");
  if (joints.size() != kNumJoints) fail(ErrorCode::kFormat, "skeleton must have 22 joints");
  Skeleton s;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    s.name[i] = joints[i].at("name").get<std::string>();
    s.parent[i] = joints[i].at("parent").get<int>();
    const auto& o = joints[i].at("offset");
    s.offset[i] = Vec3(o[0].get<double>(), o[1].get<double>(), o[2].get<double>());
  }
  s.rest_pelvis_height = doc.at("rest_pelvis_height").get<double>();
  s.validate();
  return s;
}

Skeleton Skeleton::standard(double scale) {
  static const Skeleton base = from_json(data::skeleton_json());
  return scale == 1.0 ? base : base.scaled(scale);
}

Skeleton Skeleton::scaled(double s) const {
  Skeleton out = *this;
  for (auto& o : out.offset) o *= s;
  out.rest_pelvis_height *= s;
  return out;
}

void Skeleton::validate() const {
  if (parent[0] != -1) fail(ErrorCode::kInvalidArgument, "joint 0 must be the root");
  for (int j = 1; j < kNumJoints; ++j) {
    if (parent[j] < 0 || parent[j] >= j) fail(ErrorCode::kInvalidArgument, "parent indices must precede children");
  }
  for (const auto& o : offset)
    if (!o.allFinite()) fail(ErrorCode::kInvalidArgument, "non-finite bone offset");
}

}  // namespace vihoi::motion
