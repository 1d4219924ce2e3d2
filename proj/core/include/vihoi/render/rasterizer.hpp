#pragma once

#include <array>

#include "vihoi/common/image.hpp"
#include "vihoi/geometry/mesh.hpp"
#include "vihoi/motion/motion_sequence.hpp"
#include "vihoi/render/keyframes.hpp"

namespace vihoi::render {

using motion::Vec3;

struct Camera {
  Vec3 eye = Vec3(0, 1, 3);
  Vec3 look_at = Vec3(0, 1, 0);
  Vec3 up = Vec3::UnitY();
  double ortho_scale = 0.01;  // meters per pixel
  int height = 224;
  int width = 224;

  // Throws BadCamera for a degenerate view direction, an up vector parallel
  // to it, or a non-positive scale or resolution.
  void validate() const;
  // Image-plane basis: right, down, forward.
  std::array<Vec3, 3> basis() const;
  // (column, row, depth) of a world point; pixel centers sit at integer + 0.5.
  Vec3 project(const Vec3& p) const;
};

// Camera framing a human at `human` and an object at `object` from the
// subject's front-right, rotated with the scene heading. Scene extent of
// 2.4 m across the image.
Camera frame_scene(const Vec3& human, const Vec3& object, double heading, int resolution);
Camera frame_sequence(const motion::MotionSequence& seq, int resolution);

inline constexpr std::array<float, 3> kBackground = {0.93f, 0.93f, 0.95f};

// Orthographic, z-buffered, flat-shaded software renderer: the posed object
// mesh as triangles and the skeleton as capsules between FK joint positions.
// A null mesh draws the skeleton only; a null skeleton draws the object only.
Image render_frame(const motion::MotionSequence& seq, int frame, const geometry::ObjectMesh* mesh,
                   const motion::Skeleton* skel, const Camera& cam);

std::array<Image, 3> render_keyframes(const motion::MotionSequence& seq, const geometry::ObjectMesh& mesh,
                                      const motion::Skeleton& skel, const Camera& cam);

// Subject standing in an A-pose at the origin facing +z, object resting
// `distance` meters in front of it; used as the seed image for text-to-image
// generation at inference.
motion::MotionSequence a_pose_scene(double distance = 0.5);
Image render_seed_image(const geometry::ObjectMesh& mesh, const motion::Skeleton& skel, int resolution);

// Horizontal strip of the three keyframes with contact hands highlighted.
Image contact_strip(const motion::MotionSequence& seq, const geometry::ObjectMesh& mesh,
                    const motion::Skeleton& skel, const Camera& cam);

}  // namespace vihoi::render
