#include "vihoi/render/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vihoi/common/error.hpp"

namespace vihoi::render {

using motion::Mat3;

void Camera::validate() const {
  const Vec3 f = look_at - eye;
  if (!(ortho_scale > 0) || height < 1 || width < 1) fail(ErrorCode::kBadCamera, "camera needs positive scale and resolution");
  if (!f.allFinite() || f.norm() < 1e-9) fail(ErrorCode::kBadCamera, "camera eye and look_at coincide");
  if (up.norm() < 1e-9 || f.normalized().cross(up.normalized()).norm() < 1e-6) {
    fail(ErrorCode::kBadCamera, "camera up vector is parallel to the view direction");
  }
}

std::array<Vec3, 3> Camera::basis() const {
  const Vec3 f = (look_at - eye).normalized();
  const Vec3 r = f.cross(up).normalized();
  const Vec3 true_up = r.cross(f);
  return {r, -true_up, f};
}

Vec3 Camera::project(const Vec3& p) const {
  const auto [r, d, f] = basis();
  const Vec3 q = p - look_at;
  return Vec3(0.5 * width + q.dot(r) / ortho_scale, 0.5 * height + q.dot(d) / ortho_scale, (p - eye).dot(f));
}

Camera frame_scene(const Vec3& human, const Vec3& object, double heading, int resolution) {
  Camera cam;
  Vec3 center = 0.5 * (human + object);
  center.y() = 0.75;
  const Vec3 dir = motion::axis_angle(Vec3::UnitY(), heading) * Vec3(-1.5, 0.6, 0.8).normalized();
  cam.look_at = center;
  cam.eye = center + 4.0 * dir;
  cam.up = Vec3::UnitY();
  cam.height = cam.width = resolution;
  cam.ortho_scale = 2.4 / resolution;
  return cam;
}

Camera frame_sequence(const motion::MotionSequence& seq, int resolution) {
  const Mat3 root = motion::rot6d_to_matrix(seq.joint_rotation(0, motion::kPelvis));
  const double heading = std::atan2(root(0, 2), root(2, 2));
  return frame_scene(seq.root_transl.row(0).transpose(), seq.obj_transl.row(0).transpose(), heading, resolution);
}

namespace {

using Color = std::array<float, 3>;

constexpr Color kObjectColor = {0.86f, 0.52f, 0.24f};
constexpr Color kTrunkColor = {0.50f, 0.52f, 0.58f};
constexpr Color kLeftColor = {0.25f, 0.45f, 0.85f};
constexpr Color kRightColor = {0.85f, 0.32f, 0.30f};
constexpr Color kContactColor = {1.00f, 0.85f, 0.10f};
constexpr double kBoneRadius = 0.035;
constexpr double kHeadRadius = 0.09;
constexpr double kContactRadius = 0.06;

class Canvas {
 public:
  explicit Canvas(const Camera& cam)
      : cam_(cam),
        image_(cam.height, cam.width),
        depth_(static_cast<std::size_t>(cam.height) * cam.width, std::numeric_limits<double>::infinity()) {
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x)
        for (int c = 0; c < 3; ++c) image_.at(y, x, c) = kBackground[c];
  }

  void triangle(const Vec3& a, const Vec3& b, const Vec3& c, const Color& color) {
    const Vec3 n = (b - a).cross(c - a);
    if (n.norm() < 1e-15) return;
    const Vec3 light = Vec3(0.4, 0.8, 0.45).normalized();
    const float shade = static_cast<float>(0.35 + 0.65 * std::abs(n.normalized().dot(light)));
    const Vec3 pa = cam_.project(a), pb = cam_.project(b), pc = cam_.project(c);
    const double area = edge(pa, pb, pc);
    if (std::abs(area) < 1e-12) return;
    const auto [x0, x1] = span(std::min({pa.x(), pb.x(), pc.x()}), std::max({pa.x(), pb.x(), pc.x()}), cam_.width);
    const auto [y0, y1] = span(std::min({pa.y(), pb.y(), pc.y()}), std::max({pa.y(), pb.y(), pc.y()}), cam_.height);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Vec3 p(x + 0.5, y + 0.5, 0);
        const double w0 = edge(pb, pc, p) / area, w1 = edge(pc, pa, p) / area, w2 = edge(pa, pb, p) / area;
        if (w0 < 0 || w1 < 0 || w2 < 0) continue;
        plot(x, y, w0 * pa.z() + w1 * pb.z() + w2 * pc.z(), color, shade);
      }
  }

  // Capsule between two world points; a sphere when a == b.
  void capsule(const Vec3& a, const Vec3& b, double radius, const Color& color) {
    const Vec3 pa = cam_.project(a), pb = cam_.project(b);
    const double r = radius / cam_.ortho_scale;
    const auto [x0, x1] = span(std::min(pa.x(), pb.x()) - r, std::max(pa.x(), pb.x()) + r, cam_.width);
    const auto [y0, y1] = span(std::min(pa.y(), pb.y()) - r, std::max(pa.y(), pb.y()) + r, cam_.height);
    const Eigen::Vector2d a2 = pa.head<2>(), ab = pb.head<2>() - a2;
    const double len2 = ab.squaredNorm();
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d p(x + 0.5, y + 0.5);
        const double t = len2 > 0 ? std::clamp((p - a2).dot(ab) / len2, 0.0, 1.0) : 0.0;
        const double d = (p - (a2 + t * ab)).norm();
        if (d > r) continue;
        const double bulge = std::sqrt(1.0 - (d / r) * (d / r));
        const double depth = pa.z() + t * (pb.z() - pa.z()) - bulge * radius;
        plot(x, y, depth, color, static_cast<float>(0.55 + 0.45 * bulge));
      }
  }

  Image take() { return std::move(image_); }

 private:
  static double edge(const Vec3& a, const Vec3& b, const Vec3& p) {
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
  }
  static std::pair<int, int> span(double lo, double hi, int size) {
    return {std::max(0, static_cast<int>(std::floor(lo))), std::min(size - 1, static_cast<int>(std::ceil(hi)))};
  }
  void plot(int x, int y, double depth, const Color& color, float shade) {
    double& z = depth_[static_cast<std::size_t>(y) * cam_.width + x];
    if (depth >= z) return;
    z = depth;
    for (int c = 0; c < 3; ++c) image_.at(y, x, c) = std::clamp(color[c] * shade, 0.0f, 1.0f);
  }

  const Camera& cam_;
  Image image_;
  std::vector<double> depth_;
};

const Color& bone_color(const motion::Skeleton& skel, int joint) {
  const std::string& name = skel.name[static_cast<std::size_t>(joint)];
  if (name.rfind("left", 0) == 0) return kLeftColor;
  if (name.rfind("right", 0) == 0) return kRightColor;
  return kTrunkColor;
}

void draw(Canvas& canvas, const motion::MotionSequence& seq, int frame, const geometry::ObjectMesh* mesh,
          const motion::Skeleton* skel, bool highlight_contact) {
  if (mesh) {
    const Eigen::Isometry3d pose = seq.object_pose(frame);
    for (const auto& f : mesh->faces) {
      canvas.triangle(pose * mesh->vertices[f[0]], pose * mesh->vertices[f[1]], pose * mesh->vertices[f[2]], kObjectColor);
    }
  }
  if (skel) {
    const auto k = motion::forward_kinematics_frame(seq, frame, *skel);
    for (int j = 1; j < motion::kNumJoints; ++j) {
      const int p = skel->parent[static_cast<std::size_t>(j)];
      canvas.capsule(k.positions[p], k.positions[j], kBoneRadius, bone_color(*skel, j));
    }
    canvas.capsule(k.positions[motion::kHead], k.positions[motion::kHead], kHeadRadius, kTrunkColor);
    if (highlight_contact) {
      for (int h = 0; h < 2; ++h) {
        if (!seq.contact[static_cast<std::size_t>(frame)][static_cast<std::size_t>(h)]) continue;
        const Vec3& w = k.positions[motion::kHandJoints[h]];
        canvas.capsule(w, w, kContactRadius, kContactColor);
      }
    }
  }
}

}  // namespace

Image render_frame(const motion::MotionSequence& seq, int frame, const geometry::ObjectMesh* mesh,
                   const motion::Skeleton* skel, const Camera& cam) {
  cam.validate();
  if (frame < 0 || frame >= seq.length()) fail(ErrorCode::kInvalidArgument, "frame index out of range");
  Canvas canvas(cam);
  draw(canvas, seq, frame, mesh, skel, false);
  return canvas.take();
}

std::array<Image, 3> render_keyframes(const motion::MotionSequence& seq, const geometry::ObjectMesh& mesh,
                                      const motion::Skeleton& skel, const Camera& cam) {
  const KeyframeTriple k = select_keyframes(seq.contact);
  return {render_frame(seq, k.start, &mesh, &skel, cam), render_frame(seq, k.mid, &mesh, &skel, cam),
          render_frame(seq, k.end, &mesh, &skel, cam)};
}

motion::MotionSequence a_pose_scene(double distance) {
  motion::MotionSequence seq = motion::MotionSequence::zeros(2);
  const double arm = 50.0 * std::numbers::pi / 180.0;
  for (int f = 0; f < 2; ++f) {
    seq.root_transl.row(f) = Vec3(0, motion::Skeleton::standard().rest_pelvis_height, 0).transpose();
    seq.set_joint_rotation(f, motion::kLeftShoulder, motion::matrix_to_rot6d(motion::axis_angle(Vec3::UnitZ(), -arm)));
    seq.set_joint_rotation(f, motion::kRightShoulder, motion::matrix_to_rot6d(motion::axis_angle(Vec3::UnitZ(), arm)));
    seq.obj_transl.row(f) = Vec3(0, 0, distance).transpose();
  }
  return seq;
}

Image render_seed_image(const geometry::ObjectMesh& mesh, const motion::Skeleton& skel, int resolution) {
  const double half_depth = 0.5 * geometry::bounding_box(mesh).extent().z();
  motion::MotionSequence seq = a_pose_scene(half_depth + 0.3);
  seq.root_transl.col(1).setConstant(skel.rest_pelvis_height);
  return render_frame(seq, 0, &mesh, &skel, frame_sequence(seq, resolution));
}

Image contact_strip(const motion::MotionSequence& seq, const geometry::ObjectMesh& mesh, const motion::Skeleton& skel,
                    const Camera& cam) {
  cam.validate();
  const KeyframeTriple k = select_keyframes(seq.contact);
  Image strip(cam.height, 3 * cam.width);
  int slot = 0;
  for (const int f : {k.start, k.mid, k.end}) {
    Canvas canvas(cam);
    draw(canvas, seq, f, &mesh, &skel, true);
    const Image img = canvas.take();
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x)
        for (int c = 0; c < 3; ++c) strip.at(y, slot * cam.width + x, c) = img.at(y, x, c);
    ++slot;
  }
  return strip;
}

}  // namespace vihoi::render
