#include "vihoi/dataset/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vihoi/common/error.hpp"
#include "vihoi/common/random.hpp"

namespace vihoi::dataset {

using motion::Mat3;
using motion::MotionSequence;
using motion::Skeleton;
using motion::Vec3;
namespace J = motion;

double subject_scale(int subject_id) {
  const double u = static_cast<double>(mix64(static_cast<std::uint64_t>(subject_id) + 1) >> 11) * 0x1.0p-53;
  return 0.9 + 0.2 * u;
}

double surface_distance(const MotionSequence& seq, const geometry::SdfQuery& sdf, int frame, const Vec3& world_point) {
  const Mat3 r = seq.object_rotation(frame);
  const Vec3 t = seq.obj_transl.row(frame).transpose();
  return sdf.unsigned_distance(r.transpose() * (world_point - t));
}

namespace {

constexpr double kMaxPitch = 1.4;    // radians, whole spine
constexpr double kMaxDrop = 0.50;    // meters at scale 1
constexpr double kArmMargin = 0.97;  // fraction of full arm length usable
constexpr double kGraspGap = 0.02;
constexpr double kPreGrasp = 0.12;
constexpr double kWideGrasp = 0.20;
constexpr double kBulge = 0.08;
constexpr int kLeft = 0;
constexpr int kRight = 1;

constexpr std::array<int, 2> kCollar = {J::kLeftCollar, J::kRightCollar};
constexpr std::array<int, 2> kShoulder = {J::kLeftShoulder, J::kRightShoulder};
constexpr std::array<int, 2> kElbow = {J::kLeftElbow, J::kRightElbow};
constexpr std::array<int, 2> kWrist = {J::kLeftWrist, J::kRightWrist};
constexpr std::array<int, 2> kHip = {J::kLeftHip, J::kRightHip};
constexpr std::array<int, 2> kKnee = {J::kLeftKnee, J::kRightKnee};
constexpr std::array<int, 2> kAnkle = {J::kLeftAnkle, J::kRightAnkle};
constexpr std::array<int, 2> kFoot = {J::kLeftFoot, J::kRightFoot};

double smooth(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

Vec3 lerp(const Vec3& a, const Vec3& b, double t) { return a + t * (b - a); }

Mat3 rot_x(double a) { return J::axis_angle(Vec3::UnitX(), a); }
Mat3 rot_y(double a) { return J::axis_angle(Vec3::UnitY(), a); }

[[noreturn]] void infeasible(const std::string& what) { fail(ErrorCode::kInfeasibleTask, what); }

struct FramePose {
  Vec3 pelvis = Vec3::Zero();
  double pitch = 0.0;
  std::array<Vec3, 2> wrist;
  std::array<Vec3, 2> ankle;
};

struct Trunk {
  Mat3 chest = Mat3::Identity();  // global orientation of spine3 and the collars
  std::array<Vec3, 2> shoulder;
  std::array<Vec3, 2> hip;
};

class Rig {
 public:
  explicit Rig(Skeleton skel) : sk_(std::move(skel)) {}

  const Skeleton& skeleton() const { return sk_; }
  double scale() const { return sk_.rest_pelvis_height / Skeleton::standard().rest_pelvis_height; }

  Trunk trunk(const Vec3& pelvis, double pitch) const {
    const Mat3 step = rot_x(pitch / 3.0);
    Trunk t;
    const Vec3 s1 = pelvis + sk_.offset[J::kSpine1];
    const Vec3 s2 = s1 + step * sk_.offset[J::kSpine2];
    const Vec3 s3 = s2 + step * step * sk_.offset[J::kSpine3];
    t.chest = step * step * step;
    for (int k : {kLeft, kRight}) {
      const Vec3 collar = s3 + t.chest * sk_.offset[kCollar[k]];
      t.shoulder[k] = collar + t.chest * sk_.offset[kShoulder[k]];
      t.hip[k] = pelvis + sk_.offset[kHip[k]];
    }
    return t;
  }

  double arm_length() const { return sk_.bone_length(J::kLeftElbow) + sk_.bone_length(J::kLeftWrist); }
  double leg_length() const { return sk_.bone_length(J::kLeftKnee) + sk_.bone_length(J::kLeftAnkle); }

  bool arm_reaches(const Vec3& shoulder, const Vec3& target) const {
    const double d = (target - shoulder).norm();
    const double l1 = sk_.bone_length(J::kLeftElbow), l2 = sk_.bone_length(J::kLeftWrist);
    return d <= kArmMargin * (l1 + l2) && d >= std::abs(l1 - l2) + 0.01;
  }
  bool leg_reaches(const Vec3& hip, const Vec3& target) const { return (target - hip).norm() <= leg_length() * (1 + 1e-9); }

  Vec3 hang(const Vec3& shoulder, int side) const {
    return shoulder + scale() * Vec3(side == kLeft ? 0.04 : -0.04, -0.47, 0.04);
  }
  Vec3 planted_ankle(const Vec3& pelvis, int side) const {
    return Vec3(pelvis.x() + sk_.offset[kHip[side]].x(), -sk_.offset[kFoot[side]].y(), pelvis.z());
  }

  FramePose posture(const Vec3& base, double s) const {
    FramePose p;
    p.pelvis = Vec3(base.x(), sk_.rest_pelvis_height - kMaxDrop * scale() * s, base.z());
    p.pitch = kMaxPitch * s;
    const Trunk t = trunk(p.pelvis, p.pitch);
    for (int k : {kLeft, kRight}) {
      p.wrist[k] = hang(t.shoulder[k], k);
      p.ankle[k] = planted_ankle(p.pelvis, k);
    }
    return p;
  }

  // Smallest posture (0 = upright, 1 = deepest bend) from which both wrist
  // targets are reachable.
  double min_posture(const Vec3& base, const std::array<Vec3, 2>& targets) const {
    for (int i = 0; i <= 100; ++i) {
      const double s = i / 100.0;
      const FramePose p = posture(base, s);
      const Trunk t = trunk(p.pelvis, p.pitch);
      if (arm_reaches(t.shoulder[kLeft], targets[kLeft]) && arm_reaches(t.shoulder[kRight], targets[kRight])) return s;
    }
    infeasible("hand targets out of reach");
  }

  void write(MotionSequence& seq, int f, const FramePose& p) const {
    const Trunk t = trunk(p.pelvis, p.pitch);
    seq.root_transl.row(f) = p.pelvis.transpose();
    for (int j = 0; j < J::kNumJoints; ++j) seq.set_joint_rotation(f, j, J::identity_rot6d());
    const Mat3 step = rot_x(p.pitch / 3.0);
    for (int j : {J::kSpine1, J::kSpine2, J::kSpine3}) seq.set_joint_rotation(f, j, J::matrix_to_rot6d(step));
    for (int k : {kLeft, kRight}) {
      if (!arm_reaches(t.shoulder[k], p.wrist[k]) && (p.wrist[k] - t.shoulder[k]).norm() > arm_length()) {
        infeasible("wrist target out of reach");
      }
      const double side = k == kLeft ? 1.0 : -1.0;
      const auto [g1, g2] = two_bone(t.shoulder[k], p.wrist[k], kElbow[k], kWrist[k], Vec3(0, side, 0),
                                     Vec3(side * 0.3, 0.0, -1.0));
      seq.set_joint_rotation(f, kShoulder[k], J::matrix_to_rot6d(t.chest.transpose() * g1));
      seq.set_joint_rotation(f, kElbow[k], J::matrix_to_rot6d(g1.transpose() * g2));

      if (!leg_reaches(t.hip[k], p.ankle[k])) infeasible("ankle target out of reach");
      const auto [h1, h2] = two_bone(t.hip[k], p.ankle[k], kKnee[k], kAnkle[k], Vec3(-1, 0, 0), Vec3(0, 0, 1));
      seq.set_joint_rotation(f, kHip[k], J::matrix_to_rot6d(h1));
      seq.set_joint_rotation(f, kKnee[k], J::matrix_to_rot6d(h1.transpose() * h2));
      seq.set_joint_rotation(f, kAnkle[k], J::matrix_to_rot6d(h2.transpose()));
    }
  }

 private:
  // Global orientations of a two-bone chain rooted at `root` whose tip lands
  // on `target`; the bend plane contains `pole`.
  std::pair<Mat3, Mat3> two_bone(const Vec3& root, const Vec3& target, int mid_joint, int tip_joint,
                                 const Vec3& rest_normal, const Vec3& pole) const {
    const Vec3 o1 = sk_.offset[mid_joint], o2 = sk_.offset[tip_joint];
    const double l1 = o1.norm(), l2 = o2.norm();
    const Vec3 delta = target - root;
    const Vec3 u = delta.normalized();
    const double d = std::clamp(delta.norm(), std::abs(l1 - l2) + 1e-9, l1 + l2);
    const double cos_a = std::clamp((l1 * l1 + d * d - l2 * l2) / (2 * l1 * d), -1.0, 1.0);
    Vec3 v = pole - pole.dot(u) * u;
    if (v.norm() < 1e-9) v = u.unitOrthogonal();
    v.normalize();
    const Vec3 mid = root + l1 * (cos_a * u + std::sqrt(1 - cos_a * cos_a) * v);
    const Vec3 n = u.cross(v);
    return {J::align_frames(o1, rest_normal, mid - root, n), J::align_frames(o2, rest_normal, target - mid, n)};
  }

  Skeleton sk_;
};

struct Grasp {
  double height;
  double half_width;
};

Grasp grasp_for(const ObjectEntry& obj) {
  const auto& d = obj.dims;
  switch (obj.kind) {
    case geometry::PrimitiveKind::kBox: return {0.75 * d[1], 0.5 * d[0]};
    case geometry::PrimitiveKind::kCylinder: return {0.75 * d[1], d[0]};
    case geometry::PrimitiveKind::kLampComposite: return {0.875 * d[1], 0.7 * d[0]};
    case geometry::PrimitiveKind::kTableComposite: return {d[1] - 0.5 * std::min(0.06 * d[1], 0.04), 0.5 * d[0]};
  }
  return {0, 0};
}

struct ObjectState {
  Vec3 position;
  double yaw = 0.0;
};

struct Phases {
  int approach_end;  // first frame with the effector on the object
  int move_start;    // object starts moving after this frame
  int move_end;      // object at its final pose from here on
  int release_start;
  int last;
};

Phases make_phases(int L, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "phases"));
  const double jitter = rng.uniform(-0.03, 0.03);
  Phases p;
  p.last = L - 1;
  p.approach_end = static_cast<int>(std::lround((0.30 + jitter) * p.last));
  p.move_start = p.approach_end + std::max(1, static_cast<int>(std::lround(0.07 * L)));
  p.move_end = p.move_start + static_cast<int>(std::lround(0.36 * L));
  p.release_start = p.move_end + std::max(1, static_cast<int>(std::lround(0.05 * L)));
  if (p.last - p.release_start < 4) infeasible("sequence too short for all phases");
  return p;
}

double progress(const Phases& ph, int f) {
  if (f <= ph.move_start) return 0.0;
  if (f >= ph.move_end) return 1.0;
  return static_cast<double>(f - ph.move_start) / (ph.move_end - ph.move_start);
}

ObjectState object_at(const ToyTask& task, double u) {
  const double s = smooth(u);
  const double bump = std::sin(std::numbers::pi * u);
  ObjectState o{Vec3(0, task.support, task.distance), 0.0};
  switch (task.verb) {
    case Verb::kLift:
      o.position.y() = task.support + (task.target - task.support) * s + 0.10 * bump;
      break;
    case Verb::kPush:
      o.position.y() = task.support * (1 - s) + 0.05 * bump;
      o.position.z() += task.target * s;
      break;
    case Verb::kPull:
      o.position.z() -= task.target * s;
      break;
    case Verb::kRotate:
      o.position.y() += 0.05 * bump;
      o.yaw = task.target * s;
      break;
    case Verb::kKick:
      o.position.z() += task.target * s;
      break;
  }
  return o;
}

void hand_sequence(const ToyTask& task, const Rig& rig, const Phases& ph, MotionSequence& seq,
                   std::vector<ObjectState>& objects) {
  const ObjectEntry& obj = find_object(task.object_id);
  const Grasp g = grasp_for(obj);
  const std::array<Vec3, 2> grasp_local = {Vec3(g.half_width + kGraspGap, g.height, 0),
                                           Vec3(-g.half_width - kGraspGap, g.height, 0)};
  const std::array<Vec3, 2> out = {Vec3(kPreGrasp, 0, 0), Vec3(-kPreGrasp, 0, 0)};

  auto base_at = [&](double u) {
    const ObjectState o = object_at(task, u);
    const bool follow = task.verb == Verb::kPush || task.verb == Verb::kPull;
    return Vec3(0, 0, follow ? o.position.z() - task.distance : 0.0);
  };
  auto grasp_at = [&](double u) {
    const ObjectState o = object_at(task, u);
    const Mat3 r = rot_y(o.yaw);
    return std::array<Vec3, 2>{o.position + r * grasp_local[0], o.position + r * grasp_local[1]};
  };
  auto pre_at = [&](double u) {
    const ObjectState o = object_at(task, u);
    const Mat3 r = rot_y(o.yaw);
    const auto gr = grasp_at(u);
    return std::array<Vec3, 2>{gr[0] + r * out[0], gr[1] + r * out[1]};
  };

  const double s0 = rig.min_posture(base_at(0), grasp_at(0));
  const double s1 = rig.min_posture(base_at(1), grasp_at(1));

  // Hand path between hanging and grasping; alpha = 1 is on the object.
  // The posture bends further when an intermediate target is out of reach.
  auto reach_pose = [&](double alpha, double s_full, double u) {
    const auto pre = pre_at(u), gr = grasp_at(u);
    const FramePose upright = rig.posture(base_at(u), 0.0);
    for (double s = smooth(alpha) * s_full; s <= 1.0 + 1e-9; s += 0.01) {
      FramePose p = rig.posture(base_at(u), std::min(s, 1.0));
      const Trunk t = rig.trunk(p.pelvis, p.pitch);
      bool ok = true;
      for (int k : {kLeft, kRight}) {
        const Vec3 normal = (pre[k] - gr[k]).normalized();
        const Vec3 wide = gr[k] + kWideGrasp * normal;
        if (alpha < 0.6) {
          const double a = alpha / 0.6;
          p.wrist[k] = lerp(upright.wrist[k], wide, smooth(a)) + kBulge * std::sin(std::numbers::pi * a) * normal;
        } else if (alpha < 0.8) {
          p.wrist[k] = lerp(wide, pre[k], (alpha - 0.6) / 0.2);
        } else {
          p.wrist[k] = lerp(pre[k], gr[k], (alpha - 0.8) / 0.2);
        }
        ok = ok && rig.arm_reaches(t.shoulder[k], p.wrist[k]);
      }
      if (ok) return p;
    }
    infeasible("approach path out of reach");
  };

  for (int f = 0; f <= ph.last; ++f) {
    const double u = progress(ph, f);
    objects[f] = object_at(task, u);
    FramePose p;
    if (f < ph.approach_end) {
      p = reach_pose(static_cast<double>(f) / ph.approach_end, s0, 0.0);
    } else if (f <= ph.release_start) {
      const auto targets = grasp_at(u);
      p = rig.posture(base_at(u), rig.min_posture(base_at(u), targets));
      p.wrist = targets;
    } else {
      p = reach_pose(1.0 - static_cast<double>(f - ph.release_start) / (ph.last - ph.release_start), s1, 1.0);
    }
    rig.write(seq, f, p);
  }
}

void kick_sequence(const ToyTask& task, const Rig& rig, const Phases& ph, MotionSequence& seq,
                   std::vector<ObjectState>& objects) {
  const Skeleton& sk = rig.skeleton();
  const double sc = rig.scale();
  const ObjectEntry& obj = find_object(task.object_id);
  const double half_depth = 0.5 * geometry::bounding_box(obj.mesh()).extent().z();
  const double x = sk.offset[J::kRightHip].x();
  const Vec3 foot = sk.offset[J::kRightFoot];
  const double drop = 0.08 * sc;
  const double ankle_y = -foot.y() + 0.05;

  auto contact_ankle = [&](double u) {
    const double foot_z = task.distance - half_depth - kGraspGap + task.target * smooth(u);
    return Vec3(x, ankle_y, foot_z - foot.z());
  };
  auto base_at = [&](double u) { return Vec3(0, 0, std::max(0.0, contact_ankle(u).z() - 0.3 * sc)); };
  auto pose_at = [&](double bend, double u) {
    FramePose p = rig.posture(base_at(u), 0.0);
    p.pelvis.y() -= drop * smooth(bend);
    const Trunk t = rig.trunk(p.pelvis, 0.0);
    for (int k : {kLeft, kRight}) {
      p.wrist[k] = rig.hang(t.shoulder[k], k);
      p.ankle[k] = rig.planted_ankle(p.pelvis, k);
    }
    return p;
  };

  for (int f = 0; f <= ph.last; ++f) {
    const double u = progress(ph, f);
    ObjectState o{Vec3(x, 0, task.distance + task.target * smooth(u)), 0.0};
    objects[f] = o;
    FramePose p;
    if (f < ph.approach_end) {
      const double a = static_cast<double>(f) / ph.approach_end;
      p = pose_at(a, 0.0);
      const Vec3 planted = p.ankle[kRight];
      const Vec3 back(x, ankle_y + 0.10, p.pelvis.z() - 0.2 * sc);
      p.ankle[kRight] = a < 0.5 ? lerp(planted, back, smooth(a / 0.5)) : lerp(back, contact_ankle(0), smooth((a - 0.5) / 0.5));
    } else if (f <= ph.release_start) {
      p = pose_at(1.0, u);
      p.ankle[kRight] = contact_ankle(u);
    } else {
      const double a = 1.0 - static_cast<double>(f - ph.release_start) / (ph.last - ph.release_start);
      p = pose_at(a, 1.0);
      p.ankle[kRight] = lerp(p.ankle[kRight], contact_ankle(1.0), smooth(a));
    }
    rig.write(seq, f, p);
  }
}

}  // namespace

MotionSequence generate_sequence(const ToyTask& task, int subject_id, std::uint64_t seed, const GeneratorConfig& config) {
  validate(task);
  const Rig rig(Skeleton::standard(subject_scale(subject_id)));
  const Phases ph = make_phases(task.duration_frames, seed);
  const int L = task.duration_frames;

  MotionSequence seq = MotionSequence::zeros(L, config.fps);
  std::vector<ObjectState> objects(static_cast<std::size_t>(L));
  if (task.verb == Verb::kKick) {
    kick_sequence(task, rig, ph, seq, objects);
  } else {
    hand_sequence(task, rig, ph, seq, objects);
  }

  // Place the local scene in the world.
  const Mat3 heading = rot_y(task.heading);
  const Vec3 origin(task.origin_x, 0.0, task.origin_z);
  for (int f = 0; f < L; ++f) {
    const Vec3 root = seq.root_transl.row(f).transpose();
    seq.root_transl.row(f) = (heading * root + origin).transpose();
    seq.set_joint_rotation(f, J::kPelvis, J::matrix_to_rot6d(heading));
    const ObjectState& o = objects[static_cast<std::size_t>(f)];
    seq.obj_transl.row(f) = (heading * o.position + origin).transpose();
    seq.obj_rot6d.row(f) = J::matrix_to_rot6d(rot_y(task.heading + o.yaw)).transpose();
  }
  seq.text = annotation(task);

  const geometry::SdfQuery sdf(find_object(task.object_id).mesh());
  const auto poses = J::forward_kinematics(seq, rig.skeleton());
  for (int f = 0; f < L; ++f) {
    for (int k : {kLeft, kRight}) {
      seq.contact[static_cast<std::size_t>(f)][static_cast<std::size_t>(k)] =
          surface_distance(seq, sdf, f, poses[f][kWrist[k]]) <= config.contact_threshold;
    }
  }
  for (int f = ph.approach_end; f <= ph.release_start; ++f) {
    const bool held = task.verb == Verb::kKick
                          ? surface_distance(seq, sdf, f, poses[f][J::kRightFoot]) <= config.contact_threshold
                          : seq.contact[static_cast<std::size_t>(f)][0] && seq.contact[static_cast<std::size_t>(f)][1];
    if (!held) infeasible("effector lost contact during manipulation");
  }
  motion::validate(seq);
  return seq;
}

}  // namespace vihoi::dataset
