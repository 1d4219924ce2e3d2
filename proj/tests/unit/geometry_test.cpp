#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>

#include "vihoi/common/error.hpp"
#include "vihoi/common/random.hpp"
#include "vihoi/geometry/bps.hpp"
#include "vihoi/geometry/distance.hpp"
#include "vihoi/geometry/keypoints.hpp"
#include "vihoi/geometry/object_spec.hpp"
#include "vihoi/geometry/primitives.hpp"

namespace vihoi::geometry {
namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

ObjectMesh unit_cube() { return make_box(Vec3::Constant(-0.5), Vec3::Constant(0.5)); }

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const double t = std::clamp((p - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
  return (p - (a + t * (b - a))).norm();
}

// Plane projection plus edge fallback; independent of the region walk used
// by the library.
double oracle_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a).normalized();
  const Vec3 q = p - n.dot(p - a) * n;
  const bool in = n.dot((b - a).cross(q - a)) >= 0 && n.dot((c - b).cross(q - b)) >= 0 && n.dot((a - c).cross(q - c)) >= 0;
  if (in) return std::abs(n.dot(p - a));
  return std::min({segment_distance(p, a, b), segment_distance(p, b, c), segment_distance(p, c, a)});
}

double oracle_mesh_distance(const ObjectMesh& m, const Vec3& p) {
  double best = 1e300;
  for (const auto& f : m.faces) best = std::min(best, oracle_triangle_distance(p, m.vertices[f[0]], m.vertices[f[1]], m.vertices[f[2]]));
  return best;
}

TEST(Basis, SinglePointAndDeterminism) {
  const auto one = sample_basis_points(1, 0.7, 123);
  EXPECT_LE(one.row(0).norm(), 0.7);
  const auto a = sample_basis_points(1024, 1.0, 7);
  const auto b = sample_basis_points(1024, 1.0, 7);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0);
  EXPECT_LE(a.rowwise().norm().maxCoeff(), 1.0);
}

TEST(Basis, MonteCarloMean) {
  const double r = 2.5;
  const auto pts = sample_basis_points(100000, r, 99);
  EXPECT_LT(pts.colwise().mean().norm(), 0.02 * r);
  // Uniform in a ball: E‖p‖² = 3r²/5.
  EXPECT_NEAR(pts.rowwise().squaredNorm().mean(), 0.6 * r * r, 0.01 * r * r);
}

TEST(Bps, AnalyticCases) {
  const ObjectMesh cube = unit_cube();
  PointMatrix basis(3, 3);
  basis << 2, 0, 0, 0.5, 0.5, 0.5, 1, 1, 0;
  const auto enc = bps_encode(cube, basis);
  EXPECT_NEAR(enc.distances[0], 1.5, 1e-12);
  EXPECT_NEAR(enc.distances[1], 0.0, 1e-12);
  EXPECT_NEAR(enc.distances[2], std::sqrt(0.5), 1e-12);
  const auto big = bps_encode(scaled(cube, 3.0), 3.0 * basis);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(big.distances[i], 3.0 * enc.distances[i], 1e-12);
  EXPECT_EQ(code_of([&] { bps_encode(ObjectMesh{}, basis); }), ErrorCode::kEmptyMesh);
}

TEST(Bps, MatchesBruteForceOracle) {
  for (const auto& mesh : {make_primitive(PrimitiveKind::kCylinder, {0.2, 0.5}, 32),
                           make_primitive(PrimitiveKind::kTableComposite, {1.0, 0.7, 0.6}),
                           make_sphere(0.4, 10, 16)}) {
    ASSERT_LE(mesh.faces.size(), 500u);
    const auto basis = sample_basis_points(200, 1.2, 3);
    const auto enc = bps_encode(mesh, basis);
    for (int i = 0; i < basis.rows(); ++i) {
      EXPECT_NEAR(enc.distances[i], oracle_mesh_distance(mesh, basis.row(i).transpose()), 1e-12);
      EXPECT_GE(enc.distances[i], 0.0);
    }
  }
}

TEST(Sdf, SphereAnalytic) {
  const ObjectMesh sphere = make_sphere(1.0, 32, 64);
  const SdfQuery sdf(sphere);
  // Inscribed polyhedron: faces sit slightly inside the unit sphere.
  EXPECT_NEAR(sdf(Vec3::Zero()), -1.0, 0.01);
  EXPECT_NEAR(sdf(Vec3(3, 0, 0)), 2.0, 1e-9);
  EXPECT_NEAR(sdf(Vec3(0, 0, -3)), 2.0, 0.01);
  double max_edge = 0;
  for (const auto& f : sphere.faces)
    for (int i = 0; i < 3; ++i) max_edge = std::max(max_edge, (sphere.vertices[f[i]] - sphere.vertices[f[(i + 1) % 3]]).norm());
  for (const auto& v : sphere.vertices) EXPECT_LT(std::abs(sdf(v)), max_edge);
}

TEST(Sdf, SignAgreesWithAnalyticContainment) {
  Rng rng(17);
  const ObjectMesh box = make_primitive(PrimitiveKind::kBox, {0.6, 0.4, 0.3});
  const ObjectMesh table = make_primitive(PrimitiveKind::kTableComposite, {1.0, 0.7, 0.6});
  const int n = 64;
  const ObjectMesh cyl = make_primitive(PrimitiveKind::kCylinder, {0.25, 0.5}, n);
  const SdfQuery box_sdf(box), table_sdf(table), cyl_sdf(cyl);

  const double top = std::min(0.06 * 0.7, 0.04), leg = 0.08 * 0.6;
  auto in_table = [&](const Vec3& p) {
    if (std::abs(p.x()) < 0.5 && std::abs(p.z()) < 0.3 && p.y() > 0.7 - top && p.y() < 0.7) return true;
    for (const double sx : {-1.0, 1.0})
      for (const double sz : {-1.0, 1.0}) {
        const double cx = sx * (0.5 - leg), cz = sz * (0.3 - leg);
        if (std::abs(p.x() - cx) < leg / 2 && std::abs(p.z() - cz) < leg / 2 && p.y() > 0 && p.y() < 0.7 - top) return true;
      }
    return false;
  };
  const double r_in = 0.25 * std::cos(std::numbers::pi / n);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 p(rng.uniform(-0.6, 0.6), rng.uniform(-0.1, 0.8), rng.uniform(-0.4, 0.4));
    const bool in_box = std::abs(p.x()) < 0.3 && p.y() > 0 && p.y() < 0.4 && std::abs(p.z()) < 0.15;
    EXPECT_EQ(box_sdf(p) < 0, in_box) << p.transpose();
    EXPECT_EQ(table_sdf(p) < 0, in_table(p)) << p.transpose();
    const double rho = std::hypot(p.x(), p.z());
    if (rho > r_in && rho < 0.25) continue;  // between the inscribed polygon and the circle
    EXPECT_EQ(cyl_sdf(p) < 0, rho < r_in && p.y() > 0 && p.y() < 0.5) << p.transpose();
    ++checked;
  }
  EXPECT_GT(checked, 9500);
}

TEST(Sdf, RejectsOpenMesh) {
  ObjectMesh open = unit_cube();
  open.faces.pop_back();
  EXPECT_FALSE(is_watertight(open));
  EXPECT_EQ(code_of([&] { signed_distance(open, Vec3::Zero()); }), ErrorCode::kNotWatertight);
}

TEST(Primitives, CountsVolumesWatertight) {
  const ObjectMesh box = make_primitive(PrimitiveKind::kBox, {1, 1, 1});
  EXPECT_EQ(box.vertices.size(), 8u);
  EXPECT_EQ(box.faces.size(), 12u);
  EXPECT_NEAR(volume(box), 1.0, 1e-12);

  const double r = 0.3, h = 0.8;
  const ObjectMesh cyl = make_primitive(PrimitiveKind::kCylinder, {r, h}, 64);
  EXPECT_NEAR(volume(cyl) / (std::numbers::pi * r * r * h), 1.0, 0.01);

  for (const auto kind : {PrimitiveKind::kBox, PrimitiveKind::kCylinder, PrimitiveKind::kLampComposite, PrimitiveKind::kTableComposite}) {
    const std::vector<double> dims = (kind == PrimitiveKind::kBox || kind == PrimitiveKind::kTableComposite)
                                         ? std::vector<double>{0.5, 0.6, 0.4}
                                         : std::vector<double>{0.2, 0.9};
    const ObjectMesh m = make_primitive(kind, dims);
    EXPECT_TRUE(is_watertight(m)) << to_string(kind);
    EXPECT_GT(volume(m), 0.0);
    const Aabb b = bounding_box(m);
    EXPECT_NEAR(b.min.y(), 0.0, 1e-12);
    EXPECT_NEAR(b.center().x(), 0.0, 1e-12);
    EXPECT_NEAR(b.center().z(), 0.0, 1e-12);
    EXPECT_EQ(parse_primitive_kind(to_string(kind)), kind);
  }
  EXPECT_EQ(code_of([] { make_primitive(PrimitiveKind::kBox, {1, -1, 1}); }), ErrorCode::kBadDims);
  EXPECT_EQ(code_of([] { make_primitive(PrimitiveKind::kCylinder, {1, 1, 1}); }), ErrorCode::kBadDims);
}

TEST(Keypoints, CubeCornersAndPoissonProperty) {
  const ObjectMesh cube = unit_cube();
  const KeypointSet kp = sample_keypoints(cube, 5);
  std::vector<Vec3> corners(kp.aabb_points.begin(), kp.aabb_points.end());
  for (const double x : {-0.5, 0.5})
    for (const double y : {-0.5, 0.5})
      for (const double z : {-0.5, 0.5})
        EXPECT_EQ(std::count(corners.begin(), corners.end(), Vec3(x, y, z)), 1);
  const SdfQuery sdf(cube);
  for (const auto& p : kp.poisson_points) EXPECT_LT(std::abs(sdf(p)), 1e-6);
  double min_pair = 1e300;
  for (int i = 0; i < kPoissonKeypoints; ++i)
    for (int j = i + 1; j < kPoissonKeypoints; ++j) min_pair = std::min(min_pair, (kp.poisson_points[i] - kp.poisson_points[j]).norm());
  EXPECT_GE(min_pair, kp.radius);
  EXPECT_LE(kp.radius, std::sqrt(6.0 / (16 * std::numbers::pi)) + 1e-12);
}

TEST(Keypoints, AllPrimitivesOnSurfaceAndDeterministic) {
  for (const auto kind : {PrimitiveKind::kCylinder, PrimitiveKind::kLampComposite, PrimitiveKind::kTableComposite}) {
    const std::vector<double> dims = kind == PrimitiveKind::kTableComposite ? std::vector<double>{1.0, 0.7, 0.6} : std::vector<double>{0.2, 0.9};
    const ObjectMesh m = make_primitive(kind, dims);
    const SdfQuery sdf(m);
    const KeypointSet a = sample_keypoints(m, 9), b = sample_keypoints(m, 9);
    for (int i = 0; i < kPoissonKeypoints; ++i) {
      EXPECT_EQ(a.poisson_points[i], b.poisson_points[i]);
      EXPECT_LT(std::abs(sdf(a.poisson_points[i])), 1e-6);
    }
  }
}

TEST(Keypoints, InvariantToVertexAndFaceReordering) {
  const ObjectMesh m = make_primitive(PrimitiveKind::kTableComposite, {1.0, 0.7, 0.6});
  ObjectMesh shuffled = m;
  Rng rng(4);
  std::vector<int> perm(m.vertices.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  for (std::size_t i = 0; i < perm.size(); ++i) shuffled.vertices[perm[i]] = m.vertices[i];
  for (auto& f : shuffled.faces) {
    for (int& v : f) v = perm[v];
    std::rotate(f.begin(), f.begin() + 1, f.end());
  }
  std::reverse(shuffled.faces.begin(), shuffled.faces.end());
  EXPECT_EQ(geometry_hash(shuffled), geometry_hash(m));
  const KeypointSet a = sample_keypoints(m, 2), b = sample_keypoints(shuffled, 2);
  EXPECT_EQ(a.stacked(), b.stacked());
}

TEST(Obj, RoundTripAndPolygons) {
  const ObjectMesh m = make_primitive(PrimitiveKind::kLampComposite, {0.2, 0.6}, 16);
  const ObjectMesh back = parse_obj(format_obj(m), "lamp");
  ASSERT_EQ(back.faces, m.faces);
  for (std::size_t i = 0; i < m.vertices.size(); ++i) EXPECT_LT((back.vertices[i] - m.vertices[i]).norm(), 1e-8);
  const ObjectMesh quad = parse_obj("# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1 -1/4/1\n");
  EXPECT_EQ(quad.faces.size(), 2u);
  EXPECT_EQ(quad.faces[1], (Face{0, 2, 3}));
  EXPECT_EQ(code_of([] { parse_obj("v 0 0 0\nf 1 2 9\n"); }), ErrorCode::kInvalidArgument);
}

TEST(ObjectSpec, BundlesEncodings) {
  const ObjectMesh m = make_primitive(PrimitiveKind::kBox, {0.4, 0.4, 0.4});
  const auto basis = sample_basis_points(64, basis_radius_for({m}), kDefaultBasisSeed);
  const ObjectSpec spec = make_object_spec(m, basis, 1);
  // BPS is measured around the AABB center.
  const auto centered = bps_encode(translated(m, Vec3(0, -0.2, 0)), basis);
  EXPECT_EQ(spec.bps.distances, centered.distances);
  EXPECT_LT((*spec.sdf)(Vec3(0, 0.2, 0)), 0.0);
  EXPECT_NEAR(basis_radius_for({m}), 1.2 * std::sqrt(3 * 0.04), 1e-12);
}

}  // namespace
}  // namespace vihoi::geometry
