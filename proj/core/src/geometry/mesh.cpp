#include "vihoi/geometry/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <cstdio>
#include <map>
#include <sstream>

#include "vihoi/common/error.hpp"
#include "vihoi/common/io.hpp"

namespace vihoi::geometry {

std::array<Vec3, 8> Aabb::corners() const {
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    out[static_cast<std::size_t>(i)] =
        Vec3((i & 1) ? max.x() : min.x(), (i & 2) ? max.y() : min.y(), (i & 4) ? max.z() : min.z());
  }
  return out;
}

void validate(const ObjectMesh& mesh) {
  if (mesh.faces.empty() || mesh.vertices.empty()) fail(ErrorCode::kEmptyMesh, "mesh has no faces");
  const int n = static_cast<int>(mesh.vertices.size());
  for (const auto& f : mesh.faces)
    for (int i : f)
      if (i < 0 || i >= n) fail(ErrorCode::kInvalidArgument, "face index out of range");
  for (const auto& v : mesh.vertices)
    if (!v.allFinite()) fail(ErrorCode::kInvalidArgument, "non-finite vertex");
}

Aabb bounding_box(const ObjectMesh& mesh) {
  if (mesh.vertices.empty()) fail(ErrorCode::kEmptyMesh, "mesh has no vertices");
  Aabb box{mesh.vertices.front(), mesh.vertices.front()};
  for (const auto& v : mesh.vertices) {
    box.min = box.min.cwiseMin(v);
    box.max = box.max.cwiseMax(v);
  }
  return box;
}

double surface_area(const ObjectMesh& mesh) {
  double a = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& p = mesh.vertices[f[0]];
    a += 0.5 * (mesh.vertices[f[1]] - p).cross(mesh.vertices[f[2]] - p).norm();
  }
  return a;
}

double volume(const ObjectMesh& mesh) {
  double v = 0.0;
  for (const auto& f : mesh.faces) v += mesh.vertices[f[0]].dot(mesh.vertices[f[1]].cross(mesh.vertices[f[2]]));
  return v / 6.0;
}

bool is_watertight(const ObjectMesh& mesh) {
  if (mesh.faces.empty()) return false;
  std::map<std::pair<int, int>, int> directed;
  for (const auto& f : mesh.faces) {
    for (int i = 0; i < 3; ++i) {
      const int a = f[i], b = f[(i + 1) % 3];
      if (a == b) return false;
      if (++directed[{a, b}] > 1) return false;
    }
  }
  for (const auto& [edge, count] : directed)
    if (!directed.contains({edge.second, edge.first})) return false;
  return true;
}

ObjectMesh translated(const ObjectMesh& mesh, const Vec3& offset) {
  ObjectMesh out = mesh;
  for (auto& v : out.vertices) v += offset;
  return out;
}

ObjectMesh scaled(const ObjectMesh& mesh, double s) {
  ObjectMesh out = mesh;
  for (auto& v : out.vertices) v *= s;
  return out;
}

void append(ObjectMesh& a, const ObjectMesh& b) {
  const int base = static_cast<int>(a.vertices.size());
  a.vertices.insert(a.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (const auto& f : b.faces) a.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
}

namespace {

bool lex_less(const Vec3& a, const Vec3& b) {
  return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
}

bool tri_less(const Triangle& a, const Triangle& b) {
  for (int i = 0; i < 3; ++i) {
    if (lex_less(a[i], b[i])) return true;
    if (lex_less(b[i], a[i])) return false;
  }
  return false;
}

}  // namespace

std::vector<Triangle> canonical_triangles(const ObjectMesh& mesh) {
  std::vector<Triangle> tris;
  tris.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    Triangle t{mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]};
    int first = 0;
    for (int i = 1; i < 3; ++i)
      if (lex_less(t[i], t[first])) first = i;
    std::rotate(t.begin(), t.begin() + first, t.end());
    tris.push_back(t);
  }
  std::sort(tris.begin(), tris.end(), tri_less);
  return tris;
}

std::string geometry_hash(const ObjectMesh& mesh) {
  const auto tris = canonical_triangles(mesh);
  io::Bytes bytes(tris.size() * 9 * sizeof(double));
  auto* out = bytes.data();
  for (const auto& t : tris)
    for (const auto& v : t) {
      std::memcpy(out, v.data(), 3 * sizeof(double));
      out += 3 * sizeof(double);
    }
  return io::sha256_hex(bytes);
}

ObjectMesh parse_obj(std::string_view text, std::string name) {
  ObjectMesh mesh;
  mesh.name = std::move(name);
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) fail(ErrorCode::kFormat, "bad vertex on line " + std::to_string(line_no));
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        const std::string head = tok.substr(0, tok.find('/'));
        int value = 0;
        const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
        if (ec != std::errc() || ptr != head.data() + head.size() || value == 0) {
          fail(ErrorCode::kFormat, "bad face index on line " + std::to_string(line_no));
        }
        idx.push_back(value > 0 ? value - 1 : static_cast<int>(mesh.vertices.size()) + value);
      }
      if (idx.size() < 3) fail(ErrorCode::kFormat, "face with fewer than 3 vertices on line " + std::to_string(line_no));
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) mesh.faces.push_back({idx[0], idx[i], idx[i + 1]});
    }
  }
  validate(mesh);
  return mesh;
}

std::string format_obj(const ObjectMesh& mesh) {
  std::string out;
  if (!mesh.name.empty()) out += "o " + mesh.name + "\n";
  char buf[96];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out += buf;
  }
  for (const auto& f : mesh.faces) {
    std::snprintf(buf, sizeof buf, "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out += buf;
  }
  return out;
}

ObjectMesh read_obj(const std::filesystem::path& path) {
  return parse_obj(io::read_text(path), path.stem().string());
}

void write_obj(const std::filesystem::path& path, const ObjectMesh& mesh) {
  io::write_text_atomic(path, format_obj(mesh));
}

}  // namespace vihoi::geometry
