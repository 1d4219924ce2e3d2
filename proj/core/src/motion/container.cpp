#include "vihoi/motion/container.hpp"

#include <json.hpp>

#include "vihoi/common/error.hpp"
#include "vihoi/common/io.hpp"

namespace vihoi::motion {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

template <typename M>
io::Bytes pack(const M& m) {
  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f = m.template cast<float>();
  return io::pack_f32(std::span(f.data(), static_cast<std::size_t>(f.size())));
}

template <int Cols>
FrameMatrix<Cols> unpack(const io::Bytes& bytes, int L, const char* field) {
  const auto v = io::unpack_f32(bytes);
  if (static_cast<long>(v.size()) != static_cast<long>(L) * Cols) {
    fail(ErrorCode::kFormat, std::string("field ") + field + " has the wrong number of values");
  }
  FrameMatrix<Cols> m(L, Cols);
  for (int i = 0; i < L * Cols; ++i) m.data()[i] = v[static_cast<std::size_t>(i)];
  return m;
}

std::map<std::string, io::Bytes> encode(const SequenceRecord& r) {
  validate(r.motion);
  const auto& m = r.motion;
  const int L = m.length();
  json meta = {{"format", "vihoi-sequence"},
               {"version", kFormatVersion},
               {"fps", m.fps},
               {"L", L},
               {"text", m.text},
               {"id", r.meta.id},
               {"object_id", r.meta.object_id},
               {"object_kind", r.meta.object_kind},
               {"verb", r.meta.verb},
               {"subject", r.meta.subject},
               {"split_tags", r.meta.split_tags},
               {"has_contact_labels", r.meta.has_contact_labels}};
  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> contact(L, 2);
  for (int f = 0; f < L; ++f)
    for (int h = 0; h < 2; ++h) contact(f, h) = m.contact[static_cast<std::size_t>(f)][static_cast<std::size_t>(h)] ? 1.0 : 0.0;
  const std::string meta_text = meta.dump(2) + "\n";
  return {{"meta.json", io::Bytes(meta_text.begin(), meta_text.end())},
          {"root_transl.f32", pack(m.root_transl)},
          {"joint_rot6d.f32", pack(m.joint_rot6d)},
          {"obj_transl.f32", pack(m.obj_transl)},
          {"obj_rot6d.f32", pack(m.obj_rot6d)},
          {"contact.f32", pack(contact)}};
}

template <typename Get>
SequenceRecord decode(Get&& get) {
  const io::Bytes meta_bytes = get("meta.json");
  const json meta = json::parse(meta_bytes.begin(), meta_bytes.end());
  if (meta.value("format", "") != "vihoi-sequence") fail(ErrorCode::kFormat, "not a vihoi sequence");
  if (meta.at("version").get<int>() != kFormatVersion) fail(ErrorCode::kFormat, "unsupported sequence version");
  const int L = meta.at("L").get<int>();
  SequenceRecord r;
  auto& m = r.motion;
  m.fps = meta.at("fps").get<double>();
  m.text = meta.at("text").get<std::string>();
  m.root_transl = unpack<3>(get("root_transl.f32"), L, "root_transl");
  m.joint_rot6d = unpack<kNumJoints * 6>(get("joint_rot6d.f32"), L, "joint_rot6d");
  m.obj_transl = unpack<3>(get("obj_transl.f32"), L, "obj_transl");
  m.obj_rot6d = unpack<6>(get("obj_rot6d.f32"), L, "obj_rot6d");
  const auto contact = unpack<2>(get("contact.f32"), L, "contact");
  m.contact.resize(static_cast<std::size_t>(L));
  for (int f = 0; f < L; ++f) m.contact[static_cast<std::size_t>(f)] = {contact(f, 0) > 0.5, contact(f, 1) > 0.5};
  r.meta.id = meta.value("id", "");
  r.meta.object_id = meta.value("object_id", "");
  r.meta.object_kind = meta.value("object_kind", "");
  r.meta.verb = meta.value("verb", "");
  r.meta.subject = meta.value("subject", 0);
  r.meta.split_tags = meta.value("split_tags", std::vector<std::string>{});
  r.meta.has_contact_labels = meta.value("has_contact_labels", true);
  validate(m);
  return r;
}

const std::vector<std::string> kEntryOrder = {"meta.json", "root_transl.f32", "joint_rot6d.f32",
                                              "obj_transl.f32", "obj_rot6d.f32", "contact.f32"};

}  // namespace

void write_sequence_dir(const fs::path& dir, const SequenceRecord& record) {
  fs::create_directories(dir);
  for (auto& [name, bytes] : encode(record)) io::write_file_atomic(dir / name, bytes);
}

SequenceRecord read_sequence_dir(const fs::path& dir) {
  return decode([&](const std::string& name) { return io::read_file(dir / name); });
}

void write_sequence_archive(const fs::path& file, const SequenceRecord& record) {
  auto entries = encode(record);
  io::Archive archive;
  for (const auto& name : kEntryOrder) archive.add(name, std::move(entries.at(name)));
  archive.save(file);
}

SequenceRecord read_sequence_archive(const fs::path& file) {
  const io::Archive archive = io::Archive::load(file);
  return decode([&](const std::string& name) { return archive.get(name); });
}

}  // namespace vihoi::motion
