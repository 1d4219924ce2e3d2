#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vihoi/motion/motion_sequence.hpp"

namespace vihoi::motion {

struct SequenceMeta {
  std::string id;
  std::string object_id;
  std::string object_kind;
  std::string verb;
  int subject = 0;
  std::vector<std::string> split_tags;
  bool has_contact_labels = true;
};

struct SequenceRecord {
  MotionSequence motion;
  SequenceMeta meta;
};

// Directory layout:
//   meta.json        {format, version, fps, L, text, id, object_id, ...}
//   root_transl.f32  L×3       little-endian float32, frame-major
//   joint_rot6d.f32  L×22×6    frame, then joint, then 6D component
//   obj_transl.f32   L×3
//   obj_rot6d.f32    L×6
//   contact.f32      L×2       1.0 / 0.0, [left, right]
// The archived variant is a ustar file holding the same six entries.
void write_sequence_dir(const std::filesystem::path& dir, const SequenceRecord& record);
SequenceRecord read_sequence_dir(const std::filesystem::path& dir);
void write_sequence_archive(const std::filesystem::path& file, const SequenceRecord& record);
SequenceRecord read_sequence_archive(const std::filesystem::path& file);

}  // namespace vihoi::motion
