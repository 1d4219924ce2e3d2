#include "vihoi/dataset/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <json.hpp>
#include <set>

#include "vihoi/common/error.hpp"
#include "vihoi/common/io.hpp"
#include "vihoi/geometry/primitives.hpp"

namespace vihoi::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

const CorpusEntry& CorpusIndex::find(const std::string& id) const {
  for (const auto& e : entries)
    if (e.id == id) return e;
  fail(ErrorCode::kInvalidArgument, "no sequence with id " + id);
}

namespace {

std::string sequence_id(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seq_%05d", i);
  return buf;
}

}  // namespace

CorpusIndex build_corpus(const fs::path& dir, const CorpusConfig& config, std::uint64_t seed) {
  if (config.n_sequences < 1 || config.n_subjects < 1 || config.verbs.empty()) {
    fail(ErrorCode::kInvalidArgument, "corpus needs at least one sequence, subject and verb");
  }
  fs::create_directories(dir / "objects");
  fs::create_directories(dir / "sequences");
  json objects = json::array();
  for (const auto& obj : default_catalog()) {
    geometry::write_obj(dir / "objects" / (obj.id + ".obj"), obj.mesh());
    objects.push_back({{"id", obj.id}, {"kind", geometry::to_string(obj.kind)}, {"dims", obj.dims},
                       {"path", "objects/" + obj.id + ".obj"}});
  }

  CorpusIndex index;
  index.seed = seed;
  index.contact_labels = config.contact_labels;
  const std::set<int> held(config.held_out_subjects.begin(), config.held_out_subjects.end());
  for (int i = 0; i < config.n_sequences; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const Verb verb = config.verbs[static_cast<std::size_t>(i) % config.verbs.size()];
    std::optional<motion::SequenceRecord> record;
    for (int attempt = 0; attempt < config.max_attempts && !record; ++attempt) {
      const int subject = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(config.n_subjects)));
      const ToyTask task = sample_task(verb, rng, config.duration_frames);
      try {
        motion::SequenceRecord r;
        r.motion = generate_sequence(task, subject, rng.next_u64(), config.generator);
        r.meta.object_id = task.object_id;
        r.meta.subject = subject;
        record = std::move(r);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInfeasibleTask) throw;
      }
    }
    if (!record) fail(ErrorCode::kInfeasibleTask, "no feasible task for item " + std::to_string(i));

    auto& meta = record->meta;
    meta.id = sequence_id(i);
    meta.object_kind = geometry::to_string(find_object(meta.object_id).kind);
    meta.verb = to_string(verb);
    meta.split_tags = {held.contains(meta.subject) ? "test" : "train"};
    meta.has_contact_labels = config.contact_labels;
    if (!config.contact_labels)
      for (auto& c : record->motion.contact) c = {false, false};
    write_sequence_dir(dir / "sequences" / meta.id, *record);
    index.entries.push_back({meta.id, meta.subject, meta.object_id, meta.object_kind, meta.verb, meta.split_tags,
                             "sequences/" + meta.id, record->motion.text});
  }

  json seqs = json::array();
  for (const auto& e : index.entries) {
    seqs.push_back({{"id", e.id}, {"subject", e.subject}, {"object_id", e.object_id}, {"object_kind", e.object_kind},
                    {"verb", e.verb}, {"split_tags", e.split_tags}, {"path", e.path}, {"text", e.text}});
  }
  const json doc = {{"format", "vihoi-corpus"}, {"version", 1},       {"seed", seed},
                    {"contact_labels", config.contact_labels}, {"frames", config.duration_frames},
                    {"fps", config.generator.fps}, {"objects", objects}, {"sequences", seqs}};
  io::write_text_atomic(dir / "index.json", doc.dump(2) + "\n");
  return index;
}

CorpusIndex load_index(const fs::path& dir) {
  const json doc = json::parse(io::read_text(dir / "index.json"));
  if (doc.value("format", "") != "vihoi-corpus") fail(ErrorCode::kFormat, "not a corpus index: " + dir.string());
  CorpusIndex index;
  index.seed = doc.at("seed").get<std::uint64_t>();
  index.contact_labels = doc.value("contact_labels", true);
  for (const auto& s : doc.at("sequences")) {
    index.entries.push_back({s.at("id").get<std::string>(), s.at("subject").get<int>(), s.at("object_id").get<std::string>(),
                             s.at("object_kind").get<std::string>(), s.at("verb").get<std::string>(),
                             s.at("split_tags").get<std::vector<std::string>>(), s.at("path").get<std::string>(),
                             s.value("text", "")});
  }
  return index;
}

motion::SequenceRecord load_sequence(const fs::path& dir, const CorpusEntry& entry) {
  return motion::read_sequence_dir(dir / entry.path);
}

Split make_split(const CorpusIndex& index, const SplitSpec& spec) {
  if (spec.held_out.empty()) fail(ErrorCode::kEmptySplit, "held_out list is empty");
  const std::set<std::string> held(spec.held_out.begin(), spec.held_out.end());
  Split split;
  for (const auto& e : index.entries) {
    const std::string key = spec.mode == SplitMode::kBySubject ? std::to_string(e.subject) : e.object_kind;
    (held.contains(key) ? split.test : split.train).push_back(e.id);
  }
  if (split.train.empty() || split.test.empty()) fail(ErrorCode::kEmptySplit, "split leaves one side empty");
  return split;
}

}  // namespace vihoi::dataset
