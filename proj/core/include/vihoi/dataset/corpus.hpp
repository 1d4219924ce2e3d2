#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vihoi/dataset/generator.hpp"
#include "vihoi/motion/container.hpp"

namespace vihoi::dataset {

struct CorpusConfig {
  int n_sequences = 64;
  int n_subjects = 10;
  std::vector<int> held_out_subjects = {8, 9};
  int duration_frames = 40;
  GeneratorConfig generator;
  std::vector<Verb> verbs = {kAllVerbs.begin(), kAllVerbs.end()};
  bool contact_labels = true;
  // Retries per item when a sampled task is infeasible.
  int max_attempts = 64;
};

struct CorpusEntry {
  std::string id;
  int subject = 0;
  std::string object_id;
  std::string object_kind;
  std::string verb;
  std::vector<std::string> split_tags;
  std::string path;  // relative to the corpus root
  std::string text;
};

struct CorpusIndex {
  std::uint64_t seed = 0;
  bool contact_labels = true;
  std::vector<CorpusEntry> entries;

  const CorpusEntry& find(const std::string& id) const;
};

// Layout:
//   index.json            seed, flags, one record per sequence, object list
//   objects/<id>.obj      canonical object meshes
//   sequences/<id>/       motion_repr sequence directories
// Item i uses verb verbs[i mod |verbs|] and a task/subject drawn from a seed
// derived from (seed, i); output bytes depend only on (n, config, seed).
CorpusIndex build_corpus(const std::filesystem::path& dir, const CorpusConfig& config, std::uint64_t seed);

CorpusIndex load_index(const std::filesystem::path& dir);
motion::SequenceRecord load_sequence(const std::filesystem::path& dir, const CorpusEntry& entry);

enum class SplitMode { kBySubject, kByObjectCategory };

struct SplitSpec {
  SplitMode mode = SplitMode::kBySubject;
  std::vector<std::string> held_out;  // subject ids as decimal strings, or object kinds
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

// Throws EmptySplit if either side is empty or held_out is empty.
Split make_split(const CorpusIndex& index, const SplitSpec& spec);

}  // namespace vihoi::dataset
