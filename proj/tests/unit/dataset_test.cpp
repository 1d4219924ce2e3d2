#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include "vihoi/common/error.hpp"
#include "vihoi/common/io.hpp"
#include "vihoi/dataset/corpus.hpp"
#include "vihoi/geometry/distance.hpp"

namespace vihoi::dataset {
namespace {

namespace fs = std::filesystem;
using motion::Vec3;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

struct Generated {
  ToyTask task;
  int subject;
  motion::MotionSequence seq;
};

// Deterministic stream of feasible tasks across all verbs.
std::vector<Generated> generate_many(int n, std::uint64_t seed) {
  std::vector<Generated> out;
  Rng rng(seed);
  for (int i = 0; out.size() < static_cast<std::size_t>(n); ++i) {
    const Verb verb = kAllVerbs[static_cast<std::size_t>(i) % kAllVerbs.size()];
    const ToyTask task = sample_task(verb, rng, 40);
    const int subject = static_cast<int>(rng.uniform_index(10));
    try {
      out.push_back({task, subject, generate_sequence(task, subject, static_cast<std::uint64_t>(i))});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasibleTask) throw;
    }
  }
  return out;
}

// Distance of a world point to the posed mesh, via the brute-force scan.
double posed_distance(const geometry::ObjectMesh& mesh, const motion::MotionSequence& s, int f, const Vec3& p) {
  const motion::Mat3 r = motion::rot6d_to_matrix(s.obj_rot6d.row(f).transpose());
  return geometry::unsigned_distance(mesh, r.transpose() * (p - Vec3(s.obj_transl.row(f).transpose())));
}

bool object_moved(const motion::MotionSequence& s, int f) {
  return s.obj_transl.row(f) != s.obj_transl.row(f - 1) || s.obj_rot6d.row(f) != s.obj_rot6d.row(f - 1);
}

class GeneratedSequences : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { items_ = new std::vector<Generated>(generate_many(100, 2024)); }
  static void TearDownTestSuite() { delete items_; }
  static std::vector<Generated>* items_;
};
std::vector<Generated>* GeneratedSequences::items_ = nullptr;

TEST_F(GeneratedSequences, PassInvariantsAndTemplates) {
  for (const auto& g : *items_) {
    EXPECT_NO_THROW(motion::validate(g.seq));
    EXPECT_EQ(g.seq.length(), 40);
    EXPECT_EQ(g.seq.text, annotation(g.task));
    EXPECT_EQ(g.seq.text.rfind(std::string(1, static_cast<char>(std::toupper(to_string(g.task.verb)[0]))), 0), 0u);
  }
}

TEST_F(GeneratedSequences, ContactIsOneContiguousRunPerHand) {
  for (const auto& g : *items_) {
    if (g.task.verb == Verb::kKick) continue;
    for (int h = 0; h < 2; ++h) {
      int runs = 0;
      for (int f = 0; f < g.seq.length(); ++f)
        if (g.seq.contact[f][h] && (f == 0 || !g.seq.contact[f - 1][h])) ++runs;
      EXPECT_EQ(runs, 1) << g.seq.text << " hand " << h;
    }
  }
}

TEST_F(GeneratedSequences, ObjectMovesOnlyDuringContact) {
  for (const auto& g : *items_) {
    const auto mesh = find_object(g.task.object_id).mesh();
    const auto poses = motion::forward_kinematics(g.seq, motion::Skeleton::standard(subject_scale(g.subject)));
    int moving = 0;
    for (int f = 1; f < g.seq.length(); ++f) {
      if (!object_moved(g.seq, f)) continue;
      ++moving;
      if (g.task.verb == Verb::kKick) {
        EXPECT_LE(posed_distance(mesh, g.seq, f, poses[f][motion::kRightFoot]), kContactThreshold);
        EXPECT_LE(posed_distance(mesh, g.seq, f - 1, poses[f - 1][motion::kRightFoot]), kContactThreshold);
      } else {
        const auto& c = g.seq.contact;
        EXPECT_TRUE((c[f][0] || c[f][1]) && (c[f - 1][0] || c[f - 1][1])) << g.seq.text << " frame " << f;
      }
    }
    EXPECT_GT(moving, 0);
  }
}

TEST_F(GeneratedSequences, LabelsMatchGeometry) {
  for (const auto& g : *items_) {
    const auto mesh = find_object(g.task.object_id).mesh();
    const auto poses = motion::forward_kinematics(g.seq, motion::Skeleton::standard(subject_scale(g.subject)));
    for (int f = 0; f < g.seq.length(); ++f)
      for (int h = 0; h < 2; ++h) {
        const double d = posed_distance(mesh, g.seq, f, poses[f][motion::kHandJoints[h]]);
        EXPECT_EQ(g.seq.contact[f][h], d <= kContactThreshold) << g.seq.text << " frame " << f;
      }
    if (g.task.verb == Verb::kKick)
      for (const auto& c : g.seq.contact) EXPECT_FALSE(c[0] || c[1]);
  }
}

TEST_F(GeneratedSequences, FeetStartOnFloor) {
  for (const auto& g : *items_) {
    const auto poses = motion::forward_kinematics(g.seq, motion::Skeleton::standard(subject_scale(g.subject)));
    for (int j : motion::kFootJoints) EXPECT_NEAR(poses[0][j].y(), 0.0, 1e-9);
  }
}

TEST(Generator, VerbDirections) {
  Rng rng(5);
  const auto lift = generate_sequence(sample_task(Verb::kLift, rng, 40), 1, 1);
  const auto push = generate_sequence(sample_task(Verb::kPush, rng, 40), 1, 1);
  EXPECT_GT(lift.obj_transl(39, 1) - lift.obj_transl(0, 1), 0.2);
  EXPECT_LT(push.obj_transl(39, 1) - push.obj_transl(0, 1), -0.2);
}

TEST(Generator, DeterministicAndErrors) {
  Rng rng(8);
  const ToyTask task = sample_task(Verb::kPull, rng, 36);
  const auto a = generate_sequence(task, 3, 77), b = generate_sequence(task, 3, 77);
  EXPECT_EQ(motion::to_model_matrix(a), motion::to_model_matrix(b));
  EXPECT_EQ(a.contact, b.contact);

  ToyTask far = task;
  far.distance = 1.4;
  far.origin_x = far.origin_z = 0;
  EXPECT_EQ(code_of([&] { generate_sequence(far, 3, 1); }), ErrorCode::kInfeasibleTask);
  ToyTask short_task = task;
  short_task.duration_frames = 20;
  EXPECT_EQ(code_of([&] { generate_sequence(short_task, 3, 1); }), ErrorCode::kInvalidArgument);
  for (int s = 0; s < 50; ++s) {
    EXPECT_GE(subject_scale(s), 0.9);
    EXPECT_LE(subject_scale(s), 1.1);
  }
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = io::read_text(e.path());
  return files;
}

TEST(Corpus, ByteIdenticalRebuild) {
  const fs::path root = fs::temp_directory_path() / "vihoi_corpus_test";
  fs::remove_all(root);
  CorpusConfig cfg;
  cfg.n_sequences = 64;
  const CorpusIndex index = build_corpus(root / "a", cfg, 42);
  build_corpus(root / "b", cfg, 42);
  const auto a = snapshot(root / "a");
  EXPECT_EQ(a, snapshot(root / "b"));
  EXPECT_EQ(a.size(), 1u + 6u + 64u * 6u);

  const CorpusIndex loaded = load_index(root / "a");
  ASSERT_EQ(loaded.entries.size(), 64u);
  for (const auto& e : loaded.entries) {
    const auto rec = load_sequence(root / "a", e);
    EXPECT_NO_THROW(motion::validate(rec.motion));
    EXPECT_EQ(rec.meta.verb, e.verb);
    EXPECT_EQ(rec.motion.text, e.text);
    EXPECT_EQ(e.split_tags.front(), e.subject >= 8 ? "test" : "train");
  }
  EXPECT_EQ(index.entries.size(), loaded.entries.size());
  fs::remove_all(root);
}

TEST(Corpus, VerbHistogramAndNoLabelFlag) {
  const fs::path root = fs::temp_directory_path() / "vihoi_corpus_hist";
  fs::remove_all(root);
  CorpusConfig cfg;
  cfg.n_sequences = 500;
  cfg.contact_labels = false;
  const CorpusIndex index = build_corpus(root, cfg, 7);
  std::map<std::string, int> counts;
  for (const auto& e : index.entries) ++counts[e.verb];
  ASSERT_EQ(counts.size(), 5u);
  for (const auto& [verb, n] : counts) EXPECT_NEAR(n, 100, 10) << verb;
  const auto rec = load_sequence(root, index.entries.front());
  EXPECT_FALSE(rec.meta.has_contact_labels);
  for (const auto& c : rec.motion.contact) EXPECT_FALSE(c[0] || c[1]);
  EXPECT_FALSE(load_index(root).contact_labels);
  fs::remove_all(root);
}

CorpusIndex fake_index() {
  CorpusIndex idx;
  const char* kinds[] = {"box", "cylinder", "lamp_composite", "table_composite"};
  for (int i = 0; i < 40; ++i) {
    idx.entries.push_back({"s" + std::to_string(i), i % 10, "obj", kinds[i % 4], "lift", {}, "", ""});
  }
  return idx;
}

TEST(Split, BySubjectAndCategory) {
  const CorpusIndex idx = fake_index();
  const Split s = make_split(idx, {SplitMode::kBySubject, {"3", "7"}});
  EXPECT_EQ(s.test.size(), 8u);
  for (const auto& id : s.test) {
    const int subj = idx.find(id).subject;
    EXPECT_TRUE(subj == 3 || subj == 7);
  }
  EXPECT_EQ(s.train.size() + s.test.size(), idx.entries.size());

  const Split c = make_split(idx, {SplitMode::kByObjectCategory, {"cylinder"}});
  for (const auto& id : c.train) EXPECT_NE(idx.find(id).object_kind, "cylinder");
  for (const auto& id : c.test) EXPECT_EQ(idx.find(id).object_kind, "cylinder");
  std::vector<std::string> all = c.train;
  all.insert(all.end(), c.test.begin(), c.test.end());
  std::sort(all.begin(), all.end());
  std::vector<std::string> expected;
  for (const auto& e : idx.entries) expected.push_back(e.id);
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(all, expected);

  EXPECT_EQ(code_of([&] { make_split(idx, {SplitMode::kBySubject, {}}); }), ErrorCode::kEmptySplit);
  EXPECT_EQ(code_of([&] { make_split(idx, {SplitMode::kBySubject, {"99"}}); }), ErrorCode::kEmptySplit);
}

}  // namespace
}  // namespace vihoi::dataset
