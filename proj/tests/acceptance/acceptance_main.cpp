// Acceptance run: one PASS/FAIL line per criterion, exit code 1 if any
// criterion fails. Criteria 11-13 drive the command layer end to end in a
// scratch directory (VIHOI_ACCEPTANCE_DIR, default under the system temp).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "support/gradcheck.hpp"
#include "vihoi/adapter/qformer.hpp"
#include "vihoi/common/error.hpp"
#include "vihoi/common/io.hpp"
#include "vihoi/dataset/catalog.hpp"
#include "vihoi/dataset/generator.hpp"
#include "vihoi/diffusion/trainer.hpp"
#include "vihoi/eval/evaluate.hpp"
#include "vihoi/geometry/primitives.hpp"
#include "vihoi/priors/warmup.hpp"
#include "vihoi/render/keyframes.hpp"
#include "vihoi/render/rasterizer.hpp"
#include "vihoi/render/reference_store.hpp"
#include "vihoi_cli/commands.hpp"

namespace fs = std::filesystem;
using namespace vihoi;
using Md = nn::Matrix<double>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

fs::path scratch_root() {
  if (const char* dir = std::getenv("VIHOI_ACCEPTANCE_DIR"); dir != nullptr && *dir != '\0') return dir;
  return fs::temp_directory_path() / ("vihoi_acceptance_" + std::to_string(::getpid()));
}

const cli::CommandOptions kQuiet{};

// ---------------------------------------------------------------------------
// 1-4: diffusion and adapter contracts

Outcome forward_process_limit() {
  Stopwatch clock;
  const diffusion::NoiseSchedule s = diffusion::make_schedule(diffusion::ScheduleKind::kCosine, 1000);
  Rng rng(101);
  const Md x0 = diffusion::standard_normal(rng, 4, 36).array().tanh() * 1.0;
  const int n = 10000;
  Md sum = Md::Zero(4, 36), sq = Md::Zero(4, 36);
  for (int i = 0; i < n; ++i) {
    const Md x = diffusion::q_sample<double>(x0, s.steps() - 1, diffusion::standard_normal(rng, 4, 36), s);
    sum += x;
    sq += x.cwiseProduct(x);
  }
  const Md mean = sum / n;
  const Md var = sq / n - mean.cwiseProduct(mean);
  const double worst_mean = mean.cwiseAbs().maxCoeff();
  const double worst_var = (var.array() - 1.0).abs().maxCoeff();
  const double secs = clock.seconds();
  return {worst_mean <= 0.05 && worst_var <= 0.05 && secs < 30,
          "max|mean|=" + fmt(worst_mean) + " max|var-1|=" + fmt(worst_var) + " in " + fmt(secs, 3) + " s"};
}

Outcome closed_form_vs_chain() {
  const diffusion::NoiseSchedule s = diffusion::make_schedule(diffusion::ScheduleKind::kCosine, 1000);
  Rng rng(102);
  const Md x0 = diffusion::standard_normal(rng, 8, 144);
  double worst = 0;
  for (int t : {0, 1, 10, 123, 500, 877, 999}) {
    Md x = x0;
    Md noise = Md::Zero(8, 144);
    for (int k = 0; k <= t; ++k) {
      const Md e = diffusion::standard_normal(rng, 8, 144);
      x = diffusion::q_step<double>(x, k, e, s);
      noise = std::sqrt(s.alpha[k]) * noise + std::sqrt(1 - s.alpha[k]) * e;
    }
    const Md matched = noise / std::sqrt(1 - s.alpha_bar[t]);
    worst = std::max(worst, (diffusion::q_sample<double>(x0, t, matched, s) - x).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-5, "max |closed form - chain| = " + fmt(worst) + " over t in {0,1,10,123,500,877,999}"};
}

Outcome gradient_correctness() {
  Stopwatch clock;
  double worst_pn = 0, worst_q = 0, worst_loss = 0;
  {
    nn::ParameterStore<double> store;
    Rng rng(103);
    const auto q = adapter::QFormer<double>::make(store, "q.", {32, 16, 2, 4, false}, rng);
    auto& e = store.add("input", nn::normal_init(rng, 16, 32, 1.0));
    const Md target = nn::normal_init(rng, 2, 16, 1.0);
    const auto pn_loss = [&](nn::Tape<double>& t) {
      return nn::mean(t, nn::square(t, nn::affine(t, q.project_normalize(t, t.parameter(e)), 1.0, 0.25)));
    };
    store.zero_grad();
    {
      nn::Tape<double> t;
      t.backward(pn_loss(t));
    }
    std::vector<nn::Parameter<double>*> pn_params = {&e, &store.get("q.proj.weight"), &store.get("q.proj.bias")};
    worst_pn = testing::check_gradients(pn_params, [&] {
                 nn::Tape<double> t(false);
                 return t.scalar(pn_loss(t));
               }, 16).max_rel_error;

    const auto q_loss = [&](nn::Tape<double>& t) {
      return nn::mean(t, nn::square(t, nn::sub(t, q(t, t.parameter(e)), t.constant(target))));
    };
    store.zero_grad();
    {
      nn::Tape<double> t;
      t.backward(q_loss(t));
    }
    worst_q = testing::check_gradients(store.all(), [&] {
                nn::Tape<double> t(false);
                return t.scalar(q_loss(t));
              }, 8).max_rel_error;
  }
  {
    diffusion::ModelConfig c;
    c.denoiser.d_model = 16;
    c.denoiser.layers = 1;
    c.denoiser.heads = 2;
    c.denoiser.max_len = 16;
    c.denoiser.geometry_embed_dim = 8;
    c.denoiser.ff_multiplier = 2;
    c.denoiser.motion_width = 32;
    c.denoiser.bps_points = 16;
    c.d_enc = 16;
    c.adapter_heads = 2;
    c.timesteps = 100;
    diffusion::HoiModel<double> model(c, 104);
    const diffusion::NoiseSchedule s = diffusion::make_schedule(c.schedule, c.timesteps);
    Rng rng(105);
    std::vector<diffusion::TrainItem> items;
    for (int i = 0; i < 2; ++i) {
      diffusion::Condition cond;
      cond.priors.visual = nn::normal_init(rng, 6, c.d_enc, 1.0).cast<float>();
      cond.priors.text = nn::normal_init(rng, 4, c.d_enc, 1.0).cast<float>();
      cond.geometry = nn::normal_init(rng, 1, c.denoiser.geometry_width(), 0.3).row(0);
      items.push_back({"g" + std::to_string(i), diffusion::standard_normal(rng, 16, 32), cond});
    }
    const diffusion::TrainItem* batch[] = {&items[0], &items[1]};
    model.store().zero_grad();
    {
      nn::Tape<double> t;
      t.backward(diffusion::training_loss<double>(t, model, batch, s, 7));
    }
    worst_loss = testing::check_gradients(model.store().all(), [&] {
                   nn::Tape<double> t(false);
                   return t.scalar(diffusion::training_loss<double>(t, model, batch, s, 7));
                 }, 3).max_rel_error;
  }
  const double secs = clock.seconds();
  const double worst = std::max({worst_pn, worst_q, worst_loss});
  return {worst < 1e-3 && secs < 120, "rel. err project_normalize=" + fmt(worst_pn) + " qformer=" + fmt(worst_q) +
                                          " training_loss=" + fmt(worst_loss) + " in " + fmt(secs, 3) + " s"};
}

Outcome qformer_contracts() {
  bool shapes = true;
  for (int k : {1, 2, 4, 8}) {
    nn::ParameterStore<double> store;
    Rng rng(106);
    const auto q = adapter::QFormer<double>::make(store, "q.", {32, 64, k, 4, false}, rng);
    nn::Tape<double> t(false);
    const Md out = t.value(q(t, t.constant(nn::normal_init(rng, 11, 32, 1.0))));
    shapes = shapes && out.rows() == k && out.cols() == 64;
  }
  nn::ParameterStore<double> store;
  Rng rng(107);
  const auto q = adapter::QFormer<double>::make(store, "q.", {32, 64, 4, 4, false}, rng);
  const Md e = nn::normal_init(rng, 24, 32, 1.0);
  const auto run = [&](const Md& m) {
    nn::Tape<double> t(false);
    return Md(t.value(q(t, t.constant(m))));
  };
  const Md base = run(e);
  std::vector<int> order(24);
  std::iota(order.begin(), order.end(), 0);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    Md p(24, 32);
    for (int r = 0; r < 24; ++r) p.row(r) = e.row(order[static_cast<std::size_t>(r)]);
    worst = std::max(worst, (run(p) - base).cwiseAbs().maxCoeff());
  }
  const diffusion::ModelConfig defaults;
  const bool default_k = defaults.k_visual == 1 && defaults.k_text == 1;
  return {shapes && worst < 1e-6 && default_k, std::string("shapes k x d_model for k in {1,2,4,8}: ") +
                                                   (shapes ? "ok" : "WRONG") + "; max shuffle diff " + fmt(worst) +
                                                   "; default k = " + std::to_string(defaults.k_visual)};
}

// ---------------------------------------------------------------------------
// 5-6: overfit a 32-sequence corpus, then probe text conditioning

struct OverfitFixture {
  fs::path dir;
  dataset::CorpusIndex index;
  std::unique_ptr<priors::ToyEncoder> encoder;
  std::vector<diffusion::CorpusItem> raw;
  std::vector<diffusion::TrainItem> items;
  std::unique_ptr<diffusion::Trainer> trainer;
  double probe_before = 0;
  double probe_after = 0;
  double seconds = 0;
};

double mpjpe_of(const motion::MotionSequence& a, const motion::MotionSequence& b, int subject) {
  return eval::mpjpe(a, b, motion::Skeleton::standard(dataset::subject_scale(subject)));
}

OverfitFixture train_overfit(const fs::path& root) {
  Stopwatch clock;
  OverfitFixture f;
  f.dir = root / "overfit";
  fs::remove_all(f.dir);
  dataset::CorpusConfig cc;
  cc.n_sequences = 32;
  f.index = dataset::build_corpus(f.dir, cc, 1);
  for (const auto& e : f.index.entries) {
    const auto rec = dataset::load_sequence(f.dir, e);
    const auto skel = motion::Skeleton::standard(dataset::subject_scale(e.subject));
    const auto mesh = dataset::find_object(e.object_id).mesh();
    render::write_reference_images(f.dir / e.path,
                                   render::render_keyframes(rec.motion, mesh, skel, render::frame_sequence(rec.motion, 128)));
  }
  priors::ToyEncoderConfig ec;
  ec.depth = 12;
  ec.width = 64;
  ec.image_size = 64;
  f.encoder = std::make_unique<priors::ToyEncoder>(ec, 3);
  priors::WarmupConfig wc;
  wc.epochs = 100;
  f.encoder->warm_up(priors::make_warmup_pairs(100, 4, 64), wc);
  f.encoder->freeze();

  std::vector<std::string> ids;
  for (const auto& e : f.index.entries) ids.push_back(e.id);
  f.raw = diffusion::load_corpus_items(f.dir, f.index, ids, *f.encoder, {}, diffusion::GeometryMode::kBps);
  const diffusion::Normalizer normalizer = diffusion::fit_normalizer(f.raw);
  f.items = diffusion::normalize_items(f.raw, normalizer);

  diffusion::ModelConfig mc;
  mc.denoiser.d_model = 128;
  mc.denoiser.layers = 4;
  mc.denoiser.max_len = 64;
  mc.denoiser.geometry_embed_dim = 64;
  mc.d_enc = 64;
  diffusion::TrainConfig tc;
  tc.steps = 2000;
  tc.batch = 16;
  tc.adam.lr = 1e-3;
  tc.cosine_decay = true;
  f.trainer = std::make_unique<diffusion::Trainer>(mc, tc, normalizer, 7, f.encoder->checksum());
  f.probe_before = f.trainer->probe_loss(f.items, 5);
  diffusion::train(*f.trainer, f.items, *f.encoder);
  f.probe_after = f.trainer->probe_loss(f.items, 5);
  f.seconds = clock.seconds();
  return f;
}

Outcome overfit_convergence(const OverfitFixture& f) {
  const double ratio = f.probe_after / f.probe_before;
  const auto& entry = f.index.entries.front();
  const auto gt = dataset::load_sequence(f.dir, entry).motion;
  const auto gen = diffusion::generate(f.trainer->model(), f.trainer->normalizer(), f.raw.front().condition,
                                       gt.length(), 11, gt.fps, gt.text);
  const double err = mpjpe_of(gen, gt, entry.subject);
  std::vector<double> others;
  for (std::size_t i = 1; i < 8; ++i) {
    const auto& e = f.index.entries[i];
    const auto g = dataset::load_sequence(f.dir, e).motion;
    others.push_back(mpjpe_of(diffusion::generate(f.trainer->model(), f.trainer->normalizer(), f.raw[i].condition,
                                                  g.length(), 11, g.fps, g.text),
                              g, e.subject));
  }
  std::sort(others.begin(), others.end());
  return {ratio < 0.05 && err < 8.0 && f.seconds < 25 * 60,
          "loss " + fmt(f.probe_before) + " -> " + fmt(f.probe_after) + " (ratio " + fmt(ratio) + "); MPJPE " +
              fmt(err) + " cm on " + entry.id + " (" + entry.verb + ", seed 11; median over items 1-7: " +
              fmt(others[others.size() / 2]) + " cm); " + fmt(f.seconds, 4) + " s"};
}

Outcome conditioning_sensitivity(const OverfitFixture& f) {
  int lift = -1, push = -1;
  for (std::size_t i = 0; i < f.index.entries.size() && (lift < 0 || push < 0); ++i) {
    const auto& e = f.index.entries[i];
    if (e.verb == "lift" && lift < 0) lift = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < f.index.entries.size(); ++i) {
    const auto& e = f.index.entries[i];
    if (e.verb == "push" && lift >= 0 && e.object_id == f.index.entries[static_cast<std::size_t>(lift)].object_id) {
      push = static_cast<int>(i);
      break;
    }
  }
  if (lift < 0 || push < 0) return {false, "corpus has no lift/push pair on one object"};
  const auto& a = f.raw[static_cast<std::size_t>(lift)].condition;
  const auto& b = f.raw[static_cast<std::size_t>(push)].condition;
  const auto dy = [&](const diffusion::Condition& c, std::uint64_t seed) {
    const auto g = diffusion::generate(f.trainer->model(), f.trainer->normalizer(), c, 40, seed, 20.0, "");
    return g.obj_transl(g.length() - 1, 1) - g.obj_transl(0, 1);
  };
  int flips = 0;
  std::ostringstream log;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    diffusion::Condition a_with_b = a, b_with_a = b;
    a_with_b.priors.text = b.priors.text;
    b_with_a.priors.text = a.priors.text;
    const double own_a = dy(a, seed), swap_a = dy(a_with_b, seed);
    const double own_b = dy(b, seed), swap_b = dy(b_with_a, seed);
    const bool flipped = own_a * swap_a < 0 && own_b * swap_b < 0;
    flips += flipped;
    if (seed < 2) log << " seed " << seed << ": " << fmt(own_a, 3) << "/" << fmt(swap_a, 3) << ";";
  }
  return {flips >= 8, std::to_string(flips) + "/10 seeds flip in both directions (" +
                          f.index.entries[static_cast<std::size_t>(lift)].id + " lift vs " +
                          f.index.entries[static_cast<std::size_t>(push)].id + " push, " +
                          f.index.entries[static_cast<std::size_t>(lift)].object_id + ";" + log.str() + ")"};
}

// ---------------------------------------------------------------------------
// 7-10: metric and keyframe oracles

double box_distance(const geometry::Vec3& p, const geometry::Vec3& lo, const geometry::Vec3& hi) {
  const geometry::Vec3 c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  const geometry::Vec3 q = (p - c).cwiseAbs() - h;
  const double outside = q.cwiseMax(0.0).norm();
  return outside > 0 ? outside : -std::min(0.0, q.maxCoeff());
}

Outcome metric_oracles() {
  const motion::Skeleton skel = motion::Skeleton::standard();
  // Contact: brute-force confusion counts against an analytic box distance.
  const geometry::ObjectMesh box = dataset::find_object("box_large").mesh();
  const geometry::SdfQuery box_sdf(box);
  const geometry::Aabb bb = geometry::bounding_box(box);
  Rng rng(107);
  int contact_mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int L = 5 + static_cast<int>(rng.uniform_index(12));
    motion::MotionSequence seq = motion::MotionSequence::zeros(L);
    motion::ContactLabels labels(static_cast<std::size_t>(L));
    for (int f = 0; f < L; ++f) {
      seq.root_transl.row(f) = Eigen::RowVector3d(rng.uniform(-0.2, 0.2), 0.9, rng.uniform(-0.2, 0.2));
      seq.set_joint_rotation(f, motion::kLeftElbow,
                             motion::matrix_to_rot6d(motion::axis_angle(motion::Vec3::UnitX(), rng.uniform(0, 1.5))));
      const auto pose = motion::forward_kinematics_frame(seq, f, skel).positions;
      const motion::Vec3 anchor = pose[motion::kHandJoints[rng.uniform_index(2)]];
      const motion::Vec3 jitter(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4));
      seq.obj_transl.row(f) = (anchor + jitter - bb.center()).transpose();
      labels[static_cast<std::size_t>(f)] = {rng.uniform() < 0.5, rng.uniform() < 0.5};
    }
    long tp = 0, fp = 0, fn = 0, pos = 0;
    for (int f = 0; f < L; ++f) {
      const auto pose = motion::forward_kinematics_frame(seq, f, skel).positions;
      for (int h = 0; h < 2; ++h) {
        const motion::Vec3 local = pose[motion::kHandJoints[h]] - seq.obj_transl.row(f).transpose();
        const bool p = box_distance(local, bb.min, bb.max) <= eval::kContactThreshold;
        const bool g = labels[static_cast<std::size_t>(f)][h];
        pos += p;
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
      }
    }
    const double prec = tp + fp ? double(tp) / double(tp + fp) : 1.0;
    const double rec = tp + fn ? double(tp) / double(tp + fn) : 1.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    const eval::ContactScores s = eval::contact_metrics(seq, labels, box_sdf, skel);
    const bool same = std::abs(s.precision - prec) < 1e-12 && std::abs(s.recall - rec) < 1e-12 &&
                      std::abs(s.f1 - f1) < 1e-12 && std::abs(s.percent - double(pos) / (2.0 * L)) < 1e-12;
    contact_mismatches += !same;
  }

  // MPJPE: frame 0 translated, frame 1 with a bent elbow moving only the wrist.
  const motion::MotionSequence gt = motion::MotionSequence::zeros(2);
  motion::MotionSequence pred = motion::MotionSequence::zeros(2);
  pred.root_transl.row(0) = Eigen::RowVector3d(0.03, -0.04, 0.0);  // 5 cm for all 22 joints
  const motion::Vec3 offset = skel.offset[motion::kLeftWrist];
  const motion::Vec3 axis = offset.cross(motion::Vec3::UnitZ()).normalized();
  const double theta = 1.1;
  pred.set_joint_rotation(1, motion::kLeftElbow, motion::matrix_to_rot6d(motion::axis_angle(axis, theta)));
  const double expected = (22 * 5.0 + 100.0 * 2.0 * offset.norm() * std::sin(theta / 2)) / 44.0;
  const double mpjpe_err = std::abs(eval::mpjpe(pred, gt, skel) - expected);

  // Penetration: both wrists at the centre of a unit sphere on even frames.
  const geometry::SdfQuery sphere(geometry::make_sphere(1.0, 24, 48));
  motion::MotionSequence pen = motion::MotionSequence::zeros(10);
  for (int f = 0; f < 10; ++f) {
    pen.root_transl.row(f) = Eigen::RowVector3d(0, 0.9, 0);
    const auto pose = motion::forward_kinematics_frame(pen, f, skel).positions;
    const motion::Vec3 mid = 0.5 * (pose[motion::kLeftWrist] + pose[motion::kRightWrist]);
    pen.obj_transl.row(f) = (f % 2 == 0 ? mid : motion::Vec3(mid + motion::Vec3(0, 0, 4))).transpose();
  }
  const double p_half = eval::hand_penetration(pen, sphere, skel);
  const double p_inf = eval::hand_penetration(pen, sphere, skel, std::numeric_limits<double>::infinity());
  const double pen_err = std::max(std::abs(p_half - 0.5), std::abs(p_inf));

  return {contact_mismatches == 0 && mpjpe_err < 1e-9 && pen_err < 1e-6,
          "contact mismatches " + std::to_string(contact_mismatches) + "/100; MPJPE |err| " + fmt(mpjpe_err) +
              "; P_hand half-inside " + fmt(p_half, 8) + ", delta=inf " + fmt(p_inf)};
}

Outcome fid_oracle() {
  Rng rng(108);
  const auto gaussian = [&](int n, int d) {
    eval::FeatureMatrix m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
  };
  const eval::FeatureMatrix a = gaussian(2000, 32);
  const double self = eval::fid(a, a);

  const int d = 8;
  eval::FeatureMatrix x = gaussian(100000, d), y = gaussian(100000, d);
  Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(d);
  mu(1) = std::sqrt(2.0);
  mu(6) = std::sqrt(2.0);
  y.rowwise() += mu;
  const double shift = eval::fid(x, y);

  double diag_err = 0;
  const int dim = 512;
  for (double sa : {0.25, 1.0, 4.0}) {
    for (double sb : {0.5, 2.0}) {
      eval::GaussianMoments ga{Eigen::VectorXd::Zero(dim), sa * Eigen::MatrixXd::Identity(dim, dim), 0};
      eval::GaussianMoments gb{Eigen::VectorXd::Constant(dim, 0.05), sb * Eigen::MatrixXd::Identity(dim, dim), 0};
      const double closed = dim * std::pow(std::sqrt(sa) - std::sqrt(sb), 2) + gb.mean.squaredNorm();
      diag_err = std::max(diag_err, std::abs(eval::frechet_distance(ga, gb) - closed));
    }
  }
  return {self < 1e-6 && std::abs(shift - 4.0) <= 0.1 && diag_err < 1e-6,
          "fid(A,A)=" + fmt(self) + "; shift |mu|^2=4 at n=1e5, d=8 -> " + fmt(shift, 5) +
              "; diagonal closed form |err| " + fmt(diag_err)};
}

Outcome r_precision_calibration() {
  Rng rng(109);
  const auto unit = [&](int n, int d) {
    eval::FeatureMatrix m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    m.rowwise().normalize();
    return m;
  };
  const eval::FeatureMatrix t = unit(3200, 64), m = unit(3200, 64);
  const eval::RPrecision random = eval::r_precision(t, m, 3);
  const eval::RPrecision same = eval::r_precision(t, t, 3);
  const bool ok = std::abs(random.top1 - 1.0 / 32) <= 0.02 && same.top1 == 1.0 && same.top2 == 1.0 &&
                  same.top3 == 1.0 && random.top1 <= random.top2 && random.top2 <= random.top3;
  return {ok, "random top1 " + fmt(random.top1) + " (chance " + fmt(1.0 / 32) + ") over 100 batches; coincident (" +
                  fmt(same.top1) + ", " + fmt(same.top2) + ", " + fmt(same.top3) + ")"};
}

Outcome keyframe_oracle() {
  Stopwatch clock;
  constexpr int L = 14;
  Rng rng(110);
  int mismatches = 0;
  for (unsigned mask = 0; mask < (1u << L); ++mask) {
    motion::ContactLabels c(L, {false, false});
    for (int f = 0; f < L; ++f) {
      if (!(mask >> f & 1u)) continue;
      const auto which = rng.uniform_index(3);
      c[static_cast<std::size_t>(f)] = {which != 1, which != 0};
    }
    int best_s = -1, best_len = 0;
    for (int s = 0; s < L; ++s)
      for (int e = s; e < L; ++e) {
        bool all = true;
        for (int f = s; f <= e; ++f) all = all && (mask >> f & 1u);
        if (all && e - s + 1 > best_len) {
          best_len = e - s + 1;
          best_s = s;
        }
      }
    const render::KeyframeTriple want =
        best_s < 0 ? render::KeyframeTriple{0, L / 2, L - 1}
                   : render::KeyframeTriple{best_s, (2 * best_s + best_len - 1) / 2, best_s + best_len - 1};
    mismatches += !(render::select_keyframes(c) == want);
  }
  const double secs = clock.seconds();
  return {mismatches == 0 && secs < 10,
          std::to_string(mismatches) + " mismatches over 16384 masks in " + fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------------------
// 11-13: command layer

cli::RunConfig tiny_config(const fs::path& root) {
  cli::RunConfig c = cli::RunConfig::parse(R"(
[dataset]
n_sequences = 80
held_out_subjects = 5, 6, 7, 8, 9

[encoder]
width = 32
warmup_pairs = 40
warmup_epochs = 20

[diffusion]
d_model = 32
layers = 1
geometry_embed_dim = 32
steps = 20
sample_steps = 8
checkpoint_every = 5

[evaluator]
hidden = 32
embed_dim = 64
epochs = 3

[sample]
limit = 4

[ablation]
train_steps = 20
sample_steps = 5
)");
  for (const char* key : {"data", "encoder", "evaluator", "model", "samples", "eval", "render", "ablation"})
    c.set(std::string("paths.") + key, (root / key).string());
  return c;
}

std::map<std::string, std::string> tree_hashes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "run.json") continue;
    out[fs::relative(e.path(), dir).generic_string()] = io::sha256_hex(io::read_file(e.path()));
  }
  return out;
}

Outcome determinism_suite(const fs::path& root) {
  std::vector<std::string> notes;
  bool ok = true;
  const auto check = [&](bool cond, const std::string& what) {
    ok = ok && cond;
    notes.push_back(what + (cond ? " ok" : " FAILED"));
  };
  const cli::RunConfig base = tiny_config(root / "tiny");
  cli::CommandOptions force;
  force.force = true;

  // gen-data: a second directory and a forced rerun over it.
  cli::cmd_gen_data(base, force);
  cli::RunConfig other = base;
  other.set("paths.data", (root / "tiny" / "data_b").string());
  cli::cmd_gen_data(other, force);
  bool refused = false;
  try {
    cli::cmd_gen_data(other, kQuiet);
  } catch (const Error&) {
    refused = true;
  }
  cli::cmd_gen_data(other, force);
  check(tree_hashes(base.path("paths.data")) == tree_hashes(other.path("paths.data")) && refused,
        "gen-data byte-identical, refuses without --force:");

  // train: uninterrupted vs stopped at step 10 and resumed.
  cli::cmd_train_evaluator(base, kQuiet);
  cli::cmd_train(base, force);
  cli::RunConfig resumed = base;
  resumed.set("paths.model", (root / "tiny" / "model_b").string());
  cli::CommandOptions stop = force;
  stop.stop_after = 10;
  cli::cmd_train(resumed, stop);
  cli::cmd_train(resumed, kQuiet);
  const auto a = diffusion::Trainer::from_checkpoint(io::Archive::load(base.path("paths.model") / "checkpoint.vhar"));
  const auto b =
      diffusion::Trainer::from_checkpoint(io::Archive::load(resumed.path("paths.model") / "checkpoint.vhar"));
  double loss_diff = a->loss_log().size() == b->loss_log().size() ? 0.0 : 1e9;
  for (std::size_t i = 0; i < std::min(a->loss_log().size(), b->loss_log().size()); ++i)
    loss_diff = std::max(loss_diff, std::abs(a->loss_log()[i] - b->loss_log()[i]));
  double param_diff = 0;
  for (auto* p : a->model().store().all()) {
    const auto& q = b->model().store().get(p->name);
    param_diff = std::max(param_diff, static_cast<double>((p->value - q.value).cwiseAbs().maxCoeff()));
  }
  check(loss_diff <= 1e-6 && param_diff <= 1e-6 && a->step() == 20 && b->step() == 20,
        "train resume (loss diff " + fmt(loss_diff) + ", param diff " + fmt(param_diff) + "):");

  // sample, render, evaluate: rerun into second directories.
  cli::cmd_sample(base, kQuiet);
  cli::RunConfig again = base;
  again.set("paths.samples", (root / "tiny" / "samples_b").string());
  cli::cmd_sample(again, kQuiet);
  const auto samples_a = tree_hashes(base.path("paths.samples"));
  check(!samples_a.empty() && samples_a == tree_hashes(again.path("paths.samples")), "sample byte-identical:");

  cli::cmd_render(base, kQuiet, true);
  again.set("paths.render", (root / "tiny" / "render_b").string());
  again.set("paths.samples", base.get("paths.samples"));
  cli::cmd_render(again, kQuiet, true);
  const auto render_a = tree_hashes(base.path("paths.render"));
  check(!render_a.empty() && render_a == tree_hashes(again.path("paths.render")), "render byte-identical:");

  cli::cmd_evaluate(base, kQuiet);
  again.set("paths.eval", (root / "tiny" / "eval_b").string());
  cli::cmd_evaluate(again, kQuiet);
  check(io::read_text(base.path("paths.eval") / "report.json") == io::read_text(again.path("paths.eval") / "report.json"),
        "evaluate report identical:");

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {ok, detail};
}

Outcome end_to_end(const fs::path& root) {
  Stopwatch clock;
  cli::RunConfig c = cli::RunConfig::parse(R"(
[dataset]
n_sequences = 96
held_out_subjects = 6, 7, 8, 9

[diffusion]
d_model = 64
geometry_embed_dim = 64
steps = 1000
)");
  for (const char* key : {"data", "encoder", "evaluator", "model", "samples", "eval", "render", "ablation"})
    c.set(std::string("paths.") + key, (root / "e2e" / key).string());
  cli::CommandOptions force;
  force.force = true;
  for (const auto& step : std::vector<std::function<cli::CommandResult()>>{
           [&] { return cli::cmd_gen_data(c, force); }, [&] { return cli::cmd_train_evaluator(c, kQuiet); },
           [&] { return cli::cmd_train(c, force); }, [&] { return cli::cmd_sample(c, kQuiet); },
           [&] { return cli::cmd_evaluate(c, kQuiet); }}) {
    cli::verify_outputs(step());
  }
  const std::string text = io::read_text(c.path("paths.eval") / "report.json");
  const eval::MetricReport report = eval::MetricReport::from_json(text);
  report.validate();
  bool populated = true;
  for (double v : report.values()) populated = populated && std::isfinite(v);
  const std::string header = io::read_text(c.path("paths.eval") / "report.csv");
  std::string expected;
  for (const char* col : eval::kReportColumns) expected += (expected.empty() ? "" : ",") + std::string(col);
  const bool columns = header.rfind(expected + "\n", 0) == 0;
  const double secs = clock.seconds();
  return {populated && columns && secs < 45 * 60,
          std::to_string(report.n_items) + " test items; " + report.csv().substr(report.csv().find('\n') + 1, 200) +
              "; " + fmt(secs, 4) + " s"};
}

Outcome ablation_harness(const fs::path& root) {
  cli::RunConfig c = tiny_config(root / "tiny");
  if (!fs::exists(c.path("paths.data") / cli::kDatasetManifest)) {
    cli::CommandOptions force;
    force.force = true;
    cli::cmd_gen_data(c, force);
  }
  if (!fs::exists(c.path("paths.evaluator") / "evaluator.vhar")) cli::cmd_train_evaluator(c, kQuiet);
  const cli::CommandResult result = cli::cmd_ablate(c, kQuiet);
  cli::verify_outputs(result);

  std::istringstream csv(io::read_text(c.path("paths.ablation") / "ablation.csv"));
  std::string line;
  std::getline(csv, line);
  std::vector<std::string> header;
  {
    std::stringstream h(line);
    std::string col;
    while (std::getline(h, col, ',')) header.push_back(col);
  }
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  std::vector<std::string> labels;
  std::set<std::string> seed_sets;
  int errors = 0;
  bool pool_bypass = false, others_use_qformer = true;
  while (std::getline(csv, line)) {
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    while (cells.size() < header.size()) cells.emplace_back();
    labels.push_back(cells[0]);
    seed_sets.insert(cells[col("data_seed")] + "/" + cells[col("train_seed")] + "/" + cells[col("eval_seed")]);
    if (!cells[col("error")].empty()) ++errors;
    const bool pooled = cells[col("adapter")] == "pool";
    const std::string calls = cells[col("qformer_calls")];
    if (pooled) pool_bypass = calls == "0";
    else others_use_qformer = others_use_qformer && !calls.empty() && calls != "0";
  }
  const std::vector<std::string> expected = {"V3-T12", "V3-T24", "V12-T12",    "V12-T36",    "V24-T24",
                                             "V36-T36", "V3-T36", "T12-only",  "ViHOI-Pool", "ViHOI-CLIP",
                                             "k=1",    "k=2",    "k=4",       "k=8"};
  const bool md = fs::exists(c.path("paths.ablation") / "ablation.md");
  const bool ok = labels == expected && errors == 0 && seed_sets.size() == 1 && pool_bypass && others_use_qformer && md;
  return {ok, std::to_string(labels.size()) + " rows, " + std::to_string(errors) + " failed cells; shared seeds " +
                  (seed_sets.size() == 1 ? *seed_sets.begin() : std::string("DIFFER")) + "; pool bypasses Q-Former: " +
                  (pool_bypass ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };

  const fs::path root = scratch_root();
  fs::create_directories(root);
  int failures = 0;
  const auto report = [&](int n, const std::string& name, const std::function<Outcome()>& run) {
    if (!wanted(n)) return;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << std::setw(2) << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << name << " -- "
              << o.detail << std::endl;
  };

  report(1, "forward-process limit", forward_process_limit);
  report(2, "closed-form vs stepwise chain", closed_form_vs_chain);
  report(3, "gradient correctness", gradient_correctness);
  report(4, "Q-Former contracts", qformer_contracts);
  std::unique_ptr<OverfitFixture> overfit;
  const auto fixture = [&]() -> const OverfitFixture& {
    if (!overfit) overfit = std::make_unique<OverfitFixture>(train_overfit(root));
    return *overfit;
  };
  report(5, "toy overfit convergence", [&] { return overfit_convergence(fixture()); });
  report(6, "conditioning sensitivity", [&] { return conditioning_sensitivity(fixture()); });
  report(7, "metric oracles", metric_oracles);
  report(8, "FID oracle", fid_oracle);
  report(9, "R-precision calibration", r_precision_calibration);
  report(10, "keyframe oracle", keyframe_oracle);
  report(11, "determinism suite", [&] { return determinism_suite(root); });
  report(12, "end-to-end smoke", [&] { return end_to_end(root); });
  report(13, "ablation harness", [&] { return ablation_harness(root); });

  if (std::getenv("VIHOI_ACCEPTANCE_KEEP") == nullptr) fs::remove_all(root);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
