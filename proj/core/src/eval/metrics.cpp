#include "vihoi/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "vihoi/common/error.hpp"
#include "vihoi/common/random.hpp"
#include "vihoi/dataset/generator.hpp"

namespace vihoi::eval {

using motion::kFootJoints;
using motion::kHandJoints;
using motion::kNumJoints;

namespace {

void check_lengths(int a, int b) {
  if (a != b) fail(ErrorCode::kLengthMismatch, "sequence lengths differ: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

double mpjpe(const motion::MotionSequence& pred, const motion::MotionSequence& gt, const motion::Skeleton& skel) {
  check_lengths(pred.length(), gt.length());
  const auto a = motion::forward_kinematics(pred, skel);
  const auto b = motion::forward_kinematics(gt, skel);
  double total = 0;
  for (std::size_t f = 0; f < a.size(); ++f)
    for (int j = 0; j < kNumJoints; ++j) total += (a[f][j] - b[f][j]).norm();
  return 100.0 * total / (static_cast<double>(a.size()) * kNumJoints);
}

motion::ContactLabels predicted_contact(const motion::MotionSequence& seq, const geometry::SdfQuery& sdf,
                                        const motion::Skeleton& skel, double threshold) {
  const auto poses = motion::forward_kinematics(seq, skel);
  motion::ContactLabels out(poses.size());
  for (int f = 0; f < static_cast<int>(poses.size()); ++f) {
    for (int h = 0; h < 2; ++h) {
      out[f][h] = dataset::surface_distance(seq, sdf, f, poses[f][kHandJoints[h]]) <= threshold;
    }
  }
  return out;
}

ContactScores contact_metrics(const motion::MotionSequence& pred, const motion::ContactLabels& gt,
                              const geometry::SdfQuery& sdf, const motion::Skeleton& skel, double threshold) {
  check_lengths(pred.length(), static_cast<int>(gt.size()));
  const motion::ContactLabels p = predicted_contact(pred, sdf, skel, threshold);
  long tp = 0, fp = 0, fn = 0, predicted = 0;
  for (std::size_t f = 0; f < gt.size(); ++f) {
    for (int h = 0; h < 2; ++h) {
      predicted += p[f][h];
      tp += p[f][h] && gt[f][h];
      fp += p[f][h] && !gt[f][h];
      fn += !p[f][h] && gt[f][h];
    }
  }
  ContactScores s;
  s.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  s.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.f1 = s.precision + s.recall == 0 ? 0.0 : 2 * s.precision * s.recall / (s.precision + s.recall);
  s.percent = gt.empty() ? 0.0 : static_cast<double>(predicted) / (2.0 * static_cast<double>(gt.size()));
  return s;
}

double foot_sliding(const motion::MotionSequence& seq, const motion::Skeleton& skel, double h_max) {
  const auto poses = motion::forward_kinematics(seq, skel);
  if (poses.size() < 2) return 0.0;
  double total = 0;
  for (std::size_t f = 1; f < poses.size(); ++f) {
    for (int joint : kFootJoints) {
      const motion::Vec3& cur = poses[f][joint];
      const motion::Vec3& prev = poses[f - 1][joint];
      const double w = std::clamp(1.0 - cur.y() / h_max, 0.0, 1.0);
      total += w * std::hypot(cur.x() - prev.x(), cur.z() - prev.z());
    }
  }
  return 100.0 * total / (2.0 * static_cast<double>(poses.size() - 1));
}

double hand_penetration(const motion::MotionSequence& seq, const geometry::SdfQuery& sdf, const motion::Skeleton& skel,
                        double delta) {
  const auto poses = motion::forward_kinematics(seq, skel);
  if (poses.empty()) return 0.0;
  long inside = 0;
  for (int f = 0; f < static_cast<int>(poses.size()); ++f) {
    const motion::Mat3 r = seq.object_rotation(f);
    const motion::Vec3 t = seq.obj_transl.row(f).transpose();
    for (int joint : kHandJoints) inside += sdf(r.transpose() * (poses[f][joint] - t)) < -delta;
  }
  return static_cast<double>(inside) / (2.0 * static_cast<double>(poses.size()));
}

GaussianMoments fit_gaussian(const FeatureMatrix& features) {
  const Eigen::Index n = features.rows(), p = features.cols();
  if (n < 2 || p < 1) fail(ErrorCode::kDegenerateCovariance, "need at least 2 feature rows");
  if (!features.allFinite()) fail(ErrorCode::kDegenerateCovariance, "non-finite features");
  GaussianMoments g;
  g.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd x = features.rowwise() - g.mean.transpose();
  if (n >= 2 * p) {
    g.cov = x.transpose() * x / static_cast<double>(n - 1);
    return g;
  }
  // Ledoit–Wolf shrinkage toward a scaled identity.
  const Eigen::MatrixXd s = x.transpose() * x / static_cast<double>(n);
  const double mu = s.trace() / static_cast<double>(p);
  Eigen::MatrixXd target = mu * Eigen::MatrixXd::Identity(p, p);
  const double d2 = (s - target).squaredNorm();
  double b2 = 0;
  const double s_norm2 = s.squaredNorm();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::VectorXd xk = x.row(k).transpose();
    const double sq = xk.squaredNorm();
    b2 += sq * sq - 2.0 * xk.dot(s * xk) + s_norm2;
  }
  b2 /= static_cast<double>(n) * static_cast<double>(n);
  g.shrinkage = d2 <= 0 ? 0.0 : std::min(b2, d2) / d2;
  g.cov = g.shrinkage * target + (1.0 - g.shrinkage) * s;
  return g;
}

namespace {

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) fail(ErrorCode::kDegenerateCovariance, "eigendecomposition failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-8 * scale) fail(ErrorCode::kDegenerateCovariance, "covariance is not positive semidefinite");
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const GaussianMoments& a, const GaussianMoments& b) {
  if (a.mean.size() != b.mean.size() || a.cov.rows() != b.cov.rows()) {
    fail(ErrorCode::kShapeMismatch, "feature widths differ");
  }
  if (!a.cov.allFinite() || !b.cov.allFinite()) fail(ErrorCode::kDegenerateCovariance, "non-finite covariance");
  const Eigen::MatrixXd ra = symmetric_sqrt(0.5 * (a.cov + a.cov.transpose()));
  Eigen::MatrixXd m = ra * b.cov * ra;
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorCode::kDegenerateCovariance, "eigendecomposition failed");
  const double cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * cross;
  return std::max(0.0, value);
}

double fid(const FeatureMatrix& a, const FeatureMatrix& b) { return frechet_distance(fit_gaussian(a), fit_gaussian(b)); }

RPrecision r_precision(const FeatureMatrix& text, const FeatureMatrix& motion, std::uint64_t seed, int batch) {
  check_lengths(static_cast<int>(text.rows()), static_cast<int>(motion.rows()));
  if (text.cols() != motion.cols()) fail(ErrorCode::kShapeMismatch, "embedding widths differ");
  if (batch < 1 || text.rows() < batch) {
    fail(ErrorCode::kTooFewPairs, "r-precision needs at least " + std::to_string(batch) + " pairs, got " +
                                      std::to_string(text.rows()));
  }
  std::vector<int> order(static_cast<std::size_t>(text.rows()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "r-precision"));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

  const std::size_t batches = order.size() / static_cast<std::size_t>(batch);
  std::array<long, 3> hits{};
  for (std::size_t b = 0; b < batches; ++b) {
    const int* idx = order.data() + b * static_cast<std::size_t>(batch);
    for (int i = 0; i < batch; ++i) {
      const auto t = text.row(idx[i]);
      const double own = (t - motion.row(idx[i])).squaredNorm();
      int rank = 1;
      for (int j = 0; j < batch; ++j)
        if (j != i && (t - motion.row(idx[j])).squaredNorm() < own) ++rank;
      for (int k = 0; k < 3; ++k) hits[k] += rank <= k + 1;
    }
  }
  const double total = static_cast<double>(batches) * batch;
  return {hits[0] / total, hits[1] / total, hits[2] / total};
}

double diversity(const FeatureMatrix& features, std::uint64_t seed, int pairs) {
  const auto n = static_cast<std::uint64_t>(features.rows());
  if (n < 2) fail(ErrorCode::kInvalidArgument, "diversity needs at least 2 feature rows");
  if (pairs < 1) fail(ErrorCode::kInvalidArgument, "diversity needs at least one pair");
  Rng rng(derive_seed(seed, "diversity"));
  double total = 0;
  for (int k = 0; k < pairs; ++k) {
    const auto i = static_cast<Eigen::Index>(rng.uniform_index(n));
    auto j = static_cast<Eigen::Index>(rng.uniform_index(n - 1));
    if (j >= i) ++j;
    total += (features.row(i) - features.row(j)).norm();
  }
  return total / pairs;
}

}  // namespace vihoi::eval
