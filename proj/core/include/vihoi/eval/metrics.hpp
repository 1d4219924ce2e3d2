#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <Eigen/Core>

#include "vihoi/geometry/distance.hpp"
#include "vihoi/motion/motion_sequence.hpp"

namespace vihoi::eval {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kContactThreshold = 0.05;      // meters
inline constexpr double kPenetrationTolerance = 0.005;  // meters
inline constexpr double kFootHeightMax = 0.05;         // meters

// Mean joint position error over frames and joints, in centimeters. Throws
// LengthMismatch.
double mpjpe(const motion::MotionSequence& pred, const motion::MotionSequence& gt, const motion::Skeleton& skel);

struct ContactScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double percent = 0;  // fraction of (frame, hand) pairs predicted in contact
};

// A hand is predicted in contact when its wrist lies within `threshold` of
// the posed object surface. Empty conventions: precision 1 without
// predictions, recall 1 without positives, F1 0 when both are 0. Throws
// LengthMismatch.
ContactScores contact_metrics(const motion::MotionSequence& pred, const motion::ContactLabels& gt,
                              const geometry::SdfQuery& sdf, const motion::Skeleton& skel,
                              double threshold = kContactThreshold);

// Per-(frame, hand) contact predictions as used by contact_metrics.
motion::ContactLabels predicted_contact(const motion::MotionSequence& seq, const geometry::SdfQuery& sdf,
                                        const motion::Skeleton& skel, double threshold = kContactThreshold);

// Mean over frame transitions and both feet of the horizontal foot
// displacement weighted by clamp(1 − h/h_max, 0, 1), h the foot height at
// the later frame; centimeters per frame.
double foot_sliding(const motion::MotionSequence& seq, const motion::Skeleton& skel, double h_max = kFootHeightMax);

// Fraction of (frame, hand) pairs whose wrist is deeper than `delta` inside
// the posed object.
double hand_penetration(const motion::MotionSequence& seq, const geometry::SdfQuery& sdf, const motion::Skeleton& skel,
                        double delta = kPenetrationTolerance);

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double shrinkage = 0;  // weight on the scaled-identity target
};

// Sample mean and covariance; below 2·dim samples the covariance is shrunk
// toward tr(S)/dim · I with the Ledoit–Wolf weight. Throws
// DegenerateCovariance for fewer than 2 rows or non-finite input.
GaussianMoments fit_gaussian(const FeatureMatrix& features);

// ‖μa − μb‖² + Tr(Σa + Σb − 2(Σa^½ Σb Σa^½)^½). Throws DegenerateCovariance.
double frechet_distance(const GaussianMoments& a, const GaussianMoments& b);
double fid(const FeatureMatrix& a, const FeatureMatrix& b);

struct RPrecision {
  double top1 = 0;
  double top2 = 0;
  double top3 = 0;
};

// Row i of `text` matches row i of `motion`. Rows are shuffled per seed and
// cut into batches of `batch`; in each batch every text ranks all motions by
// Euclidean distance, and top-k counts the true motion ranked within k
// (ties resolve in its favor). A trailing partial batch is dropped. Throws
// TooFewPairs below one batch and LengthMismatch for differing row counts.
RPrecision r_precision(const FeatureMatrix& text, const FeatureMatrix& motion, std::uint64_t seed, int batch = 32);

// Mean Euclidean distance over `pairs` index pairs (i ≠ j) drawn uniformly
// per seed. Throws InvalidArgument for fewer than 2 rows.
double diversity(const FeatureMatrix& features, std::uint64_t seed, int pairs = 300);

}  // namespace vihoi::eval
