#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vihoi/diffusion/model.hpp"
#include "vihoi/eval/evaluator.hpp"
#include "vihoi/eval/metrics.hpp"

namespace vihoi::eval {

inline constexpr std::array<const char*, 12> kReportColumns = {
    "R-prec Top1", "R-prec Top2", "R-prec Top3", "FID",   "Diversity", "FS",
    "C_prec",      "C_rec",       "C_F1",        "C_%",   "P_hand",    "MPJPE"};

inline constexpr int kReportVersion = 1;

struct MetricReport {
  RPrecision r_precision;
  double fid = 0;
  double diversity = 0;
  double fs = 0;  // cm per frame
  ContactScores contact;
  double p_hand = 0;
  double mpjpe = 0;  // cm
  int n_items = 0;
  std::uint64_t seed = 0;
  std::string text_encoder = "toy";

  // Values in kReportColumns order.
  std::array<double, 12> values() const;
  // Throws Format when a fraction leaves [0, 1], top-k is not monotone or a
  // value is not finite.
  void validate() const;
  std::string to_json() const;
  static MetricReport from_json(const std::string& text);
  std::string csv() const;  // header line and one row
};

struct EvalItem {
  std::string id;
  motion::MotionSequence gt;
  std::string object_id;
  int subject = 0;
  diffusion::Condition condition;
};

struct EvaluateConfig {
  std::uint64_t seed = 0;
  int sample_steps = -1;  // model default
  int r_precision_batch = 32;
  int diversity_pairs = 300;
  double contact_threshold = kContactThreshold;
  double penetration_tolerance = kPenetrationTolerance;
  double foot_height_max = kFootHeightMax;
};

// Metrics of predictions[i] against items[i]. Contact and penetration are
// averaged per item; FID compares evaluator features of the predictions
// with those of the ground truth. Throws LengthMismatch and TooFewPairs.
MetricReport compute_report(const std::vector<motion::MotionSequence>& predictions, const std::vector<EvalItem>& items,
                            const EvaluatorModel& evaluator, const EvaluateConfig& config);

// Samples one generation per item with seed derive_seed(config.seed, i) and
// scores them.
std::vector<motion::MotionSequence> generate_for_items(const diffusion::HoiModel<float>& model,
                                                       const diffusion::Normalizer& normalizer,
                                                       const std::vector<EvalItem>& items,
                                                       const EvaluateConfig& config);
MetricReport evaluate(const diffusion::HoiModel<float>& model, const diffusion::Normalizer& normalizer,
                      const std::vector<EvalItem>& items, const EvaluatorModel& evaluator,
                      const EvaluateConfig& config);

// report.json and report.csv in `dir`.
void write_report(const std::filesystem::path& dir, const MetricReport& report);

}  // namespace vihoi::eval
