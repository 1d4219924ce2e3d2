#include "vihoi/eval/evaluate.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "vihoi/common/error.hpp"
#include "vihoi/dataset/catalog.hpp"
#include "vihoi/dataset/generator.hpp"
#include "vihoi/diffusion/trainer.hpp"

namespace vihoi::eval {

using nlohmann::json;

std::array<double, 12> MetricReport::values() const {
  return {r_precision.top1, r_precision.top2, r_precision.top3, fid,    diversity, fs,
          contact.precision, contact.recall,  contact.f1,       contact.percent, p_hand, mpjpe};
}

void MetricReport::validate() const {
  const auto v = values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) fail(ErrorCode::kFormat, std::string("report value not finite: ") + kReportColumns[i]);
  }
  for (double f : {r_precision.top1, r_precision.top2, r_precision.top3, contact.precision, contact.recall, contact.f1,
                   contact.percent, p_hand}) {
    if (f < 0 || f > 1) fail(ErrorCode::kFormat, "report fraction outside [0, 1]");
  }
  if (r_precision.top1 > r_precision.top2 || r_precision.top2 > r_precision.top3) {
    fail(ErrorCode::kFormat, "r-precision is not monotone in k");
  }
  if (fid < 0 || diversity < 0 || fs < 0 || mpjpe < 0) fail(ErrorCode::kFormat, "negative report value");
}

std::string MetricReport::to_json() const {
  json metrics = json::object();
  const auto v = values();
  for (std::size_t i = 0; i < v.size(); ++i) metrics[kReportColumns[i]] = v[i];
  const json j = {{"schema", "vihoi-report"},
                  {"version", kReportVersion},
                  {"columns", kReportColumns},
                  {"metrics", metrics},
                  {"units", {{"FS", "cm/frame"}, {"MPJPE", "cm"}}},
                  {"n_items", n_items},
                  {"seed", seed},
                  {"text_encoder", text_encoder}};
  return j.dump(2);
}

MetricReport MetricReport::from_json(const std::string& text) {
  MetricReport r;
  try {
    const json j = json::parse(text);
    if (j.at("schema") != "vihoi-report" || j.at("version").get<int>() != kReportVersion) {
      fail(ErrorCode::kFormat, "not a vihoi report");
    }
    const json& m = j.at("metrics");
    std::array<double, 12> v{};
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = m.at(kReportColumns[i]).get<double>();
    r.r_precision = {v[0], v[1], v[2]};
    r.fid = v[3];
    r.diversity = v[4];
    r.fs = v[5];
    r.contact = {v[6], v[7], v[8], v[9]};
    r.p_hand = v[10];
    r.mpjpe = v[11];
    r.n_items = j.at("n_items").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.text_encoder = j.at("text_encoder").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("report: ") + e.what());
  }
  r.validate();
  return r;
}

std::string MetricReport::csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < kReportColumns.size(); ++i) out << (i ? "," : "") << kReportColumns[i];
  out << "\n";
  out.precision(9);
  const auto v = values();
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  out << "\n";
  return out.str();
}

MetricReport compute_report(const std::vector<motion::MotionSequence>& predictions, const std::vector<EvalItem>& items,
                            const EvaluatorModel& evaluator, const EvaluateConfig& config) {
  if (predictions.size() != items.size()) fail(ErrorCode::kLengthMismatch, "one prediction per item is required");
  if (items.empty()) fail(ErrorCode::kTooFewPairs, "no evaluation items");
  std::map<std::string, std::unique_ptr<geometry::SdfQuery>> sdfs;
  MetricReport r;
  r.n_items = static_cast<int>(items.size());
  r.seed = config.seed;
  r.text_encoder = evaluator.config().text_encoder;

  std::vector<motion::RowMatrix> pred_repr, gt_repr;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const EvalItem& item = items[i];
    const motion::MotionSequence& pred = predictions[i];
    const motion::Skeleton skel = motion::Skeleton::standard(dataset::subject_scale(item.subject));
    auto& sdf = sdfs[item.object_id];
    if (!sdf) sdf = std::make_unique<geometry::SdfQuery>(dataset::find_object(item.object_id).mesh());

    r.mpjpe += mpjpe(pred, item.gt, skel);
    const ContactScores c = contact_metrics(pred, item.gt.contact, *sdf, skel, config.contact_threshold);
    r.contact.precision += c.precision;
    r.contact.recall += c.recall;
    r.contact.f1 += c.f1;
    r.contact.percent += c.percent;
    r.fs += foot_sliding(pred, skel, config.foot_height_max);
    r.p_hand += hand_penetration(pred, *sdf, skel, config.penetration_tolerance);

    pred_repr.push_back(motion::to_eval_representation(pred));
    gt_repr.push_back(motion::to_eval_representation(item.gt));
    texts.push_back(item.gt.text);
  }
  const double n = static_cast<double>(items.size());
  r.mpjpe /= n;
  r.contact.precision /= n;
  r.contact.recall /= n;
  r.contact.f1 /= n;
  r.contact.percent /= n;
  r.fs /= n;
  r.p_hand /= n;

  const FeatureMatrix pred_features = evaluator.embed_motions(pred_repr);
  const FeatureMatrix gt_features = evaluator.embed_motions(gt_repr);
  const FeatureMatrix text_features = evaluator.embed_texts(texts);
  r.r_precision = r_precision(text_features, pred_features, config.seed, config.r_precision_batch);
  r.fid = fid(pred_features, gt_features);
  r.diversity = diversity(pred_features, config.seed, config.diversity_pairs);
  r.validate();
  return r;
}

std::vector<motion::MotionSequence> generate_for_items(const diffusion::HoiModel<float>& model,
                                                       const diffusion::Normalizer& normalizer,
                                                       const std::vector<EvalItem>& items,
                                                       const EvaluateConfig& config) {
  std::vector<motion::MotionSequence> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const EvalItem& item = items[i];
    out.push_back(diffusion::generate(model, normalizer, item.condition, item.gt.length(),
                                      derive_seed(config.seed, static_cast<std::uint64_t>(i)), item.gt.fps,
                                      item.gt.text, config.sample_steps));
  }
  return out;
}

MetricReport evaluate(const diffusion::HoiModel<float>& model, const diffusion::Normalizer& normalizer,
                      const std::vector<EvalItem>& items, const EvaluatorModel& evaluator,
                      const EvaluateConfig& config) {
  return compute_report(generate_for_items(model, normalizer, items, config), items, evaluator, config);
}

void write_report(const std::filesystem::path& dir, const MetricReport& report) {
  report.validate();
  std::filesystem::create_directories(dir);
  io::write_text_atomic(dir / "report.json", report.to_json());
  io::write_text_atomic(dir / "report.csv", report.csv());
}

}  // namespace vihoi::eval
