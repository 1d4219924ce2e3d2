#include "vihoi/diffusion/schedule.hpp"

#include <cmath>
#include <numbers>

#include "vihoi/common/error.hpp"

namespace vihoi::diffusion {

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::kCosine ? "cosine" : "linear"; }

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "cosine") return ScheduleKind::kCosine;
  if (name == "linear") return ScheduleKind::kLinear;
  fail(ErrorCode::kConfig, "unknown noise schedule: " + name);
}

NoiseSchedule make_schedule(ScheduleKind kind, int T) {
  if (T < 2) fail(ErrorCode::kBadT, "noise schedule needs T >= 2, got " + std::to_string(T));
  NoiseSchedule s;
  s.kind = kind;
  s.alpha.resize(static_cast<std::size_t>(T));
  s.alpha_bar.resize(static_cast<std::size_t>(T));
  if (kind == ScheduleKind::kCosine) {
    constexpr double offset = 0.008;
    auto f = [&](double u) {
      const double c = std::cos((u / T + offset) / (1 + offset) * std::numbers::pi / 2);
      return c * c;
    };
    for (int t = 0; t < T; ++t) {
      const double beta = std::min(1.0 - f(t + 1) / f(t), 0.999);
      s.alpha[static_cast<std::size_t>(t)] = 1.0 - beta;
    }
  } else {
    for (int t = 0; t < T; ++t) {
      s.alpha[static_cast<std::size_t>(t)] = 1.0 - (1e-4 + (0.02 - 1e-4) * t / (T - 1));
    }
  }
  double prod = 1.0;
  for (int t = 0; t < T; ++t) {
    prod *= s.alpha[static_cast<std::size_t>(t)];
    s.alpha_bar[static_cast<std::size_t>(t)] = prod;
  }
  return s;
}

namespace {

void check_t(int t, const NoiseSchedule& sched) {
  if (t < 0 || t >= sched.steps()) {
    fail(ErrorCode::kBadT, "timestep " + std::to_string(t) + " outside [0, " + std::to_string(sched.steps()) + ")");
  }
}

template <typename T>
void check_shapes(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) fail(ErrorCode::kShapeMismatch, "noise shape differs from data shape");
}

}  // namespace

template <typename T>
Matrix<T> q_sample(const Matrix<T>& x0, int t, const Matrix<T>& eps, const NoiseSchedule& sched) {
  check_t(t, sched);
  check_shapes(x0, eps);
  const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
  return static_cast<T>(std::sqrt(ab)) * x0 + static_cast<T>(std::sqrt(1.0 - ab)) * eps;
}

template <typename T>
Matrix<T> q_step(const Matrix<T>& x_prev, int t, const Matrix<T>& eps, const NoiseSchedule& sched) {
  check_t(t, sched);
  check_shapes(x_prev, eps);
  const double a = sched.alpha[static_cast<std::size_t>(t)];
  return static_cast<T>(std::sqrt(a)) * x_prev + static_cast<T>(std::sqrt(1.0 - a)) * eps;
}

template Matrix<float> q_sample<float>(const Matrix<float>&, int, const Matrix<float>&, const NoiseSchedule&);
template Matrix<double> q_sample<double>(const Matrix<double>&, int, const Matrix<double>&, const NoiseSchedule&);
template Matrix<float> q_step<float>(const Matrix<float>&, int, const Matrix<float>&, const NoiseSchedule&);
template Matrix<double> q_step<double>(const Matrix<double>&, int, const Matrix<double>&, const NoiseSchedule&);

Matrix<double> standard_normal(Rng& rng, int rows, int cols) {
  Matrix<double> out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = rng.normal();
  return out;
}

std::vector<int> sampling_timesteps(int T, int count) {
  if (count < 1 || count > T) {
    fail(ErrorCode::kInvalidArgument, "sampling steps must lie in [1, " + std::to_string(T) + "]");
  }
  std::vector<int> out;
  if (count == 1) return {T - 1};
  for (int i = count - 1; i >= 0; --i) {
    out.push_back(static_cast<int>(std::llround(static_cast<double>(i) * (T - 1) / (count - 1))));
  }
  return out;
}

Matrix<double> ddpm_sample(const X0Predictor& predict, const NoiseSchedule& sched, int rows, int cols,
                           std::uint64_t seed, int steps) {
  const std::vector<int> ts = sampling_timesteps(sched.steps(), steps);
  Rng rng(derive_seed(seed, "ddpm-sample"));
  Matrix<double> x = standard_normal(rng, rows, cols);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const int t = ts[i];
    const Matrix<double> x0 = predict(x, t);
    if (i + 1 == ts.size()) return x0;
    const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
    const double ab_prev = sched.alpha_bar[static_cast<std::size_t>(ts[i + 1])];
    const double a = ab / ab_prev;
    const double c0 = std::sqrt(ab_prev) * (1 - a) / (1 - ab);
    const double ct = std::sqrt(a) * (1 - ab_prev) / (1 - ab);
    const double var = (1 - ab_prev) / (1 - ab) * (1 - a);
    x = c0 * x0 + ct * x + std::sqrt(std::max(var, 0.0)) * standard_normal(rng, rows, cols);
  }
  return x;
}

}  // namespace vihoi::diffusion
