#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vihoi/common/random.hpp"
#include "vihoi/nn/tensor.hpp"

namespace vihoi::diffusion {

enum class ScheduleKind { kCosine, kLinear };

std::string to_string(ScheduleKind kind);
// Throws Config.
ScheduleKind parse_schedule_kind(const std::string& name);

struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::kCosine;
  std::vector<double> alpha;      // per-step retention, in (0, 1)
  std::vector<double> alpha_bar;  // running product of alpha

  int steps() const { return static_cast<int>(alpha.size()); }
};

// Cosine: alpha_bar[t] = f(t + 1) / f(0) with f(u) = cos²((u/T + s)/(1 + s)·π/2),
// s = 0.008 and each beta clipped to 0.999. Linear: beta from 1e-4 to 0.02.
// Throws BadT for T < 2.
NoiseSchedule make_schedule(ScheduleKind kind, int T);

using nn::Matrix;

// x_t = sqrt(alpha_bar[t])·x0 + sqrt(1 − alpha_bar[t])·eps. Throws BadT.
template <typename T>
Matrix<T> q_sample(const Matrix<T>& x0, int t, const Matrix<T>& eps, const NoiseSchedule& sched);

// One forward transition x_{t−1} → x_t with its own noise. Throws BadT.
template <typename T>
Matrix<T> q_step(const Matrix<T>& x_prev, int t, const Matrix<T>& eps, const NoiseSchedule& sched);

Matrix<double> standard_normal(Rng& rng, int rows, int cols);

// Evenly strided timesteps from T−1 down to 0 (a single step is T−1 alone).
// Throws InvalidArgument unless 1 <= count <= T.
std::vector<int> sampling_timesteps(int T, int count);

// Predicts x̂0 from (x_t, t).
using X0Predictor = std::function<Matrix<double>(const Matrix<double>& x_t, int t)>;

// Ancestral sampling over the strided timesteps. Each step draws from the
// posterior q(x_prev | x_t, x̂0) with the strided step's variance; the last
// step returns x̂0 without adding noise.
Matrix<double> ddpm_sample(const X0Predictor& predict, const NoiseSchedule& sched, int rows, int cols,
                           std::uint64_t seed, int steps);

}  // namespace vihoi::diffusion
