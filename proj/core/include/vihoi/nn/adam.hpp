#pragma once

#include <vector>

#include "vihoi/common/io.hpp"
#include "vihoi/nn/parameter.hpp"

namespace vihoi::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 1.0;
};

// Adaptive-moment gradient descent over a fixed parameter list.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamConfig config);

  // Applies one update from the accumulated gradients; returns the global
  // gradient norm before clipping.
  double step();
  void zero_grad();

  long steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }

  void save(io::Archive& archive, const std::string& prefix) const;
  void load(const io::Archive& archive, const std::string& prefix);

 private:
  std::vector<Parameter<T>*> params_;
  std::vector<Matrix<T>> m_;
  std::vector<Matrix<T>> v_;
  AdamConfig config_;
  long steps_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace vihoi::nn
