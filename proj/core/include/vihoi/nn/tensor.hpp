#pragma once

#include <Eigen/Core>

namespace vihoi::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename To, typename From>
Matrix<To> cast(const Matrix<From>& m) {
  return m.template cast<To>();
}

}  // namespace vihoi::nn
