#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vihoi/common/io.hpp"
#include "vihoi/common/random.hpp"
#include "vihoi/nn/tensor.hpp"

namespace vihoi::nn {

template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Owns named parameters at stable addresses; models keep raw pointers into
// their store.
template <typename T>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  Parameter<T>& add(std::string name, Matrix<T> value);
  Parameter<T>* find(std::string_view name);
  const Parameter<T>* find(std::string_view name) const;
  Parameter<T>& get(std::string_view name);

  std::vector<Parameter<T>*> all();
  std::vector<const Parameter<T>*> all() const;
  std::size_t size() const { return params_.size(); }
  std::size_t num_scalars() const;

  void zero_grad();

  // sha256 over names, shapes and raw values.
  std::string checksum() const;

  // Tensors are stored as little-endian float32 under "<prefix><name>", with
  // shapes listed in "<prefix>shapes.json".
  void save(io::Archive& archive, const std::string& prefix) const;
  // Every parameter in this store must be present with a matching shape.
  void load(const io::Archive& archive, const std::string& prefix);

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
};

// LeCun-style uniform: variance 1/fan_in.
Matrix<double> uniform_init(Rng& rng, int rows, int cols, int fan_in);
Matrix<double> bias_init(Rng& rng, int cols, int fan_in);
Matrix<double> normal_init(Rng& rng, int rows, int cols, double stddev);

}  // namespace vihoi::nn
