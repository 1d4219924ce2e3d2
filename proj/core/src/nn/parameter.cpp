#include "vihoi/nn/parameter.hpp"

#include <cmath>
#include <cstring>
#include <json.hpp>

#include "vihoi/common/error.hpp"

namespace vihoi::nn {

template <typename T>
Parameter<T>& ParameterStore<T>::add(std::string name, Matrix<T> value) {
  if (find(name)) fail(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
  auto p = std::make_unique<Parameter<T>>();
  p->name = std::move(name);
  p->value = std::move(value);
  p->zero_grad();
  params_.push_back(std::move(p));
  return *params_.back();
}

template <typename T>
Parameter<T>* ParameterStore<T>::find(std::string_view name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

template <typename T>
const Parameter<T>* ParameterStore<T>::find(std::string_view name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

template <typename T>
Parameter<T>& ParameterStore<T>::get(std::string_view name) {
  Parameter<T>* p = find(name);
  if (!p) fail(ErrorCode::kInvalidArgument, "no parameter named " + std::string(name));
  return *p;
}

template <typename T>
std::vector<Parameter<T>*> ParameterStore<T>::all() {
  std::vector<Parameter<T>*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> ParameterStore<T>::all() const {
  std::vector<const Parameter<T>*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

template <typename T>
std::size_t ParameterStore<T>::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

template <typename T>
std::string ParameterStore<T>::checksum() const {
  io::Bytes bytes;
  for (const auto& p : params_) {
    bytes.insert(bytes.end(), p->name.begin(), p->name.end());
    bytes.push_back(0);
    const std::int64_t shape[2] = {p->value.rows(), p->value.cols()};
    const auto* sb = reinterpret_cast<const std::uint8_t*>(shape);
    bytes.insert(bytes.end(), sb, sb + sizeof(shape));
    const auto* vb = reinterpret_cast<const std::uint8_t*>(p->value.data());
    bytes.insert(bytes.end(), vb, vb + p->value.size() * sizeof(T));
  }
  return io::sha256_hex(bytes);
}

template <typename T>
void ParameterStore<T>::save(io::Archive& archive, const std::string& prefix) const {
  nlohmann::json shapes = nlohmann::json::object();
  for (const auto& p : params_) {
    shapes[p->name] = {p->value.rows(), p->value.cols()};
    const Matrix<float> f = p->value.template cast<float>();
    archive.add(prefix + p->name, io::pack_f32(std::span(f.data(), static_cast<std::size_t>(f.size()))));
  }
  archive.add_text(prefix + "shapes.json", shapes.dump());
}

template <typename T>
void ParameterStore<T>::load(const io::Archive& archive, const std::string& prefix) {
  const auto shapes = nlohmann::json::parse(archive.get_text(prefix + "shapes.json"));
  for (auto& p : params_) {
    if (!shapes.contains(p->name)) fail(ErrorCode::kFormat, "checkpoint lacks parameter " + prefix + p->name);
    const long rows = shapes[p->name][0].template get<long>();
    const long cols = shapes[p->name][1].template get<long>();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      fail(ErrorCode::kShapeMismatch, "checkpoint shape mismatch for " + prefix + p->name);
    }
    const std::vector<float> data = io::unpack_f32(archive.get(prefix + p->name));
    if (static_cast<long>(data.size()) != rows * cols) fail(ErrorCode::kFormat, "tensor size mismatch for " + p->name);
    p->value = Eigen::Map<const Matrix<float>>(data.data(), rows, cols).template cast<T>();
    p->zero_grad();
  }
}

template class ParameterStore<float>;
template class ParameterStore<double>;

Matrix<double> uniform_init(Rng& rng, int rows, int cols, int fan_in) {
  const double bound = std::sqrt(3.0 / fan_in);
  Matrix<double> m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

Matrix<double> bias_init(Rng& rng, int cols, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix<double> m(1, cols);
  for (int i = 0; i < cols; ++i) m(0, i) = rng.uniform(-bound, bound);
  return m;
}

Matrix<double> normal_init(Rng& rng, int rows, int cols, double stddev) {
  Matrix<double> m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, stddev);
  return m;
}

}  // namespace vihoi::nn
