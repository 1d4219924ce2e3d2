#include "vihoi/nn/adam.hpp"

#include <cmath>
#include <json.hpp>

#include "vihoi/common/error.hpp"

namespace vihoi::nn {

template <typename T>
Adam<T>::Adam(std::vector<Parameter<T>*> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  for (const auto* p : params_) {
    m_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

template <typename T>
double Adam<T>::step() {
  double sq = 0.0;
  for (const auto* p : params_) sq += static_cast<double>(p->grad.squaredNorm());
  const double norm = std::sqrt(sq);
  const double clip = (config_.clip_norm > 0.0 && norm > config_.clip_norm) ? config_.clip_norm / norm : 1.0;
  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  const T b1 = static_cast<T>(config_.beta1);
  const T b2 = static_cast<T>(config_.beta2);
  const T step_size = static_cast<T>(config_.lr / bc1);
  const T inv_bc2 = static_cast<T>(1.0 / bc2);
  const T eps = static_cast<T>(config_.eps);
  const T c = static_cast<T>(clip);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto* p = params_[i];
    const auto g = (p->grad * c).array();
    m_[i].array() = b1 * m_[i].array() + (T(1) - b1) * g;
    v_[i].array() = b2 * v_[i].array() + (T(1) - b2) * g.square();
    p->value.array() -= step_size * m_[i].array() / ((v_[i].array() * inv_bc2).sqrt() + eps);
  }
  return norm;
}

template <typename T>
void Adam<T>::save(io::Archive& archive, const std::string& prefix) const {
  nlohmann::json meta = {{"steps", steps_}, {"lr", config_.lr}, {"beta1", config_.beta1}, {"beta2", config_.beta2},
                         {"eps", config_.eps}, {"clip_norm", config_.clip_norm}};
  archive.add_text(prefix + "meta.json", meta.dump());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Matrix<float> m = m_[i].template cast<float>();
    const Matrix<float> v = v_[i].template cast<float>();
    archive.add(prefix + "m." + params_[i]->name, io::pack_f32(std::span(m.data(), static_cast<std::size_t>(m.size()))));
    archive.add(prefix + "v." + params_[i]->name, io::pack_f32(std::span(v.data(), static_cast<std::size_t>(v.size()))));
  }
}

template <typename T>
void Adam<T>::load(const io::Archive& archive, const std::string& prefix) {
  const auto meta = nlohmann::json::parse(archive.get_text(prefix + "meta.json"));
  steps_ = meta.at("steps").get<long>();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto m = io::unpack_f32(archive.get(prefix + "m." + params_[i]->name));
    const auto v = io::unpack_f32(archive.get(prefix + "v." + params_[i]->name));
    if (static_cast<long>(m.size()) != m_[i].size() || static_cast<long>(v.size()) != v_[i].size()) {
      fail(ErrorCode::kShapeMismatch, "optimizer state size mismatch for " + params_[i]->name);
    }
    m_[i] = Eigen::Map<const Matrix<float>>(m.data(), m_[i].rows(), m_[i].cols()).template cast<T>();
    v_[i] = Eigen::Map<const Matrix<float>>(v.data(), v_[i].rows(), v_[i].cols()).template cast<T>();
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace vihoi::nn
