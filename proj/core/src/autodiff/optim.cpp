#include "minkunext/autodiff/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace minkunext::ad {

template <typename T>
Adam<T>::Adam(std::vector<Parameter<T>*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (!(cfg_.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0 && cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0))
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  if (!(cfg_.eps > 0.0) || cfg_.weight_decay < 0.0) throw std::invalid_argument("invalid Adam eps / decay");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const double b1 = cfg_.beta1;
  const double b2 = cfg_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = *params_[k];
    if (!p.grad.same_shape(p.value)) throw std::logic_error("gradient shape mismatch for " + p.name);
    T* theta = p.value.data();
    const T* grad = p.grad.data();
    T* m = m_[k].data();
    T* v = v_[k].data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = static_cast<double>(grad[i]) + cfg_.weight_decay * theta[i];
      const double mi = b1 * m[i] + (1.0 - b1) * g;
      const double vi = b2 * v[i] + (1.0 - b2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double m_hat = mi / correction1;
      const double v_hat = vi / correction2;
      theta[i] = static_cast<T>(theta[i] - cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps));
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

void LrSchedule::validate() const {
  if (!(initial_lr > 0.0) || !(factor > 0.0)) throw std::invalid_argument("learning rate and factor must be positive");
  for (std::size_t i = 1; i < milestones.size(); ++i)
    if (milestones[i] <= milestones[i - 1]) throw std::invalid_argument("milestones must be strictly increasing");
}

double LrSchedule::lr_at(int epoch) const {
  const auto passed = std::upper_bound(milestones.begin(), milestones.end(), epoch) - milestones.begin();
  return initial_lr * std::pow(factor, static_cast<double>(passed));
}

template class Adam<float>;
template class Adam<double>;

}  // namespace minkunext::ad
