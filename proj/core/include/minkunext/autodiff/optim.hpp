#pragma once

#include <vector>

#include "minkunext/autodiff/tape.hpp"

namespace minkunext::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Adam with bias correction and coupled L2 decay (g <- g + lambda * theta
/// before the moment updates).
template <typename T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamConfig cfg);

  void step();
  void zero_grad();

  const AdamConfig& config() const noexcept { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  std::size_t step_count() const noexcept { return t_; }
  void set_step_count(std::size_t t) { t_ = t; }

  const std::vector<Parameter<T>*>& params() const noexcept { return params_; }
  std::vector<Matrix<T>>& first_moments() noexcept { return m_; }
  std::vector<Matrix<T>>& second_moments() noexcept { return v_; }
  const std::vector<Matrix<T>>& first_moments() const noexcept { return m_; }
  const std::vector<Matrix<T>>& second_moments() const noexcept { return v_; }

 private:
  std::vector<Parameter<T>*> params_;
  AdamConfig cfg_;
  std::vector<Matrix<T>> m_;
  std::vector<Matrix<T>> v_;
  std::size_t t_ = 0;
};

/// Step decay: lr(epoch) = initial * factor^(number of milestones <= epoch).
struct LrSchedule {
  double initial_lr = 1e-3;
  std::vector<int> milestones;
  double factor = 0.1;

  /// Throws unless milestones are strictly increasing and the rates positive.
  void validate() const;
  double lr_at(int epoch) const;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace minkunext::ad
