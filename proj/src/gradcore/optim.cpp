#include "malfew/gradcore/optim.hpp"

#include <cmath>

#include "malfew/error.hpp"

namespace malfew::gradcore {

template <class T>
Optimizer<T>::Optimizer(OptimizerConfig config, std::vector<Parameter<T>*> params)
    : config_(config), params_(std::move(params)) {
  if (!(config_.lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (config_.kind == OptimizerKind::Adam) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
}

template <class T>
void Optimizer<T>::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

template <class T>
void Optimizer<T>::step() {
  if (checked()) {
    for (auto* p : params_) {
      if (!p->grad.all_finite()) throw Error(ErrorCode::NonFinite, "non-finite gradient for " + p->name);
    }
  }
  ++steps_;
  if (config_.kind == OptimizerKind::Sgd) {
    for (auto* p : params_) {
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        p->value[i] = static_cast<T>(p->value[i] - config_.lr * p->grad[i]);
      }
    }
    return;
  }
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto* p = params_[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double update = config_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
      p->value[i] = static_cast<T>(p->value[i] - update);
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace malfew::gradcore
