#pragma once

#include "malfew/gradcore/tensor.hpp"

namespace malfew::gradcore {

template <class T>
struct LossResult {
  double value = 0.0;
  Tensor<T> grad;  // d value / d prediction
};

/// value = sum((x - target)^2) / (2n) with n the batch size; grad = (x - target) / n.
template <class T>
LossResult<T> mse_loss(const Tensor<T>& x, const Tensor<T>& target);

/// value = sum((x - target)^2), no averaging; grad = 2 (x - target).
template <class T>
LossResult<T> sum_squared_loss(const Tensor<T>& x, const Tensor<T>& target);

}  // namespace malfew::gradcore
