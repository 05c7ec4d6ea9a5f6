#include "malfew/gradcore/loss.hpp"

namespace malfew::gradcore {

template <class T>
LossResult<T> mse_loss(const Tensor<T>& x, const Tensor<T>& target) {
  require_shape(x.shape() == target.shape(), "mse shapes " + to_string(x.shape()) + " vs " + to_string(target.shape()));
  require_shape(x.shape().n > 0, "mse of empty batch");
  const double n = static_cast<double>(x.shape().n);
  LossResult<T> r{0.0, Tensor<T>(x.shape())};
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(target[i]);
    sum += d * d;
    r.grad[i] = static_cast<T>(d / n);
  }
  r.value = sum / (2.0 * n);
  return r;
}

template <class T>
LossResult<T> sum_squared_loss(const Tensor<T>& x, const Tensor<T>& target) {
  require_shape(x.shape() == target.shape(), "sse shapes " + to_string(x.shape()) + " vs " + to_string(target.shape()));
  LossResult<T> r{0.0, Tensor<T>(x.shape())};
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(target[i]);
    sum += d * d;
    r.grad[i] = static_cast<T>(2.0 * d);
  }
  r.value = sum;
  return r;
}

template LossResult<float> mse_loss(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> mse_loss(const Tensor<double>&, const Tensor<double>&);
template LossResult<float> sum_squared_loss(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> sum_squared_loss(const Tensor<double>&, const Tensor<double>&);

}  // namespace malfew::gradcore
