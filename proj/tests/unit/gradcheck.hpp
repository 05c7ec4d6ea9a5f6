#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "malfew/gradcore/layers.hpp"
#include "malfew/gradcore/tensor.hpp"
#include "malfew/random.hpp"

namespace malfew::testkit {

using gradcore::Shape;
using gradcore::Tensor;

template <class T>
Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(shape);
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Values whose magnitude stays above `gap`, so kinks (relu, max) sit far from
// any finite-difference probe.
template <class T>
Tensor<T> away_from_zero(Shape shape, Rng& rng, double gap) {
  Tensor<T> t(shape);
  for (auto& v : t.values()) {
    const double m = rng.uniform(gap, 1.0);
    v = static_cast<T>(rng.uniform01() < 0.5 ? -m : m);
  }
  return t;
}

// Scalar probe: sum_i w_i * y_i, accumulated in double.
template <class T>
double weighted_sum(const Tensor<T>& y, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * static_cast<double>(y[i]);
  return s;
}

template <class T>
Tensor<T> as_tensor(const std::vector<double>& w, Shape shape) {
  Tensor<T> t(shape);
  for (std::size_t i = 0; i < w.size(); ++i) t[i] = static_cast<T>(w[i]);
  return t;
}

inline std::vector<double> random_weights(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  return w;
}

// Largest elementwise relative error between an analytic gradient and central
// differences of `eval` with respect to every element of `var`. The
// denominator is max(|analytic|, |numeric|, floor); the floor only matters
// for entries that are zero up to rounding. `var` may be a double twin of the
// tensor the analytic gradient was computed for.
template <class V, class A>
double max_relative_error(Tensor<V>& var, const Tensor<A>& analytic, const std::function<double()>& eval,
                          double h, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < var.size(); ++i) {
    const V saved = var[i];
    var[i] = static_cast<V>(saved + h);
    const double up = eval();
    var[i] = static_cast<V>(saved - h);
    const double down = eval();
    var[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double a = static_cast<double>(analytic[i]);
    const double denom = std::max({std::abs(a), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

template <class U, class T>
Tensor<U> cast(const Tensor<T>& t) {
  Tensor<U> out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<U>(t[i]);
  return out;
}

template <class U, class T>
gradcore::Parameter<U> cast(const gradcore::Parameter<T>& p) {
  return gradcore::Parameter<U>(p.name, cast<U>(p.value));
}

template <class U, class T>
gradcore::Conv2d<U> cast(const gradcore::Conv2d<T>& c) {
  gradcore::Conv2d<U> out;
  out.weight = cast<U>(c.weight);
  out.bias = cast<U>(c.bias);
  out.stride = c.stride;
  out.padding = c.padding;
  return out;
}

template <class U, class T>
gradcore::Linear<U> cast(const gradcore::Linear<T>& l) {
  gradcore::Linear<U> out;
  out.weight = cast<U>(l.weight);
  out.bias = cast<U>(l.bias);
  return out;
}

template <class U, class T>
gradcore::BatchNorm2d<U> cast(const gradcore::BatchNorm2d<T>& b) {
  gradcore::BatchNorm2d<U> out;
  out.scale = cast<U>(b.scale);
  out.shift = cast<U>(b.shift);
  out.running_mean = cast<U>(b.running_mean);
  out.running_var = cast<U>(b.running_var);
  out.eps = b.eps;
  out.momentum = b.momentum;
  return out;
}

// Central differences are always taken in double precision, on a double
// twin of the layer and its inputs; the analytic gradient under test is
// computed at precision T. Taking the differences in float instead would
// measure float forward rounding (~1e-3 relative at any usable step), not
// the backward pass.
inline constexpr double kFdStep = 1e-6;
inline constexpr double kFdFloor = 1e-6;

template <class T>
struct FdSettings;
template <>
struct FdSettings<double> {
  static constexpr double tol = 1e-6;
};
template <>
struct FdSettings<float> {
  static constexpr double tol = 1e-4;
};

}  // namespace malfew::testkit
