#pragma once

#include <cstdint>
#include <vector>

#include "malfew/gradcore/tensor.hpp"
#include "malfew/random.hpp"

namespace malfew::gradcore {

enum class Mode { Train, Eval };

/// Output extent of a convolution along one axis.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding);

// ---------------------------------------------------------------------------
// Convolution (cross-correlation, no kernel flip)

template <class T>
struct Conv2d {
  Parameter<T> weight;  // (out, in, k, k)
  Parameter<T> bias;    // (1, out, 1, 1)
  std::size_t stride = 1;
  std::size_t padding = 0;

  /// Fan-in scaled uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static Conv2d make(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
                     std::size_t padding, Rng& rng, const std::string& name = "conv");

  std::size_t in_channels() const { return weight.value.shape().c; }
  std::size_t out_channels() const { return weight.value.shape().n; }
  std::size_t kernel() const { return weight.value.shape().h; }
};

template <class T>
Tensor<T> conv2d_forward(const Conv2d<T>& layer, const Tensor<T>& x);

/// Returns grad_x and accumulates into weight.grad / bias.grad.
template <class T>
Tensor<T> conv2d_backward(Conv2d<T>& layer, const Tensor<T>& x, const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// Batch normalization over (n, h, w) per channel

template <class T>
struct BatchNorm2d {
  Parameter<T> scale;  // (1, c, 1, 1), init 1
  Parameter<T> shift;  // (1, c, 1, 1), init 0
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double eps = 1e-5;
  double momentum = 0.1;

  static BatchNorm2d make(std::size_t channels, const std::string& name = "bn");
  std::size_t channels() const { return scale.value.shape().c; }
};

template <class T>
struct BatchNormCache {
  Tensor<T> xhat;
  std::vector<double> inv_std;
  Mode mode = Mode::Train;
};

/// Train mode normalizes by batch statistics and updates the running
/// estimates (momentum, unbiased variance); eval mode uses the running ones.
template <class T>
Tensor<T> batchnorm2d_forward(BatchNorm2d<T>& layer, const Tensor<T>& x, Mode mode, BatchNormCache<T>* cache = nullptr);

template <class T>
Tensor<T> batchnorm2d_backward(BatchNorm2d<T>& layer, const BatchNormCache<T>& cache, const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// Elementwise activations

template <class T>
Tensor<T> relu_forward(const Tensor<T>& x);
/// Gradient passes where the forward input was strictly positive.
template <class T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

template <class T>
Tensor<T> sigmoid_forward(const Tensor<T>& x);
/// Takes the forward output y: grad * y * (1 - y).
template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2, floor output

template <class T>
struct MaxPoolResult {
  Tensor<T> output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
  Shape input_shape;
};

/// Ties resolve to the first element in row-major window order.
template <class T>
MaxPoolResult<T> maxpool2x2_forward(const Tensor<T>& x);
template <class T>
Tensor<T> maxpool2x2_backward(const MaxPoolResult<T>& fwd, const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// Fully connected

template <class T>
struct Linear {
  Parameter<T> weight;  // (out, in, 1, 1)
  Parameter<T> bias;    // (1, out, 1, 1)

  static Linear make(std::size_t in_features, std::size_t out_features, Rng& rng, const std::string& name = "linear");
  std::size_t in_features() const { return weight.value.shape().c; }
  std::size_t out_features() const { return weight.value.shape().n; }
};

/// x is (n, c, h, w) with c*h*w == in_features; output is (n, out, 1, 1).
template <class T>
Tensor<T> linear_forward(const Linear<T>& layer, const Tensor<T>& x);
template <class T>
Tensor<T> linear_backward(Linear<T>& layer, const Tensor<T>& x, const Tensor<T>& grad_out);

template <class T>
Tensor<T> flatten(const Tensor<T>& x);
template <class T>
Tensor<T> unflatten(const Tensor<T>& grad, const Shape& original);

// ---------------------------------------------------------------------------
// Nearest-neighbor upsampling to an explicit target size

template <class T>
Tensor<T> upsample_nearest_forward(const Tensor<T>& x, std::size_t out_h, std::size_t out_w);
template <class T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& grad_out, const Shape& input_shape);

// ---------------------------------------------------------------------------
// Channel concatenation (depth-wise) of two equally shaped batches

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
/// Splits a gradient of concat_channels back into its two halves.
template <class T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& grad, std::size_t channels_a);

}  // namespace malfew::gradcore
