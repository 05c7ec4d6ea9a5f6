#include "malfew/gradcore/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "malfew/error.hpp"

namespace malfew::gradcore {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

template <class T>
Tensor<T> uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor<T> t(shape);
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

struct ConvGeometry {
  std::size_t cin, cout, k, stride, pad, in_h, in_w, out_h, out_w;
  std::size_t rows() const { return cin * k * k; }
  std::size_t cols() const { return out_h * out_w; }
};

template <class T>
ConvGeometry geometry(const Conv2d<T>& layer, const Shape& x) {
  const auto& ws = layer.weight.value.shape();
  require_shape(ws.h == ws.w, "conv kernel must be square");
  require_shape(x.c == ws.c, "conv input channels " + std::to_string(x.c) + " != " + std::to_string(ws.c));
  require_shape(layer.stride >= 1, "conv stride must be >= 1");
  ConvGeometry g{ws.c, ws.n, ws.h, layer.stride, layer.padding, x.h, x.w, 0, 0};
  g.out_h = conv_out_extent(x.h, g.k, g.stride, g.pad);
  g.out_w = conv_out_extent(x.w, g.k, g.stride, g.pad);
  return g;
}

// Output columns [lo, hi) whose input column ox*stride + kx - pad is in range.
inline std::pair<std::size_t, std::size_t> valid_span(const ConvGeometry& g, std::size_t kx) {
  std::size_t lo = 0;
  if (g.pad > kx) lo = (g.pad - kx + g.stride - 1) / g.stride;
  std::size_t hi = 0;
  if (g.in_w + g.pad > kx) hi = std::min(g.out_w, (g.in_w + g.pad - kx - 1) / g.stride + 1);
  return {std::min(lo, hi), hi};
}

// col is (cin*k*k) x (out_h*out_w), row-major.
template <class T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  const auto ih = static_cast<std::ptrdiff_t>(g.in_h);
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    const T* plane = x + ci * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        T* row = col + ((ci * g.k + ky) * g.k + kx) * g.cols();
        const auto [lo, hi] = valid_span(g, kx);
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          T* out = row + oy * g.out_w;
          if (y < 0 || y >= ih) {
            std::fill(out, out + g.out_w, T(0));
            continue;
          }
          std::fill(out, out + lo, T(0));
          std::fill(out + hi, out + g.out_w, T(0));
          if (lo == hi) continue;
          const T* src = plane + y * static_cast<std::ptrdiff_t>(g.in_w) + (lo * g.stride + kx - g.pad);
          if (g.stride == 1) {
            std::copy(src, src + (hi - lo), out + lo);
          } else {
            for (std::size_t ox = lo; ox < hi; ++ox) out[ox] = src[(ox - lo) * g.stride];
          }
        }
      }
    }
  }
}

template <class T>
void col2im(const T* col, const ConvGeometry& g, T* x) {
  const auto ih = static_cast<std::ptrdiff_t>(g.in_h);
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    T* plane = x + ci * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const T* row = col + ((ci * g.k + ky) * g.k + kx) * g.cols();
        const auto [lo, hi] = valid_span(g, kx);
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (y < 0 || y >= ih || lo == hi) continue;
          const T* in = row + oy * g.out_w;
          T* dst = plane + y * static_cast<std::ptrdiff_t>(g.in_w) + (lo * g.stride + kx - g.pad);
          for (std::size_t ox = lo; ox < hi; ++ox) dst[(ox - lo) * g.stride] += in[ox];
        }
      }
    }
  }
}

}  // namespace

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding) {
  require_shape(stride >= 1, "stride must be >= 1");
  require_shape(in + 2 * padding >= kernel,
                "input extent " + std::to_string(in) + " too small for kernel " + std::to_string(kernel));
  return (in + 2 * padding - kernel) / stride + 1;
}

// ---------------------------------------------------------------------------

template <class T>
Conv2d<T> Conv2d<T>::make(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
                          std::size_t padding, Rng& rng, const std::string& name) {
  Conv2d c;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * kernel * kernel));
  c.weight = Parameter<T>(name + ".weight", uniform_tensor<T>({out_channels, in_channels, kernel, kernel}, bound, rng));
  c.bias = Parameter<T>(name + ".bias", uniform_tensor<T>({1, out_channels, 1, 1}, bound, rng));
  c.stride = stride;
  c.padding = padding;
  return c;
}

template <class T>
Tensor<T> conv2d_forward(const Conv2d<T>& layer, const Tensor<T>& x) {
  const auto g = geometry(layer, x.shape());
  require_shape(layer.bias.value.size() == g.cout, "conv bias size mismatch");
  Tensor<T> y({x.shape().n, g.cout, g.out_h, g.out_w});
  std::vector<T> col(g.rows() * g.cols());
  ConstMapMat<T> w(layer.weight.value.data(), g.cout, g.rows());
  const T* bias = layer.bias.value.data();
  for (std::size_t b = 0; b < x.shape().n; ++b) {
    im2col(x.sample(b).data(), g, col.data());
    MapMat<T> out(y.sample(b).data(), g.cout, g.cols());
    out.noalias() = w * ConstMapMat<T>(col.data(), g.rows(), g.cols());
    for (std::size_t o = 0; o < g.cout; ++o) out.row(o).array() += bias[o];
  }
  check_finite(y, "conv2d_forward");
  return y;
}

template <class T>
Tensor<T> conv2d_backward(Conv2d<T>& layer, const Tensor<T>& x, const Tensor<T>& grad_out) {
  const auto g = geometry(layer, x.shape());
  require_shape(grad_out.shape() == Shape{x.shape().n, g.cout, g.out_h, g.out_w},
                "conv grad_out shape " + to_string(grad_out.shape()));
  Tensor<T> grad_x(x.shape());
  std::vector<T> col(g.rows() * g.cols());
  std::vector<T> grad_col(g.rows() * g.cols());
  ConstMapMat<T> w(layer.weight.value.data(), g.cout, g.rows());
  MapMat<T> gw(layer.weight.grad.data(), g.cout, g.rows());
  T* gb = layer.bias.grad.data();
  for (std::size_t b = 0; b < x.shape().n; ++b) {
    im2col(x.sample(b).data(), g, col.data());
    ConstMapMat<T> gy(grad_out.sample(b).data(), g.cout, g.cols());
    gw.noalias() += gy * ConstMapMat<T>(col.data(), g.rows(), g.cols()).transpose();
    for (std::size_t o = 0; o < g.cout; ++o) gb[o] += static_cast<T>(gy.row(o).template cast<double>().sum());
    MapMat<T>(grad_col.data(), g.rows(), g.cols()).noalias() = w.transpose() * gy;
    col2im(grad_col.data(), g, grad_x.sample(b).data());
  }
  check_finite(grad_x, "conv2d_backward");
  return grad_x;
}

// ---------------------------------------------------------------------------

template <class T>
BatchNorm2d<T> BatchNorm2d<T>::make(std::size_t channels, const std::string& name) {
  BatchNorm2d bn;
  bn.scale = Parameter<T>(name + ".scale", Tensor<T>({1, channels, 1, 1}, T(1)));
  bn.shift = Parameter<T>(name + ".shift", Tensor<T>({1, channels, 1, 1}, T(0)));
  bn.running_mean = Tensor<T>({1, channels, 1, 1}, T(0));
  bn.running_var = Tensor<T>({1, channels, 1, 1}, T(1));
  return bn;
}

template <class T>
Tensor<T> batchnorm2d_forward(BatchNorm2d<T>& layer, const Tensor<T>& x, Mode mode, BatchNormCache<T>* cache) {
  const auto& s = x.shape();
  const std::size_t C = layer.channels();
  require_shape(s.c == C, "batchnorm channels " + std::to_string(s.c) + " != " + std::to_string(C));
  if (mode == Mode::Train && s.n < 2) throw Error(ErrorCode::BatchTooSmall, "batchnorm train mode needs batch >= 2");

  const std::size_t plane = s.h * s.w;
  const double count = static_cast<double>(s.n * plane);
  Tensor<T> y(s);
  Tensor<T> xhat(s);
  std::vector<double> inv_std(C);
  for (std::size_t c = 0; c < C; ++c) {
    double mean, var;
    if (mode == Mode::Train) {
      double sum = 0.0;
      for (std::size_t n = 0; n < s.n; ++n) {
        const T* p = &x(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (std::size_t n = 0; n < s.n; ++n) {
        const T* p = &x(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean;
          sq += d * d;
        }
      }
      var = sq / count;
      const double unbiased = count > 1 ? sq / (count - 1) : var;
      layer.running_mean[c] = static_cast<T>((1 - layer.momentum) * layer.running_mean[c] + layer.momentum * mean);
      layer.running_var[c] = static_cast<T>((1 - layer.momentum) * layer.running_var[c] + layer.momentum * unbiased);
    } else {
      mean = layer.running_mean[c];
      var = layer.running_var[c];
    }
    inv_std[c] = 1.0 / std::sqrt(var + layer.eps);
    const double gamma = layer.scale.value[c];
    const double beta = layer.shift.value[c];
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* p = &x(n, c, 0, 0);
      T* h = &xhat(n, c, 0, 0);
      T* o = &y(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        const double xh = (p[i] - mean) * inv_std[c];
        h[i] = static_cast<T>(xh);
        o[i] = static_cast<T>(gamma * xh + beta);
      }
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->mode = mode;
  }
  check_finite(y, "batchnorm2d_forward");
  return y;
}

template <class T>
Tensor<T> batchnorm2d_backward(BatchNorm2d<T>& layer, const BatchNormCache<T>& cache, const Tensor<T>& grad_out) {
  const auto& s = grad_out.shape();
  require_shape(s == cache.xhat.shape(), "batchnorm grad_out shape " + to_string(s));
  const std::size_t C = layer.channels();
  const std::size_t plane = s.h * s.w;
  const double count = static_cast<double>(s.n * plane);
  Tensor<T> grad_x(s);
  for (std::size_t c = 0; c < C; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* g = &grad_out(n, c, 0, 0);
      const T* h = &cache.xhat(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += g[i];
        sum_gx += static_cast<double>(g[i]) * h[i];
      }
    }
    layer.shift.grad[c] += static_cast<T>(sum_g);
    layer.scale.grad[c] += static_cast<T>(sum_gx);
    const double gamma = layer.scale.value[c];
    const double k = gamma * cache.inv_std[c];
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* g = &grad_out(n, c, 0, 0);
      const T* h = &cache.xhat(n, c, 0, 0);
      T* gx = &grad_x(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        if (cache.mode == Mode::Train) {
          gx[i] = static_cast<T>(k * (g[i] - sum_g / count - h[i] * sum_gx / count));
        } else {
          gx[i] = static_cast<T>(k * g[i]);
        }
      }
    }
  }
  check_finite(grad_x, "batchnorm2d_backward");
  return grad_x;
}

// ---------------------------------------------------------------------------

template <class T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  require_shape(x.shape() == grad_out.shape(), "relu grad shape " + to_string(grad_out.shape()));
  Tensor<T> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > T(0) ? grad_out[i] : T(0);
  return g;
}

template <class T>
Tensor<T> sigmoid_forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = x[i];
    // Split by sign so exp never overflows.
    y[i] = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
  }
  return y;
}

template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& grad_out) {
  require_shape(y.shape() == grad_out.shape(), "sigmoid grad shape " + to_string(grad_out.shape()));
  Tensor<T> g(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) g[i] = grad_out[i] * y[i] * (T(1) - y[i]);
  return g;
}

// ---------------------------------------------------------------------------

template <class T>
MaxPoolResult<T> maxpool2x2_forward(const Tensor<T>& x) {
  const auto& s = x.shape();
  require_shape(s.h >= 2 && s.w >= 2, "maxpool input too small: " + to_string(s));
  MaxPoolResult<T> r;
  r.input_shape = s;
  r.output = Tensor<T>({s.n, s.c, s.h / 2, s.w / 2});
  r.argmax.resize(r.output.size());
  const std::size_t oh = s.h / 2, ow = s.w / 2;
  std::size_t o = 0;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const std::size_t base = (n * s.c + c) * s.h * s.w;
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t xw = 0; xw < ow; ++xw, ++o) {
          std::size_t best = base + (2 * y) * s.w + 2 * xw;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = base + (2 * y + dy) * s.w + 2 * xw + dx;
              if (x[idx] > x[best]) best = idx;
            }
          }
          r.output[o] = x[best];
          r.argmax[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return r;
}

template <class T>
Tensor<T> maxpool2x2_backward(const MaxPoolResult<T>& fwd, const Tensor<T>& grad_out) {
  require_shape(grad_out.shape() == fwd.output.shape(), "maxpool grad shape " + to_string(grad_out.shape()));
  Tensor<T> g(fwd.input_shape);
  for (std::size_t i = 0; i < grad_out.size(); ++i) g[fwd.argmax[i]] += grad_out[i];
  return g;
}

// ---------------------------------------------------------------------------

template <class T>
Linear<T> Linear<T>::make(std::size_t in_features, std::size_t out_features, Rng& rng, const std::string& name) {
  Linear l;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  l.weight = Parameter<T>(name + ".weight", uniform_tensor<T>({out_features, in_features, 1, 1}, bound, rng));
  l.bias = Parameter<T>(name + ".bias", uniform_tensor<T>({1, out_features, 1, 1}, bound, rng));
  return l;
}

template <class T>
Tensor<T> linear_forward(const Linear<T>& layer, const Tensor<T>& x) {
  const std::size_t in = layer.in_features(), out = layer.out_features();
  require_shape(x.shape().per_sample() == in,
                "linear expects " + std::to_string(in) + " features, got " + to_string(x.shape()));
  const std::size_t n = x.shape().n;
  Tensor<T> y({n, out, 1, 1});
  MapMat<T> ym(y.data(), n, out);
  ym.noalias() = ConstMapMat<T>(x.data(), n, in) * ConstMapMat<T>(layer.weight.value.data(), out, in).transpose();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t o = 0; o < out; ++o) ym(r, o) += layer.bias.value[o];
  }
  check_finite(y, "linear_forward");
  return y;
}

template <class T>
Tensor<T> linear_backward(Linear<T>& layer, const Tensor<T>& x, const Tensor<T>& grad_out) {
  const std::size_t in = layer.in_features(), out = layer.out_features();
  const std::size_t n = x.shape().n;
  require_shape(x.shape().per_sample() == in, "linear input shape " + to_string(x.shape()));
  require_shape(grad_out.shape() == Shape{n, out, 1, 1}, "linear grad_out shape " + to_string(grad_out.shape()));
  ConstMapMat<T> gy(grad_out.data(), n, out);
  MapMat<T>(layer.weight.grad.data(), out, in).noalias() += gy.transpose() * ConstMapMat<T>(x.data(), n, in);
  for (std::size_t o = 0; o < out; ++o) layer.bias.grad[o] += static_cast<T>(gy.col(o).template cast<double>().sum());
  Tensor<T> grad_x(x.shape());
  MapMat<T>(grad_x.data(), n, in).noalias() = gy * ConstMapMat<T>(layer.weight.value.data(), out, in);
  check_finite(grad_x, "linear_backward");
  return grad_x;
}

template <class T>
Tensor<T> flatten(const Tensor<T>& x) {
  return x.reshaped({x.shape().n, x.shape().per_sample(), 1, 1});
}

template <class T>
Tensor<T> unflatten(const Tensor<T>& grad, const Shape& original) {
  return grad.reshaped(original);
}

// ---------------------------------------------------------------------------

template <class T>
Tensor<T> upsample_nearest_forward(const Tensor<T>& x, std::size_t out_h, std::size_t out_w) {
  const auto& s = x.shape();
  require_shape(s.h > 0 && s.w > 0 && out_h > 0 && out_w > 0, "upsample of empty extent");
  Tensor<T> y({s.n, s.c, out_h, out_w});
  std::vector<std::size_t> cols(out_w);
  for (std::size_t q = 0; q < out_w; ++q) cols[q] = q * s.w / out_w;
  for (std::size_t p = 0; p < s.n * s.c; ++p) {
    const T* src = x.data() + p * s.h * s.w;
    T* dst = y.data() + p * out_h * out_w;
    for (std::size_t r = 0; r < out_h; ++r) {
      const T* srow = src + (r * s.h / out_h) * s.w;
      T* drow = dst + r * out_w;
      for (std::size_t q = 0; q < out_w; ++q) drow[q] = srow[cols[q]];
    }
  }
  return y;
}

template <class T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& grad_out, const Shape& input_shape) {
  const auto& s = grad_out.shape();
  require_shape(s.n == input_shape.n && s.c == input_shape.c, "upsample grad shape " + to_string(s));
  Tensor<T> g(input_shape);
  std::vector<std::size_t> cols(s.w);
  for (std::size_t q = 0; q < s.w; ++q) cols[q] = q * input_shape.w / s.w;
  const std::size_t in_plane = input_shape.h * input_shape.w;
  for (std::size_t p = 0; p < s.n * s.c; ++p) {
    const T* src = grad_out.data() + p * s.h * s.w;
    T* dst = g.data() + p * in_plane;
    for (std::size_t r = 0; r < s.h; ++r) {
      const T* srow = src + r * s.w;
      T* drow = dst + (r * input_shape.h / s.h) * input_shape.w;
      for (std::size_t q = 0; q < s.w; ++q) drow[cols[q]] += srow[q];
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  require_shape(sa.n == sb.n && sa.h == sb.h && sa.w == sb.w,
                "concat shapes " + to_string(sa) + " vs " + to_string(sb));
  Tensor<T> y({sa.n, sa.c + sb.c, sa.h, sa.w});
  for (std::size_t n = 0; n < sa.n; ++n) {
    auto dst = y.sample(n);
    auto pa = a.sample(n);
    auto pb = b.sample(n);
    std::copy(pa.begin(), pa.end(), dst.begin());
    std::copy(pb.begin(), pb.end(), dst.begin() + static_cast<std::ptrdiff_t>(pa.size()));
  }
  return y;
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& grad, std::size_t channels_a) {
  const auto& s = grad.shape();
  require_shape(channels_a <= s.c, "split beyond channel count");
  Tensor<T> a({s.n, channels_a, s.h, s.w});
  Tensor<T> b({s.n, s.c - channels_a, s.h, s.w});
  for (std::size_t n = 0; n < s.n; ++n) {
    auto src = grad.sample(n);
    auto da = a.sample(n);
    auto db = b.sample(n);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(da.size()), da.begin());
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(da.size()), src.end(), db.begin());
  }
  return {std::move(a), std::move(b)};
}

#define MALFEW_INSTANTIATE_LAYERS(T)                                                                   \
  template struct Conv2d<T>;                                                                           \
  template Tensor<T> conv2d_forward(const Conv2d<T>&, const Tensor<T>&);                               \
  template Tensor<T> conv2d_backward(Conv2d<T>&, const Tensor<T>&, const Tensor<T>&);                  \
  template struct BatchNorm2d<T>;                                                                      \
  template Tensor<T> batchnorm2d_forward(BatchNorm2d<T>&, const Tensor<T>&, Mode, BatchNormCache<T>*); \
  template Tensor<T> batchnorm2d_backward(BatchNorm2d<T>&, const BatchNormCache<T>&, const Tensor<T>&); \
  template Tensor<T> relu_forward(const Tensor<T>&);                                                   \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> sigmoid_forward(const Tensor<T>&);                                                \
  template Tensor<T> sigmoid_backward(const Tensor<T>&, const Tensor<T>&);                             \
  template MaxPoolResult<T> maxpool2x2_forward(const Tensor<T>&);                                      \
  template Tensor<T> maxpool2x2_backward(const MaxPoolResult<T>&, const Tensor<T>&);                   \
  template struct Linear<T>;                                                                           \
  template Tensor<T> linear_forward(const Linear<T>&, const Tensor<T>&);                               \
  template Tensor<T> linear_backward(Linear<T>&, const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> flatten(const Tensor<T>&);                                                        \
  template Tensor<T> unflatten(const Tensor<T>&, const Shape&);                                        \
  template Tensor<T> upsample_nearest_forward(const Tensor<T>&, std::size_t, std::size_t);             \
  template Tensor<T> upsample_nearest_backward(const Tensor<T>&, const Shape&);                        \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                              \
  template std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>&, std::size_t);

MALFEW_INSTANTIATE_LAYERS(float)
MALFEW_INSTANTIATE_LAYERS(double)

}  // namespace malfew::gradcore
