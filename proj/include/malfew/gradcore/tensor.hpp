#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace malfew::gradcore {

/// (batch, channel, height, width) extents.
struct Shape {
  std::size_t n = 0, c = 0, h = 0, w = 0;

  std::size_t size() const { return n * c * h * w; }
  std::size_t per_sample() const { return c * h * w; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

/// Dense NCHW tensor.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.size(), fill) {}
  Tensor(Shape shape, std::vector<T> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }
  const T& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }

  std::span<T> sample(std::size_t n) { return std::span<T>(data_).subspan(n * shape_.per_sample(), shape_.per_sample()); }
  std::span<const T> sample(std::size_t n) const {
    return std::span<const T>(data_).subspan(n * shape_.per_sample(), shape_.per_sample());
  }

  void fill(T v);
  /// Same data, new extents; sizes must agree.
  Tensor reshaped(Shape shape) const;
  void reshape(Shape shape);

  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(T s);

 private:
  Shape shape_;
  std::vector<T> data_;
};

/// Learnable array paired with its gradient buffer. The grad buffers of a
/// model's parameters together form its gradient tape.
template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string name_, Tensor<T> value_)
      : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T(0)); }
};

/// Checked mode screens layer outputs and gradients for NaN/Inf.
void set_checked(bool enabled);
bool checked();

template <class T>
void check_finite(const Tensor<T>& t, const char* where);

void require_shape(bool ok, const std::string& message);

}  // namespace malfew::gradcore
