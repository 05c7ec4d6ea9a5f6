#include "malfew/gradcore/tensor.hpp"

#include <atomic>
#include <cmath>

#include "malfew/error.hpp"

namespace malfew::gradcore {

namespace {
std::atomic<bool> g_checked{false};
}

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + ")";
}

void set_checked(bool enabled) { g_checked.store(enabled); }
bool checked() { return g_checked.load(); }

void require_shape(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, message);
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
  require_shape(data_.size() == shape_.size(),
                "data length " + std::to_string(data_.size()) + " != " + to_string(shape_));
}

template <class T>
void Tensor<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <class T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  Tensor out = *this;
  out.reshape(shape);
  return out;
}

template <class T>
void Tensor<T>::reshape(Shape shape) {
  require_shape(shape.size() == shape_.size(), "cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  shape_ = shape;
}

template <class T>
bool Tensor<T>::all_finite() const {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <class T>
Tensor<T>& Tensor<T>::operator+=(const Tensor& other) {
  require_shape(shape_ == other.shape_, "add " + to_string(shape_) + " vs " + to_string(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

template <class T>
Tensor<T>& Tensor<T>::operator*=(T s) {
  for (auto& v : data_) v *= s;
  return *this;
}

template <class T>
void check_finite(const Tensor<T>& t, const char* where) {
  if (checked() && !t.all_finite()) throw Error(ErrorCode::NonFinite, std::string("non-finite values in ") + where);
}

template class Tensor<float>;
template class Tensor<double>;
template void check_finite(const Tensor<float>&, const char*);
template void check_finite(const Tensor<double>&, const char*);

}  // namespace malfew::gradcore
