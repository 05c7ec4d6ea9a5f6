#pragma once

#include <cstdint>
#include <vector>

#include "malfew/gradcore/tensor.hpp"

namespace malfew::gradcore {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Applies parameter updates from the grad buffers. Does not own the
/// parameters; the caller keeps them alive and zeroes grads between steps.
template <class T>
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::vector<Parameter<T>*> params);

  /// SGD: p -= lr * g. Adam: bias-corrected first/second moments.
  /// Throws NonFinite on a NaN/Inf gradient in checked mode.
  void step();
  void zero_grad();

  std::uint64_t steps() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  std::vector<Parameter<T>*> params_;
  std::vector<std::vector<double>> m_, v_;
  std::uint64_t steps_ = 0;
};

}  // namespace malfew::gradcore
