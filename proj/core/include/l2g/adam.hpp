#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "l2g/params.hpp"

namespace l2g {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam with first/second moment buffers per parameter.
class Adam {
 public:
  Adam(const ParamStore& params, AdamConfig config = {});

  /// One update: p -= lr * m_hat / (sqrt(v_hat) + eps).
  void step(ParamStore& params, std::span<const Matrix> grads, double learning_rate);

  [[nodiscard]] std::size_t steps() const noexcept { return steps_; }
  [[nodiscard]] const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  std::size_t steps_ = 0;
};

}  // namespace l2g
