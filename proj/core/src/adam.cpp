#include "l2g/adam.hpp"

#include <cmath>

#include "l2g/errors.hpp"

namespace l2g {

Adam::Adam(const ParamStore& params, AdamConfig config)
    : config_(config), first_(params.zeros_like()), second_(params.zeros_like()) {}

void Adam::step(ParamStore& params, std::span<const Matrix> grads, double learning_rate) {
  if (grads.size() != params.size() || first_.size() != params.size())
    throw ShapeError("Adam::step: gradient count does not match parameter count");
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, double(steps_));
  const double correction2 = 1.0 - std::pow(b2, double(steps_));
  for (std::size_t id = 0; id < params.size(); ++id) {
    auto value = params[ParamId(id)].value.values();
    const auto g = grads[id].values();
    auto m = first_[id].values();
    auto v = second_[id].values();
    if (g.size() != value.size()) throw ShapeError("Adam::step: gradient shape mismatch");
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace l2g
