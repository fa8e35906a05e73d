#include "privkt/optim.hpp"

#include <cmath>

#include "privkt/error.hpp"

namespace privkt {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

Optimizer::Optimizer(OptimizerConfig cfg, std::size_t param_count)
    : cfg_(cfg) {
  if (!(cfg_.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (cfg_.kind == OptimizerKind::adam) {
    if (!(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0 && cfg_.beta2 >= 0.0 &&
          cfg_.beta2 < 1.0)) {
      throw ConfigError("adam betas must lie in [0, 1)");
    }
    m_.assign(param_count, 0.0);
    v_.assign(param_count, 0.0);
  }
}

void Optimizer::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) {
    throw ConfigError("parameter/gradient size mismatch in optimizer step");
  }
  ++t_;
  if (cfg_.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] -= cfg_.lr * grads[i];
    }
    return;
  }
  if (params.size() != m_.size()) {
    throw ConfigError("optimizer state does not match parameter count");
  }
  const double t = static_cast<double>(t_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

}  // namespace privkt
