#pragma once

#include <functional>
#include <utility>

#include "wls/core/ode_model.hpp"
#include "wls/errors.hpp"
#include "wls/types.hpp"

namespace wls {

// Diagnostic model dy/dt = A y + b(t); the workhorse for closed-form oracles.
struct LinearModelConfig {
  Mat A;
  std::function<Vec(double)> forcing;  // empty: b = 0
  bool autonomous = true;
};

inline Vec linear_velocity(const LinearModelConfig& cfg, const Vec& y, double t) {
  if (cfg.A.cols() != y.size()) throw DimensionError("linear_velocity: size mismatch");
  Vec v = cfg.A * y;
  if (cfg.forcing) v += cfg.forcing(t);
  return v;
}

inline OdeModel make_linear_model(LinearModelConfig cfg) {
  if (cfg.A.rows() != cfg.A.cols()) throw DimensionError("linear model: A must be square");
  OdeModel m;
  m.dim = static_cast<int>(cfg.A.rows());
  m.autonomous = cfg.autonomous && !cfg.forcing;
  auto shared = std::make_shared<LinearModelConfig>(std::move(cfg));
  m.velocity = [shared](const Vec& y, double t) { return linear_velocity(*shared, y, t); };
  m.jacobian = [shared](const Vec&, double) { return shared->A; };
  return m;
}

}  // namespace wls
