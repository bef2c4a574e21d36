#pragma once

#include <string>
#include <vector>

#include "wls/core/ode_model.hpp"
#include "wls/errors.hpp"
#include "wls/types.hpp"

namespace wls {

// Linear multistep scheme. The step from history {y^{i-1},...,y^{i-k}} to y^i
// is the root of
//   (1/dt) sum_j alpha_j y^{i-j} - sum_j beta_j f(y^{i-j}, t^{i-j}) = 0.
struct LmsScheme {
  enum class Kind { BackwardEuler, CrankNicolson, AdamsBashforth2, ForwardEuler };

  Kind kind;
  int k;                      // step count
  std::vector<double> alpha;  // size k+1
  std::vector<double> beta;   // size k+1
  bool implicit;              // beta[0] != 0

  static LmsScheme backward_euler() {
    return {Kind::BackwardEuler, 1, {1.0, -1.0}, {1.0, 0.0}, true};
  }
  static LmsScheme crank_nicolson() {
    return {Kind::CrankNicolson, 1, {1.0, -1.0}, {0.5, 0.5}, true};
  }
  static LmsScheme adams_bashforth2() {
    return {Kind::AdamsBashforth2, 2, {1.0, -1.0, 0.0}, {0.0, 1.5, -0.5}, false};
  }
  // Startup helper for two-step schemes; also usable on its own.
  static LmsScheme forward_euler() {
    return {Kind::ForwardEuler, 1, {1.0, -1.0}, {0.0, 1.0}, false};
  }

  static LmsScheme by_name(const std::string& name) {
    if (name == "be" || name == "backward-euler") return backward_euler();
    if (name == "cn" || name == "crank-nicolson") return crank_nicolson();
    if (name == "ab2" || name == "adams-bashforth2") return adams_bashforth2();
    if (name == "fe" || name == "forward-euler") return forward_euler();
    throw ConfigError("unknown time scheme: " + name);
  }

  std::string name() const {
    switch (kind) {
      case Kind::BackwardEuler: return "be";
      case Kind::CrankNicolson: return "cn";
      case Kind::AdamsBashforth2: return "ab2";
      case Kind::ForwardEuler: return "fe";
    }
    return "?";
  }
};

// Discrete residual (1/dt) sum_j alpha_j y^{i-j} - sum_j beta_j f^{i-j}.
// history[j] is y^{i-j} (newest first), times[j] the matching instant.
inline Vec lms_residual(const LmsScheme& scheme, const OdeModel& model,
                        const std::vector<Vec>& history, const std::vector<double>& times,
                        double dt) {
  if (dt <= 0) throw DimensionError("lms_residual: dt must be positive");
  if (history.size() != static_cast<size_t>(scheme.k + 1) || times.size() != history.size())
    throw DimensionError("lms_residual: history length must be k+1");
  Vec r = Vec::Zero(model.dim);
  for (int j = 0; j <= scheme.k; ++j) {
    if (history[j].size() != model.dim) throw DimensionError("lms_residual: state size mismatch");
    if (scheme.alpha[j] != 0.0) r += (scheme.alpha[j] / dt) * history[j];
    if (scheme.beta[j] != 0.0) {
      Vec f = model.f(history[j], times[j]);
      if (!f.allFinite()) throw NumericalError("lms_residual: non-finite velocity");
      r -= scheme.beta[j] * f;
    }
  }
  return r;
}

}  // namespace wls
