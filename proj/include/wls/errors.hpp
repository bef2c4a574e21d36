#pragma once

#include <stdexcept>
#include <string>

namespace wls {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user-supplied configuration (sizes, ranges, file contents).
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Violated call contract: mismatched vector/matrix dimensions.
struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// NaN/Inf escaped a numerical kernel.
struct NumericalError : Error {
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// A time step's nonlinear solve did not converge.
struct StepFailure : Error {
  int step;
  double residual_norm;
  StepFailure(int step_, double rnorm, const std::string& msg)
      : Error(msg), step(step_), residual_norm(rnorm) {}
};

// An outer iteration (Gauss-Newton, sweep method) hit its budget.
struct NonConvergence : Error {
  int iterations;
  double final_gradient;
  NonConvergence(int iters, double grad, const std::string& msg)
      : Error(msg), iterations(iters), final_gradient(grad) {}
};

// Normal matrix (or mass matrix) not positive definite.
struct SingularSystem : Error {
  explicit SingularSystem(const std::string& msg) : Error(msg) {}
};

// Non-physical state (negative density/pressure); carries the cell.
struct PhysicalStateError : Error {
  int cell;
  PhysicalStateError(int cell_, const std::string& msg) : Error(msg), cell(cell_) {}
};

// Index lookback reaching before the start of time.
struct IndexOutOfRange : Error {
  explicit IndexOutOfRange(const std::string& msg) : Error(msg) {}
};

// File could not be read, written, or decoded.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace wls
