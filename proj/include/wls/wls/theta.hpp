#pragma once

#include "wls/core/window.hpp"
#include "wls/errors.hpp"

namespace wls {

struct ThetaIndex {
  int window;    // n
  int instance;  // i within that window, 0 .. N_t^n
};

// Resolve a (window, local instance) pair, where instance may be <= 0, to the
// window that actually owns the state: instance 0 of window n coincides with
// the last instance of window n-1, and negative instances reach further back.
// Window 0 owns its own instance 0 (the initial condition).
inline ThetaIndex theta(const WindowPartition& part, int n, int i) {
  if (n < 0 || n >= part.num_windows()) throw IndexOutOfRange("theta: window out of range");
  if (i > part.num_instances(n)) throw IndexOutOfRange("theta: instance beyond window");
  if (i > 0 || n == 0) {
    if (i < 0) throw IndexOutOfRange("theta: negative instance before start of time");
    return {n, i};
  }
  return theta(part, n - 1, part.num_instances(n - 1) + i);
}

}  // namespace wls
