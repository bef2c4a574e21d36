#pragma once

#include <cmath>
#include <memory>
#include <sstream>

#include "wls/core/ode_model.hpp"
#include "wls/errors.hpp"
#include "wls/types.hpp"

namespace wls {

// 1D compressible Euler in conserved variables (rho, rho*u, rho*E) on a
// uniform finite-volume mesh over [0,1], Rusanov interface flux, reflecting
// walls realized as mirror ghost cells with negated momentum.
struct SodConfig {
  int n_cells = 500;
  double gamma = 1.4;
  double interface_x = 0.5;
  double rho_l = 1.0, p_l = 1.0, u_l = 0.0;
  double rho_r = 0.125, p_r = 0.1, u_r = 0.0;

  int dim() const { return 3 * n_cells; }
  double dx() const { return 1.0 / n_cells; }
};

namespace euler {

struct Cell {
  double rho, m, E;  // conserved
  double u, p, a;    // derived
};

inline Cell decode(const SodConfig& cfg, double rho, double m, double E, int cell_index) {
  if (!(rho > 0.0)) {
    std::ostringstream os;
    os << "non-positive density in cell " << cell_index;
    throw PhysicalStateError(cell_index, os.str());
  }
  Cell c;
  c.rho = rho;
  c.m = m;
  c.E = E;
  c.u = m / rho;
  c.p = (cfg.gamma - 1.0) * (E - 0.5 * m * m / rho);
  if (!(c.p > 0.0)) {
    std::ostringstream os;
    os << "non-positive pressure in cell " << cell_index;
    throw PhysicalStateError(cell_index, os.str());
  }
  c.a = std::sqrt(cfg.gamma * c.p / rho);
  return c;
}

inline Cell mirror(const Cell& c) {
  Cell g = c;
  g.m = -c.m;
  g.u = -c.u;
  return g;
}

inline Eigen::Vector3d flux(const Cell& c) {
  return {c.m, c.m * c.u + c.p, (c.E + c.p) * c.u};
}

// d(flux)/d(rho, m, E)
inline Eigen::Matrix3d flux_jacobian(const SodConfig& cfg, const Cell& c) {
  const double g1 = cfg.gamma - 1.0;
  const double u = c.u;
  Eigen::Matrix3d J;
  J << 0.0, 1.0, 0.0,                                            //
      -u * u + 0.5 * g1 * u * u, (2.0 - g1) * u, g1,             //
      -(c.E + c.p) * u / c.rho + 0.5 * g1 * u * u * u,           //
      (c.E + c.p) / c.rho - g1 * u * u, cfg.gamma * u;
  return J;
}

inline double wave_speed(const Cell& c) { return std::abs(c.u) + c.a; }

// d(|u| + a)/d(rho, m, E)
inline Eigen::RowVector3d wave_speed_grad(const SodConfig& cfg, const Cell& c) {
  const double g1 = cfg.gamma - 1.0;
  const double sgn = (c.u > 0) - (c.u < 0);
  Eigen::RowVector3d du(-c.u / c.rho, 1.0 / c.rho, 0.0);
  Eigen::RowVector3d dp(0.5 * g1 * c.u * c.u, -g1 * c.u, g1);
  Eigen::RowVector3d da = (cfg.gamma / (2.0 * c.a * c.rho)) * (dp - (c.p / c.rho) * Eigen::RowVector3d(1.0, 0.0, 0.0));
  return sgn * du + da;
}

inline Eigen::Vector3d rusanov(const Cell& L, const Cell& R) {
  const double s = std::max(wave_speed(L), wave_speed(R));
  Eigen::Vector3d jump(R.rho - L.rho, R.m - L.m, R.E - L.E);
  return 0.5 * (flux(L) + flux(R)) - 0.5 * s * jump;
}

// Derivatives of the Rusanov flux w.r.t. the left and right conserved states.
// The max() in the wave speed is differentiated on its active side (left on
// ties), and |u| through sign(u); both are exact away from the kink sets.
inline void rusanov_jacobians(const SodConfig& cfg, const Cell& L, const Cell& R,
                              Eigen::Matrix3d& dL, Eigen::Matrix3d& dR) {
  const double sL = wave_speed(L), sR = wave_speed(R);
  const double s = std::max(sL, sR);
  Eigen::Vector3d jump(R.rho - L.rho, R.m - L.m, R.E - L.E);
  Eigen::RowVector3d ds_dL = Eigen::RowVector3d::Zero();
  Eigen::RowVector3d ds_dR = Eigen::RowVector3d::Zero();
  if (sL >= sR)
    ds_dL = wave_speed_grad(cfg, L);
  else
    ds_dR = wave_speed_grad(cfg, R);
  dL = 0.5 * flux_jacobian(cfg, L) + 0.5 * s * Eigen::Matrix3d::Identity() - 0.5 * jump * ds_dL;
  dR = 0.5 * flux_jacobian(cfg, R) - 0.5 * s * Eigen::Matrix3d::Identity() - 0.5 * jump * ds_dR;
}

}  // namespace euler

inline Vec sod_initial_state(const SodConfig& cfg) {
  Vec x(cfg.dim());
  for (int c = 0; c < cfg.n_cells; ++c) {
    double center = (c + 0.5) * cfg.dx();
    double rho = center < cfg.interface_x ? cfg.rho_l : cfg.rho_r;
    double p = center < cfg.interface_x ? cfg.p_l : cfg.p_r;
    double u = center < cfg.interface_x ? cfg.u_l : cfg.u_r;
    x(3 * c) = rho;
    x(3 * c + 1) = rho * u;
    x(3 * c + 2) = p / (cfg.gamma - 1.0) + 0.5 * rho * u * u;
  }
  return x;
}

inline Vec sod_velocity(const SodConfig& cfg, const Vec& x, double /*t*/) {
  const int n = cfg.n_cells;
  if (x.size() != cfg.dim()) throw DimensionError("sod_velocity: state size mismatch");
  std::vector<euler::Cell> cells(n);
  for (int c = 0; c < n; ++c) cells[c] = euler::decode(cfg, x(3 * c), x(3 * c + 1), x(3 * c + 2), c);

  Vec v(cfg.dim());
  Eigen::Vector3d left_flux =
      euler::rusanov(euler::mirror(cells[0]), cells[0]);  // wall at x=0
  for (int c = 0; c < n; ++c) {
    Eigen::Vector3d right_flux = (c + 1 < n) ? euler::rusanov(cells[c], cells[c + 1])
                                             : euler::rusanov(cells[c], euler::mirror(cells[c]));
    v.segment<3>(3 * c) = -(right_flux - left_flux) / cfg.dx();
    left_flux = right_flux;
  }
  return v;
}

inline Mat sod_jacobian(const SodConfig& cfg, const Vec& x, double /*t*/) {
  const int n = cfg.n_cells;
  if (x.size() != cfg.dim()) throw DimensionError("sod_jacobian: state size mismatch");
  std::vector<euler::Cell> cells(n);
  for (int c = 0; c < n; ++c) cells[c] = euler::decode(cfg, x(3 * c), x(3 * c + 1), x(3 * c + 2), c);

  const Eigen::Matrix3d Mir = Eigen::Vector3d(1.0, -1.0, 1.0).asDiagonal();
  Mat J = Mat::Zero(cfg.dim(), cfg.dim());
  const double inv_dx = 1.0 / cfg.dx();

  // Interface i sits between cells i-1 and i (ghosts at i=0 and i=n).
  Eigen::Matrix3d dL, dR;
  for (int i = 0; i <= n; ++i) {
    const bool ghost_left = (i == 0), ghost_right = (i == n);
    const euler::Cell& L = ghost_left ? euler::mirror(cells[0]) : cells[i - 1];
    const euler::Cell& R = ghost_right ? euler::mirror(cells[n - 1]) : cells[i];
    euler::rusanov_jacobians(cfg, L, R, dL, dR);
    if (ghost_left) dL = dL * Mir;    // ghost tracks cell 0
    if (ghost_right) dR = dR * Mir;   // ghost tracks cell n-1

    const int cl = ghost_left ? 0 : i - 1;   // owner of the left slot
    const int cr = ghost_right ? n - 1 : i;  // owner of the right slot
    // flux at interface i enters cell i-1 with -, cell i with +
    if (i >= 1) {
      J.block<3, 3>(3 * (i - 1), 3 * cl) -= inv_dx * dL;
      J.block<3, 3>(3 * (i - 1), 3 * cr) -= inv_dx * dR;
    }
    if (i <= n - 1) {
      J.block<3, 3>(3 * i, 3 * cl) += inv_dx * dL;
      J.block<3, 3>(3 * i, 3 * cr) += inv_dx * dR;
    }
  }
  return J;
}

inline OdeModel make_sod_model(const SodConfig& cfg) {
  OdeModel m;
  m.dim = cfg.dim();
  m.autonomous = true;
  auto shared = std::make_shared<SodConfig>(cfg);
  m.velocity = [shared](const Vec& y, double t) { return sod_velocity(*shared, y, t); };
  m.jacobian = [shared](const Vec& y, double t) { return sod_jacobian(*shared, y, t); };
  return m;
}

inline double sod_total_mass(const SodConfig& cfg, const Vec& x) {
  double mass = 0.0;
  for (int c = 0; c < cfg.n_cells; ++c) mass += x(3 * c) * cfg.dx();
  return mass;
}

}  // namespace wls
