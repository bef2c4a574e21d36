#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wls/basis/pod.hpp"
#include "wls/basis/qsample.hpp"
#include "wls/harness/metrics.hpp"
#include "wls/io/config.hpp"
#include "wls/io/matrix_io.hpp"
#include "wls/models/linear.hpp"
#include "wls/models/sod.hpp"
#include "wls/rom/galerkin.hpp"
#include "wls/rom/lspg.hpp"
#include "wls/wls/direct.hpp"
#include "wls/wls/indirect.hpp"
#include "wls/wls/st.hpp"

namespace wls {

struct RunConfig {
  std::string model = "sod";
  int cells = 100;      // sod resolution
  int linear_dim = 10;  // seeded demo system size
  unsigned seed = 1234;
  std::string scheme = "cn";
  double dt = 0.002;
  double T = 0.2;
  std::string method = "lspg";
  double window = 0.0;  // uniform window span; 0 means one step per window
  std::vector<double> boundaries;
  std::string basis_file;
  int K = 10;
  int K_st = 5;
  std::string weighting = "identity";  // or qsample:<rows>
  std::string sampling_file;           // precomputed sampling rows; overrides weighting
  double gn_tol = 1e-4;
  int gn_max_iters = 50;
  double fbsm_eps = 1e-6;
  int fbsm_max_sweeps = 500;
  std::string output;     // trajectory destination (optional)
  std::string reference;  // reference trajectory for the error metric (optional)

  static RunConfig from_config(const ConfigMap& c) {
    RunConfig r;
    r.model = c.get("model", r.model);
    r.cells = c.get_int("cells", r.cells);
    r.linear_dim = c.get_int("linear_dim", r.linear_dim);
    r.seed = static_cast<unsigned>(c.get_int("seed", static_cast<int>(r.seed)));
    r.scheme = c.get("scheme", r.scheme);
    r.dt = c.get_double("dt", r.dt);
    r.T = c.get_double("T", r.T);
    r.method = c.get("method", r.method);
    r.window = c.get_double("window", r.window);
    r.boundaries = c.get_double_list("boundaries");
    r.basis_file = c.get("basis_file", r.basis_file);
    r.K = c.get_int("K", r.K);
    r.K_st = c.get_int("K_st", r.K_st);
    r.weighting = c.get("weighting", r.weighting);
    r.sampling_file = c.get("sampling_file", r.sampling_file);
    r.gn_tol = c.get_double("gn_tol", r.gn_tol);
    r.gn_max_iters = c.get_int("gn_max_iters", r.gn_max_iters);
    r.fbsm_eps = c.get_double("fbsm_eps", r.fbsm_eps);
    r.fbsm_max_sweeps = c.get_int("fbsm_max_sweeps", r.fbsm_max_sweeps);
    r.output = c.get("output", r.output);
    r.reference = c.get("reference", r.reference);
    return r;
  }

  bool is_windowed() const {
    return method == "wls-direct" || method == "wls-indirect" || method == "wls-st-direct" ||
           method == "wls-st-indirect";
  }
  bool is_space_time() const {
    return method == "wls-st-direct" || method == "wls-st-indirect";
  }
  double effective_window() const { return (is_windowed() && window > 0) ? window : dt; }

  int fom_steps() const {
    const double steps = T / dt;
    const double rounded = std::llround(steps);
    if (std::abs(steps - rounded) > 1e-8 * steps)
      throw ConfigError("T must be an integer multiple of dt");
    return static_cast<int>(rounded);
  }

  void validate() const {
    if (model != "sod" && model != "linear") throw ConfigError("unknown model: " + model);
    static const char* methods[] = {"fom",          "galerkin",      "lspg",
                                    "wls-direct",   "wls-indirect",  "wls-st-direct",
                                    "wls-st-indirect"};
    bool ok = false;
    for (const char* m : methods) ok = ok || method == m;
    if (!ok) throw ConfigError("unknown method: " + method);
    LmsScheme::by_name(scheme);  // throws on unknown names
    if (dt <= 0 || T <= 0) throw ConfigError("dt and T must be positive");
    fom_steps();
    if (K < 1 || K_st < 1) throw ConfigError("K and K_st must be positive");
    parse_weighting_rows();  // validates the format
  }

  // -1 for identity weighting, otherwise the requested sample-row count.
  int parse_weighting_rows() const {
    if (weighting == "identity") return -1;
    const std::string prefix = "qsample:";
    if (weighting.rfind(prefix, 0) == 0) {
      char* end = nullptr;
      const long n = std::strtol(weighting.c_str() + prefix.size(), &end, 10);
      if (*end != '\0' || n < 1) throw ConfigError("bad weighting spec: " + weighting);
      return static_cast<int>(n);
    }
    throw ConfigError("unknown weighting: " + weighting);
  }
};

inline OdeModel make_config_model(const RunConfig& cfg, Vec& x0) {
  if (cfg.model == "sod") {
    SodConfig sc;
    sc.n_cells = cfg.cells;
    x0 = sod_initial_state(sc);
    return make_sod_model(sc);
  }
  // Seeded stable dense system: scaled random coupling shifted to put the
  // spectrum in the left half-plane.
  std::mt19937 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = cfg.linear_dim;
  Mat A(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) A(i, j) = gauss(rng) / std::sqrt(double(n));
  A -= 1.2 * Mat::Identity(n, n);
  x0 = Vec(n);
  for (int i = 0; i < n; ++i) x0(i) = gauss(rng);
  LinearModelConfig lc;
  lc.A = A;
  return make_linear_model(lc);
}

inline int dofs_per_cell(const RunConfig& cfg) { return cfg.model == "sod" ? 3 : 1; }

struct RunOutput {
  MetricsReport metrics;
  Trajectory full_trajectory;
};

// Execute one configured run end to end: FOM reference, basis, weighting,
// method dispatch, metrics. The wall clock covers only the ROM solve.
inline RunOutput run_single(const RunConfig& cfg) {
  cfg.validate();
  Vec x0;
  OdeModel model = make_config_model(cfg, x0);
  const LmsScheme scheme = LmsScheme::by_name(cfg.scheme);
  const auto grid = uniform_grid(0.0, cfg.T, cfg.fom_steps());

  Trajectory fom = integrate_fom(model, scheme, grid, x0);
  Trajectory reference = cfg.reference.empty() ? fom : load_trajectory(cfg.reference);

  RunOutput out;
  if (cfg.method == "fom") {
    out.full_trajectory = fom;
    out.metrics.objective =
        discrete_objective(model, WeightingMatrix::identity(model.dim), scheme, fom);
    out.metrics.error = space_time_error(fom, reference, grid);
    out.metrics.error_normalized = space_time_error_normalized(fom, reference, grid);
    return out;
  }

  // Weighting: identity, sampling rows from a file, or rows chosen fresh
  // from velocity snapshots.
  WeightingMatrix weighting = WeightingMatrix::identity(model.dim);
  if (!cfg.sampling_file.empty()) {
    Vec raw = load_vector(cfg.sampling_file);
    std::vector<int> rows(raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) rows[i] = static_cast<int>(raw(i));
    weighting = WeightingMatrix::row_sampling(model.dim, rows);
  } else if (const int n_s = cfg.parse_weighting_rows(); n_s > 0) {
    Mat F(model.dim, fom.states.size());
    for (std::size_t i = 0; i < fom.states.size(); ++i)
      F.col(i) = model.f(fom.states[i], fom.grid[i]);
    weighting = qsample(F, n_s, dofs_per_cell(cfg));
  }

  WindowPartition part = cfg.boundaries.empty()
                             ? WindowPartition::uniform(cfg.T, cfg.effective_window(), cfg.dt)
                             : WindowPartition::from_boundaries(cfg.boundaries, cfg.dt);

  GnConfig gn;
  gn.grad_tol = cfg.gn_tol;
  gn.max_iters = cfg.gn_max_iters;

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();

  if (cfg.is_space_time()) {
    SpaceTimeBasis st_basis = build_st_basis(fom, part, cfg.K_st);
    StRunConfig sc;
    sc.scheme = scheme;
    sc.weighting = weighting;
    sc.indirect = cfg.method == "wls-st-indirect";
    sc.gn = gn;
    StRunResult res = run_wls_st(model, part, st_basis, x0, sc);
    out.metrics.wallclock_s = std::chrono::duration<double>(clock::now() - t0).count();
    out.metrics.converged = res.converged && res.completed;
    out.metrics.failed = !res.completed;
    out.metrics.message = res.message;
    out.metrics.objective = res.objective;
    for (const auto& w : res.windows) out.metrics.window_iterations.push_back(w.iterations);
    out.full_trajectory = std::move(res.trajectory);
  } else {
    SpatialBasis basis;
    if (!cfg.basis_file.empty()) {
      basis.V = load_matrix(cfg.basis_file);
      basis.x_ref = x0;
      basis.validate();
      if (basis.V.rows() != model.dim) throw ConfigError("basis file dimension mismatch");
    } else {
      Mat S = collect_snapshots(fom, 1, x0);
      basis = pod_basis(S, cfg.K, x0).basis;
    }
    auto ops = std::make_shared<ReducedOperators>(ReducedOperators::build(basis, weighting));

    Trajectory reduced;
    if (cfg.method == "galerkin") {
      GalerkinResult res = run_galerkin(*ops, model, scheme, grid, x0);
      out.metrics.converged = res.completed;
      out.metrics.failed = !res.completed;
      out.metrics.message = res.message;
      reduced = std::move(res.trajectory);
    } else if (cfg.method == "lspg") {
      LspgResult res = run_lspg(*ops, model, scheme, grid, x0, gn);
      out.metrics.converged = res.completed;
      out.metrics.failed = !res.completed;
      out.metrics.message = res.message;
      reduced = std::move(res.trajectory);
    } else if (cfg.method == "wls-direct") {
      WlsRunResult res = run_wls_direct(*ops, model, scheme, part, x0, gn);
      out.metrics.converged = res.converged && res.completed;
      out.metrics.failed = !res.completed;
      out.metrics.message = res.message;
      out.metrics.objective = res.objective;
      for (const auto& w : res.windows) out.metrics.window_iterations.push_back(w.iterations);
      reduced = std::move(res.trajectory);
    } else {  // wls-indirect
      FbsmConfig fc;
      fc.eps = cfg.fbsm_eps;
      fc.max_sweeps = cfg.fbsm_max_sweeps;
      WlsRunResult res = run_wls_indirect(*ops, model, scheme, part, x0, fc);
      out.metrics.converged = res.converged && res.completed;
      out.metrics.failed = !res.completed;
      out.metrics.message = res.message;
      out.metrics.objective = res.objective;
      for (const auto& w : res.windows) out.metrics.window_iterations.push_back(w.iterations);
      reduced = std::move(res.trajectory);
    }
    out.metrics.wallclock_s = std::chrono::duration<double>(clock::now() - t0).count();
    out.full_trajectory = reconstruct_trajectory(basis, reduced);
    if (cfg.method == "galerkin" || cfg.method == "lspg")
      out.metrics.objective = discrete_objective(model, weighting, scheme, out.full_trajectory);
  }

  if (!out.metrics.failed) {
    out.metrics.error = space_time_error(out.full_trajectory, reference,
                                         out.full_trajectory.grid);
    out.metrics.error_normalized =
        space_time_error_normalized(out.full_trajectory, reference, out.full_trajectory.grid);
  }
  return out;
}

struct SweepConfig {
  RunConfig base;
  std::vector<double> windows;  // window spans to sweep; empty keeps base.window
  std::vector<double> dts;      // time steps to sweep; empty keeps base.dt
};

namespace detail {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

// One row per (dt, window) combination, in the order given. Failing runs
// produce rows with nan metrics and converged=0; the sweep continues.
inline std::string run_benchmark_sweep(const SweepConfig& sweep) {
  std::ostringstream csv;
  csv << "method,window,dt,K,error,objective,wallclock_s,converged\n";
  const std::vector<double> dts = sweep.dts.empty() ? std::vector<double>{sweep.base.dt}
                                                    : sweep.dts;
  const std::vector<double> windows =
      sweep.windows.empty() ? std::vector<double>{sweep.base.window} : sweep.windows;
  for (double dt : dts) {
    for (double w : windows) {
      RunConfig cfg = sweep.base;
      cfg.dt = dt;
      cfg.window = w;
      const int k_col = cfg.is_space_time() ? cfg.K_st : cfg.K;
      double err = std::nan(""), obj = std::nan(""), wall = 0.0;
      bool conv = false;
      try {
        RunOutput out = run_single(cfg);
        wall = out.metrics.wallclock_s;
        conv = out.metrics.converged && !out.metrics.failed;
        if (!out.metrics.failed) {
          err = out.metrics.error;
          obj = out.metrics.objective;
        }
      } catch (const Error&) {
        // row records the failure; sweep continues
      }
      csv << cfg.method << "," << detail::csv_num(cfg.effective_window()) << ","
          << detail::csv_num(dt) << "," << k_col << "," << detail::csv_num(err) << ","
          << detail::csv_num(obj) << "," << detail::csv_num(wall) << "," << (conv ? 1 : 0)
          << "\n";
    }
  }
  return csv.str();
}

}  // namespace wls
