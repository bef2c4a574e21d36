// Command-line front end: full-order simulation, basis and sampling
// construction, reduced-order runs, and benchmark sweeps.
//
// Exit codes: 0 success, 2 configuration problem, 3 solver non-convergence,
// 4 non-physical state (blow-up).

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>

#include "wls/harness/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitPhysical = 4;

int exit_code_for(const wls::Error& e) {
  if (dynamic_cast<const wls::PhysicalStateError*>(&e)) return kExitPhysical;
  if (dynamic_cast<const wls::StepFailure*>(&e) || dynamic_cast<const wls::NonConvergence*>(&e) ||
      dynamic_cast<const wls::SingularSystem*>(&e) ||
      dynamic_cast<const wls::NumericalError*>(&e))
    return kExitSolver;
  return kExitConfig;
}

// Failure payloads lose their type once a run records them as a message;
// sod state decoding marks its messages so blow-ups keep exit code 4.
bool looks_physical(const std::string& message) {
  return message.find("non-positive density") != std::string::npos ||
         message.find("non-positive pressure") != std::string::npos;
}

void add_model_flags(CLI::App* cmd, wls::RunConfig& rc) {
  cmd->add_option("--model", rc.model, "model: sod or linear")->capture_default_str();
  cmd->add_option("--cells", rc.cells, "sod mesh cells")->capture_default_str();
  cmd->add_option("--linear-dim", rc.linear_dim, "linear model size")->capture_default_str();
  cmd->add_option("--seed", rc.seed, "seed for the linear demo model")->capture_default_str();
}

void add_time_flags(CLI::App* cmd, wls::RunConfig& rc) {
  cmd->add_option("--scheme", rc.scheme, "time scheme: be, cn, ab2, fe")->capture_default_str();
  cmd->add_option("--dt", rc.dt, "time step")->capture_default_str();
  cmd->add_option("--T", rc.T, "final time")->capture_default_str();
}

void add_rom_flags(CLI::App* cmd, wls::RunConfig& rc) {
  cmd->add_option("--method", rc.method,
                  "fom|galerkin|lspg|wls-direct|wls-indirect|wls-st-direct|wls-st-indirect")
      ->capture_default_str();
  cmd->add_option("--window", rc.window, "uniform window span (multiple of dt)")
      ->capture_default_str();
  cmd->add_option("--boundaries", rc.boundaries, "explicit window boundaries")->delimiter(',');
  cmd->add_option("--basis-file", rc.basis_file, "spatial basis file");
  cmd->add_option("-K,--K", rc.K, "spatial basis size")->capture_default_str();
  cmd->add_option("--K-st", rc.K_st, "space-time basis size")->capture_default_str();
  cmd->add_option("--weighting", rc.weighting, "identity or qsample:<rows>")
      ->capture_default_str();
  cmd->add_option("--sampling-file", rc.sampling_file, "precomputed sampling rows");
  cmd->add_option("--gn-tol", rc.gn_tol, "Gauss-Newton gradient tolerance")
      ->capture_default_str();
  cmd->add_option("--gn-max-iters", rc.gn_max_iters)->capture_default_str();
  cmd->add_option("--fbsm-eps", rc.fbsm_eps, "sweep convergence tolerance")
      ->capture_default_str();
  cmd->add_option("--fbsm-max-sweeps", rc.fbsm_max_sweeps)->capture_default_str();
  cmd->add_option("--reference", rc.reference, "reference trajectory for error metrics");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw wls::IoError("cannot open for writing: " + path);
  f << text;
  if (!f) throw wls::IoError("write failed: " + path);
}

// --config must be known before option defaults are set, so it is scanned
// out of argv before CLI11 runs.
std::string prescan_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    const std::string prefix = "--config=";
    if (a.rfind(prefix, 0) == 0) return a.substr(prefix.size());
  }
  return "";
}

void print_metrics(const wls::MetricsReport& m) {
  std::printf("error=%.12g\n", m.error);
  std::printf("error_normalized=%.12g\n", m.error_normalized);
  std::printf("objective=%.12g\n", m.objective);
  std::printf("wallclock_s=%.6f\n", m.wallclock_s);
  std::printf("converged=%d\n", m.converged && !m.failed ? 1 : 0);
  if (!m.window_iterations.empty()) {
    std::printf("window_iterations=");
    for (std::size_t i = 0; i < m.window_iterations.size(); ++i)
      std::printf(i ? ",%d" : "%d", m.window_iterations[i]);
    std::printf("\n");
  }
  if (!m.message.empty()) std::printf("message=%s\n", m.message.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  wls::RunConfig rc;
  const std::string config_path = prescan_config(argc, argv);
  try {
    if (!config_path.empty())
      rc = wls::RunConfig::from_config(wls::ConfigMap::from_file(config_path));
  } catch (const wls::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  CLI::App app{"windowed least-squares model reduction toolkit"};
  app.require_subcommand(1);
  std::string config_echo;
  app.add_option("--config", config_echo, "key=value configuration file");

  int rc_exit = kExitOk;
  std::function<void()> action;

  // simulate-fom: integrate the full model and persist the trajectory.
  auto* sim = app.add_subcommand("simulate-fom", "run the full-order model");
  add_model_flags(sim, rc);
  add_time_flags(sim, rc);
  std::string sim_out = rc.output;
  sim->add_option("--output", sim_out, "trajectory file")->required();
  sim->callback([&]() {
    action = [&]() {
      rc.method = "fom";
      rc.validate();
      wls::Vec x0;
      wls::OdeModel model = wls::make_config_model(rc, x0);
      auto traj = wls::integrate_fom(model, wls::LmsScheme::by_name(rc.scheme),
                                     wls::uniform_grid(0.0, rc.T, rc.fom_steps()), x0);
      wls::save_trajectory(sim_out, traj,
                           {{"model", rc.model},
                            {"scheme", rc.scheme},
                            {"dt", wls::format_double(rc.dt)}});
      std::printf("nodes=%zu\n", traj.grid.size());
    };
  });

  // build-basis: POD of a saved trajectory.
  auto* bb = app.add_subcommand("build-basis", "POD basis from a trajectory");
  std::string bb_in, bb_out;
  int bb_K = rc.K;
  int bb_skip = 1;
  bb->add_option("--input", bb_in, "trajectory file")->required();
  bb->add_option("--output", bb_out, "basis file")->required();
  bb->add_option("-K,--K", bb_K, "basis size")->capture_default_str();
  bb->add_option("--skip", bb_skip, "snapshot stride")->capture_default_str();
  bb->callback([&]() {
    action = [&]() {
      wls::Trajectory traj = wls::load_trajectory(bb_in);
      wls::Mat S = wls::collect_snapshots(traj, bb_skip, traj.states.front());
      wls::PodResult pod = wls::pod_basis(S, bb_K, traj.states.front());
      wls::save_matrix(bb_out, pod.basis.V);
      wls::write_key_values(bb_out + ".meta",
                            {{"K", std::to_string(bb_K)},
                             {"energy", wls::format_double(pod.energy)},
                             {"source", bb_in}});
      std::printf("K=%d energy=%.12g\n", bb_K, pod.energy);
    };
  });

  // build-sampling: greedy row selection from velocity snapshots.
  auto* bs = app.add_subcommand("build-sampling", "sampling rows from a trajectory");
  std::string bs_in, bs_out;
  int bs_rows = 8;
  bs->add_option("--input", bs_in, "trajectory file")->required();
  bs->add_option("--output", bs_out, "sampling rows file")->required();
  bs->add_option("--rows", bs_rows, "greedy pivot count")->capture_default_str();
  add_model_flags(bs, rc);
  bs->callback([&]() {
    action = [&]() {
      wls::Trajectory traj = wls::load_trajectory(bs_in);
      wls::Vec x0;
      wls::OdeModel model = wls::make_config_model(rc, x0);
      if (model.dim != traj.dim())
        throw wls::ConfigError("trajectory dimension does not match the model flags");
      wls::Mat F(model.dim, traj.states.size());
      for (std::size_t i = 0; i < traj.states.size(); ++i)
        F.col(i) = model.f(traj.states[i], traj.grid[i]);
      auto weighting = wls::qsample(F, bs_rows, wls::dofs_per_cell(rc));
      wls::Vec rows(weighting.rows.size());
      for (std::size_t i = 0; i < weighting.rows.size(); ++i) rows(i) = weighting.rows[i];
      wls::save_vector(bs_out, rows);
      std::printf("rows=%d\n", weighting.sample_count());
    };
  });

  // run-rom: one configured reduced-order run.
  auto* run = app.add_subcommand("run-rom", "run a reduced-order model");
  add_model_flags(run, rc);
  add_time_flags(run, rc);
  add_rom_flags(run, rc);
  std::string run_out = rc.output;
  run->add_option("--output", run_out, "reconstructed trajectory file");
  run->callback([&]() {
    action = [&]() {
      rc.output = run_out;
      wls::RunOutput out = wls::run_single(rc);
      print_metrics(out.metrics);
      if (!rc.output.empty())
        wls::save_trajectory(rc.output, out.full_trajectory,
                             {{"model", rc.model}, {"method", rc.method}});
      if (out.metrics.failed)
        rc_exit = looks_physical(out.metrics.message) ? kExitPhysical : kExitSolver;
      else if (!out.metrics.converged)
        rc_exit = kExitSolver;
    };
  });

  // sweep: grid of (window, dt) runs emitting CSV.
  auto* sw = app.add_subcommand("sweep", "benchmark sweep over windows and time steps");
  add_model_flags(sw, rc);
  add_time_flags(sw, rc);
  add_rom_flags(sw, rc);
  wls::SweepConfig sweep;
  std::string sw_out;
  sw->add_option("--windows", sweep.windows, "window spans to sweep")->delimiter(',');
  sw->add_option("--dts", sweep.dts, "time steps to sweep")->delimiter(',');
  sw->add_option("--output", sw_out, "CSV destination (default stdout)");
  sw->callback([&]() {
    action = [&]() {
      sweep.base = rc;
      const std::string csv = wls::run_benchmark_sweep(sweep);
      if (sw_out.empty())
        std::fputs(csv.c_str(), stdout);
      else
        write_text(sw_out, csv);
    };
  });

  // report: metrics for a stored trajectory.
  auto* rep = app.add_subcommand("report", "inspect a stored trajectory");
  std::string rep_in, rep_ref;
  rep->add_option("--input", rep_in, "trajectory file")->required();
  rep->add_option("--reference", rep_ref, "reference trajectory for error metrics");
  rep->callback([&]() {
    action = [&]() {
      wls::Trajectory traj = wls::load_trajectory(rep_in);
      std::printf("nodes=%zu\n", traj.grid.size());
      std::printf("dim=%d\n", traj.dim());
      std::printf("t0=%.12g\n", traj.grid.front());
      std::printf("t1=%.12g\n", traj.grid.back());
      if (!rep_ref.empty()) {
        wls::Trajectory ref = wls::load_trajectory(rep_ref);
        std::printf("error=%.12g\n", wls::space_time_error(traj, ref, traj.grid));
        std::printf("error_normalized=%.12g\n",
                    wls::space_time_error_normalized(traj, ref, traj.grid));
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (action) action();
  } catch (const wls::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return rc_exit;
}
