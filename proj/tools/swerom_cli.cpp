// swerom: full-model runs, reduced-model construction and benchmarks.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

#include "swerom/bench.hpp"
#include "swerom/config.hpp"
#include "swerom/deim.hpp"
#include "swerom/pod.hpp"
#include "swerom/rom.hpp"
#include "swerom/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace swerom;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Values collected from the command line; unset ones leave the config alone.
struct Overrides {
  std::string config_path;
  std::vector<std::string> grids;
  std::string window;
  std::optional<double> dt;
  std::optional<Index> nt;
  std::optional<Index> k;
  std::optional<double> gamma;
  std::vector<Index> m;
  std::vector<std::string> modes;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool timed_serial = false;
  bool timed_parallel = false;
  bool no_centering = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file");
  cmd->add_option("--grid", o.grids, "grid size NxxNy, e.g. 31x23 (repeatable for bench)");
  cmd->add_option("--window", o.window, "forecast window: 24h (dt=960 s) or 3h (dt=120 s)");
  cmd->add_option("--dt", o.dt, "time step in seconds (overrides the window)");
  cmd->add_option("--nt", o.nt, "number of time steps (overrides the window)");
  cmd->add_option("--out", o.out, "output directory");
}

void add_rom_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--k", o.k, "POD modes per variable");
  cmd->add_option("--gamma", o.gamma, "energy threshold used to choose k when --k is absent");
  cmd->add_option("--m", o.m, "DEIM interpolation points (repeatable for bench)");
  cmd->add_option("--mode", o.modes,
                  "full, standard-pod, tensorial-pod or pod-deim (repeatable for bench)");
  cmd->add_flag("--no-centering", o.no_centering, "build bases without subtracting the mean");
}

bench::ExperimentConfig resolve(const Overrides& o) {
  bench::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = config::load_file(cfg, o.config_path);
  if (!o.grids.empty()) {
    cfg.grids.clear();
    for (const auto& g : o.grids) cfg.grids.push_back(config::parse_grid(g));
  }
  if (!o.window.empty()) cfg.window = config::parse_window(o.window);
  if (o.dt || o.nt) {
    cfg.apply_window();
    cfg.window = bench::Window::Custom;
    if (o.dt) cfg.solver.dt = *o.dt;
    if (o.nt) cfg.solver.Nt = *o.nt;
  }
  if (o.gamma) {
    cfg.gamma = *o.gamma;
    cfg.k.reset();
  }
  if (o.k) cfg.k = *o.k;
  if (!o.m.empty()) cfg.m_list = o.m;
  if (!o.modes.empty()) cfg.modes = o.modes;
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.timed_serial) cfg.timed_serial = true;
  if (o.timed_parallel) cfg.timed_serial = false;
  if (o.no_centering) cfg.centering = false;
  cfg.apply_window();
  cfg.validate();
  return cfg;
}

fs::path require_out(const bench::ExperimentConfig& cfg) {
  if (cfg.out_dir.empty()) throw ConfigError("--out DIR is required");
  fs::create_directories(cfg.out_dir);
  return cfg.out_dir;
}

std::pair<Index, Index> single_grid(const bench::ExperimentConfig& cfg) {
  if (cfg.grids.size() != 1) throw ConfigError("this verb takes exactly one --grid");
  return cfg.grids.front();
}

rom::RomMode single_mode(const bench::ExperimentConfig& cfg) {
  if (cfg.modes.size() != 1) throw ConfigError("this verb takes exactly one --mode");
  if (cfg.modes.front() == "full") throw ConfigError("--mode full is not a reduced model");
  return rom::parse_rom_mode(cfg.modes.front());
}

Index single_m(const bench::ExperimentConfig& cfg) {
  if (cfg.m_list.size() != 1) throw ConfigError("this verb takes exactly one --m");
  return cfg.m_list.front();
}

struct Setup {
  swe::Grid grid;
  swe::DifferenceOperators ops;
  Vector f;
  swe::FieldState ic;
};

Setup make_setup(Index nx, Index ny, const bench::ExperimentConfig& cfg) {
  const swe::PhysicalConstants consts;
  Setup s;
  s.grid = swe::build_grid(nx, ny, consts);
  s.ops = swe::build_operators(s.grid);
  s.f = swe::coriolis(s.grid, consts);
  s.ic = swe::initial_state(s.grid, s.ops, s.f, consts, cfg.initial_height);
  return s;
}

std::string grid_name(Index nx, Index ny) { return std::to_string(nx) + "x" + std::to_string(ny); }

int cmd_run_full(const Overrides& o) {
  const auto cfg = resolve(o);
  const auto dir = require_out(cfg);
  const auto [nx, ny] = single_grid(cfg);
  const Setup s = make_setup(nx, ny, cfg);
  const auto run = solver::run_full(s.ic, cfg.solver, s.grid, s.ops, s.f);
  solver::save_snapshots(run.snapshots, (dir / "snapshots.bin").string());

  int max_iters = 0;
  for (const auto& e : run.log) max_iters = std::max({max_iters, e.iterations[0], e.iterations[1]});
  std::printf("grid %s  n=%ld  dt=%g s  Nt=%ld\n", grid_name(nx, ny).c_str(),
              static_cast<long>(s.grid.n), cfg.solver.dt, static_cast<long>(cfg.solver.Nt));
  std::printf("CFL indicator %.4f%s\n", run.cfl,
              run.cfl_exceeded ? "  (above the largest tested value)" : "");
  std::printf("max quasi-Newton iterations per half-step %d\n", max_iters);
  std::printf("time: assembly %.6f  factorization %.6f  solve %.6f  recording %.6f  total %.6f s\n",
              run.timings.assembly, run.timings.factorization, run.timings.solve,
              run.timings.recording, run.timings.total);
  std::printf("wrote %s\n", (dir / "snapshots.bin").c_str());
  return 0;
}

solver::SnapshotSet obtain_snapshots(const std::string& path, const bench::ExperimentConfig& cfg) {
  if (!path.empty()) return solver::load_snapshots(path);
  const auto [nx, ny] = single_grid(cfg);
  const Setup s = make_setup(nx, ny, cfg);
  return solver::run_full(s.ic, cfg.solver, s.grid, s.ops, s.f).snapshots;
}

// A reduced-model directory holds rom.json, basis_{u,v,phi}.bin, tensors.bin
// and, for pod-deim, deim_F11.bin .. deim_F32.bin.
int cmd_build_rom(const Overrides& o, const std::string& snap_path) {
  const auto cfg = resolve(o);
  const auto dir = require_out(cfg);
  const auto mode = single_mode(cfg);
  const auto snaps = obtain_snapshots(snap_path, cfg);
  if (!snaps.has_states || !snaps.has_nonlinear)
    throw ConfigError("snapshot file must contain state and nonlinear-term snapshots");

  const auto t0 = std::chrono::steady_clock::now();
  auto bases = bench::build_state_bases(snaps, cfg.k, cfg.gamma, cfg.centering);
  for (auto var : kVariables)
    pod::save_basis(bases[index_of(var)],
                    (dir / ("basis_" + std::string(name_of(var)) + ".bin")).string());
  const swe::Grid grid = swe::build_grid(snaps.Nx, snaps.Ny, snaps.L, snaps.D);
  const swe::PhysicalConstants consts;
  const rom::RomSpace space =
      rom::make_space(std::move(bases), swe::build_operators(grid), swe::coriolis(grid, consts));

  Index m = 0;
  rom::TensorCoefficients tc;
  if (mode == rom::RomMode::PodDeim) {
    m = single_m(cfg);
    const auto db = deim::build_deim_operators(snaps.nonlinear, space, m);
    for (auto t : kTerms)
      deim::save_operator(db.ops[index_of(t)],
                          (dir / ("deim_" + std::string(name_of(t)) + ".bin")).string());
    tc = deim::deim_tensors(db.ops, space);
  } else {
    tc = rom::build_tensor_coefficients(space);
  }
  rom::save_tensors(tc, (dir / "tensors.bin").string());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json manifest{{"Nx", snaps.Nx},          {"Ny", snaps.Ny},
                          {"L", snaps.L},            {"D", snaps.D},
                          {"mode", rom::name_of(mode)}, {"k", space.k()},
                          {"m", m},                  {"centering", cfg.centering}};
  std::ofstream(dir / "rom.json") << manifest.dump(2) << '\n';
  std::printf("built %s  k=%ld%s  in %.6f s -> %s\n", std::string(rom::name_of(mode)).c_str(),
              static_cast<long>(space.k()),
              m ? (" m=" + std::to_string(m)).c_str() : "", secs, dir.c_str());
  return 0;
}

int cmd_run_rom(const Overrides& o, const std::string& rom_dir, const std::string& snap_path) {
  auto cfg = resolve(o);
  const auto out = require_out(cfg);
  const fs::path rd(rom_dir);
  nlohmann::json manifest;
  {
    std::ifstream in(rd / "rom.json");
    if (!in) throw ConfigError("no rom.json in '" + rom_dir + "'");
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("rom.json: " + std::string(e.what()));
    }
  }
  const auto mode = rom::parse_rom_mode(manifest.at("mode").get<std::string>());
  const Index nx = manifest.at("Nx").get<Index>(), ny = manifest.at("Ny").get<Index>();
  const Setup s = make_setup(nx, ny, cfg);

  std::array<pod::PodBasis, 3> bases;
  for (auto var : kVariables)
    bases[index_of(var)] =
        pod::load_basis((rd / ("basis_" + std::string(name_of(var)) + ".bin")).string());
  const rom::RomSpace space = rom::make_space(std::move(bases), s.ops, s.f);
  const rom::TensorCoefficients tc = rom::load_tensors((rd / "tensors.bin").string());
  if (tc.k != space.k()) throw DimensionError("tensors.bin and the bases disagree on k");

  std::array<deim::DeimOperator, 6> ops;
  std::unique_ptr<rom::NonlinearEvaluator> eval;
  switch (mode) {
    case rom::RomMode::StandardPod:
      eval = std::make_unique<rom::StandardPodEvaluator>(space);
      break;
    case rom::RomMode::TensorialPod:
      eval = std::make_unique<rom::TensorialEvaluator>(tc);
      break;
    case rom::RomMode::PodDeim:
      for (auto t : kTerms)
        ops[index_of(t)] =
            deim::load_operator((rd / ("deim_" + std::string(name_of(t)) + ".bin")).string());
      eval = std::make_unique<deim::DeimEvaluator>(ops);
      break;
  }

  const auto traj = rom::run_rom(rom::project_initial(s.ic, space), *eval, tc, cfg.solver);
  const auto lifted = rom::lift_trajectory(traj, space);

  bench::RunReport r;
  r.Nx = nx;
  r.Ny = ny;
  r.n = s.grid.n;
  r.mode = std::string(rom::name_of(mode));
  r.k = space.k();
  r.m = manifest.value("m", Index{0});
  r.online = traj.timings.total;
  r.online_nonlinear = traj.timings.nonlinear;
  r.online_jacobian = traj.timings.jacobian;
  r.end_to_end = traj.timings.total;
  r.flops = bench::flop_count(mode, static_cast<std::uint64_t>(r.n),
                              static_cast<std::uint64_t>(r.k),
                              static_cast<std::uint64_t>(std::max<Index>(r.m, 1)), 2);
  if (!snap_path.empty()) {
    const auto snaps = solver::load_snapshots(snap_path);
    if (snaps.Nx != nx || snaps.Ny != ny)
      throw DimensionError("reference snapshots were computed on a different grid");
    for (auto var : kVariables) {
      const Matrix& full = snaps.state(var);
      const Matrix& approx = lifted[index_of(var)];
      r.rel_error[index_of(var)] = bench::relative_error_series(full, approx);
      r.rmse[index_of(var)] = bench::rmse_final(full.col(full.cols() - 1), approx.col(approx.cols() - 1));
    }
  }
  bench::ExperimentResult res;
  res.reports.push_back(r);
  bench::emit_plot_data(res, bench::PlotFormat::Csv, out.string());

  {
    std::ofstream fs_out(out / "final_state.csv");
    fs_out << "node,i,j,u,v,phi\n";
    fs_out.precision(17);
    for (Index node = 0; node < s.grid.n; ++node)
      fs_out << node << ',' << node % nx << ',' << node / nx << ',' << lifted[0](node, lifted[0].cols() - 1)
             << ',' << lifted[1](node, lifted[1].cols() - 1) << ','
             << lifted[2](node, lifted[2].cols() - 1) << '\n';
  }
  std::printf("%s on %s: %ld steps in %.6f s (nonlinear %.6f s, jacobian %.6f s)\n",
              r.mode.c_str(), grid_name(nx, ny).c_str(), static_cast<long>(cfg.solver.Nt),
              r.online, r.online_nonlinear, r.online_jacobian);
  if (!snap_path.empty())
    std::printf("relative error u %.3e  v %.3e  phi %.3e\n", r.rel_error[0], r.rel_error[1],
                r.rel_error[2]);
  return 0;
}

int cmd_bench(const Overrides& o) {
  const auto cfg = resolve(o);
  require_out(cfg);
  const auto res = bench::run_experiment(cfg);
  bool all_ok = true;
  std::printf("%-9s %-14s %4s %4s %12s %12s %10s %10s %10s  %s\n", "grid", "mode", "k", "m",
              "offline_s", "online_s", "err_u", "err_v", "err_phi", "status");
  for (const auto& r : res.reports) {
    all_ok = all_ok && r.ok();
    std::printf("%-9s %-14s %4ld %4ld %12.6f %12.6f %10.3e %10.3e %10.3e  %s\n",
                grid_name(r.Nx, r.Ny).c_str(), r.mode.c_str(), static_cast<long>(r.k),
                static_cast<long>(r.m), r.offline.total(), r.online, r.rel_error[0],
                r.rel_error[1], r.rel_error[2], r.status.c_str());
  }
  std::printf("wrote CSV files to %s\n", cfg.out_dir.c_str());
  return all_ok ? 0 : kExitNumerical;
}

int cmd_flops(const std::string& out) {
  std::string text = "n,k,m,p,standard_pod,pod_deim,tensorial_pod\n";
  for (const auto& c : bench::kFlopTable) {
    text += std::to_string(c.n) + ',' + std::to_string(c.k) + ',' + std::to_string(c.m) + ',' +
            std::to_string(c.p) + ',' +
            std::to_string(bench::flop_count(rom::RomMode::StandardPod, c.n, c.k, c.m, c.p)) + ',' +
            std::to_string(bench::flop_count(rom::RomMode::PodDeim, c.n, c.k, c.m, c.p)) + ',' +
            std::to_string(bench::flop_count(rom::RomMode::TensorialPod, c.n, c.k, c.m, c.p)) +
            '\n';
  }
  std::fputs(text.c_str(), stdout);
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream(fs::path(out) / "flops.csv") << text;
  }
  return 0;
}

int cmd_export_plots(const std::string& in, const std::string& out) {
  bench::ExperimentResult res;
  res.reports = bench::read_run_report((fs::path(in) / "run_report.csv").string());
  const fs::path spectra = fs::path(in) / "spectra.csv";
  if (fs::exists(spectra)) res.spectra = bench::read_spectra(spectra.string());
  bench::emit_plot_data(res, bench::PlotFormat::SvgLine, out.empty() ? in : out);
  std::printf("wrote timing_vs_n.svg and spectra.svg to %s\n", (out.empty() ? in : out).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shallow water full and reduced-order models"};
  app.require_subcommand(1);
  Overrides o;
  std::string snapshots, rom_dir, in_dir, flops_out;

  auto* run_full = app.add_subcommand("run-full", "integrate the full model and save snapshots");
  add_common(run_full, o);

  auto* build_rom = app.add_subcommand("build-rom", "build POD bases and reduced coefficients");
  add_common(build_rom, o);
  add_rom_options(build_rom, o);
  build_rom->add_option("--snapshots", snapshots,
                        "snapshot file from run-full (the full model is run when omitted)");

  auto* run_rom = app.add_subcommand("run-rom", "integrate a reduced model built by build-rom");
  add_common(run_rom, o);
  run_rom->add_option("--rom", rom_dir, "directory written by build-rom")->required();
  run_rom->add_option("--snapshots", snapshots, "reference snapshots for error metrics");

  auto* bench_cmd = app.add_subcommand("bench", "full pipeline over grids, modes and m values");
  add_common(bench_cmd, o);
  add_rom_options(bench_cmd, o);
  bench_cmd->add_option("--seed", o.seed, "seed of the timing micro-benchmark states");
  auto* serial = bench_cmd->add_flag("--timed-serial", o.timed_serial,
                                     "run modes one at a time so timings are not contended");
  bench_cmd->add_flag("--parallel", o.timed_parallel, "run modes concurrently")->excludes(serial);

  auto* flops = app.add_subcommand("flops", "print the on-line operation-count table");
  flops->add_option("--out", flops_out, "also write flops.csv into this directory");

  auto* plots = app.add_subcommand("export-plots", "render SVG charts from bench CSV output");
  plots->add_option("--in", in_dir, "directory holding run_report.csv and spectra.csv")->required();
  plots->add_option("--out", o.out, "output directory (defaults to --in)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_full) return cmd_run_full(o);
    if (*build_rom) return cmd_build_rom(o, snapshots);
    if (*run_rom) return cmd_run_rom(o, rom_dir, snapshots);
    if (*bench_cmd) return cmd_bench(o);
    if (*flops) return cmd_flops(flops_out);
    if (*plots) return cmd_export_plots(in_dir, o.out);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return 0;
}
