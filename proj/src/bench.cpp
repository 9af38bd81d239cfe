#include "swerom/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <future>
#include <limits>
#include <memory>
#include <random>

namespace swerom::bench {

namespace {

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t ipow(std::uint64_t base, unsigned e) {
  std::uint64_t r = 1;
  while (e--) r *= base;
  return r;
}

}  // namespace

std::uint64_t flop_count(rom::RomMode method, std::uint64_t n, std::uint64_t k,
                         std::optional<std::uint64_t> m, unsigned p) {
  if (n < 1 || k < 1) throw ConfigError("flop_count: n and k must be at least 1");
  if (p < 2) throw ConfigError("flop_count: polynomial degree must be at least 2");
  switch (method) {
    case rom::RomMode::StandardPod:
      return p * k * n + (p - 1) * n + k * n;
    case rom::RomMode::PodDeim: {
      if (!m || *m < 1) throw ConfigError("flop_count: pod-deim needs the number of DEIM points m");
      const std::uint64_t mm = *m;
      return p * k * mm + (p - 1) * mm + k * mm;
    }
    case rom::RomMode::TensorialPod:
      return 3 * ipow(k, p + 1) - k;
  }
  return 0;
}

Scalar relative_error_series(const Matrix& full, const Matrix& rom) {
  if (full.rows() != rom.rows() || full.cols() != rom.cols())
    throw DimensionError("relative_error_series: trajectories differ in shape");
  if (full.cols() == 0) throw DimensionError("relative_error_series: empty trajectory");
  Scalar acc = 0;
  for (Index t = 0; t < full.cols(); ++t) {
    const Scalar denom = full.col(t).norm();
    if (!(denom > 0))
      throw NumericalError("relative_error_series: full solution has zero norm at column " +
                           std::to_string(t));
    acc += (full.col(t) - rom.col(t)).norm() / denom;
  }
  return acc / static_cast<Scalar>(full.cols());
}

Scalar rmse_final(const Vector& full, const Vector& rom) {
  if (full.size() != rom.size() || full.size() == 0)
    throw DimensionError("rmse_final: fields differ in length");
  return std::sqrt((full - rom).squaredNorm() / static_cast<Scalar>(full.size()));
}

std::array<pod::PodBasis, 3> build_state_bases(const solver::SnapshotSet& snaps,
                                               std::optional<Index> k, Scalar gamma,
                                               bool centering) {
  if (!snaps.has_states) throw ConfigError("snapshot set has no state snapshots");
  Index kk = 0;
  if (k) {
    kk = *k;
  } else {
    for (auto var : kVariables)
      kk = std::max(kk, pod::build_pod(snaps.state(var), pod::ModeSelector::energy(gamma), centering).k);
  }
  std::array<pod::PodBasis, 3> bases;
  for (auto var : kVariables) {
    bases[index_of(var)] = pod::build_pod(snaps.state(var), pod::ModeSelector::fixed(kk), centering);
    bases[index_of(var)].tag = var;
  }
  return bases;
}

void ExperimentConfig::apply_window() {
  switch (window) {
    case Window::H24:
      solver.dt = 960.0;
      solver.Nt = 91;
      break;
    case Window::H3:
      solver.dt = 120.0;
      solver.Nt = 91;
      break;
    case Window::Custom:
      break;
  }
}

void ExperimentConfig::validate() const {
  if (grids.empty()) throw ConfigError("no grid sizes configured");
  if (modes.empty()) throw ConfigError("no modes configured");
  for (const auto& m : modes)
    if (m != "full") rom::parse_rom_mode(m);
  if (k && *k < 1) throw ConfigError("k must be at least 1");
  if (!k && (gamma <= 0 || gamma > 1)) throw ConfigError("gamma must lie in (0, 1]");
  for (Index m : m_list)
    if (m < 1) throw ConfigError("DEIM point counts must be at least 1");
  for (const auto& [nx, ny] : grids)
    if (nx < 3 || ny < 3) throw ConfigError("grid dimensions must be at least 3");
  if (timing_repeats < 1) throw ConfigError("timing_repeats must be at least 1");
  solver.validate();
}

namespace {

// Minimum over batches of the mean time per call. Batches are sized to last
// at least 2 ms so clock resolution and one-off stalls do not dominate; at
// least `repeats` calls and 25 batches are timed.
template <typename F>
double time_per_call(F&& f, int repeats) {
  constexpr int kBatches = 25;
  int batch = 1;
  for (;;) {
    auto t0 = Clock::now();
    for (int i = 0; i < batch; ++i) f();
    if (seconds_since(t0) >= 2e-3 || batch >= (1 << 20)) break;
    batch *= 2;
  }
  batch = std::max(batch, (repeats + kBatches - 1) / kBatches);
  double best = std::numeric_limits<double>::infinity();
  for (int b = 0; b < kBatches; ++b) {
    auto t0 = Clock::now();
    for (int i = 0; i < batch; ++i) f();
    best = std::min(best, seconds_since(t0) / batch);
  }
  return best;
}

rom::ReducedState random_state(Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> dist(0.0, 1.0);
  rom::ReducedState xt;
  for (auto& c : xt.coeffs) {
    c.resize(k);
    for (Index i = 0; i < k; ++i) c[i] = dist(rng);
  }
  return xt;
}

struct GridContext {
  swe::Grid grid;
  swe::DifferenceOperators ops;
  Vector f;
  swe::FieldState ic;
  solver::FullRun full;
  double snapshot_seconds = 0;
};

struct ModeOutcome {
  RunReport report;
  std::optional<std::vector<DeimPointRecord>> points;
};

ModeOutcome run_mode(const GridContext& ctx, const ExperimentConfig& cfg, rom::RomMode mode,
                     Index m) {
  ModeOutcome out;
  RunReport& r = out.report;
  r.Nx = ctx.grid.Nx;
  r.Ny = ctx.grid.Ny;
  r.n = ctx.grid.n;
  r.mode = std::string(rom::name_of(mode));
  r.m = mode == rom::RomMode::PodDeim ? m : 0;
  r.offline.snapshots = ctx.snapshot_seconds;
  try {
    const auto e2e0 = Clock::now();
    auto t0 = Clock::now();
    auto bases = build_state_bases(ctx.full.snapshots, cfg.k, cfg.gamma, cfg.centering);
    const Index k = bases[0].k;
    r.k = k;
    r.offline.state_svd = seconds_since(t0);

    t0 = Clock::now();
    const rom::RomSpace space = rom::make_space(std::move(bases), ctx.ops, ctx.f);
    rom::TensorCoefficients tc;
    std::optional<deim::DeimBuild> db;
    if (mode == rom::RomMode::PodDeim) {
      r.offline.tensor_coefficients = seconds_since(t0);
      db = deim::build_deim_operators(ctx.full.snapshots.nonlinear, space, m);
      r.offline.nonlinear_svd = db->svd_seconds;
      r.offline.deim_points = db->points_seconds;
      r.offline.deim_coefficients = db->coefficient_seconds;
      t0 = Clock::now();
      tc = deim::deim_tensors(db->ops, space);
      r.offline.tensor_coefficients += seconds_since(t0);
    } else {
      tc = rom::build_tensor_coefficients(space);
      r.offline.tensor_coefficients = seconds_since(t0);
    }

    std::unique_ptr<rom::NonlinearEvaluator> eval;
    switch (mode) {
      case rom::RomMode::StandardPod:
        eval = std::make_unique<rom::StandardPodEvaluator>(space);
        break;
      case rom::RomMode::TensorialPod:
        eval = std::make_unique<rom::TensorialEvaluator>(tc);
        break;
      case rom::RomMode::PodDeim:
        eval = std::make_unique<deim::DeimEvaluator>(db->ops);
        break;
    }

    const rom::ReducedState x0 = rom::project_initial(ctx.ic, space);
    const rom::RomTrajectory traj = rom::run_rom(x0, *eval, tc, cfg.solver);
    r.online = traj.timings.total;
    r.online_nonlinear = traj.timings.nonlinear;
    r.online_jacobian = traj.timings.jacobian;
    r.end_to_end = seconds_since(e2e0);

    const auto lifted = rom::lift_trajectory(traj, space);
    for (auto var : kVariables) {
      const Matrix& full = ctx.full.snapshots.state(var);
      const Matrix& approx = lifted[index_of(var)];
      r.rel_error[index_of(var)] = relative_error_series(full, approx);
      r.rmse[index_of(var)] = rmse_final(full.col(full.cols() - 1), approx.col(approx.cols() - 1));
    }

    const auto xt = random_state(k, cfg.seed);
    Scalar sink = 0;
    r.nonlinear_eval = time_per_call(
        [&] {
          for (auto t : kTerms) sink += eval->term(t, xt)[0];
        },
        cfg.timing_repeats);
    static_cast<void>(sink);

    r.flops = flop_count(mode, static_cast<std::uint64_t>(ctx.grid.n),
                         static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(m > 0 ? m : 1),
                         2);

    if (db) {
      std::vector<DeimPointRecord> recs;
      for (auto t : kTerms) {
        DeimPointRecord rec;
        rec.Nx = ctx.grid.Nx;
        rec.Ny = ctx.grid.Ny;
        rec.m = m;
        rec.term = t;
        rec.points = db->ops[index_of(t)].points;
        rec.max_abs = deim::max_abs_over_time(ctx.full.snapshots.term(t));
        recs.push_back(std::move(rec));
      }
      out.points = std::move(recs);
    }
  } catch (const NonConvergenceError& e) {
    r.status = "nonconvergence: " + std::string(e.what());
  } catch (const Error& e) {
    r.status = "error: " + std::string(e.what());
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  cfg.apply_window();
  cfg.validate();
  const swe::PhysicalConstants consts;
  ExperimentResult result;

  for (const auto& [nx, ny] : cfg.grids) {
    GridContext ctx;
    ctx.grid = swe::build_grid(nx, ny, consts);
    ctx.ops = swe::build_operators(ctx.grid);
    ctx.f = swe::coriolis(ctx.grid, consts);
    ctx.ic = swe::initial_state(ctx.grid, ctx.ops, ctx.f, consts, cfg.initial_height);

    auto t0 = Clock::now();
    try {
      ctx.full = solver::run_full(ctx.ic, cfg.solver, ctx.grid, ctx.ops, ctx.f);
    } catch (const Error& e) {
      RunReport r;
      r.Nx = nx;
      r.Ny = ny;
      r.n = ctx.grid.n;
      r.mode = "full";
      r.status = std::string(dynamic_cast<const NonConvergenceError*>(&e) ? "nonconvergence: "
                                                                          : "error: ") +
                 e.what();
      result.reports.push_back(std::move(r));
      continue;
    }
    ctx.snapshot_seconds = seconds_since(t0);

    if (std::find(cfg.modes.begin(), cfg.modes.end(), "full") != cfg.modes.end()) {
      RunReport r;
      r.Nx = nx;
      r.Ny = ny;
      r.n = ctx.grid.n;
      r.mode = "full";
      r.online = ctx.full.timings.total;
      r.online_jacobian = ctx.full.timings.assembly + ctx.full.timings.factorization;
      r.end_to_end = ctx.snapshot_seconds;
      Scalar sink = 0;
      r.nonlinear_eval = time_per_call(
          [&] {
            for (auto t : kTerms) sink += swe::eval_nonlinear(t, ctx.ic, ctx.ops)[0];
          },
          std::max(5, cfg.timing_repeats / 10));
      static_cast<void>(sink);
      result.reports.push_back(std::move(r));
    }

    for (auto var : kVariables) {
      const Matrix& s = ctx.full.snapshots.state(var);
      const auto b = cfg.centering ? pod::center_snapshots(s).first : s;
      result.spectra.push_back({nx, ny, std::string(name_of(var)), pod::left_singular(b, 0).second});
    }
    for (auto t : kTerms)
      result.spectra.push_back(
          {nx, ny, std::string(name_of(t)), pod::left_singular(ctx.full.snapshots.term(t), 0).second});

    std::vector<std::pair<rom::RomMode, Index>> tasks;
    for (const auto& name : cfg.modes) {
      if (name == "full") continue;
      const auto mode = rom::parse_rom_mode(name);
      if (mode == rom::RomMode::PodDeim)
        for (Index m : cfg.m_list) tasks.emplace_back(mode, m);
      else
        tasks.emplace_back(mode, 0);
    }

    std::vector<ModeOutcome> outcomes;
    if (cfg.timed_serial) {
      for (const auto& [mode, m] : tasks) outcomes.push_back(run_mode(ctx, cfg, mode, m));
    } else {
      std::vector<std::future<ModeOutcome>> futures;
      for (const auto& [mode, m] : tasks)
        futures.push_back(std::async(std::launch::async, run_mode, std::cref(ctx), std::cref(cfg),
                                     mode, m));
      for (auto& fut : futures) outcomes.push_back(fut.get());
    }
    for (auto& o : outcomes) {
      result.reports.push_back(std::move(o.report));
      if (o.points)
        for (auto& rec : *o.points) result.deim_points.push_back(std::move(rec));
    }
  }

  if (!cfg.out_dir.empty()) emit_plot_data(result, PlotFormat::Csv, cfg.out_dir);
  return result;
}

}  // namespace swerom::bench
