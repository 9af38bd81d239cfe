#pragma once

// Experiment runner: operation-count model, error metrics, timed off-line and
// on-line stages and CSV emission.

#include "swerom/deim.hpp"
#include "swerom/rom.hpp"
#include "swerom/solver.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace swerom::bench {

// On-line operations for one projected degree-p polynomial nonlinearity:
//   standard-pod   p k n + (p-1) n + k n
//   pod-deim       p k m + (p-1) m + k m
//   tensorial-pod  3 k^(p+1) - k
std::uint64_t flop_count(rom::RomMode method, std::uint64_t n, std::uint64_t k,
                         std::optional<std::uint64_t> m, unsigned p);

struct FlopConfig {
  std::uint64_t n, k, m;
  unsigned p;
};
// The (n, k, m, p) configurations tabulated by the CLI `flops` verb.
inline constexpr std::array<FlopConfig, 8> kFlopTable{{{1000, 10, 10, 2},
                                                       {1000, 10, 10, 3},
                                                       {1000, 10, 10, 4},
                                                       {10000, 30, 50, 2},
                                                       {10000, 30, 50, 3},
                                                       {100000, 50, 100, 2},
                                                       {100000, 50, 100, 3},
                                                       {100000, 50, 100, 4}}};

// (1/Nt) sum_t ||full(:,t) - rom(:,t)||_2 / ||full(:,t)||_2
Scalar relative_error_series(const Matrix& full, const Matrix& rom);

// sqrt((1/n) sum_j (full_j - rom_j)^2)
Scalar rmse_final(const Vector& full, const Vector& rom);

// Per-variable POD bases sharing one mode count: `k` when given, otherwise
// the largest energy-selected count over u, v and phi.
std::array<pod::PodBasis, 3> build_state_bases(const solver::SnapshotSet& snaps,
                                               std::optional<Index> k, Scalar gamma,
                                               bool centering);

enum class Window { H24, H3, Custom };

struct ExperimentConfig {
  std::vector<std::pair<Index, Index>> grids{{31, 23}};
  Window window = Window::H3;
  solver::SolverConfig solver;  // dt and Nt follow the window unless Custom
  std::optional<Index> k = 20;  // fixed mode count; energy selection when empty
  Scalar gamma = 0.99;
  std::vector<Index> m_list{70};
  std::vector<std::string> modes{"full", "standard-pod", "tensorial-pod", "pod-deim"};
  std::uint64_t seed = 1;
  std::string out_dir;  // no files written when empty
  bool timed_serial = true;
  bool centering = true;
  swe::GrammeltvedtForm initial_height = swe::GrammeltvedtForm::Standard;
  int timing_repeats = 200;  // nonlinear-term micro-benchmark evaluations

  void apply_window();
  void validate() const;
};

struct OfflineTimes {
  double snapshots = 0;  // full-model run that produced the snapshots
  double state_svd = 0;
  double nonlinear_svd = 0;
  double deim_points = 0;
  double tensor_coefficients = 0;
  double deim_coefficients = 0;
  // Sum of the mode's own items; snapshot generation is shared and excluded.
  double total() const {
    return state_svd + nonlinear_svd + deim_points + tensor_coefficients + deim_coefficients;
  }
};

struct RunReport {
  Index Nx = 0, Ny = 0, n = 0;
  std::string mode;
  Index k = 0;
  Index m = 0;
  std::string status = "ok";
  OfflineTimes offline;
  double online = 0;
  double online_nonlinear = 0;
  double online_jacobian = 0;
  double end_to_end = 0;
  double nonlinear_eval = 0;  // seconds per evaluation of all six terms
  std::array<Scalar, 3> rel_error{};
  std::array<Scalar, 3> rmse{};
  std::uint64_t flops = 0;

  bool ok() const { return status == "ok"; }
};

struct SpectrumSeries {
  Index Nx = 0, Ny = 0;
  std::string series;  // u, v, phi, F11 .. F32
  Vector lambda;
};

struct DeimPointRecord {
  Index Nx = 0, Ny = 0, m = 0;
  Term term = Term::F11;
  std::vector<Index> points;
  Vector max_abs;  // per-node max over time
};

struct ExperimentResult {
  std::vector<RunReport> reports;
  std::vector<SpectrumSeries> spectra;
  std::vector<DeimPointRecord> deim_points;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

enum class PlotFormat { Csv, SvgLine };

// Writes run_report.csv, spectra.csv, deim_points.csv, timing_vs_n.csv (Csv)
// or timing_vs_n.svg and spectra.svg (SvgLine) into `dir`.
void emit_plot_data(const ExperimentResult& result, PlotFormat format, const std::string& dir);

// Reads a run_report.csv written by emit_plot_data (timing and error columns).
std::vector<RunReport> read_run_report(const std::string& path);
std::vector<SpectrumSeries> read_spectra(const std::string& path);

}  // namespace swerom::bench
