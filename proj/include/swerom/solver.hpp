#pragma once

// Alternating-direction implicit integration of the full model.
//
// One step is two implicit half-steps of length dt/2 (Peaceman-Rachford form):
//
//   w*      = w^n - dt/2 [X(w*) + Y(w^n)    + C w*/2 + C w^n/2]
//   w^{n+1} = w*  - dt/2 [X(w*) + Y(w^{n+1}) + C w*/2 + C w^{n+1}/2]
//
// X and Y collect the x- and y-derivative terms (F11, F21, F31 and F12, F22,
// F32) and C is the Coriolis coupling, split evenly between the implicit and
// explicit sides of each half-step. Each half-step is implicit in one direction
// with the other frozen at its latest value. The linearized step is
// non-amplifying at any CFL number. Each half-step solves the coupled 3n system
// by a quasi-Newton (chord) iteration whose Jacobian is refactorized on a fixed
// step cadence.

#include "swerom/swe.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace swerom::solver {

enum class LinearSolverKind { DirectSparse, IterativeRestarted };

struct SolverConfig {
  Scalar dt = 120.0;
  Index Nt = 91;
  Scalar newton_tol = 1e-10;
  int newton_max_iters = 20;
  int lu_refresh_every = 6;
  LinearSolverKind linear_solver = LinearSolverKind::DirectSparse;
  // Restart length and tolerance of the iterative option.
  int gmres_restart = 50;
  Scalar gmres_tol = 1e-13;
  // Only used for the CFL report (h = phi^2 / 4g).
  Scalar gravity = 10.0;

  void validate() const;
};

struct Record {
  bool states = true;
  bool nonlinear = true;
};

struct SnapshotSet {
  Index Nx = 0;
  Index Ny = 0;
  Scalar L = 0;
  Scalar D = 0;
  Scalar dt = 0;
  std::vector<Scalar> times;
  bool has_states = false;
  bool has_nonlinear = false;
  std::array<Matrix, 3> states;     // indexed by Variable, n x Nt
  std::array<Matrix, 6> nonlinear;  // indexed by Term, n x Nt

  Index n() const { return Nx * Ny; }
  Index count() const { return static_cast<Index>(times.size()); }
  const Matrix& state(Variable v) const { return states[index_of(v)]; }
  const Matrix& term(Term t) const { return nonlinear[index_of(t)]; }
  swe::FieldState state_at(Index column) const;
};

struct PhaseTimings {
  double assembly = 0;       // Jacobian assembly [s]
  double factorization = 0;  // LU / preconditioner setup [s]
  double solve = 0;          // residual evaluation and back-substitution [s]
  double recording = 0;      // snapshot and nonlinear-term capture [s]
  double total = 0;
};

struct StepLog {
  Index step = 0;
  std::array<int, 2> iterations{};        // per half-step
  std::array<Scalar, 2> final_residual{};  // relative, per half-step
  std::array<bool, 2> refactorized{};
};

class LinearSolver {
 public:
  virtual ~LinearSolver() = default;
  virtual void factorize(const SparseMatrix& a) = 0;
  virtual Vector solve(const Vector& rhs) const = 0;
};

std::unique_ptr<LinearSolver> make_linear_solver(const SolverConfig& cfg);

class AdiSolver {
 public:
  AdiSolver(const swe::Grid& grid, const swe::DifferenceOperators& ops, Vector coriolis,
            SolverConfig cfg);

  // Advances one full step. Steps are counted internally so the factorization
  // cadence survives across calls.
  swe::FieldState step(const swe::FieldState& state);

  const std::vector<StepLog>& log() const { return log_; }
  const PhaseTimings& timings() const { return timings_; }
  const SolverConfig& config() const { return cfg_; }

  // Half-step residual and Jacobian, exposed for testing.
  Vector residual(Direction implicit_dir, const Vector& w, const Vector& w_start,
                  const Vector& explicit_terms) const;
  SparseMatrix jacobian(Direction implicit_dir, const Vector& w) const;
  Vector directional_terms(Direction d, const Vector& w) const;
  Vector coriolis_terms(const Vector& w) const;

 private:
  Vector half_step(Direction implicit_dir, const Vector& w_start, int half);

  swe::Grid grid_;
  const swe::DifferenceOperators& ops_;
  Vector f_;
  SolverConfig cfg_;
  std::array<std::unique_ptr<LinearSolver>, 2> lu_;
  std::array<bool, 2> factored_{false, false};
  Index step_index_ = 0;
  std::vector<StepLog> log_;
  PhaseTimings timings_;
};

Vector stack(const swe::FieldState& s);
swe::FieldState unstack(const Vector& w, Index n, Scalar time);

struct FullRun {
  swe::FieldState final_state;
  SnapshotSet snapshots;
  PhaseTimings timings;
  std::vector<StepLog> log;
  Scalar cfl = 0;
  bool cfl_exceeded = false;
};

FullRun run_full(const swe::FieldState& ic, const SolverConfig& cfg, const swe::Grid& grid,
                 const swe::DifferenceOperators& ops, const Vector& f, Record record = {});

// Binary snapshot file: see docs/file_formats.md.
void save_snapshots(const SnapshotSet& set, const std::string& path);
SnapshotSet load_snapshots(const std::string& path);

}  // namespace swerom::solver
