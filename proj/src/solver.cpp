#include "swerom/solver.hpp"

#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <chrono>
#include <cmath>

namespace swerom::solver {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Direction other(Direction d) { return d == Direction::X ? Direction::Y : Direction::X; }

Term term_for(Variable eq, Direction d) {
  return static_cast<Term>(2 * index_of(eq) + static_cast<int>(d));
}

class DirectSparseSolver final : public LinearSolver {
 public:
  void factorize(const SparseMatrix& a) override {
    lu_.analyzePattern(a);
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success)
      throw SingularMatrixError("sparse LU factorization failed: " + lu_.lastErrorMessage());
  }
  Vector solve(const Vector& rhs) const override {
    Vector x = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success) throw NumericalError("sparse LU solve failed");
    return x;
  }

 private:
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
};

class RestartedGmresSolver final : public LinearSolver {
 public:
  RestartedGmresSolver(int restart, Scalar tol) {
    gmres_.set_restart(restart);
    gmres_.setTolerance(tol);
    gmres_.setMaxIterations(20 * restart);
  }
  void factorize(const SparseMatrix& a) override {
    a_ = a;
    gmres_.compute(a_);
    if (gmres_.info() != Eigen::Success)
      throw SingularMatrixError("incomplete LU preconditioner setup failed");
  }
  Vector solve(const Vector& rhs) const override {
    Vector x = gmres_.solve(rhs);
    if (gmres_.info() == Eigen::NumericalIssue)
      throw NumericalError("restarted GMRES broke down");
    return x;
  }

 private:
  SparseMatrix a_;
  Eigen::GMRES<SparseMatrix, Eigen::IncompleteLUT<Scalar>> gmres_;
};

}  // namespace

void SolverConfig::validate() const {
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  if (Nt < 1) throw ConfigError("Nt must be at least 1");
  if (!(newton_tol > 0)) throw ConfigError("newton_tol must be positive");
  if (newton_max_iters < 1) throw ConfigError("newton_max_iters must be at least 1");
  if (lu_refresh_every < 1) throw ConfigError("lu_refresh_every must be at least 1");
}

std::unique_ptr<LinearSolver> make_linear_solver(const SolverConfig& cfg) {
  if (cfg.linear_solver == LinearSolverKind::IterativeRestarted)
    return std::make_unique<RestartedGmresSolver>(cfg.gmres_restart, cfg.gmres_tol);
  return std::make_unique<DirectSparseSolver>();
}

swe::FieldState SnapshotSet::state_at(Index column) const {
  swe::FieldState s;
  s.u = states[0].col(column);
  s.v = states[1].col(column);
  s.phi = states[2].col(column);
  s.time = times.at(static_cast<std::size_t>(column));
  return s;
}

Vector stack(const swe::FieldState& s) {
  const Index n = s.size();
  Vector w(3 * n);
  w << s.u, s.v, s.phi;
  return w;
}

swe::FieldState unstack(const Vector& w, Index n, Scalar time) {
  if (w.size() != 3 * n) throw DimensionError("unstack: vector length is not 3n");
  swe::FieldState s;
  s.u = w.segment(0, n);
  s.v = w.segment(n, n);
  s.phi = w.segment(2 * n, n);
  s.time = time;
  return s;
}

AdiSolver::AdiSolver(const swe::Grid& grid, const swe::DifferenceOperators& ops, Vector coriolis,
                     SolverConfig cfg)
    : grid_(grid), ops_(ops), f_(std::move(coriolis)), cfg_(cfg) {
  cfg_.validate();
  if (ops_.Ax.rows() != grid_.n || f_.size() != grid_.n)
    throw DimensionError("AdiSolver: operators or Coriolis field do not match the grid");
  lu_[0] = make_linear_solver(cfg_);
  lu_[1] = make_linear_solver(cfg_);
}

Vector AdiSolver::directional_terms(Direction d, const Vector& w) const {
  const Index n = grid_.n;
  const SparseMatrix& op = ops_.along(d);
  std::array<Vector, 3> deriv;
  for (auto var : kVariables) deriv[index_of(var)] = op * w.segment(index_of(var) * n, n);
  Vector out = Vector::Zero(3 * n);
  for (auto eq : kVariables) {
    auto seg = out.segment(index_of(eq) * n, n).array();
    for (const auto& p : swe::products_of(term_for(eq, d)))
      seg += p.coeff * w.segment(index_of(p.a) * n, n).array() * deriv[index_of(p.b)].array();
  }
  return out;
}

Vector AdiSolver::coriolis_terms(const Vector& w) const {
  const Index n = grid_.n;
  Vector c = Vector::Zero(3 * n);
  c.segment(0, n) = -f_.cwiseProduct(w.segment(n, n));
  c.segment(n, n) = f_.cwiseProduct(w.segment(0, n));
  return c;
}

Vector AdiSolver::residual(Direction implicit_dir, const Vector& w, const Vector& w_start,
                           const Vector& explicit_terms) const {
  const Index n = grid_.n;
  const Scalar h = cfg_.dt / 2;
  Vector r = w - w_start +
             h * (directional_terms(implicit_dir, w) + 0.5 * coriolis_terms(w) + explicit_terms);
  r.segment(n, grid_.Nx) = w.segment(n, grid_.Nx);
  r.segment(2 * n - grid_.Nx, grid_.Nx) = w.segment(2 * n - grid_.Nx, grid_.Nx);
  return r;
}

SparseMatrix AdiSolver::jacobian(Direction implicit_dir, const Vector& w) const {
  const Index n = grid_.n;
  const Scalar h = cfg_.dt / 2;
  const SparseMatrix& op = ops_.along(implicit_dir);
  std::array<Vector, 3> deriv;
  for (auto var : kVariables) deriv[index_of(var)] = op * w.segment(index_of(var) * n, n);

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(3 * n + 20 * n));
  for (Index r = 0; r < 3 * n; ++r) trip.emplace_back(r, r, 1.0);

  auto is_dirichlet_row = [&](Variable eq, Index node) {
    return eq == Variable::V && swe::is_wall_node(grid_, node);
  };

  for (auto eq : kVariables) {
    const Index row0 = index_of(eq) * n;
    for (const auto& p : swe::products_of(term_for(eq, implicit_dir))) {
      const Index col_a = index_of(p.a) * n;
      const Index col_b = index_of(p.b) * n;
      const Vector& db = deriv[index_of(p.b)];
      for (Index node = 0; node < n; ++node) {
        if (is_dirichlet_row(eq, node)) continue;
        trip.emplace_back(row0 + node, col_a + node, h * p.coeff * db[node]);
      }
      // d/db of a . (D b) = diag(a) D
      for (Index k = 0; k < op.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(op, k); it; ++it) {
          const Index node = it.row();
          if (is_dirichlet_row(eq, node)) continue;
          const Scalar a = w[col_a + node];
          trip.emplace_back(row0 + node, col_b + it.col(), h * p.coeff * a * it.value());
        }
      }
    }
  }
  for (Index node = 0; node < n; ++node) {
    trip.emplace_back(node, n + node, -0.5 * h * f_[node]);
    if (!is_dirichlet_row(Variable::V, node)) trip.emplace_back(n + node, node, 0.5 * h * f_[node]);
  }
  SparseMatrix j(3 * n, 3 * n);
  j.setFromTriplets(trip.begin(), trip.end());
  j.makeCompressed();
  return j;
}

Vector AdiSolver::half_step(Direction implicit_dir, const Vector& w_start, int half) {
  const int slot = static_cast<int>(implicit_dir);
  StepLog& entry = log_.back();
  auto t0 = Clock::now();
  const Vector explicit_terms =
      directional_terms(other(implicit_dir), w_start) + 0.5 * coriolis_terms(w_start);
  timings_.solve += seconds_since(t0);

  Vector w = w_start;
  auto refactor = [&] {
    auto ta = Clock::now();
    const SparseMatrix j = jacobian(implicit_dir, w);
    timings_.assembly += seconds_since(ta);
    auto tf = Clock::now();
    lu_[slot]->factorize(j);
    timings_.factorization += seconds_since(tf);
    factored_[slot] = true;
    entry.refactorized[half] = true;
  };

  if (!factored_[slot] || step_index_ % cfg_.lu_refresh_every == 0) refactor();

  int iters = 0;
  int budget = cfg_.newton_max_iters;
  bool fresh_retry_used = entry.refactorized[half];
  for (;;) {
    auto ts = Clock::now();
    const Vector r = residual(implicit_dir, w, w_start, explicit_terms);
    const Scalar scale = std::max(w.norm(), std::numeric_limits<Scalar>::min());
    const Scalar rel = r.norm() / scale;
    timings_.solve += seconds_since(ts);
    if (!std::isfinite(rel))
      throw NonConvergenceError("ADI half-step produced a non-finite residual", rel, iters);
    if (rel < cfg_.newton_tol) {
      entry.iterations[half] = iters;
      entry.final_residual[half] = rel;
      // Wall rows are Dirichlet; remove the round-off left by the linear solve.
      w.segment(grid_.n, grid_.Nx).setZero();
      w.segment(2 * grid_.n - grid_.Nx, grid_.Nx).setZero();
      return w;
    }
    if (budget == 0) {
      // A stale factorization that stalls is refreshed once at the current iterate.
      if (fresh_retry_used)
        throw NonConvergenceError("quasi-Newton did not converge in " + std::to_string(iters) +
                                      " iterations (relative residual " + std::to_string(rel) +
                                      ")",
                                  rel, iters);
      refactor();
      fresh_retry_used = true;
      budget = cfg_.newton_max_iters;
    }
    ts = Clock::now();
    w -= lu_[slot]->solve(r);
    timings_.solve += seconds_since(ts);
    ++iters;
    --budget;
  }
}

swe::FieldState AdiSolver::step(const swe::FieldState& state) {
  if (state.size() != grid_.n) throw DimensionError("AdiSolver::step: state size mismatch");
  auto t0 = Clock::now();
  log_.push_back(StepLog{step_index_, {}, {}, {}});
  const Vector w0 = stack(state);
  const Vector ws = half_step(Direction::X, w0, 0);
  const Vector w = half_step(Direction::Y, ws, 1);
  ++step_index_;
  timings_.total += seconds_since(t0);
  return unstack(w, grid_.n, state.time + cfg_.dt);
}

FullRun run_full(const swe::FieldState& ic, const SolverConfig& cfg, const swe::Grid& grid,
                 const swe::DifferenceOperators& ops, const Vector& f, Record record) {
  cfg.validate();
  AdiSolver solver(grid, ops, f, cfg);
  FullRun out;

  const Scalar h_max = ic.phi.array().square().maxCoeff() / (4.0 * cfg.gravity);
  out.cfl = swe::cfl_indicator(h_max, cfg.gravity, cfg.dt, grid.dx);
  out.cfl_exceeded = out.cfl > swe::kMaxTestedCfl;

  SnapshotSet& snaps = out.snapshots;
  snaps.Nx = grid.Nx;
  snaps.Ny = grid.Ny;
  snaps.L = grid.L;
  snaps.D = grid.D;
  snaps.dt = cfg.dt;
  snaps.has_states = record.states;
  snaps.has_nonlinear = record.nonlinear;
  if (record.states)
    for (auto& m : snaps.states) m.resize(grid.n, cfg.Nt);
  if (record.nonlinear)
    for (auto& m : snaps.nonlinear) m.resize(grid.n, cfg.Nt);

  swe::FieldState state = ic;
  double recording = 0;
  for (Index s = 0; s < cfg.Nt; ++s) {
    state = solver.step(state);
    auto t0 = Clock::now();
    snaps.times.push_back(state.time);
    if (record.states)
      for (auto var : kVariables) snaps.states[index_of(var)].col(s) = state[var];
    if (record.nonlinear)
      for (auto t : kTerms) snaps.nonlinear[index_of(t)].col(s) = swe::eval_nonlinear(t, state, ops);
    recording += seconds_since(t0);
  }
  out.final_state = std::move(state);
  out.timings = solver.timings();
  out.timings.recording = recording;
  out.timings.total += recording;
  out.log = solver.log();
  return out;
}

}  // namespace swerom::solver
