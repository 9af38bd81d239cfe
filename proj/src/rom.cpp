#include "swerom/rom.hpp"

#include "swerom/binary_io.hpp"

#include <chrono>
#include <cmath>

namespace swerom::rom {

std::string_view name_of(RomMode m) {
  switch (m) {
    case RomMode::StandardPod: return "standard-pod";
    case RomMode::TensorialPod: return "tensorial-pod";
    case RomMode::PodDeim: return "pod-deim";
  }
  return "?";
}

RomMode parse_rom_mode(std::string_view s) {
  for (auto m : {RomMode::StandardPod, RomMode::TensorialPod, RomMode::PodDeim})
    if (name_of(m) == s) return m;
  throw ConfigError("unknown ROM mode '" + std::string(s) + "'");
}

RomSpace make_space(std::array<pod::PodBasis, 3> bases, const swe::DifferenceOperators& ops,
                    Vector coriolis) {
  const Index n = ops.Ax.rows();
  const Index k = bases[0].k;
  for (const auto& b : bases) {
    if (b.U.rows() != n || b.W.rows() != n || b.xbar.size() != n)
      throw DimensionError("make_space: basis length does not match the operators");
    if (b.k != k || b.U.cols() != k || b.W.cols() != k)
      throw DimensionError("make_space: all variables must share the same mode count");
    if (k > 0) {
      const Scalar dev = (b.W.transpose() * b.U - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
      if (dev > 1e-10)
        throw NumericalError("make_space: W^T U deviates from identity by " + std::to_string(dev));
    }
  }
  if (coriolis.size() != n) throw DimensionError("make_space: Coriolis length mismatch");
  RomSpace s;
  s.bases = std::move(bases);
  s.f = std::move(coriolis);
  for (auto var : kVariables) {
    const auto& b = s.bases[index_of(var)];
    for (auto d : {Direction::X, Direction::Y}) {
      s.dbasis[index_of(var)][static_cast<int>(d)] = ops.along(d) * b.U;
      s.dmean[index_of(var)][static_cast<int>(d)] = ops.along(d) * b.xbar;
    }
  }
  return s;
}

Vector ReducedState::stacked() const {
  const Index k = coeffs[0].size();
  Vector x(3 * k);
  x << coeffs[0], coeffs[1], coeffs[2];
  return x;
}

ReducedState ReducedState::from_stacked(const Vector& x, Index k, Scalar time) {
  if (x.size() != 3 * k) throw DimensionError("ReducedState: stacked length is not 3k");
  ReducedState s;
  for (int v = 0; v < 3; ++v) s.coeffs[v] = x.segment(v * k, k);
  s.time = time;
  return s;
}

ReducedState project_initial(const swe::FieldState& x0, const RomSpace& space) {
  ReducedState xt;
  for (auto var : kVariables) {
    const auto& b = space.basis(var);
    if (x0[var].size() != b.n()) throw DimensionError("project_initial: state length mismatch");
    xt[var] = b.W.transpose() * (x0[var] - b.xbar);
  }
  xt.time = x0.time;
  return xt;
}

swe::FieldState lift(const ReducedState& xt, const RomSpace& space) {
  swe::FieldState s;
  for (auto var : kVariables) {
    const auto& b = space.basis(var);
    if (xt[var].size() != b.k) throw DimensionError("lift: coefficient length mismatch");
    s[var] = b.xbar + b.U * xt[var];
  }
  s.time = xt.time;
  return s;
}

Vector standard_pod_nonlinear(Term term, const ReducedState& xt, const RomSpace& space) {
  const int d = static_cast<int>(direction_of(term));
  const auto& w = space.basis(equation_of(term)).W;
  for (auto var : kVariables)
    if (xt[var].size() != space.k())
      throw DimensionError("standard_pod_nonlinear: coefficient length mismatch");
  Vector full = Vector::Zero(space.n());
  for (const auto& p : swe::products_of(term)) {
    const auto& ba = space.basis(p.a);
    const Vector a = ba.xbar + ba.U * xt[p.a];
    const Vector db = space.dmean[index_of(p.b)][d] + space.dbasis[index_of(p.b)][d] * xt[p.b];
    full.array() += p.coeff * a.array() * db.array();
  }
  return w.transpose() * full;
}

void attach_linear_terms(TensorCoefficients& tc, const RomSpace& space) {
  const auto& bu = space.basis(Variable::U);
  const auto& bv = space.basis(Variable::V);
  tc.coriolis_uv = bu.W.transpose() * space.f.asDiagonal() * bv.U;
  tc.coriolis_vu = bv.W.transpose() * space.f.asDiagonal() * bu.U;
  tc.coriolis_u0 = bu.W.transpose() * space.f.cwiseProduct(bv.xbar);
  tc.coriolis_v0 = bv.W.transpose() * space.f.cwiseProduct(bu.xbar);
  for (auto var : kVariables) {
    const auto& b = space.basis(var);
    tc.mean_sqnorm[index_of(var)] = b.xbar.squaredNorm();
    tc.mean_proj[index_of(var)] = b.U.transpose() * b.xbar;
  }
}

TensorCoefficients build_tensor_coefficients(const RomSpace& space) {
  TensorCoefficients tc;
  tc.k = space.k();
  for (auto t : kTerms) {
    const int d = static_cast<int>(direction_of(t));
    const auto& w = space.basis(equation_of(t)).W;
    TermTensors& tt = tc.terms[index_of(t)];
    tt.term = t;
    for (const auto& p : swe::products_of(t)) {
      const auto& ba = space.basis(p.a);
      tt.products.push_back(product_tensor(w, ba.U, space.dbasis[index_of(p.b)][d], ba.xbar,
                                           space.dmean[index_of(p.b)][d], p));
    }
  }
  attach_linear_terms(tc, space);
  return tc;
}

Vector contract(const TermTensors& tt, const ReducedState& xt) {
  Vector out;
  for (const auto& p : tt.products) {
    const Vector& a = xt[p.a];
    const Vector& b = xt[p.b];
    const Index ka = a.size();
    if (p.M.cols() != ka * b.size()) throw DimensionError("tensorial_nonlinear: k mismatch");
    // Q_i = sum_{i2} b_{i2} (M^i_{:, i2} . a)
    Vector q = Vector::Zero(p.M.rows());
    for (Index i2 = 0; i2 < b.size(); ++i2) q.noalias() += b[i2] * (p.M.middleCols(i2 * ka, ka) * a);
    q.noalias() += p.La * a + p.Lb * b;
    q += p.c0;
    if (out.size() == 0)
      out = std::move(q);
    else
      out += q;
  }
  return out;
}

Vector tensorial_nonlinear(Term term, const ReducedState& xt, const TensorCoefficients& tc) {
  for (auto var : kVariables)
    if (xt[var].size() != tc.k) throw DimensionError("tensorial_nonlinear: k mismatch");
  return contract(tc.term(term), xt);
}

Matrix reduced_jacobian(const TermTensors& tt, const ReducedState& xt, Index k) {
  Matrix j = Matrix::Zero(k, 3 * k);
  for (const auto& p : tt.products) {
    const Vector& a = xt[p.a];
    const Vector& b = xt[p.b];
    if (a.size() != k || b.size() != k) throw DimensionError("reduced_jacobian: k mismatch");
    auto ja = j.middleCols(index_of(p.a) * k, k);
    auto jb = j.middleCols(index_of(p.b) * k, k);
    // dQ_i/da_{i1} = sum_{i2} M^i_{i1 i2} b_{i2};  dQ_i/db_{i2} = sum_{i1} M^i_{i1 i2} a_{i1}
    for (Index i2 = 0; i2 < k; ++i2) {
      const auto slab = p.M.middleCols(i2 * k, k);
      ja.noalias() += b[i2] * slab;
      jb.col(i2).noalias() += slab * a;
    }
    ja += p.La;
    jb += p.Lb;
  }
  return j;
}

Matrix reduced_jacobian(Term term, const ReducedState& xt, const TensorCoefficients& tc) {
  return reduced_jacobian(tc.term(term), xt, tc.k);
}

// ---------------------------------------------------------------------------
// Reduced ADI stepper

namespace {

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Direction other(Direction d) { return d == Direction::X ? Direction::Y : Direction::X; }

Term term_for(Variable eq, Direction d) {
  return static_cast<Term>(2 * index_of(eq) + static_cast<int>(d));
}

}  // namespace

RomStepper::RomStepper(const NonlinearEvaluator& rhs, const TensorCoefficients& jac,
                       solver::SolverConfig cfg)
    : rhs_(rhs), jac_(jac), cfg_(cfg), k_(jac.k) {
  cfg_.validate();
}

Vector RomStepper::directional_terms(Direction d, const Vector& x) {
  const ReducedState xt = ReducedState::from_stacked(x, k_, 0);
  Vector out(3 * k_);
  auto t0 = Clock::now();
  for (auto eq : kVariables) out.segment(index_of(eq) * k_, k_) = rhs_.term(term_for(eq, d), xt);
  timings_.nonlinear += seconds_since(t0);
  return out;
}

Vector RomStepper::coriolis_terms(const Vector& x) const {
  Vector c = Vector::Zero(3 * k_);
  c.segment(0, k_) = -(jac_.coriolis_uv * x.segment(k_, k_) + jac_.coriolis_u0);
  c.segment(k_, k_) = jac_.coriolis_vu * x.segment(0, k_) + jac_.coriolis_v0;
  return c;
}

Vector RomStepper::residual(Direction implicit_dir, const Vector& x, const Vector& x_start,
                            const Vector& explicit_terms) {
  const Scalar h = cfg_.dt / 2;
  return x - x_start +
         h * (directional_terms(implicit_dir, x) + 0.5 * coriolis_terms(x) + explicit_terms);
}

Matrix RomStepper::jacobian(Direction implicit_dir, const Vector& x) const {
  const Scalar h = cfg_.dt / 2;
  const ReducedState xt = ReducedState::from_stacked(x, k_, 0);
  Matrix j = Matrix::Identity(3 * k_, 3 * k_);
  for (auto eq : kVariables)
    j.middleRows(index_of(eq) * k_, k_) +=
        h * reduced_jacobian(jac_.term(term_for(eq, implicit_dir)), xt, k_);
  j.block(0, k_, k_, k_) -= 0.5 * h * jac_.coriolis_uv;
  j.block(k_, 0, k_, k_) += 0.5 * h * jac_.coriolis_vu;
  return j;
}

Scalar RomStepper::lifted_norm(const Vector& x) const {
  Scalar sq = 0;
  for (int v = 0; v < 3; ++v) {
    const auto seg = x.segment(v * k_, k_);
    sq += jac_.mean_sqnorm[v] + seg.squaredNorm();
    if (jac_.mean_proj[v].size() == k_) sq += 2 * jac_.mean_proj[v].dot(seg);
  }
  return std::sqrt(std::max<Scalar>(sq, 0));
}

Vector RomStepper::half_step(Direction implicit_dir, const Vector& x_start, int half) {
  const int slot = static_cast<int>(implicit_dir);
  auto& entry = log_.back();
  const Vector explicit_terms =
      directional_terms(other(implicit_dir), x_start) + 0.5 * coriolis_terms(x_start);
  Vector x = x_start;

  auto refactor = [&] {
    auto t0 = Clock::now();
    lu_[slot].compute(jacobian(implicit_dir, x));
    timings_.jacobian += seconds_since(t0);
    factored_[slot] = true;
    entry.refactorized[half] = true;
  };
  if (!factored_[slot] || step_index_ % cfg_.lu_refresh_every == 0) refactor();

  int iters = 0;
  int budget = cfg_.newton_max_iters;
  bool fresh_retry_used = entry.refactorized[half];
  for (;;) {
    const Vector r = residual(implicit_dir, x, x_start, explicit_terms);
    const Scalar scale = std::max(lifted_norm(x), std::numeric_limits<Scalar>::min());
    const Scalar rel = r.norm() / scale;
    if (!std::isfinite(rel))
      throw NonConvergenceError("reduced ADI half-step produced a non-finite residual", rel, iters);
    if (rel < cfg_.newton_tol) {
      entry.iterations[half] = iters;
      entry.final_residual[half] = rel;
      return x;
    }
    if (budget == 0) {
      if (fresh_retry_used)
        throw NonConvergenceError("reduced quasi-Newton did not converge in " +
                                      std::to_string(iters) + " iterations (relative residual " +
                                      std::to_string(rel) + ")",
                                  rel, iters);
      refactor();
      fresh_retry_used = true;
      budget = cfg_.newton_max_iters;
    }
    const Vector dx = lu_[slot].solve(r);
    if (!dx.allFinite()) throw SingularMatrixError("reduced Jacobian is singular");
    x -= dx;
    ++iters;
    --budget;
  }
}

ReducedState RomStepper::step(const ReducedState& xt) {
  auto t0 = Clock::now();
  log_.push_back(solver::StepLog{step_index_, {}, {}, {}});
  const Vector x0 = xt.stacked();
  if (x0.size() != 3 * k_) throw DimensionError("RomStepper::step: coefficient length mismatch");
  const Vector xs = half_step(Direction::X, x0, 0);
  const Vector x = half_step(Direction::Y, xs, 1);
  ++step_index_;
  timings_.total += seconds_since(t0);
  return ReducedState::from_stacked(x, k_, xt.time + cfg_.dt);
}

RomTrajectory run_rom(const ReducedState& x0, const NonlinearEvaluator& rhs,
                      const TensorCoefficients& jac, const solver::SolverConfig& cfg) {
  RomStepper stepper(rhs, jac, cfg);
  RomTrajectory traj;
  for (auto& m : traj.coeffs) m.resize(jac.k, cfg.Nt);
  ReducedState x = x0;
  for (Index s = 0; s < cfg.Nt; ++s) {
    x = stepper.step(x);
    for (auto var : kVariables) traj.coeffs[index_of(var)].col(s) = x[var];
    traj.times.push_back(x.time);
  }
  traj.final_state = std::move(x);
  traj.timings = stepper.timings();
  traj.log = stepper.log();
  return traj;
}

std::array<Matrix, 3> lift_trajectory(const RomTrajectory& traj, const RomSpace& space) {
  std::array<Matrix, 3> out;
  for (auto var : kVariables) {
    const auto& b = space.basis(var);
    out[index_of(var)] = (b.U * traj.coeffs[index_of(var)]).colwise() + b.xbar;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tensor file

namespace {
constexpr std::string_view kMagic = "TPODCF1";
}

// Layout (little-endian):
//   char[8] "TPODCF1\0", u64 k, u64 p (= 2), u64 term count (= 6)
//   per term: u64 term tag, u64 product count
//     per product: u64 a, u64 b, f64 coeff, f64 M[k*k^2], f64 La[k*k], f64 Lb[k*k], f64 c0[k]
//   f64 Cuv[k*k], f64 Cvu[k*k], f64 cu0[k], f64 cv0[k]
//   per variable: f64 ||xbar||^2, f64 U^T xbar[k]
// All matrices column-major.
void save_tensors(const TensorCoefficients& tc, const std::string& path) {
  io::BinaryWriter w(path);
  w.magic(kMagic);
  w.u64(static_cast<std::uint64_t>(tc.k));
  w.u64(2);
  w.u64(6);
  for (const auto& tt : tc.terms) {
    w.u64(static_cast<std::uint64_t>(index_of(tt.term)));
    w.u64(tt.products.size());
    for (const auto& p : tt.products) {
      w.u64(static_cast<std::uint64_t>(index_of(p.a)));
      w.u64(static_cast<std::uint64_t>(index_of(p.b)));
      w.f64(p.coeff);
      w.matrix(p.M);
      w.matrix(p.La);
      w.matrix(p.Lb);
      w.vector(p.c0);
    }
  }
  w.matrix(tc.coriolis_uv);
  w.matrix(tc.coriolis_vu);
  w.vector(tc.coriolis_u0);
  w.vector(tc.coriolis_v0);
  for (int v = 0; v < 3; ++v) {
    w.f64(tc.mean_sqnorm[v]);
    w.vector(tc.mean_proj[v]);
  }
  w.close();
}

TensorCoefficients load_tensors(const std::string& path) {
  io::BinaryReader r(path);
  r.expect_magic(kMagic);
  TensorCoefficients tc;
  tc.k = static_cast<Index>(r.u64());
  const Index k = tc.k;
  if (r.u64() != 2) throw FileFormatError("'" + path + "': only degree-2 tensors are stored");
  if (r.u64() != 6) throw FileFormatError("'" + path + "': expected 6 terms");
  for (int t = 0; t < 6; ++t) {
    const auto tag = r.u64();
    if (tag > 5) throw FileFormatError("'" + path + "': bad term tag");
    TermTensors& tt = tc.terms[tag];
    tt.term = static_cast<Term>(tag);
    const auto count = r.u64();
    if (count > 2) throw FileFormatError("'" + path + "': bad product count");
    for (std::uint64_t i = 0; i < count; ++i) {
      ProductTensor p;
      const auto a = r.u64(), b = r.u64();
      if (a > 2 || b > 2) throw FileFormatError("'" + path + "': bad variable tag");
      p.a = static_cast<Variable>(a);
      p.b = static_cast<Variable>(b);
      p.coeff = r.f64();
      p.M = r.matrix(k, k * k);
      p.La = r.matrix(k, k);
      p.Lb = r.matrix(k, k);
      p.c0 = r.vector(k);
      tt.products.push_back(std::move(p));
    }
  }
  tc.coriolis_uv = r.matrix(k, k);
  tc.coriolis_vu = r.matrix(k, k);
  tc.coriolis_u0 = r.vector(k);
  tc.coriolis_v0 = r.vector(k);
  for (int v = 0; v < 3; ++v) {
    tc.mean_sqnorm[v] = r.f64();
    tc.mean_proj[v] = r.vector(k);
  }
  if (!r.at_end()) throw FileFormatError("'" + path + "': trailing bytes after payload");
  return tc;
}

// ---------------------------------------------------------------------------
// General polynomial degree

Vector outer_power(const Vector& x, int p) {
  if (p < 1) throw ConfigError("polynomial degree must be at least 1");
  Vector v = x;
  for (int j = 1; j < p; ++j) {
    const Matrix o = v * x.transpose();
    v = Eigen::Map<const Vector>(o.data(), o.size());
  }
  return v;
}

PolyTensor build_poly_tensor(const Matrix& W, const Matrix& U, int p) {
  if (W.rows() != U.rows()) throw DimensionError("build_poly_tensor: row mismatch");
  const Index k = U.cols();
  const Index n = U.rows();
  Index width = 1;
  for (int j = 0; j < p; ++j) width *= k;
  PolyTensor t;
  t.k = k;
  t.p = p;
  t.M = Matrix::Zero(W.cols(), width);
  // Row-wise Khatri-Rao power of U in blocks, M += W_block^T KR_block.
  constexpr Index kBlock = 64;
  Matrix kr(std::min(kBlock, n), width);
  for (Index l0 = 0; l0 < n; l0 += kBlock) {
    const Index rows = std::min(kBlock, n - l0);
    for (Index r = 0; r < rows; ++r)
      kr.row(r) = outer_power(U.row(l0 + r).transpose(), p).transpose();
    t.M.noalias() += W.middleRows(l0, rows).transpose() * kr.topRows(rows);
  }
  return t;
}

Vector poly_contract(const PolyTensor& t, const Vector& x) {
  if (x.size() != t.k) throw DimensionError("poly_contract: k mismatch");
  // Contract the slowest index first: M viewed as (k * k^{p-1}) x k.
  Vector buf = Eigen::Map<const Vector>(t.M.data(), t.M.size());
  Index rows = t.M.size();
  for (int j = 0; j < t.p; ++j) {
    rows /= t.k;
    buf = Eigen::Map<const Matrix>(buf.data(), rows, t.k) * x;
  }
  return buf;
}

Vector poly_standard(const Matrix& W, const Matrix& U, const Vector& x, int p) {
  const Vector ux = U * x;
  return W.transpose() * ux.array().pow(static_cast<Scalar>(p)).matrix();
}

}  // namespace swerom::rom
