#pragma once

// Galerkin reduced models of the shallow water system.
//
// Each nonlinear summand c * a (.) (D b) projected onto the test basis W_e of
// its equation expands, with a = abar + A at and b = bbar + B bt, into
//
//   W_e^T[c a (.) D b] = Q(at, bt) + La at + Lb bt + c0,
//   Q_i(at, bt) = <M^i, at bt^T>_F,   M^i_{i1 i2} = c sum_l W_li A_l,i1 (D B)_l,i2.
//
// The standard engine evaluates the left-hand side in full space; the
// tensorial engine contracts the precomputed right-hand side.

#include "swerom/pod.hpp"
#include "swerom/swe.hpp"
#include "swerom/solver.hpp"

#include <array>
#include <string>
#include <vector>

namespace swerom::rom {

// Reduced space: per-variable bases plus their spatial derivatives.
struct RomSpace {
  std::array<pod::PodBasis, 3> bases;
  std::array<std::array<Matrix, 2>, 3> dbasis;  // [variable][direction] = D U
  std::array<std::array<Vector, 2>, 3> dmean;   // [variable][direction] = D xbar
  Vector f;                                     // Coriolis field

  Index k() const { return bases[0].k; }
  Index n() const { return bases[0].n(); }
  const pod::PodBasis& basis(Variable v) const { return bases[index_of(v)]; }
};

// Bases must share k; W^T U = I is checked.
RomSpace make_space(std::array<pod::PodBasis, 3> bases, const swe::DifferenceOperators& ops,
                    Vector coriolis);

struct ReducedState {
  std::array<Vector, 3> coeffs;
  Scalar time = 0;

  const Vector& operator[](Variable v) const { return coeffs[index_of(v)]; }
  Vector& operator[](Variable v) { return coeffs[index_of(v)]; }
  Vector stacked() const;
  static ReducedState from_stacked(const Vector& x, Index k, Scalar time);
};

// xt(0) = W^T (x0 - xbar), per variable.
ReducedState project_initial(const swe::FieldState& x0, const RomSpace& space);

// xbar + U xt, per variable.
swe::FieldState lift(const ReducedState& xt, const RomSpace& space);

// Frobenius inner product of equal-shape arrays.
template <typename DA, typename DB>
Scalar frobenius(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("frobenius: shape mismatch");
  return a.cwiseProduct(b).sum();
}

// Coefficients of one projected summand. M is k x k^2 with column i1 + k*i2
// holding M^i_{i1 i2} in row i, so Q(at, bt) = M * kron(bt, at).
struct ProductTensor {
  Variable a = Variable::U;
  Variable b = Variable::U;
  Scalar coeff = 1;
  Matrix M;
  Matrix La;
  Matrix Lb;
  Vector c0;
};

struct TermTensors {
  Term term = Term::F11;
  std::vector<ProductTensor> products;
};

struct TensorCoefficients {
  Index k = 0;
  std::array<TermTensors, 6> terms;
  // Coriolis coupling: u' += Cuv vt + cu0, v' -= Cvu ut + cv0.
  Matrix coriolis_uv;
  Matrix coriolis_vu;
  Vector coriolis_u0;
  Vector coriolis_v0;
  // ||xbar_e||^2 and U_e^T xbar_e, for the lifted-state norm used in
  // convergence tests.
  std::array<Scalar, 3> mean_sqnorm{};
  std::array<Vector, 3> mean_proj;

  const TermTensors& term(Term t) const { return terms[index_of(t)]; }
};

// Builds one summand's coefficients from a weight matrix (rows summed over),
// the first factor basis, the derivative of the second factor basis and the
// matching mean vectors. Shared by the full-space route (weights = W, n rows)
// and the DEIM route (weights = E^T, m rows).
template <typename DW, typename DA, typename DB>
ProductTensor product_tensor(const Eigen::MatrixBase<DW>& weights, const Eigen::MatrixBase<DA>& a,
                             const Eigen::MatrixBase<DB>& db, const Vector& abar,
                             const Vector& dbbar, const swe::Product& p) {
  const Index k_out = weights.cols();
  const Index ka = a.cols();
  const Index kb = db.cols();
  ProductTensor t;
  t.a = p.a;
  t.b = p.b;
  t.coeff = p.coeff;
  t.M.resize(k_out, ka * kb);
  for (Index i = 0; i < k_out; ++i) {
    const Matrix mi = p.coeff * a.transpose() * weights.col(i).asDiagonal() * db;
    t.M.row(i) = Eigen::Map<const Vector>(mi.data(), mi.size()).transpose();
  }
  t.La = p.coeff * weights.transpose() * dbbar.asDiagonal() * a;
  t.Lb = p.coeff * weights.transpose() * abar.asDiagonal() * db;
  t.c0 = p.coeff * weights.transpose() * abar.cwiseProduct(dbbar);
  return t;
}

// Full-space coefficient tensors (sums over all n grid points).
TensorCoefficients build_tensor_coefficients(const RomSpace& space);

// Coriolis and norm bookkeeping shared by every tensor route.
void attach_linear_terms(TensorCoefficients& tc, const RomSpace& space);

// Projected nonlinear term by lifting to full space: O(k n).
Vector standard_pod_nonlinear(Term term, const ReducedState& xt, const RomSpace& space);

// Projected nonlinear term by contraction: O(k^3), independent of n.
Vector tensorial_nonlinear(Term term, const ReducedState& xt, const TensorCoefficients& tc);
Vector contract(const TermTensors& tt, const ReducedState& xt);

// d(term)/d(xt) as a k x 3k matrix over the stacked (u, v, phi) coefficients.
Matrix reduced_jacobian(Term term, const ReducedState& xt, const TensorCoefficients& tc);
Matrix reduced_jacobian(const TermTensors& tt, const ReducedState& xt, Index k);

// Evaluates projected nonlinear terms for the reduced time stepper.
class NonlinearEvaluator {
 public:
  virtual ~NonlinearEvaluator() = default;
  virtual Vector term(Term t, const ReducedState& xt) const = 0;
};

class StandardPodEvaluator final : public NonlinearEvaluator {
 public:
  explicit StandardPodEvaluator(const RomSpace& space) : space_(space) {}
  Vector term(Term t, const ReducedState& xt) const override {
    return standard_pod_nonlinear(t, xt, space_);
  }

 private:
  const RomSpace& space_;
};

class TensorialEvaluator final : public NonlinearEvaluator {
 public:
  explicit TensorialEvaluator(const TensorCoefficients& tc) : tc_(tc) {}
  Vector term(Term t, const ReducedState& xt) const override {
    return tensorial_nonlinear(t, xt, tc_);
  }

 private:
  const TensorCoefficients& tc_;
};

enum class RomMode { StandardPod, TensorialPod, PodDeim };
std::string_view name_of(RomMode m);
RomMode parse_rom_mode(std::string_view s);

struct RomTimings {
  double nonlinear = 0;  // right-hand-side nonlinear term evaluation [s]
  double jacobian = 0;   // reduced Jacobian assembly and LU [s]
  double total = 0;
};

// Reduced ADI step mirroring solver::AdiSolver: two dt/2 half-steps, implicit
// in the x- then the y-derivative terms, Coriolis split evenly between the
// implicit and explicit sides, quasi-Newton with the same factorization
// cadence. Right-hand sides come from `rhs`; Jacobians always from `jac`.
class RomStepper {
 public:
  RomStepper(const NonlinearEvaluator& rhs, const TensorCoefficients& jac,
             solver::SolverConfig cfg);

  ReducedState step(const ReducedState& xt);

  const std::vector<solver::StepLog>& log() const { return log_; }
  const RomTimings& timings() const { return timings_; }

  Vector residual(Direction implicit_dir, const Vector& x, const Vector& x_start,
                  const Vector& explicit_terms);
  Matrix jacobian(Direction implicit_dir, const Vector& x) const;
  Vector directional_terms(Direction d, const Vector& x);
  Vector coriolis_terms(const Vector& x) const;

 private:
  Vector half_step(Direction implicit_dir, const Vector& x_start, int half);
  Scalar lifted_norm(const Vector& x) const;

  const NonlinearEvaluator& rhs_;
  const TensorCoefficients& jac_;
  solver::SolverConfig cfg_;
  Index k_;
  std::array<Eigen::PartialPivLU<Matrix>, 2> lu_;
  std::array<bool, 2> factored_{false, false};
  Index step_index_ = 0;
  std::vector<solver::StepLog> log_;
  RomTimings timings_;
};

struct RomTrajectory {
  std::array<Matrix, 3> coeffs;  // k x Nt per variable
  std::vector<Scalar> times;
  ReducedState final_state;
  RomTimings timings;
  std::vector<solver::StepLog> log;
};

RomTrajectory run_rom(const ReducedState& x0, const NonlinearEvaluator& rhs,
                      const TensorCoefficients& jac, const solver::SolverConfig& cfg);

// Lift a whole trajectory: xbar + U coeffs, per variable (n x Nt).
std::array<Matrix, 3> lift_trajectory(const RomTrajectory& traj, const RomSpace& space);

// Tensor coefficient file: see docs/file_formats.md.
void save_tensors(const TensorCoefficients& tc, const std::string& path);
TensorCoefficients load_tensors(const std::string& path);

// Degree-p polynomial nonlinearity W^T (U x)^p and its tensorial form.
// M is k x k^p with the multi-index i1 + k i2 + k^2 i3 + ... along columns.
struct PolyTensor {
  Index k = 0;
  int p = 2;
  Matrix M;
};

// x (x) x (x) ... (x) x with p factors, first index fastest.
Vector outer_power(const Vector& x, int p);

PolyTensor build_poly_tensor(const Matrix& W, const Matrix& U, int p);
Vector poly_contract(const PolyTensor& t, const Vector& x);
Vector poly_standard(const Matrix& W, const Matrix& U, const Vector& x, int p);

}  // namespace swerom::rom
