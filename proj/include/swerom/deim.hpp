#pragma once

// Discrete empirical interpolation of the projected nonlinear terms.
//
// A term N with nonlinear-snapshot basis V (n x m) and interpolation indices P
// is approximated as W^T N ~ E P^T N with E = W^T V (P^T V)^{-1}. Because every
// SWE term is a sum of componentwise products, P^T N only needs the sampled
// rows of the state bases and their derivatives.

#include "swerom/rom.hpp"

#include <array>
#include <string>
#include <vector>

namespace swerom::deim {

// Rows of one summand c * a (.) (D b) at the interpolation points.
struct SampledProduct {
  Variable a = Variable::U;
  Variable b = Variable::U;
  Scalar coeff = 1;
  Matrix Am;     // P^T U_a        (m x k)
  Matrix Bm;     // P^T D U_b      (m x k)
  Vector abar;   // P^T xbar_a     (m)
  Vector dbbar;  // P^T D xbar_b   (m)
};

struct DeimOperator {
  Term term = Term::F11;
  Matrix V;                   // n x m
  std::vector<Index> points;  // m distinct grid indices
  Matrix E;                   // k x m, W^T V (P^T V)^{-1}
  std::vector<SampledProduct> products;
  Scalar condition = 0;       // 2-norm condition number of P^T V

  Index m() const { return static_cast<Index>(points.size()); }
};

// Greedy selection: the first index maximizes |V(:,0)|; index j maximizes the
// residual of column j after interpolating it from columns 0..j-1 at the
// indices chosen so far. Ties go to the lowest index.
std::vector<Index> deim_select_points(const Matrix& V);

Matrix gather_rows(const Matrix& m, const std::vector<Index>& rows);
Vector gather_rows(const Vector& v, const std::vector<Index>& rows);

DeimOperator build_deim_operator(Term term, const Matrix& V, const std::vector<Index>& points,
                                 const rom::RomSpace& space);

// E times the term evaluated at the sampled rows: O(k m).
Vector deim_nonlinear(const DeimOperator& op, const rom::ReducedState& xt);

// Coefficient tensors summed over the m interpolation points only:
// M^i_{i1 i2} = c sum_l E_il Am_{l i1} Bm_{l i2}.
rom::TermTensors deim_tensor_coefficients(const DeimOperator& op);

// All six terms plus the exact Coriolis coupling.
rom::TensorCoefficients deim_tensors(const std::array<DeimOperator, 6>& ops,
                                     const rom::RomSpace& space);

class DeimEvaluator final : public rom::NonlinearEvaluator {
 public:
  explicit DeimEvaluator(const std::array<DeimOperator, 6>& ops) : ops_(ops) {}
  Vector term(Term t, const rom::ReducedState& xt) const override {
    return deim_nonlinear(ops_[index_of(t)], xt);
  }

 private:
  const std::array<DeimOperator, 6>& ops_;
};

struct DeimBuild {
  std::array<DeimOperator, 6> ops;
  std::array<Vector, 6> spectra;  // squared singular values of each term's snapshots
  double svd_seconds = 0;
  double points_seconds = 0;
  double coefficient_seconds = 0;
};

// Uncentered SVD of each term's snapshots, m leading modes, greedy points and
// E for every term.
DeimBuild build_deim_operators(const std::array<Matrix, 6>& term_snapshots,
                               const rom::RomSpace& space, Index m);

// Per-node maximum of |term| over the snapshot columns.
Vector max_abs_over_time(const Matrix& term_snapshots);

// DEIM operator file: see docs/file_formats.md.
void save_operator(const DeimOperator& op, const std::string& path);
DeimOperator load_operator(const std::string& path);

}  // namespace swerom::deim
