#pragma once

// Proper orthogonal decomposition of snapshot matrices.

#include "swerom/types.hpp"

#include <string>
#include <utility>

namespace swerom::pod {

struct PodBasis {
  Variable tag = Variable::U;
  Matrix U;       // n x k orthonormal trial basis
  Matrix W;       // n x k test basis, W^T U = I (W = U for Galerkin)
  Vector xbar;    // centering vector (zero when centering is disabled)
  Vector sigma;   // eigenvalues lambda_i = s_i^2 of the snapshot correlation, nonincreasing
  Index k = 0;
  Scalar gamma = 0;  // captured energy I(k)

  Index n() const { return U.rows(); }
};

// Row-wise mean and the snapshots with that mean removed.
std::pair<Matrix, Vector> center_snapshots(const Matrix& snaps);

class ModeSelector {
 public:
  static ModeSelector fixed(Index k) { return ModeSelector(k, 0); }
  static ModeSelector energy(Scalar gamma) { return ModeSelector(-1, gamma); }

  bool is_energy() const { return k_ < 0; }
  Index k() const { return k_; }
  Scalar gamma() const { return gamma_; }

 private:
  ModeSelector(Index k, Scalar gamma) : k_(k), gamma_(gamma) {}
  Index k_;
  Scalar gamma_;
};

enum class Route {
  Svd,          // thin SVD of the snapshot matrix
  Correlation,  // eigenvectors of the Nt x Nt snapshot correlation matrix
};

// I(m) = sum_{i<=m} lambda_i / sum_i lambda_i.
Scalar energy_index(const Vector& sigma, Index m);

// Smallest m with I(m) >= gamma.
Index select_by_energy(const Vector& sigma, Scalar gamma);

// Number of singular values s_i > s_1 * max(rows, cols) * eps, from lambda = s^2.
Index numerical_rank(const Vector& sigma, Index rows, Index cols);

// Basis of an already centered (or deliberately uncentered) snapshot matrix.
// The returned xbar is zero; build_pod fills it in.
PodBasis compute_pod_basis(const Matrix& snaps, const ModeSelector& selector,
                           Route route = Route::Svd);

// Centers (unless disabled), then computes the basis.
PodBasis build_pod(const Matrix& snaps, const ModeSelector& selector, bool centering = true,
                   Route route = Route::Svd);

// Leading left singular vectors of `snaps` without centering or truncation
// checks beyond the column count; used for nonlinear-term bases.
std::pair<Matrix, Vector> left_singular(const Matrix& snaps, Index count);

// Flip each column so that its entry of largest magnitude is positive.
void fix_signs(Matrix& basis);

// Basis file: see docs/file_formats.md.
void save_basis(const PodBasis& basis, const std::string& path);
PodBasis load_basis(const std::string& path);

}  // namespace swerom::pod
