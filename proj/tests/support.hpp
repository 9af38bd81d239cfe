#pragma once

// Shared fixtures and brute-force oracles. The oracles deliberately avoid the
// library's sparse operators and tensor code so that agreement means something.

#include "swerom/bench.hpp"
#include "swerom/deim.hpp"
#include "swerom/pod.hpp"
#include "swerom/rom.hpp"
#include "swerom/solver.hpp"
#include "swerom/swe.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

namespace testing {

using namespace swerom;

inline Scalar rel_diff(const Vector& a, const Vector& b) {
  const Scalar scale = std::max(b.norm(), std::numeric_limits<Scalar>::min());
  return (a - b).norm() / scale;
}

inline Scalar rel_diff(const Matrix& a, const Matrix& b) {
  const Scalar scale = std::max(b.norm(), std::numeric_limits<Scalar>::min());
  return (a - b).norm() / scale;
}

inline Vector random_vector(Index n, std::mt19937_64& rng, Scalar scale = 1.0) {
  std::normal_distribution<Scalar> d(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline Matrix random_matrix(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<Scalar> d(0.0, 1.0);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = d(rng);
  return m;
}

inline Matrix random_orthonormal(Index r, Index c, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(r, c, rng));
  return qr.householderQ() * Matrix::Identity(r, c);
}

inline swe::FieldState random_state(Index n, std::mt19937_64& rng) {
  swe::FieldState s;
  s.u = random_vector(n, rng);
  s.v = random_vector(n, rng);
  s.phi = random_vector(n, rng);
  return s;
}

// Derivative of the grid function w at node (i, j) written from the stencil
// definition: periodic central in x with x = 0 and x = L identified, central
// in y with first-order one-sided rows at the walls.
inline Scalar dx_at(const swe::Grid& g, const Vector& w, Index i, Index j) {
  const Index e = (i == g.Nx - 1) ? 1 : i + 1;
  const Index west = (i == 0) ? g.Nx - 2 : i - 1;
  return (w[e + g.Nx * j] - w[west + g.Nx * j]) / (2 * g.dx);
}

inline Scalar dy_at(const swe::Grid& g, const Vector& w, Index i, Index j) {
  auto at = [&](Index jj) { return w[i + g.Nx * jj]; };
  if (j == 0) return (at(1) - at(0)) / g.dy;
  if (j == g.Ny - 1) return (at(j) - at(j - 1)) / g.dy;
  return (at(j + 1) - at(j - 1)) / (2 * g.dy);
}

// Per-node evaluation of the six nonlinear terms from their formulas.
inline Vector loop_nonlinear(Term t, const swe::FieldState& s, const swe::Grid& g) {
  Vector out(g.n);
  for (Index j = 0; j < g.Ny; ++j) {
    for (Index i = 0; i < g.Nx; ++i) {
      const Index p = i + g.Nx * j;
      const Scalar u = s.u[p], v = s.v[p], ph = s.phi[p];
      Scalar val = 0;
      switch (t) {
        case Term::F11: val = u * dx_at(g, s.u, i, j) + 0.5 * ph * dx_at(g, s.phi, i, j); break;
        case Term::F12: val = v * dy_at(g, s.u, i, j); break;
        case Term::F21: val = u * dx_at(g, s.v, i, j); break;
        case Term::F22: val = v * dy_at(g, s.v, i, j) + 0.5 * ph * dy_at(g, s.phi, i, j); break;
        case Term::F31: val = 0.5 * ph * dx_at(g, s.u, i, j) + u * dx_at(g, s.phi, i, j); break;
        case Term::F32: val = 0.5 * ph * dy_at(g, s.v, i, j) + v * dy_at(g, s.phi, i, j); break;
      }
      out[p] = val;
    }
  }
  return out;
}

// Greedy recursion written out with explicit loops and Gaussian elimination.
inline std::vector<Index> greedy_oracle(const Matrix& V) {
  const Index n = V.rows(), m = V.cols();
  std::vector<Index> pts;
  auto arg = [&](const std::vector<Scalar>& r) {
    Index best = 0;
    for (Index i = 1; i < n; ++i)
      if (std::abs(r[i]) > std::abs(r[best])) best = i;
    return best;
  };
  std::vector<Scalar> r(n);
  for (Index i = 0; i < n; ++i) r[i] = V(i, 0);
  pts.push_back(arg(r));
  for (Index j = 1; j < m; ++j) {
    // Solve (P^T V_j) c = P^T v_j with partial pivoting.
    std::vector<std::vector<Scalar>> a(j, std::vector<Scalar>(j + 1));
    for (Index q = 0; q < j; ++q) {
      for (Index c = 0; c < j; ++c) a[q][c] = V(pts[q], c);
      a[q][j] = V(pts[q], j);
    }
    for (Index c = 0; c < j; ++c) {
      Index piv = c;
      for (Index q = c + 1; q < j; ++q)
        if (std::abs(a[q][c]) > std::abs(a[piv][c])) piv = q;
      std::swap(a[c], a[piv]);
      for (Index q = c + 1; q < j; ++q) {
        const Scalar f = a[q][c] / a[c][c];
        for (Index cc = c; cc <= j; ++cc) a[q][cc] -= f * a[c][cc];
      }
    }
    std::vector<Scalar> coef(j);
    for (Index c = j - 1; c >= 0; --c) {
      Scalar s = a[c][j];
      for (Index cc = c + 1; cc < j; ++cc) s -= a[c][cc] * coef[cc];
      coef[c] = s / a[c][c];
    }
    for (Index i = 0; i < n; ++i) {
      Scalar s = V(i, j);
      for (Index c = 0; c < j; ++c) s -= V(i, c) * coef[c];
      r[i] = s;
    }
    pts.push_back(arg(r));
  }
  return pts;
}

// Leading k POD modes and all eigenvalues via the Nt x Nt correlation matrix
// K_ij = <x_i - xbar, x_j - xbar>, u_i = X_c v_i / sqrt(lambda_i), with the
// entry of largest magnitude made positive.
inline std::pair<Matrix, Vector> correlation_pod_oracle(const Matrix& x, Index k) {
  const Vector xbar = x.rowwise().mean();
  const Matrix xc = x.colwise() - xbar;
  const Matrix K = xc.transpose() * xc;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
  const Index nt = K.rows();
  Matrix u(x.rows(), k);
  Vector lambda(nt);
  for (Index i = 0; i < nt; ++i) lambda[i] = eig.eigenvalues()[nt - 1 - i];
  for (Index i = 0; i < k; ++i) {
    Vector c = xc * eig.eigenvectors().col(nt - 1 - i) / std::sqrt(lambda[i]);
    Index big = 0;
    c.cwiseAbs().maxCoeff(&big);
    u.col(i) = c[big] < 0 ? Vector(-c) : c;
  }
  return {u, lambda};
}

// M^i_{i1 i2} = c sum_l W_li A_l,i1 DB_l,i2 as a k x k^2 matrix (column i1 + k i2).
inline Matrix quad_loop_tensor(const Matrix& W, const Matrix& A, const Matrix& DB, Scalar c) {
  const Index n = W.rows(), k = W.cols();
  Matrix M(k, k * k);
  for (Index i = 0; i < k; ++i)
    for (Index i1 = 0; i1 < k; ++i1)
      for (Index i2 = 0; i2 < k; ++i2) {
        Scalar s = 0;
        for (Index l = 0; l < n; ++l) s += W(l, i) * A(l, i1) * DB(l, i2);
        M(i, i1 + k * i2) = c * s;
      }
  return M;
}

// Galerkin basis with random orthonormal U, random mean.
inline pod::PodBasis random_basis(Variable tag, Index n, Index k, std::mt19937_64& rng,
                                  bool centered = true) {
  pod::PodBasis b;
  b.tag = tag;
  b.U = random_orthonormal(n, k, rng);
  b.W = b.U;
  b.xbar = centered ? random_vector(n, rng) : Vector::Zero(n);
  b.sigma = Vector::Ones(k);
  b.k = k;
  b.gamma = 1;
  return b;
}

struct SmallProblem {
  swe::Grid grid;
  swe::DifferenceOperators ops;
  Vector f;
  rom::RomSpace space;
};

inline SmallProblem random_problem(Index nx, Index ny, Index k, std::uint64_t seed,
                                   bool centered = true) {
  std::mt19937_64 rng(seed);
  SmallProblem p;
  p.grid = swe::build_grid(nx, ny, 2.0, 2.0);
  p.ops = swe::build_operators(p.grid);
  p.f = random_vector(p.grid.n, rng, 0.1);
  std::array<pod::PodBasis, 3> bases;
  for (auto var : kVariables) bases[index_of(var)] = random_basis(var, p.grid.n, k, rng, centered);
  p.space = rom::make_space(std::move(bases), p.ops, p.f);
  return p;
}

inline rom::ReducedState random_reduced(Index k, std::mt19937_64& rng, Scalar scale = 1.0) {
  rom::ReducedState x;
  for (auto& c : x.coeffs) c = random_vector(k, rng, scale);
  return x;
}

// Grammeltvedt problem with its full trajectory.
struct GridRun {
  swe::Grid grid;
  swe::DifferenceOperators ops;
  Vector f;
  swe::FieldState ic;
  solver::FullRun run;
};

inline GridRun grammeltvedt_run(Index nx, Index ny, Scalar dt, Index nt) {
  const swe::PhysicalConstants c;
  GridRun r;
  r.grid = swe::build_grid(nx, ny, c);
  r.ops = swe::build_operators(r.grid);
  r.f = swe::coriolis(r.grid, c);
  r.ic = swe::initial_state(r.grid, r.ops, r.f, c);
  solver::SolverConfig cfg;
  cfg.dt = dt;
  cfg.Nt = nt;
  r.run = solver::run_full(r.ic, cfg, r.grid, r.ops, r.f);
  return r;
}

}  // namespace testing
