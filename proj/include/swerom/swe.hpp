#pragma once

// Semi-discrete shallow water model on a beta-plane channel: grid, constants,
// initial conditions, difference operators and the nonlinear advection terms.
//
// Storage: every field is a length-n vector with the x index varying fastest,
// i.e. node (i, j) lives at i + Nx * j. DEIM indices and snapshot files rely
// on this order.

#include "swerom/types.hpp"

#include <span>

namespace swerom::swe {

struct PhysicalConstants {
  Scalar L = 6.0e6;       // channel length in x [m]
  Scalar D = 4.4e6;       // channel width in y [m]
  Scalar f_hat = 1.0e-4;  // Coriolis parameter at y = D/2 [1/s]
  Scalar beta = 1.5e-11;  // df/dy [1/(s m)]
  Scalar g = 10.0;        // [m/s^2]
  Scalar H0 = 2000.0;     // [m]
  Scalar H1 = 220.0;      // [m]
  Scalar H2 = 133.0;      // [m]
};

struct Grid {
  Index Nx = 0;
  Index Ny = 0;
  Scalar L = 0;
  Scalar D = 0;
  Scalar dx = 0;
  Scalar dy = 0;
  Index n = 0;

  Index node(Index i, Index j) const { return i + Nx * j; }
  Scalar x(Index i) const { return static_cast<Scalar>(i) * dx; }
  Scalar y(Index j) const { return static_cast<Scalar>(j) * dy; }
};

Grid build_grid(Index Nx, Index Ny, const PhysicalConstants& consts = {});
Grid build_grid(Index Nx, Index Ny, Scalar L, Scalar D);

struct FieldState {
  Vector u;
  Vector v;
  Vector phi;
  Scalar time = 0;

  const Vector& operator[](Variable var) const;
  Vector& operator[](Variable var);
  Index size() const { return u.size(); }
};

struct DifferenceOperators {
  SparseMatrix Ax;
  SparseMatrix Ay;

  const SparseMatrix& along(Direction d) const { return d == Direction::X ? Ax : Ay; }
};

// Central differences in the interior. In x the first and last columns are
// the same physical point (x = 0 and x = L), so the wrap skips the duplicate.
// In y the boundary rows use first-order one-sided differences.
DifferenceOperators build_operators(const Grid& grid);

// f(y) = f_hat + beta (y - D/2), replicated along x.
Vector coriolis(const Grid& grid, const PhysicalConstants& consts);

enum class GrammeltvedtForm {
  Standard,  // H0 + H1 tanh(theta) + H2 sech^2(theta) sin(2 pi x / L)
  Literal,   // H0 + H1 + tanh(theta) + H2 sech^2(theta) sin(2 pi x / L)
};

Scalar grammeltvedt_height_at(Scalar x, Scalar y, const PhysicalConstants& consts,
                              GrammeltvedtForm form = GrammeltvedtForm::Standard);

Vector grammeltvedt_height(const Grid& grid, const PhysicalConstants& consts,
                           GrammeltvedtForm form = GrammeltvedtForm::Standard);

// u = -(g/f) Ay h, v = (g/f) Ax h, v zeroed on the y-boundary rows.
std::pair<Vector, Vector> geostrophic_wind(const Grid& grid, const Vector& h,
                                           const DifferenceOperators& ops,
                                           const Vector& f, const PhysicalConstants& consts);

Vector geopotential_from_height(const Vector& h, Scalar g);

// Full Grammeltvedt/geostrophic initial state.
FieldState initial_state(const Grid& grid, const DifferenceOperators& ops, const Vector& f,
                         const PhysicalConstants& consts,
                         GrammeltvedtForm form = GrammeltvedtForm::Standard);

// Zero the v entries on the y = 0 and y = D rows.
void enforce_wall(const Grid& grid, Vector& v);
bool is_wall_node(const Grid& grid, Index node);

// One summand of a nonlinear term: coeff * a (.) (D b).
struct Product {
  Variable a;
  Variable b;
  Scalar coeff;
};

// Summands of each term:
//   F11 = u.Ax u + 1/2 phi.Ax phi     F12 = v.Ay u
//   F21 = u.Ax v                      F22 = v.Ay v + 1/2 phi.Ay phi
//   F31 = 1/2 phi.Ax u + u.Ax phi     F32 = 1/2 phi.Ay v + v.Ay phi
std::span<const Product> products_of(Term t);

Vector eval_nonlinear(Term term, const FieldState& state, const DifferenceOperators& ops);

struct Tendency {
  Vector du;
  Vector dv;
  Vector dphi;
};

// u' = -F11 - F12 + f v,  v' = -F21 - F22 - f u,  phi' = -F31 - F32
Tendency full_rhs(const FieldState& state, const DifferenceOperators& ops, const Vector& f);

// sqrt(g h_max) dt / dx; the implicit scheme is exercised up to 8.9301.
Scalar cfl_indicator(Scalar h_max, Scalar g, Scalar dt, Scalar dx);
inline constexpr Scalar kMaxTestedCfl = 8.9301;

}  // namespace swerom::swe
