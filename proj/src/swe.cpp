#include "swerom/swe.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace swerom {

std::string_view name_of(Variable v) {
  switch (v) {
    case Variable::U: return "u";
    case Variable::V: return "v";
    case Variable::Phi: return "phi";
  }
  return "?";
}

std::string_view name_of(Term t) {
  static constexpr std::array<std::string_view, 6> names{"F11", "F12", "F21",
                                                         "F22", "F31", "F32"};
  return names[index_of(t)];
}

Variable parse_variable(std::string_view s) {
  for (auto v : kVariables)
    if (name_of(v) == s) return v;
  throw ConfigError("unknown variable '" + std::string(s) + "'");
}

Term parse_term(std::string_view s) {
  for (auto t : kTerms)
    if (name_of(t) == s) return t;
  throw ConfigError("unknown nonlinear term '" + std::string(s) + "'");
}

namespace swe {

Grid build_grid(Index Nx, Index Ny, Scalar L, Scalar D) {
  if (Nx < 3 || Ny < 3)
    throw ConfigError("grid needs at least 3 points per direction, got " + std::to_string(Nx) +
                      "x" + std::to_string(Ny));
  if (!(L > 0) || !(D > 0)) throw ConfigError("domain lengths must be positive");
  Grid g;
  g.Nx = Nx;
  g.Ny = Ny;
  g.L = L;
  g.D = D;
  g.dx = L / static_cast<Scalar>(Nx - 1);
  g.dy = D / static_cast<Scalar>(Ny - 1);
  g.n = Nx * Ny;
  return g;
}

Grid build_grid(Index Nx, Index Ny, const PhysicalConstants& consts) {
  return build_grid(Nx, Ny, consts.L, consts.D);
}

const Vector& FieldState::operator[](Variable var) const {
  switch (var) {
    case Variable::U: return u;
    case Variable::V: return v;
    case Variable::Phi: return phi;
  }
  return u;
}

Vector& FieldState::operator[](Variable var) {
  return const_cast<Vector&>(static_cast<const FieldState&>(*this)[var]);
}

DifferenceOperators build_operators(const Grid& grid) {
  const Index Nx = grid.Nx, Ny = grid.Ny;
  std::vector<Triplet> tx, ty;
  tx.reserve(2 * grid.n);
  ty.reserve(2 * grid.n);
  const Scalar cx = 1.0 / (2.0 * grid.dx);
  const Scalar cy = 1.0 / (2.0 * grid.dy);
  for (Index j = 0; j < Ny; ++j) {
    for (Index i = 0; i < Nx; ++i) {
      const Index row = grid.node(i, j);
      // Columns 0 and Nx-1 coincide; both use neighbours 1 and Nx-2.
      const Index east = (i == Nx - 1) ? 1 : i + 1;
      const Index west = (i == 0) ? Nx - 2 : i - 1;
      tx.emplace_back(row, grid.node(east, j), cx);
      tx.emplace_back(row, grid.node(west, j), -cx);

      if (j == 0) {
        ty.emplace_back(row, grid.node(i, 1), 1.0 / grid.dy);
        ty.emplace_back(row, row, -1.0 / grid.dy);
      } else if (j == Ny - 1) {
        ty.emplace_back(row, row, 1.0 / grid.dy);
        ty.emplace_back(row, grid.node(i, Ny - 2), -1.0 / grid.dy);
      } else {
        ty.emplace_back(row, grid.node(i, j + 1), cy);
        ty.emplace_back(row, grid.node(i, j - 1), -cy);
      }
    }
  }
  DifferenceOperators ops;
  ops.Ax.resize(grid.n, grid.n);
  ops.Ay.resize(grid.n, grid.n);
  ops.Ax.setFromTriplets(tx.begin(), tx.end());
  ops.Ay.setFromTriplets(ty.begin(), ty.end());
  ops.Ax.makeCompressed();
  ops.Ay.makeCompressed();
  return ops;
}

Vector coriolis(const Grid& grid, const PhysicalConstants& consts) {
  Vector f(grid.n);
  for (Index j = 0; j < grid.Ny; ++j) {
    const Scalar fy = consts.f_hat + consts.beta * (grid.y(j) - grid.D / 2);
    f.segment(j * grid.Nx, grid.Nx).setConstant(fy);
  }
  return f;
}

Scalar grammeltvedt_height_at(Scalar x, Scalar y, const PhysicalConstants& c,
                              GrammeltvedtForm form) {
  const Scalar theta = 9.0 * (c.D / 2 - y) / (2.0 * c.D);
  const Scalar sech = 1.0 / std::cosh(theta);
  const Scalar wave = c.H2 * sech * sech * std::sin(2.0 * std::numbers::pi * x / c.L);
  if (form == GrammeltvedtForm::Literal) return c.H0 + c.H1 + std::tanh(theta) + wave;
  return c.H0 + c.H1 * std::tanh(theta) + wave;
}

Vector grammeltvedt_height(const Grid& grid, const PhysicalConstants& consts,
                           GrammeltvedtForm form) {
  Vector h(grid.n);
  for (Index j = 0; j < grid.Ny; ++j)
    for (Index i = 0; i < grid.Nx; ++i)
      h[grid.node(i, j)] = grammeltvedt_height_at(grid.x(i), grid.y(j), consts, form);
  return h;
}

bool is_wall_node(const Grid& grid, Index node) {
  const Index j = node / grid.Nx;
  return j == 0 || j == grid.Ny - 1;
}

void enforce_wall(const Grid& grid, Vector& v) {
  v.head(grid.Nx).setZero();
  v.tail(grid.Nx).setZero();
}

std::pair<Vector, Vector> geostrophic_wind(const Grid& grid, const Vector& h,
                                           const DifferenceOperators& ops, const Vector& f,
                                           const PhysicalConstants& consts) {
  if (h.size() != grid.n || f.size() != grid.n)
    throw DimensionError("geostrophic_wind: field length does not match grid");
  if ((f.array().abs() < 1e-12).any())
    throw NumericalError("geostrophic_wind: Coriolis parameter vanishes on the grid");
  const Vector g_over_f = consts.g * f.cwiseInverse();
  Vector u = -g_over_f.cwiseProduct(ops.Ay * h);
  Vector v = g_over_f.cwiseProduct(ops.Ax * h);
  enforce_wall(grid, v);
  return {std::move(u), std::move(v)};
}

Vector geopotential_from_height(const Vector& h, Scalar g) {
  if ((h.array() <= 0).any())
    throw NumericalError("geopotential_from_height: fluid depth must be positive");
  return 2.0 * (g * h.array()).sqrt().matrix();
}

FieldState initial_state(const Grid& grid, const DifferenceOperators& ops, const Vector& f,
                         const PhysicalConstants& consts, GrammeltvedtForm form) {
  const Vector h = grammeltvedt_height(grid, consts, form);
  auto [u, v] = geostrophic_wind(grid, h, ops, f, consts);
  FieldState s;
  s.u = std::move(u);
  s.v = std::move(v);
  s.phi = geopotential_from_height(h, consts.g);
  s.time = 0;
  return s;
}

namespace {
constexpr Product kF11[] = {{Variable::U, Variable::U, 1.0}, {Variable::Phi, Variable::Phi, 0.5}};
constexpr Product kF12[] = {{Variable::V, Variable::U, 1.0}};
constexpr Product kF21[] = {{Variable::U, Variable::V, 1.0}};
constexpr Product kF22[] = {{Variable::V, Variable::V, 1.0}, {Variable::Phi, Variable::Phi, 0.5}};
constexpr Product kF31[] = {{Variable::Phi, Variable::U, 0.5}, {Variable::U, Variable::Phi, 1.0}};
constexpr Product kF32[] = {{Variable::Phi, Variable::V, 0.5}, {Variable::V, Variable::Phi, 1.0}};
}  // namespace

std::span<const Product> products_of(Term t) {
  switch (t) {
    case Term::F11: return kF11;
    case Term::F12: return kF12;
    case Term::F21: return kF21;
    case Term::F22: return kF22;
    case Term::F31: return kF31;
    case Term::F32: return kF32;
  }
  return {};
}

Vector eval_nonlinear(Term term, const FieldState& state, const DifferenceOperators& ops) {
  const Index n = ops.Ax.rows();
  if (state.u.size() != n || state.v.size() != n || state.phi.size() != n)
    throw DimensionError("eval_nonlinear: state length does not match operators");
  const SparseMatrix& d = ops.along(direction_of(term));
  Vector out = Vector::Zero(n);
  for (const Product& p : products_of(term))
    out.array() += p.coeff * state[p.a].array() * (d * state[p.b]).array();
  return out;
}

Tendency full_rhs(const FieldState& state, const DifferenceOperators& ops, const Vector& f) {
  if (f.size() != state.size()) throw DimensionError("full_rhs: Coriolis length mismatch");
  Tendency t;
  t.du = -eval_nonlinear(Term::F11, state, ops) - eval_nonlinear(Term::F12, state, ops) +
         f.cwiseProduct(state.v);
  t.dv = -eval_nonlinear(Term::F21, state, ops) - eval_nonlinear(Term::F22, state, ops) -
         f.cwiseProduct(state.u);
  t.dphi = -eval_nonlinear(Term::F31, state, ops) - eval_nonlinear(Term::F32, state, ops);
  return t;
}

Scalar cfl_indicator(Scalar h_max, Scalar g, Scalar dt, Scalar dx) {
  return std::sqrt(g * h_max) * dt / dx;
}

}  // namespace swe
}  // namespace swerom
