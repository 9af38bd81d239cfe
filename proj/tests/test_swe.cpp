#include "support.hpp"

#include <doctest.h>

using namespace swerom;
using testing::rel_diff;

TEST_CASE("grid spacing includes both end points") {
  const auto g = swe::build_grid(3, 3, 2.0, 2.0);
  CHECK(g.dx == 1.0);
  CHECK(g.dy == 1.0);
  CHECK(g.n == 9);
  CHECK(g.node(2, 1) == 5);
  CHECK_THROWS_AS(swe::build_grid(2, 5, 1.0, 1.0), ConfigError);
}

TEST_CASE("Grammeltvedt height at reference points") {
  const swe::PhysicalConstants c;
  CHECK(swe::grammeltvedt_height_at(0, c.D / 2, c) == doctest::Approx(2000.0).epsilon(1e-14));
  CHECK(swe::grammeltvedt_height_at(c.L / 4, c.D / 2, c) == doctest::Approx(2133.0).epsilon(1e-14));

  // theta = 9 (y - D/2) / (2 D) = -9/4 at y = 0
  const Scalar theta = -9.0 / 4.0;
  const Scalar sech = 1.0 / std::cosh(theta);
  const Scalar expected = c.H0 + c.H1 * std::tanh(theta) + c.H2 * sech * sech * 1.0;
  CHECK(swe::grammeltvedt_height_at(c.L / 4, 0, c) == doctest::Approx(expected).epsilon(1e-14));

  const Scalar literal = c.H0 + c.H1 + std::tanh(theta) + c.H2 * sech * sech;
  CHECK(swe::grammeltvedt_height_at(c.L / 4, 0, c, swe::GrammeltvedtForm::Literal) ==
        doctest::Approx(literal).epsilon(1e-14));
}

TEST_CASE("geopotential from height") {
  Vector h(2);
  h << 2000.0, 0.025;
  const Vector phi = swe::geopotential_from_height(h, 10.0);
  CHECK(phi[0] == doctest::Approx(2.0 * std::sqrt(20000.0)).epsilon(1e-15));
  CHECK(phi[1] == doctest::Approx(1.0).epsilon(1e-15));
  Vector bad(1);
  bad << -1.0;
  CHECK_THROWS_AS(swe::geopotential_from_height(bad, 10.0), NumericalError);

  const swe::PhysicalConstants c;
  const auto g = swe::build_grid(31, 23, c);
  const Vector hg = swe::grammeltvedt_height(g, c);
  const Vector pg = swe::geopotential_from_height(hg, c.g);
  CHECK(pg.minCoeff() >= 2 * std::sqrt(c.g * hg.minCoeff()) - 1e-12);
  CHECK(pg.maxCoeff() <= 2 * std::sqrt(c.g * hg.maxCoeff()) + 1e-12);
}

TEST_CASE("geostrophic wind") {
  const swe::PhysicalConstants c;
  const auto g = swe::build_grid(31, 23, c);
  const auto ops = swe::build_operators(g);
  const Vector f = swe::coriolis(g, c);

  SUBCASE("constant height gives no wind") {
    const auto [u, v] = swe::geostrophic_wind(g, Vector::Constant(g.n, 1234.0), ops, f, c);
    CHECK(u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(v.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("walls carry no meridional wind") {
    const auto [u, v] = swe::geostrophic_wind(g, swe::grammeltvedt_height(g, c), ops, f, c);
    for (Index i = 0; i < g.Nx; ++i) {
      CHECK(v[g.node(i, 0)] == 0.0);
      CHECK(v[g.node(i, g.Ny - 1)] == 0.0);
    }
  }
  SUBCASE("v at x = 0, y = D/2 approaches the analytic value at second order") {
    // dh/dx = H2 2 pi / L at that point; f = f_hat on the mid row.
    const Scalar analytic = c.g / c.f_hat * c.H2 * 2 * M_PI / c.L;
    Scalar prev_err = 0;
    for (Index nx : {31, 61, 121}) {
      const auto gg = swe::build_grid(nx, 23, c);
      const auto oo = swe::build_operators(gg);
      const auto [u, v] = swe::geostrophic_wind(gg, swe::grammeltvedt_height(gg, c), oo,
                                                swe::coriolis(gg, c), c);
      const Scalar err = std::abs(v[gg.node(0, 11)] - analytic);
      if (prev_err > 0) CHECK(err < prev_err / 3.5);
      prev_err = err;
    }
  }
}

TEST_CASE("difference operators") {
  const auto g = swe::build_grid(9, 7, 6.0, 3.0);
  const auto ops = swe::build_operators(g);
  const Vector ones = Vector::Ones(g.n);
  CHECK((ops.Ax * ones).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ops.Ay * ones).cwiseAbs().maxCoeff() == 0.0);

  SUBCASE("linear in y: exact slope everywhere") {
    Vector w(g.n);
    for (Index j = 0; j < g.Ny; ++j)
      for (Index i = 0; i < g.Nx; ++i) w[g.node(i, j)] = 3.0 * g.y(j) - 1.0;
    const Vector d = ops.Ay * w;
    for (Index p = 0; p < g.n; ++p) CHECK(d[p] == doctest::Approx(3.0).epsilon(1e-13));
  }
  SUBCASE("periodic field: identical derivative at the duplicated column") {
    Vector w(g.n);
    for (Index j = 0; j < g.Ny; ++j)
      for (Index i = 0; i < g.Nx; ++i) w[g.node(i, j)] = std::sin(2 * M_PI * g.x(i) / g.L) + g.y(j);
    const Vector d = ops.Ax * w;
    for (Index j = 0; j < g.Ny; ++j)
      CHECK(std::abs(d[g.node(0, j)] - d[g.node(g.Nx - 1, j)]) <= 1e-15);
  }
  SUBCASE("operators match the stencil oracle entrywise") {
    std::mt19937_64 rng(3);
    const Vector w = testing::random_vector(g.n, rng);
    const Vector dx = ops.Ax * w, dy = ops.Ay * w;
    for (Index j = 0; j < g.Ny; ++j)
      for (Index i = 0; i < g.Nx; ++i) {
        CHECK(dx[g.node(i, j)] == doctest::Approx(testing::dx_at(g, w, i, j)).epsilon(1e-14));
        CHECK(dy[g.node(i, j)] == doctest::Approx(testing::dy_at(g, w, i, j)).epsilon(1e-14));
      }
  }
}

TEST_CASE("Ax converges at second order on sin(2 pi x / L)") {
  const Scalar L = 1.0;
  Scalar prev = 0;
  for (Index nx : {17, 33, 65, 129}) {
    const auto g = swe::build_grid(nx, 3, L, 1.0);
    const auto ops = swe::build_operators(g);
    Vector w(g.n), exact(g.n);
    for (Index j = 0; j < g.Ny; ++j)
      for (Index i = 0; i < g.Nx; ++i) {
        w[g.node(i, j)] = std::sin(2 * M_PI * g.x(i) / L);
        exact[g.node(i, j)] = 2 * M_PI / L * std::cos(2 * M_PI * g.x(i) / L);
      }
    const Scalar err = (ops.Ax * w - exact).cwiseAbs().maxCoeff();
    if (prev > 0) {
      const Scalar order = std::log2(prev / err);
      CHECK(order > 1.9);
    }
    prev = err;
  }
}

TEST_CASE("nonlinear terms") {
  SUBCASE("constant state gives zero terms") {
    const auto g = swe::build_grid(6, 5, 2.0, 2.0);
    const auto ops = swe::build_operators(g);
    swe::FieldState s{Vector::Constant(g.n, 2.0), Vector::Constant(g.n, -1.0),
                      Vector::Constant(g.n, 5.0), 0};
    for (auto t : kTerms) CHECK(swe::eval_nonlinear(t, s, ops).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("v = 0 removes F12 and F21") {
    const auto g = swe::build_grid(5, 5, 2.0, 2.0);
    const auto ops = swe::build_operators(g);
    std::mt19937_64 rng(1);
    auto s = testing::random_state(g.n, rng);
    s.v.setZero();
    CHECK(swe::eval_nonlinear(Term::F12, s, ops).cwiseAbs().maxCoeff() == 0.0);
    CHECK(swe::eval_nonlinear(Term::F21, s, ops).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("loop oracle on grids up to 7x7") {
    std::mt19937_64 rng(11);
    for (auto [nx, ny] : {std::pair<Index, Index>{3, 3}, {5, 5}, {7, 4}, {7, 7}}) {
      const auto g = swe::build_grid(nx, ny, 2.0, 1.5);
      const auto ops = swe::build_operators(g);
      const auto s = testing::random_state(g.n, rng);
      for (auto t : kTerms)
        CHECK(rel_diff(swe::eval_nonlinear(t, s, ops), testing::loop_nonlinear(t, s, g)) <= 1e-13);
    }
  }
}

TEST_CASE("full right-hand side") {
  const auto g = swe::build_grid(5, 5, 2.0, 2.0);
  const auto ops = swe::build_operators(g);
  std::mt19937_64 rng(5);
  const Vector f = testing::random_vector(g.n, rng);

  SUBCASE("rest state is steady") {
    swe::FieldState s{Vector::Zero(g.n), Vector::Zero(g.n), Vector::Constant(g.n, 280.0), 0};
    const auto r = swe::full_rhs(s, ops, f);
    CHECK(r.du.norm() == 0.0);
    CHECK(r.dv.norm() == 0.0);
    CHECK(r.dphi.norm() == 0.0);
  }
  SUBCASE("composition of the loop oracles") {
    const auto s = testing::random_state(g.n, rng);
    const auto r = swe::full_rhs(s, ops, f);
    auto F = [&](Term t) { return testing::loop_nonlinear(t, s, g); };
    const Vector du = -F(Term::F11) - F(Term::F12) + f.cwiseProduct(s.v);
    const Vector dv = -F(Term::F21) - F(Term::F22) - f.cwiseProduct(s.u);
    const Vector dphi = -F(Term::F31) - F(Term::F32);
    CHECK(rel_diff(r.du, du) <= 1e-13);
    CHECK(rel_diff(r.dv, dv) <= 1e-13);
    CHECK(rel_diff(r.dphi, dphi) <= 1e-13);
  }
}

TEST_CASE("geostrophic balance residual shrinks under refinement") {
  // f-plane with height varying only in y: v = 0 and u is x-independent, so
  // v' = g dh/dy - phi/2 dphi/dy is the only imbalance, a discretization error.
  swe::PhysicalConstants c;
  c.beta = 0;
  Scalar prev = 0;
  for (Index ny : {23, 45, 89, 177}) {
    const auto g = swe::build_grid(11, ny, c);
    const auto ops = swe::build_operators(g);
    const Vector f = swe::coriolis(g, c);
    Vector h(g.n);
    for (Index j = 0; j < g.Ny; ++j)
      for (Index i = 0; i < g.Nx; ++i)
        h[g.node(i, j)] = c.H0 + c.H1 * std::tanh(9.0 * (g.y(j) - c.D / 2) / (2 * c.D));
    const auto [u, v] = swe::geostrophic_wind(g, h, ops, f, c);
    CHECK(v.cwiseAbs().maxCoeff() == 0.0);
    swe::FieldState s{u, v, swe::geopotential_from_height(h, c.g), 0};
    const auto r = swe::full_rhs(s, ops, f);
    CHECK(r.du.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(r.dphi.cwiseAbs().maxCoeff() <= 1e-12);
    Scalar res = 0;
    for (Index j = 1; j + 1 < g.Ny; ++j)
      for (Index i = 0; i < g.Nx; ++i) res = std::max(res, std::abs(r.dv[g.node(i, j)]));
    if (prev > 0) CHECK(std::log2(prev / res) > 1.5);
    prev = res;
  }
}

TEST_CASE("CFL indicator") {
  CHECK(swe::cfl_indicator(2000.0, 10.0, 100.0, 200.0) ==
        doctest::Approx(std::sqrt(20000.0) * 0.5).epsilon(1e-15));
}
