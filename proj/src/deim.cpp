#include "swerom/deim.hpp"

#include "swerom/binary_io.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <chrono>
#include <cmath>

namespace swerom::deim {

namespace {

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// First index of the largest |v_i|.
Index argmax_abs(const Vector& v) {
  Index best = 0;
  Scalar best_val = -1;
  for (Index i = 0; i < v.size(); ++i) {
    const Scalar a = std::abs(v[i]);
    if (a > best_val) {
      best_val = a;
      best = i;
    }
  }
  return best;
}

}  // namespace

Matrix gather_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

Vector gather_rows(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Index>(r)] = v[rows[r]];
  return out;
}

std::vector<Index> deim_select_points(const Matrix& V) {
  const Index m = V.cols();
  if (m < 1 || m > V.rows())
    throw DimensionError("deim_select_points: need 1 <= m <= n, got m = " + std::to_string(m));
  std::vector<Index> points;
  points.reserve(static_cast<std::size_t>(m));
  points.push_back(argmax_abs(V.col(0)));
  for (Index j = 1; j < m; ++j) {
    const Matrix pv = gather_rows(Matrix(V.leftCols(j)), points);
    Eigen::FullPivLU<Matrix> lu(pv);
    if (!lu.isInvertible())
      throw SingularMatrixError("deim_select_points: interpolation system singular at stage " +
                                std::to_string(j + 1));
    const Vector c = lu.solve(gather_rows(Vector(V.col(j)), points));
    const Vector r = V.col(j) - V.leftCols(j) * c;
    const Index next = argmax_abs(r);
    for (Index p : points)
      if (p == next)
        throw SingularMatrixError("deim_select_points: residual vanishes at stage " +
                                  std::to_string(j + 1));
    points.push_back(next);
  }
  return points;
}

DeimOperator build_deim_operator(Term term, const Matrix& V, const std::vector<Index>& points,
                                 const rom::RomSpace& space) {
  const Index m = static_cast<Index>(points.size());
  if (V.cols() != m) throw DimensionError("build_deim_operator: V has " + std::to_string(V.cols()) +
                                          " columns but " + std::to_string(m) + " points given");
  if (V.rows() != space.n()) throw DimensionError("build_deim_operator: V row count mismatch");
  for (Index p : points)
    if (p < 0 || p >= space.n()) throw DimensionError("build_deim_operator: point out of range");

  DeimOperator op;
  op.term = term;
  op.V = V;
  op.points = points;

  const Matrix ptv = gather_rows(V, points);
  Eigen::JacobiSVD<Matrix> svd(ptv);
  const Vector s = svd.singularValues();
  op.condition = s[m - 1] > 0 ? s[0] / s[m - 1] : std::numeric_limits<Scalar>::infinity();
  Eigen::FullPivLU<Matrix> lu(ptv);
  if (!lu.isInvertible())
    throw SingularMatrixError("build_deim_operator: P^T V is singular for " +
                              std::string(name_of(term)));
  const Matrix& w = space.basis(equation_of(term)).W;
  // E = W^T V (P^T V)^{-1}  <=>  (P^T V)^T E^T = V^T W
  op.E = Eigen::FullPivLU<Matrix>(ptv.transpose()).solve(Matrix(V.transpose() * w)).transpose();

  const int d = static_cast<int>(direction_of(term));
  for (const auto& p : swe::products_of(term)) {
    SampledProduct sp;
    sp.a = p.a;
    sp.b = p.b;
    sp.coeff = p.coeff;
    sp.Am = gather_rows(space.basis(p.a).U, points);
    sp.Bm = gather_rows(space.dbasis[index_of(p.b)][d], points);
    sp.abar = gather_rows(space.basis(p.a).xbar, points);
    sp.dbbar = gather_rows(space.dmean[index_of(p.b)][d], points);
    op.products.push_back(std::move(sp));
  }
  return op;
}

Vector deim_nonlinear(const DeimOperator& op, const rom::ReducedState& xt) {
  Vector sampled = Vector::Zero(op.m());
  for (const auto& p : op.products) {
    if (xt[p.a].size() != p.Am.cols() || xt[p.b].size() != p.Bm.cols())
      throw DimensionError("deim_nonlinear: coefficient length mismatch");
    sampled.array() +=
        p.coeff * (p.abar + p.Am * xt[p.a]).array() * (p.dbbar + p.Bm * xt[p.b]).array();
  }
  return op.E * sampled;
}

rom::TermTensors deim_tensor_coefficients(const DeimOperator& op) {
  rom::TermTensors tt;
  tt.term = op.term;
  const Matrix et = op.E.transpose();
  for (const auto& p : op.products)
    tt.products.push_back(
        rom::product_tensor(et, p.Am, p.Bm, p.abar, p.dbbar, swe::Product{p.a, p.b, p.coeff}));
  return tt;
}

rom::TensorCoefficients deim_tensors(const std::array<DeimOperator, 6>& ops,
                                     const rom::RomSpace& space) {
  rom::TensorCoefficients tc;
  tc.k = space.k();
  for (auto t : kTerms) {
    if (ops[index_of(t)].term != t) throw ConfigError("deim_tensors: operators out of order");
    tc.terms[index_of(t)] = deim_tensor_coefficients(ops[index_of(t)]);
  }
  rom::attach_linear_terms(tc, space);
  return tc;
}

DeimBuild build_deim_operators(const std::array<Matrix, 6>& term_snapshots,
                               const rom::RomSpace& space, Index m) {
  DeimBuild out;
  for (auto t : kTerms) {
    auto t0 = Clock::now();
    auto [v, lambda] = pod::left_singular(term_snapshots[index_of(t)], m);
    out.svd_seconds += seconds_since(t0);
    out.spectra[index_of(t)] = std::move(lambda);

    t0 = Clock::now();
    const auto points = deim_select_points(v);
    out.points_seconds += seconds_since(t0);

    t0 = Clock::now();
    out.ops[index_of(t)] = build_deim_operator(t, v, points, space);
    out.coefficient_seconds += seconds_since(t0);
  }
  return out;
}

Vector max_abs_over_time(const Matrix& term_snapshots) {
  return term_snapshots.cwiseAbs().rowwise().maxCoeff();
}

namespace {
constexpr std::string_view kMagic = "DEIMOP1";
}

// Layout (little-endian):
//   char[8] "DEIMOP1\0", u64 n, u64 m, u64 k, u64 term tag
//   i64 points[m], f64 E[k*m], f64 V[n*m], f64 cond(P^T V)
//   u64 product count, per product:
//     u64 a, u64 b, f64 coeff, f64 Am[m*k], f64 Bm[m*k], f64 abar[m], f64 dbbar[m]
// All matrices column-major.
void save_operator(const DeimOperator& op, const std::string& path) {
  const Index m = op.m();
  const Index k = op.E.rows();
  io::BinaryWriter w(path);
  w.magic(kMagic);
  w.u64(static_cast<std::uint64_t>(op.V.rows()));
  w.u64(static_cast<std::uint64_t>(m));
  w.u64(static_cast<std::uint64_t>(k));
  w.u64(static_cast<std::uint64_t>(index_of(op.term)));
  for (Index p : op.points) w.i64(p);
  w.matrix(op.E);
  w.matrix(op.V);
  w.f64(op.condition);
  w.u64(op.products.size());
  for (const auto& p : op.products) {
    w.u64(static_cast<std::uint64_t>(index_of(p.a)));
    w.u64(static_cast<std::uint64_t>(index_of(p.b)));
    w.f64(p.coeff);
    w.matrix(p.Am);
    w.matrix(p.Bm);
    w.vector(p.abar);
    w.vector(p.dbbar);
  }
  w.close();
}

DeimOperator load_operator(const std::string& path) {
  io::BinaryReader r(path);
  r.expect_magic(kMagic);
  DeimOperator op;
  const auto n = static_cast<Index>(r.u64());
  const auto m = static_cast<Index>(r.u64());
  const auto k = static_cast<Index>(r.u64());
  const auto tag = r.u64();
  if (tag > 5) throw FileFormatError("'" + path + "': bad term tag");
  op.term = static_cast<Term>(tag);
  for (Index i = 0; i < m; ++i) {
    const auto p = r.i64();
    if (p < 0 || p >= n) throw FileFormatError("'" + path + "': interpolation point out of range");
    op.points.push_back(p);
  }
  op.E = r.matrix(k, m);
  op.V = r.matrix(n, m);
  op.condition = r.f64();
  const auto count = r.u64();
  if (count > 2) throw FileFormatError("'" + path + "': bad product count");
  for (std::uint64_t i = 0; i < count; ++i) {
    SampledProduct p;
    const auto a = r.u64(), b = r.u64();
    if (a > 2 || b > 2) throw FileFormatError("'" + path + "': bad variable tag");
    p.a = static_cast<Variable>(a);
    p.b = static_cast<Variable>(b);
    p.coeff = r.f64();
    p.Am = r.matrix(m, k);
    p.Bm = r.matrix(m, k);
    p.abar = r.vector(m);
    p.dbbar = r.vector(m);
    op.products.push_back(std::move(p));
  }
  if (!r.at_end()) throw FileFormatError("'" + path + "': trailing bytes after payload");
  return op;
}

}  // namespace swerom::deim
