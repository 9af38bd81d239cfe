#include "swerom/pod.hpp"

#include "swerom/binary_io.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace swerom::pod {

std::pair<Matrix, Vector> center_snapshots(const Matrix& snaps) {
  if (snaps.cols() < 1) throw DimensionError("center_snapshots: need at least one snapshot");
  Vector mean = snaps.rowwise().mean();
  Matrix centered = snaps.colwise() - mean;
  return {std::move(centered), std::move(mean)};
}

Scalar energy_index(const Vector& sigma, Index m) {
  if (m < 1 || m > sigma.size())
    throw ConfigError("energy_index: m = " + std::to_string(m) + " outside [1, " +
                      std::to_string(sigma.size()) + "]");
  const Scalar total = sigma.sum();
  if (!(total > 0)) throw NumericalError("energy_index: spectrum is identically zero");
  return sigma.head(m).sum() / total;
}

Index select_by_energy(const Vector& sigma, Scalar gamma) {
  if (gamma < 0 || gamma > 1) throw ConfigError("energy fraction must lie in [0, 1]");
  const Scalar total = sigma.sum();
  if (!(total > 0)) throw NumericalError("select_by_energy: spectrum is identically zero");
  Scalar acc = 0;
  for (Index m = 0; m < sigma.size(); ++m) {
    acc += sigma[m];
    if (acc / total >= gamma) return m + 1;
  }
  return sigma.size();
}

Index numerical_rank(const Vector& sigma, Index rows, Index cols) {
  if (sigma.size() == 0 || !(sigma[0] > 0)) return 0;
  const Scalar s1 = std::sqrt(sigma[0]);
  const Scalar tol =
      s1 * static_cast<Scalar>(std::max(rows, cols)) * std::numeric_limits<Scalar>::epsilon();
  Index r = 0;
  while (r < sigma.size() && std::sqrt(std::max<Scalar>(sigma[r], 0)) > tol) ++r;
  return r;
}

void fix_signs(Matrix& basis) {
  for (Index c = 0; c < basis.cols(); ++c) {
    Index at = 0;
    basis.col(c).cwiseAbs().maxCoeff(&at);
    if (basis(at, c) < 0) basis.col(c) *= -1;
  }
}

namespace {

// Left singular vectors and lambda = s^2, both in nonincreasing order.
std::pair<Matrix, Vector> svd_route(const Matrix& x) {
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU);
  return {svd.matrixU(), svd.singularValues().array().square().matrix()};
}

// Method of snapshots: K = X^T X (Nt x Nt), u_i = X v_i / sqrt(lambda_i).
std::pair<Matrix, Vector> correlation_route(const Matrix& x) {
  const Matrix k = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
  if (eig.info() != Eigen::Success) throw NumericalError("correlation eigensolver failed");
  const Index nt = k.rows();
  Vector lambda(nt);
  Matrix u(x.rows(), nt);
  for (Index i = 0; i < nt; ++i) {
    const Index src = nt - 1 - i;  // Eigen sorts ascending
    lambda[i] = std::max<Scalar>(eig.eigenvalues()[src], 0);
    const Vector col = x * eig.eigenvectors().col(src);
    const Scalar norm = col.norm();
    u.col(i) = norm > 0 ? Vector(col / norm) : Vector::Zero(x.rows());
  }
  return {std::move(u), std::move(lambda)};
}

}  // namespace

std::pair<Matrix, Vector> left_singular(const Matrix& snaps, Index count) {
  auto [u, lambda] = svd_route(snaps);
  if (count > u.cols())
    throw DimensionError("requested " + std::to_string(count) + " singular vectors, only " +
                         std::to_string(u.cols()) + " available");
  Matrix basis = u.leftCols(count);
  fix_signs(basis);
  return {std::move(basis), std::move(lambda)};
}

PodBasis compute_pod_basis(const Matrix& snaps, const ModeSelector& selector, Route route) {
  auto [u, lambda] = route == Route::Svd ? svd_route(snaps) : correlation_route(snaps);
  const Index rank = numerical_rank(lambda, snaps.rows(), snaps.cols());

  Index k = 0;
  if (selector.is_energy()) {
    k = select_by_energy(lambda, selector.gamma());
  } else {
    k = selector.k();
    if (k < 0) throw ConfigError("mode count must be nonnegative");
  }
  if (k > rank)
    throw DimensionError("requested " + std::to_string(k) +
                         " POD modes but the snapshot matrix has numerical rank " +
                         std::to_string(rank));

  PodBasis b;
  b.U = u.leftCols(k);
  fix_signs(b.U);
  b.W = b.U;
  b.sigma = std::move(lambda);
  b.k = k;
  b.gamma = k > 0 ? energy_index(b.sigma, k) : 0;
  b.xbar = Vector::Zero(snaps.rows());
  return b;
}

PodBasis build_pod(const Matrix& snaps, const ModeSelector& selector, bool centering, Route route) {
  if (!centering) return compute_pod_basis(snaps, selector, route);
  auto [centered, mean] = center_snapshots(snaps);
  PodBasis b = compute_pod_basis(centered, selector, route);
  b.xbar = std::move(mean);
  return b;
}

namespace {
constexpr std::string_view kMagic = "PODBAS1";
}

// Layout (little-endian):
//   char[8] "PODBAS1\0"
//   u64 n, u64 k, u64 variable tag (0 u, 1 v, 2 phi), u64 spectrum length s,
//   u64 galerkin (1 if W = U), f64 gamma
//   f64 xbar[n], f64 U[n*k] column-major, f64 sigma[s], then W[n*k] if galerkin == 0
void save_basis(const PodBasis& b, const std::string& path) {
  const bool galerkin = b.W.size() == 0 || b.W == b.U;
  io::BinaryWriter w(path);
  w.magic(kMagic);
  w.u64(static_cast<std::uint64_t>(b.U.rows()));
  w.u64(static_cast<std::uint64_t>(b.U.cols()));
  w.u64(static_cast<std::uint64_t>(index_of(b.tag)));
  w.u64(static_cast<std::uint64_t>(b.sigma.size()));
  w.u64(galerkin ? 1 : 0);
  w.f64(b.gamma);
  if (b.xbar.size() != b.U.rows()) throw DimensionError("save_basis: xbar length mismatch");
  w.vector(b.xbar);
  w.matrix(b.U);
  w.vector(b.sigma);
  if (!galerkin) w.matrix(b.W);
  w.close();
}

PodBasis load_basis(const std::string& path) {
  io::BinaryReader r(path);
  r.expect_magic(kMagic);
  PodBasis b;
  const auto n = static_cast<Index>(r.u64());
  b.k = static_cast<Index>(r.u64());
  const auto tag = r.u64();
  if (tag > 2) throw FileFormatError("'" + path + "': bad variable tag");
  b.tag = static_cast<Variable>(tag);
  const auto s = static_cast<Index>(r.u64());
  const bool galerkin = r.u64() == 1;
  b.gamma = r.f64();
  b.xbar = r.vector(n);
  b.U = r.matrix(n, b.k);
  b.sigma = r.vector(s);
  b.W = galerkin ? b.U : r.matrix(n, b.k);
  if (!r.at_end()) throw FileFormatError("'" + path + "': trailing bytes after payload");
  return b;
}

}  // namespace swerom::pod
