#include "swerom/binary_io.hpp"
#include "swerom/solver.hpp"

namespace swerom::solver {

namespace {
constexpr std::string_view kMagic = "SWESNAP1";
constexpr std::uint64_t kHasStates = 1u << 0;
constexpr std::uint64_t kHasNonlinear = 1u << 1;
}  // namespace

// Layout (little-endian):
//   char[8] "SWESNAP1"
//   u64 Nx, u64 Ny, u64 n, u64 Nt, f64 dt, u64 flags, f64 L, f64 D
//   f64 times[Nt]
//   if flags & 1: u, v, phi      each n x Nt, column-major
//   if flags & 2: F11 .. F32     each n x Nt, column-major
void save_snapshots(const SnapshotSet& set, const std::string& path) {
  const Index n = set.n();
  const Index nt = set.count();
  auto check = [&](const Matrix& m) {
    if (m.rows() != n || m.cols() != nt)
      throw DimensionError("save_snapshots: matrix is " + std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()) + ", expected " + std::to_string(n) + "x" +
                           std::to_string(nt));
  };
  if (set.has_states)
    for (const auto& m : set.states) check(m);
  if (set.has_nonlinear)
    for (const auto& m : set.nonlinear) check(m);

  io::BinaryWriter w(path);
  w.magic(kMagic);
  w.u64(static_cast<std::uint64_t>(set.Nx));
  w.u64(static_cast<std::uint64_t>(set.Ny));
  w.u64(static_cast<std::uint64_t>(n));
  w.u64(static_cast<std::uint64_t>(nt));
  w.f64(set.dt);
  w.u64((set.has_states ? kHasStates : 0) | (set.has_nonlinear ? kHasNonlinear : 0));
  w.f64(set.L);
  w.f64(set.D);
  w.doubles(set.times.data(), nt);
  if (set.has_states)
    for (const auto& m : set.states) w.matrix(m);
  if (set.has_nonlinear)
    for (const auto& m : set.nonlinear) w.matrix(m);
  w.close();
}

SnapshotSet load_snapshots(const std::string& path) {
  io::BinaryReader r(path);
  r.expect_magic(kMagic);
  SnapshotSet set;
  set.Nx = static_cast<Index>(r.u64());
  set.Ny = static_cast<Index>(r.u64());
  const auto n = static_cast<Index>(r.u64());
  const auto nt = static_cast<Index>(r.u64());
  if (n != set.Nx * set.Ny)
    throw DimensionError("'" + path + "': stored n = " + std::to_string(n) + " but Nx*Ny = " +
                         std::to_string(set.Nx * set.Ny));
  set.dt = r.f64();
  const std::uint64_t flags = r.u64();
  if (flags & ~(kHasStates | kHasNonlinear))
    throw FileFormatError("'" + path + "': unknown flag bits");
  set.has_states = flags & kHasStates;
  set.has_nonlinear = flags & kHasNonlinear;
  set.L = r.f64();
  set.D = r.f64();
  set.times.resize(static_cast<std::size_t>(nt));
  r.doubles(set.times.data(), nt);
  if (set.has_states)
    for (auto& m : set.states) m = r.matrix(n, nt);
  if (set.has_nonlinear)
    for (auto& m : set.nonlinear) m = r.matrix(n, nt);
  if (!r.at_end()) throw FileFormatError("'" + path + "': trailing bytes after payload");
  return set;
}

}  // namespace swerom::solver
