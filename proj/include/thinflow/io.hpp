#pragma once

#include <bit>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "thinflow/errors.hpp"
#include "thinflow/run.hpp"

namespace thinflow {

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {
template <typename T>
void put_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t k = 0; k < sizeof(T) / 2; ++k) std::swap(bytes[k], bytes[sizeof(T) - 1 - k]);
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}
template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error("checkpoint is truncated");
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t k = 0; k < sizeof(T) / 2; ++k) std::swap(bytes[k], bytes[sizeof(T) - 1 - k]);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}
}  // namespace detail

constexpr char checkpoint_magic[4] = {'T', 'F', 'C', 'K'};
constexpr std::uint32_t checkpoint_version = 1;

/// Little-endian layout:
///   char[4] "TFCK", u32 version, i32 n_sigma, i32 n_theta,
///   f64 eps, r_max, sigma_max, d_sigma, d_theta, alpha, beta, t,
///   f64 w[n_sigma * n_theta] row-major (row = sigma index).
inline void write_checkpoint(const std::string& path, const SolverState<double>& s, const MappedGrid<double>& grid) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write(checkpoint_magic, 4);
  detail::put_le<std::uint32_t>(os, checkpoint_version);
  detail::put_le<std::int32_t>(os, grid.n_sigma);
  detail::put_le<std::int32_t>(os, grid.n_theta);
  for (double v : {grid.epsilon(), grid.r_max, grid.sigma_max, grid.d_sigma, grid.d_theta, s.alpha, s.beta, s.t})
    detail::put_le<double>(os, v);
  for (int i = 0; i < grid.n_sigma; ++i)
    for (int j = 0; j < grid.n_theta; ++j) detail::put_le<double>(os, s.w(i, j));
  if (!os) throw Error("write failed for " + path);
}

struct Checkpoint {
  MappedGrid<double> grid;
  SolverState<double> state;
};

/// Reads a checkpoint, rebuilds the grid (spacings must match bit for bit),
/// and re-solves for the stream function.
inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, checkpoint_magic, 4) != 0) throw Error(path + " is not a checkpoint");
  if (detail::get_le<std::uint32_t>(is) != checkpoint_version) throw Error("unsupported checkpoint version");
  const int ns = detail::get_le<std::int32_t>(is), nt = detail::get_le<std::int32_t>(is);
  double v[8];
  for (double& x : v) x = detail::get_le<double>(is);
  Checkpoint ck{build_grid<double>(v[0], ns, nt, v[1]), {}};
  if (ck.grid.sigma_max != v[2] || ck.grid.d_sigma != v[3] || ck.grid.d_theta != v[4])
    throw Error("checkpoint grid spacing does not round-trip");
  ck.state.w.resize(ns, nt);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j) ck.state.w(i, j) = detail::get_le<double>(is);
  ck.state.alpha = v[5];
  ck.state.t = v[7];
  const PoissonSolver<double> solver(ck.grid);
  poisson_streamfunction(ck.state, ck.grid, solver);
  if (ck.state.beta != v[6] && std::abs(ck.state.beta - v[6]) > 1e-12 * std::max(1.0, std::abs(v[6])))
    throw Error("checkpoint beta is inconsistent with its vorticity");
  return ck;
}

/// Snapshot CSV: t,x1,x2,u1,u2 for every patch node and snapshot.
inline void write_snapshots_csv(const std::string& path, const RunRecord<double>& rec, const std::string& hash) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << "# config_hash=" << hash << "\n" << "t,x1,x2,u1,u2\n";
  os.precision(17);
  for (const auto& s : rec.snapshots)
    for (std::size_t k = 0; k < rec.nodes.size(); ++k)
      os << s.t << ',' << rec.nodes[k].real() << ',' << rec.nodes[k].imag() << ',' << s.velocity[k].real() << ','
         << s.velocity[k].imag() << '\n';
  if (!os) throw Error("write failed for " + path);
}

/// Diagnostics CSV: t,energy,grad_energy,beta,circ_far.
inline void write_diagnostics_csv(const std::string& path, const RunRecord<double>& rec, const std::string& hash) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << "# config_hash=" << hash << "\n" << "t,energy,grad_energy,beta,circ_far\n";
  os.precision(17);
  for (const auto& d : rec.diagnostics)
    os << d.t << ',' << d.energy << ',' << d.grad_energy << ',' << d.beta << ',' << d.circ_far << '\n';
  if (!os) throw Error("write failed for " + path);
}

}  // namespace thinflow
