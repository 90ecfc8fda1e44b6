#pragma once

// Effective non-Hermitian Hamiltonian of N two-level atoms (TE sector).
//
// Atom m owns rows/columns 2m (sigma = +1) and 2m + 1 (sigma = -1). The
// diagonal block is (i +- 2 delta_AB) 1 + 2 delta_B sigma_z, "+" on A; the
// off-diagonal block is -(6 pi / k0) d G(r_m - r_n) d^dagger with G the
// free-space dyadic Green's function restricted to the xy plane and
// d = [[1, i], [-1, i]] / sqrt(2).

#include <Eigen/Dense>
#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "honeytopo/lattice.hpp"
#include "honeytopo/params.hpp"

namespace honeytopo {

using Block2 = Eigen::Matrix2cd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// P(x) = 1 - 1/x + 1/x^2, Q(x) = -1 + 3/x - 3/x^2.
inline std::pair<cplx, cplx> scalar_factors(cplx x) {
  if (x == cplx{0.0, 0.0}) throw SingularArgument("dyadic scalar factors are singular at x = 0");
  const cplx inv = 1.0 / x;
  const cplx inv2 = inv * inv;
  return {1.0 - inv + inv2, -1.0 + 3.0 * inv - 3.0 * inv2};
}

/// Linear-to-circular change of basis, row 0 <-> sigma = +1.
inline const Block2& circular_basis() {
  static const Block2 d = [] {
    Block2 m;
    const double s = 1.0 / std::sqrt(2.0);
    m << cplx{s, 0}, cplx{0, s}, cplx{-s, 0}, cplx{0, s};
    return m;
  }();
  return d;
}

/// Coupling between two atoms separated by dr (in wavelengths).
inline Block2 coupling_block(Vec2 dr) {
  const double r = dr.norm();
  if (!(r > 0.0)) throw CoincidentAtoms("coupling block requested for coincident atoms");
  const auto [P, Q] = scalar_factors(I * k0 * r);
  const cplx pre = -std::exp(I * k0 * r) / (4.0 * pi * r);
  const double nx = dr.x / r;
  const double ny = dr.y / r;
  Block2 g;
  g << pre * (P + Q * nx * nx), pre * Q * nx * ny, pre * Q * nx * ny, pre * (P + Q * ny * ny);
  const Block2& d = circular_basis();
  return -(6.0 * pi / k0) * (d * g * d.adjoint());
}

inline Block2 onsite_block(Sublattice s, const PhysicalParams& params) {
  const double shift = s == Sublattice::A ? 2.0 * params.delta_AB : -2.0 * params.delta_AB;
  Block2 b = Block2::Zero();
  b(0, 0) = I + shift + 2.0 * params.delta_B;
  b(1, 1) = I + shift - 2.0 * params.delta_B;
  return b;
}

struct GreenMatrix {
  CMatrix entries;
  PhysicalParams params;

  Eigen::Index dim() const { return entries.rows(); }
  std::size_t atoms() const { return static_cast<std::size_t>(entries.rows() / 2); }
};

struct AssemblyOptions {
  bool couplings = true;  ///< false gives the isolated-atom control
};

inline GreenMatrix assemble_green_matrix(std::span<const Vec2> positions, std::span<const Sublattice> sublattice,
                                         const PhysicalParams& params, AssemblyOptions opts = {}) {
  params.validate();
  if (positions.size() != sublattice.size()) throw std::invalid_argument("positions/sublattice size mismatch");
  const auto n = static_cast<Eigen::Index>(positions.size());
  GreenMatrix G{CMatrix::Zero(2 * n, 2 * n), params};
  for (Eigen::Index m = 0; m < n; ++m) {
    G.entries.block<2, 2>(2 * m, 2 * m) = onsite_block(sublattice[m], params);
    if (!opts.couplings) continue;
    for (Eigen::Index k = m + 1; k < n; ++k) {
      const Vec2 dr = positions[m] - positions[k];
      if (!(dr.norm() > 0.0)) throw CoincidentAtoms(static_cast<std::size_t>(m), static_cast<std::size_t>(k));
      const Block2 b = coupling_block(dr);
      G.entries.block<2, 2>(2 * m, 2 * k) = b;
      G.entries.block<2, 2>(2 * k, 2 * m) = b;  // even in dr
    }
  }
  return G;
}

inline GreenMatrix assemble_green_matrix(const DisorderedConfiguration& config, const PhysicalParams& params,
                                         AssemblyOptions opts = {}) {
  const auto pos = config.positions();
  return assemble_green_matrix(pos, config.base.sublattice, params, opts);
}

/// Debug dump: little-endian uint64 dimension, then dim*dim complex doubles row-major.
inline void write_matrix_binary(const std::string& path, const CMatrix& m) {
  static_assert(std::endian::native == std::endian::little, "binary dump assumes a little-endian host");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  const std::uint64_t dim = static_cast<std::uint64_t>(m.rows());
  os.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const std::array<double, 2> v{m(i, j).real(), m(i, j).imag()};
      os.write(reinterpret_cast<const char*>(v.data()), sizeof v);
    }
  if (!os) throw Error("write failed: " + path);
}

inline CMatrix read_matrix_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  std::uint64_t dim = 0;
  is.read(reinterpret_cast<char*>(&dim), sizeof dim);
  CMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::array<double, 2> v{};
      is.read(reinterpret_cast<char*>(v.data()), sizeof v);
      m(i, j) = {v[0], v[1]};
    }
  if (!is) throw Error("truncated matrix file: " + path);
  return m;
}

}  // namespace honeytopo
