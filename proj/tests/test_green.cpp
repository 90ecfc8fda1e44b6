#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "honeytopo/green.hpp"
#include "honeytopo/lapack.hpp"
#include "oracles.hpp"

using namespace honeytopo;

namespace {

std::vector<oracle::Point> to_points(const SampleGeometry& g) {
  std::vector<oracle::Point> pts;
  for (std::size_t m = 0; m < g.size(); ++m)
    pts.push_back({g.positions[m].x, g.positions[m].y, g.sublattice[m] == Sublattice::A ? 0 : 1});
  return pts;
}

std::vector<cplx> sorted(std::vector<cplx> v) {
  std::sort(v.begin(), v.end(), [](cplx p, cplx q) { return p.real() != q.real() ? p.real() < q.real() : p.imag() < q.imag(); });
  return v;
}

}  // namespace

TEST(ScalarFactors, KnownValues) {
  const auto [P, Q] = scalar_factors(cplx{0.0, 1.0});
  // 1/i = -i, 1/i^2 = -1
  EXPECT_NEAR(std::abs(P - cplx(0.0, 1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(Q - cplx(2.0, -3.0)), 0.0, 1e-15);
  EXPECT_THROW(scalar_factors(cplx{0.0, 0.0}), SingularArgument);
}

TEST(CircularBasis, Unitary) {
  const Block2& d = circular_basis();
  EXPECT_LT((d * d.adjoint() - Block2::Identity()).norm(), 1e-15);
}

TEST(CouplingBlock, MatchesClosedForm) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int t = 0; t < 200; ++t) {
    const double dx = u(rng), dy = u(rng);
    if (std::hypot(dx, dy) < 1e-3) continue;
    const Block2 b = coupling_block({dx, dy});
    const Eigen::Matrix2cd o = oracle::block(dx, dy);
    EXPECT_LT((b - o).norm(), 1e-12 * o.norm());
  }
}

TEST(CouplingBlock, EvenInSeparationAndSymmetric) {
  const Vec2 dr{0.031, -0.072};
  const Block2 b = coupling_block(dr);
  EXPECT_LT((b - coupling_block(-dr)).norm(), 1e-14);
  // Reciprocity in the circular basis: B_{+-} and B_{-+} differ only by the
  // sign of the xy term, the diagonal entries coincide.
  EXPECT_NEAR(std::abs(b(0, 0) - b(1, 1)), 0.0, 1e-14);
  EXPECT_THROW(coupling_block({0.0, 0.0}), CoincidentAtoms);
}

TEST(GreenMatrix, MatchesOracleAssembly) {
  PhysicalParams p;
  p.delta_B = 3.0;
  p.delta_AB = 1.5;
  const auto g = build_hexagonal_sample(2, p);
  const auto G = assemble_green_matrix(ideal_configuration(g), p);
  const auto O = oracle::green(to_points(g), p.delta_B, p.delta_AB);
  EXPECT_EQ(G.dim(), O.rows());
  EXPECT_LT((G.entries - O).norm(), 1e-12 * O.norm());
  // Complex symmetric up to the sigma swap: G^T = S G S with S swapping the
  // two polarisations of every atom.
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(G.dim(), G.dim());
  for (Eigen::Index m = 0; m < G.dim() / 2; ++m) S(2 * m, 2 * m + 1) = S(2 * m + 1, 2 * m) = 1.0;
  const Eigen::MatrixXcd off = G.entries - Eigen::MatrixXcd(G.entries.diagonal().asDiagonal());
  EXPECT_LT((off.transpose() - S * off * S).norm(), 1e-12 * off.norm());
}

TEST(GreenMatrix, DiagonalBlocksFromParameters) {
  PhysicalParams p;
  p.delta_B = 2.0;
  p.delta_AB = 0.5;
  const auto g = build_hexagonal_sample(1, p);
  const auto G = assemble_green_matrix(ideal_configuration(g), p);
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double s = g.sublattice[m] == Sublattice::A ? 1.0 : -1.0;
    EXPECT_EQ(G.entries(2 * m, 2 * m), cplx(s * 2 * p.delta_AB + 2 * p.delta_B, 1.0));
    EXPECT_EQ(G.entries(2 * m + 1, 2 * m + 1), cplx(s * 2 * p.delta_AB - 2 * p.delta_B, 1.0));
  }
}

TEST(IsolatedAtoms, EigenvaluesAreTheDiagonal) {
  PhysicalParams p;
  p.delta_B = 5.0;
  p.delta_AB = 2.0;
  const auto g = build_hexagonal_sample(2, p);
  AssemblyOptions opts;
  opts.couplings = false;
  const auto G = assemble_green_matrix(ideal_configuration(g), p, opts);
  const auto ev = lapack::eigenvalues(G.entries);
  std::vector<cplx> got(ev.data(), ev.data() + ev.size());
  std::vector<cplx> want;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double s = g.sublattice[m] == Sublattice::A ? 2 * p.delta_AB : -2 * p.delta_AB;
    want.push_back({s + 2 * p.delta_B, 1.0});
    want.push_back({s - 2 * p.delta_B, 1.0});
  }
  got = sorted(got);
  want = sorted(want);
  for (std::size_t t = 0; t < got.size(); ++t) EXPECT_LT(std::abs(got[t] - want[t]), 1e-12);
}

TEST(Dimer, EigenvaluesMatchBlockDiagonalisation) {
  for (double dB : {0.0, 1.0, 5.0}) {
    for (Vec2 dr : {Vec2{0.05, 0.0}, Vec2{0.0, 0.1}, Vec2{0.03, 0.04}, Vec2{0.4, -0.7}}) {
      const std::vector<Vec2> pos{{0.0, 0.0}, dr};
      const std::vector<Sublattice> sub{Sublattice::A, Sublattice::B};
      PhysicalParams p;
      p.delta_B = dB;
      const auto G = assemble_green_matrix(pos, sub, p);
      const auto ev = lapack::eigenvalues(G.entries);
      auto got = sorted(std::vector<cplx>(ev.data(), ev.data() + 4));
      auto want = sorted(oracle::dimer_eigenvalues(dr.x, dr.y, dB));
      for (int t = 0; t < 4; ++t) EXPECT_LT(std::abs(got[t] - want[t]), 1e-10) << dB << " " << dr.x << "," << dr.y;
    }
  }
}

TEST(GreenMatrix, CoincidentAtomsRejected) {
  const std::vector<Vec2> pos{{0.1, 0.2}, {0.1, 0.2}};
  const std::vector<Sublattice> sub{Sublattice::A, Sublattice::B};
  EXPECT_THROW(assemble_green_matrix(pos, sub, PhysicalParams{}), CoincidentAtoms);
}

TEST(GreenMatrix, BinaryRoundTrip) {
  const auto g = build_hexagonal_sample(2, PhysicalParams{});
  const auto G = assemble_green_matrix(ideal_configuration(g), PhysicalParams{});
  const auto path = (std::filesystem::temp_directory_path() / "honeytopo_green_roundtrip.bin").string();
  write_matrix_binary(path, G.entries);
  const auto back = read_matrix_binary(path);
  std::remove(path.c_str());
  EXPECT_EQ(back, G.entries);
}
