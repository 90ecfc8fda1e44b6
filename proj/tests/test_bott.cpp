#include <gtest/gtest.h>

#include <sstream>

#include "honeytopo/bott.hpp"
#include "oracles.hpp"

using namespace honeytopo;

namespace {

std::vector<oracle::Point> to_points(const std::vector<Vec2>& pos, const SampleGeometry& g) {
  std::vector<oracle::Point> pts;
  for (std::size_t m = 0; m < pos.size(); ++m) pts.push_back({pos[m].x, pos[m].y, g.sublattice[m] == Sublattice::A ? 0 : 1});
  return pts;
}

// Thresholds halfway between consecutive detunings, so no mode sits on one.
std::vector<double> midpoints(const ModeSet& ms) {
  std::vector<double> d;
  for (std::size_t a = 1; a < ms.size(); ++a) d.push_back(0.5 * (ms.detuning[a - 1] + ms.detuning[a]));
  return d;
}

}  // namespace

TEST(Bott, AgreesWithSiteBasisOracleOnSmallSamples) {
  struct Toy {
    SampleGeometry g;
    double l;
  };
  PhysicalParams p;
  p.delta_B = 5.0;
  p.delta_AB = 1.0;
  std::vector<Toy> toys{{build_hexagonal_sample(1, p), 0.2},
                        {build_square_sample(3 * p.a, p), 3 * p.a},
                        {build_square_sample(4 * p.a, p), 4 * p.a}};
  int compared = 0;
  for (const auto& t : toys) {
    ASSERT_LE(t.g.size(), 20u);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto c = apply_positional_disorder(t.g, 0.4, DisorderTarget::AllAtoms, seed);
      const auto pos = c.positions();
      const auto G = assemble_green_matrix(c, p);
      const auto ms = diagonalize_biorthogonal(G);
      const BottEvaluator ev(ms, pos, t.l, t.l);
      for (double d : midpoints(ms)) {
        const double mine = ev.evaluate(d).index;
        const double ref = oracle::bott_site_basis(G.entries, to_points(pos, t.g), t.l, t.l, d);
        EXPECT_NEAR(mine, ref, 1e-9) << "N " << t.g.size() << " seed " << seed << " delta " << d;
        ++compared;
      }
    }
  }
  EXPECT_GT(compared, 50);
}

TEST(Bott, IdealSquareTopologicalPlateau) {
  PhysicalParams p;
  p.delta_B = 5.0;
  const auto g = build_square_sample(15 * p.a, p);
  const auto ms = diagonalize_biorthogonal(assemble_green_matrix(ideal_configuration(g), p));
  const auto& sq = std::get<SquareShape>(g.shape);
  const BottEvaluator ev(ms, g.positions, sq.lx, sq.ly);
  for (double d : {6.0, 7.0, 8.0}) EXPECT_NEAR(ev.evaluate(d).index, -1.0, 1e-6) << d;
  EXPECT_EQ(ev.evaluate(-1e3).n_modes, 0u);
  EXPECT_EQ(ev.evaluate(-1e3).index, 0.0);
  EXPECT_NEAR(ev.evaluate(1e3).index, 0.0, 1e-6);
  EXPECT_EQ(ev.evaluate(1e3).n_modes, ms.size());
}

TEST(Bott, IdealSquareTrivialPhase) {
  PhysicalParams p;
  p.delta_AB = 5.0;
  const auto g = build_square_sample(15 * p.a, p);
  const auto ms = diagonalize_biorthogonal(assemble_green_matrix(ideal_configuration(g), p));
  const BottEvaluator ev(ms, g.positions, 15 * p.a, 15 * p.a);
  for (double d : {-2.0, 0.0, 3.0, 6.0, 9.0}) EXPECT_NEAR(ev.evaluate(d).index, 0.0, 1e-6) << d;
}

TEST(Bott, IndexIsNearInteger) {
  PhysicalParams p;
  p.delta_B = 5.0;
  const auto g = build_square_sample(10 * p.a, p);
  const auto c = apply_positional_disorder(g, 0.2, DisorderTarget::AllAtoms, 4);
  const auto ms = diagonalize_biorthogonal(assemble_green_matrix(c, p));
  const BottEvaluator ev(ms, c.positions(), 10 * p.a, 10 * p.a);
  for (double d : midpoints(ms)) {
    const double b = ev.evaluate(d).index;
    EXPECT_NEAR(b, std::round(b), 1e-6) << d;
  }
}

TEST(Bott, RankDeficientProjectorThrows) {
  // One mode spread evenly over two atoms half a period apart in x: its
  // projected V_X is (1 + e^{i pi}) / 2 = 0.
  ModeSet ms;
  ms.lambda = CVector::Zero(4);
  const double s = 1.0 / std::sqrt(2.0);
  ms.right = CMatrix::Zero(4, 4);
  ms.right(0, 0) = s;
  ms.right(2, 0) = s;
  ms.right(0, 1) = s;
  ms.right(2, 1) = -s;
  ms.right(1, 2) = 1.0;
  ms.right(3, 3) = 1.0;
  ms.left = ms.right;
  ms.detuning = {0.0, 1.0, 2.0, 3.0};
  const std::vector<Vec2> pos{{0.0, 0.0}, {0.5, 0.0}};
  const BottEvaluator ev(ms, pos, 1.0, 1.0);
  EXPECT_THROW(ev.evaluate(0.5), IllConditionedProjector);
  EXPECT_NO_THROW(ev.evaluate(3.5));
}

TEST(Bott, InvalidInputs) {
  ModeSet ms;
  ms.lambda = CVector::Zero(2);
  ms.right = CMatrix::Identity(2, 2);
  ms.left = ms.right;
  ms.detuning = {0.0, 1.0};
  const std::vector<Vec2> one{{0.0, 0.0}};
  const std::vector<Vec2> two{{0.0, 0.0}, {1.0, 0.0}};
  EXPECT_THROW(BottEvaluator(ms, one, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(BottEvaluator(ms, two, 1.0, 1.0), std::invalid_argument);
}

TEST(Bott, ScanCsv) {
  std::vector<BottPoint> pts{{0.0, -1.0, 3}, {0.5, 0.0, 4}};
  std::ostringstream os;
  write_bott_scan_csv(os, pts);
  EXPECT_EQ(os.str(), "delta,C_B,n_modes_in_projector\n0,-1,3\n0.5,0,4\n");
}
