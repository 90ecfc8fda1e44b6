#pragma once

// Frequency-resolved Bott index with the biorthogonal projector
// P(delta) = sum_{detuning_a <= delta} |R_a><L_a|.
//
// In the eigenmode basis the projected position unitaries are
// (V_X)_ab = <L_a| exp(2 pi i X / L_x) |R_b>, so the projector for threshold
// delta is the leading k x k block of the full 2N x 2N matrix (modes are
// sorted by detuning). Both full matrices are built once per mode set.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "honeytopo/csv.hpp"
#include "honeytopo/lapack.hpp"
#include "honeytopo/spectrum.hpp"

namespace honeytopo {

struct BottInput {
  const ModeSet* modes = nullptr;
  std::span<const Vec2> positions;  ///< actual (displaced) atom positions
  double lx = 0.0;
  double ly = 0.0;
  double delta = 0.0;
};

struct BottPoint {
  double delta = 0.0;
  double index = 0.0;
  std::size_t n_modes = 0;
};

/// Threshold below which an eigenvalue of V_X V_Y V_X^+ V_Y^+ means the
/// projected unitaries are numerically rank deficient.
inline constexpr double bott_singular_threshold = 1e-12;

class BottEvaluator {
 public:
  BottEvaluator(const ModeSet& modes, std::span<const Vec2> positions, double lx, double ly)
      : detuning_(modes.detuning) {
    if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("Bott index needs positive L_x, L_y");
    const Eigen::Index n = modes.right.rows();
    if (n != static_cast<Eigen::Index>(2 * positions.size()))
      throw std::invalid_argument("positions do not match the mode dimension");
    CVector ux(n);
    CVector uy(n);
    for (std::size_t m = 0; m < positions.size(); ++m) {
      const cplx px = std::exp(I * (2.0 * pi * positions[m].x / lx));
      const cplx py = std::exp(I * (2.0 * pi * positions[m].y / ly));
      ux(2 * m) = ux(2 * m + 1) = px;
      uy(2 * m) = uy(2 * m + 1) = py;
    }
    vx_.noalias() = modes.left.adjoint() * (ux.asDiagonal() * modes.right);
    vy_.noalias() = modes.left.adjoint() * (uy.asDiagonal() * modes.right);
  }

  /// Number of modes with detuning <= delta.
  std::size_t projector_rank(double delta) const {
    return static_cast<std::size_t>(std::upper_bound(detuning_.begin(), detuning_.end(), delta) - detuning_.begin());
  }

  /// Projected unitaries restricted to the first k modes.
  std::pair<CMatrix, CMatrix> unitaries(std::size_t k) const {
    const auto kk = static_cast<Eigen::Index>(k);
    return {vx_.topLeftCorner(kk, kk), vy_.topLeftCorner(kk, kk)};
  }

  BottPoint evaluate(double delta) const {
    const std::size_t k = projector_rank(delta);
    if (k == 0) return {delta, 0.0, 0};
    const auto [vx, vy] = unitaries(k);
    const CMatrix w = vx * vy * vx.adjoint() * vy.adjoint();
    const CVector ev = lapack::eigenvalues(w);
    double phase = 0.0;
    for (Eigen::Index t = 0; t < ev.size(); ++t) {
      if (std::abs(ev(t)) < bott_singular_threshold)
        throw IllConditionedProjector("projected position unitaries are rank deficient at delta = " +
                                      csv::num(delta));
      phase += std::arg(ev(t));  // principal branch (-pi, pi]
    }
    return {delta, phase / (2.0 * pi), k};
  }

  std::vector<BottPoint> scan(std::span<const double> deltas) const {
    std::vector<BottPoint> out;
    out.reserve(deltas.size());
    for (double d : deltas) out.push_back(evaluate(d));
    return out;
  }

 private:
  std::vector<double> detuning_;
  CMatrix vx_;
  CMatrix vy_;
};

/// (V_X, V_Y) for the modes selected by input.delta; empty matrices when no
/// mode lies below the threshold.
inline std::pair<CMatrix, CMatrix> build_projected_position_unitaries(const BottInput& input) {
  BottEvaluator ev(*input.modes, input.positions, input.lx, input.ly);
  return ev.unitaries(ev.projector_rank(input.delta));
}

inline double bott_index(const BottInput& input) {
  return BottEvaluator(*input.modes, input.positions, input.lx, input.ly).evaluate(input.delta).index;
}

/// CSV: delta,C_B,n_modes_in_projector.
inline void write_bott_scan_csv(std::ostream& os, std::span<const BottPoint> points) {
  csv::Writer w(os);
  w.header("delta", "C_B", "n_modes_in_projector");
  for (const auto& p : points) w.row(p.delta, p.index, p.n_modes);
}

}  // namespace honeytopo
