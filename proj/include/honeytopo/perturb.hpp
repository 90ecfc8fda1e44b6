#pragma once

// Second-order non-Hermitian perturbation theory for the disorder-averaged
// eigenvalues of the Green's matrix.
//
// With isotropic displacements of radius uniform on [0, W a] the mean
// eigenvalue is Lambda0 + (W a)^2 <Lambda2>; the first-order term averages to
// zero. <Lambda2> combines the mean second-order perturbation
// (1/6)(D_xx + D_yy) with the averaged product of two first-order
// perturbations, which reduces to eight index contractions per derivative
// direction. All contractions are written as products of 2N x 2N matrices, so
// the cost is O((2N)^3).
//
// Index pairs (2m, 2m + 1) belong to the same atom; "partner(i)" swaps them.

#include <Eigen/Dense>
#include <cmath>
#include <ostream>
#include <span>
#include <variant>
#include <vector>

#include "honeytopo/csv.hpp"
#include "honeytopo/green.hpp"
#include "honeytopo/spectrum.hpp"

namespace honeytopo {

struct DerivativeMatrices {
  CMatrix d_x;
  CMatrix d_y;
  CMatrix d_xx;
  CMatrix d_yy;
  CMatrix d_xy;
};

/// First and second derivatives of one coupling block with respect to the
/// separation vector.
struct BlockDerivatives {
  Block2 d_x;
  Block2 d_y;
  Block2 d_xx;
  Block2 d_yy;
  Block2 d_xy;
};

struct AnalyticDerivative {};

/// Fourth-order central differences. `step` is used for first derivatives;
/// second derivatives use `second_step`, or 2e-3 a when it is zero, since a
/// second difference at a step near 1e-6 a is dominated by round-off.
struct FiniteDifference {
  double step = 0.0;
  double second_step = 0.0;
};

using DerivativeMethod = std::variant<AnalyticDerivative, FiniteDifference>;

namespace detail {

// e^{ikr} sum_n c_n r^{-n} and its first two radial derivatives.
struct RadialSeries {
  std::array<cplx, 6> c{};  // c[n] multiplies r^{-n}

  std::array<cplx, 3> eval(double r) const {
    cplx s = 0.0, s1 = 0.0, s2 = 0.0;
    for (int n = 1; n < 6; ++n) {
      const double rn = std::pow(r, -n);
      s += c[n] * rn;
      s1 += -static_cast<double>(n) * c[n] * rn / r;
      s2 += static_cast<double>(n * (n + 1)) * c[n] * rn / (r * r);
    }
    const cplx e = std::exp(I * k0 * r);
    return {e * s, e * (I * k0 * s + s1), e * (-k0 * k0 * s + 2.0 * I * k0 * s1 + s2)};
  }
};

// P(ikr) / r and Q(ikr) / r^3 as Laurent series in r.
inline const RadialSeries& isotropic_series() {
  static const RadialSeries s{{0.0, 1.0, I / k0, -1.0 / (k0 * k0), 0.0, 0.0}};
  return s;
}
inline const RadialSeries& dyadic_series() {
  static const RadialSeries s{{0.0, 0.0, 0.0, -1.0, -3.0 * I / k0, 3.0 / (k0 * k0)}};
  return s;
}

inline Block2 to_circular(const Block2& linear) {
  const Block2& d = circular_basis();
  return (3.0 / (2.0 * k0)) * (d * linear * d.adjoint());
}

}  // namespace detail

/// Closed-form derivatives of the coupling block M_ab = g(r) delta_ab + h(r) x_a x_b
/// (before the circular-basis rotation).
inline BlockDerivatives coupling_block_derivatives(Vec2 dr) {
  const double r = dr.norm();
  if (!(r > 0.0)) throw CoincidentAtoms("derivative requested for coincident atoms");
  const auto [g, g1, g2] = detail::isotropic_series().eval(r);
  const auto [h, h1, h2] = detail::dyadic_series().eval(r);
  const double x[2] = {dr.x, dr.y};
  const double n[2] = {dr.x / r, dr.y / r};
  auto kd = [](int p, int q) { return p == q ? 1.0 : 0.0; };

  auto first = [&](int c) {
    Block2 m;
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q)
        m(p, q) = g1 * n[c] * kd(p, q) + h1 * n[c] * x[p] * x[q] + h * (kd(p, c) * x[q] + x[p] * kd(q, c));
    return detail::to_circular(m);
  };
  auto second = [&](int c, int e) {
    Block2 m;
    const double nn = n[c] * n[e];
    const double trans = (kd(c, e) - nn) / r;
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q)
        m(p, q) = (g2 * nn + g1 * trans) * kd(p, q) + (h2 * nn + h1 * trans) * x[p] * x[q] +
                  h1 * n[c] * (kd(p, e) * x[q] + x[p] * kd(q, e)) +
                  h1 * n[e] * (kd(p, c) * x[q] + x[p] * kd(q, c)) + h * (kd(p, c) * kd(q, e) + kd(p, e) * kd(q, c));
    return detail::to_circular(m);
  };
  return {first(0), first(1), second(0, 0), second(1, 1), second(0, 1)};
}

inline BlockDerivatives coupling_block_derivatives_fd(Vec2 dr, double h, double s) {
  auto B = [&](double ex, double ey) { return coupling_block(dr + Vec2{ex, ey}); };
  // Five-point first-derivative weights at offsets -2..2, divided by 12 h.
  constexpr double w1[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
  constexpr double w2[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
  BlockDerivatives out;
  out.d_x = out.d_y = out.d_xx = out.d_yy = out.d_xy = Block2::Zero();
  for (int t = 0; t < 5; ++t) {
    const double o = t - 2;
    if (w1[t] != 0.0) {
      out.d_x += w1[t] * B(o * h, 0.0);
      out.d_y += w1[t] * B(0.0, o * h);
    }
    out.d_xx += w2[t] * B(o * s, 0.0);
    out.d_yy += w2[t] * B(0.0, o * s);
    for (int u = 0; u < 5; ++u)
      if (w1[t] != 0.0 && w1[u] != 0.0) out.d_xy += (w1[t] * w1[u]) * B(o * s, (u - 2) * s);
  }
  out.d_x /= 12.0 * h;
  out.d_y /= 12.0 * h;
  out.d_xx /= 12.0 * s * s;
  out.d_yy /= 12.0 * s * s;
  out.d_xy /= 144.0 * s * s;
  return out;
}

/// Derivative matrices of the ideal-lattice Green's matrix with respect to the
/// relative coordinates of each atom pair. Same-atom blocks are zero.
inline DerivativeMatrices derivative_matrices(const SampleGeometry& geom, DerivativeMethod method = AnalyticDerivative{}) {
  double h = 0.0;
  double s = 0.0;
  if (const auto* fd = std::get_if<FiniteDifference>(&method)) {
    h = fd->step;
    s = fd->second_step == 0.0 ? 2e-3 * geom.a : fd->second_step;
    for (double v : {h, s})
      if (!(v > 0.0) || !(v < geom.a / 10.0)) throw std::invalid_argument("finite-difference step must lie in (0, a/10)");
  }
  const auto n = static_cast<Eigen::Index>(geom.size());
  DerivativeMatrices D{CMatrix::Zero(2 * n, 2 * n), CMatrix::Zero(2 * n, 2 * n), CMatrix::Zero(2 * n, 2 * n),
                       CMatrix::Zero(2 * n, 2 * n), CMatrix::Zero(2 * n, 2 * n)};
  for (Eigen::Index m = 0; m < n; ++m) {
    for (Eigen::Index k = m + 1; k < n; ++k) {
      const Vec2 dr = geom.positions[m] - geom.positions[k];
      const BlockDerivatives b =
          h > 0.0 ? coupling_block_derivatives_fd(dr, h, s) : coupling_block_derivatives(dr);
      // First derivatives are odd in dr, second derivatives even.
      D.d_x.block<2, 2>(2 * m, 2 * k) = b.d_x;
      D.d_x.block<2, 2>(2 * k, 2 * m) = -b.d_x;
      D.d_y.block<2, 2>(2 * m, 2 * k) = b.d_y;
      D.d_y.block<2, 2>(2 * k, 2 * m) = -b.d_y;
      D.d_xx.block<2, 2>(2 * m, 2 * k) = D.d_xx.block<2, 2>(2 * k, 2 * m) = b.d_xx;
      D.d_yy.block<2, 2>(2 * m, 2 * k) = D.d_yy.block<2, 2>(2 * k, 2 * m) = b.d_yy;
      D.d_xy.block<2, 2>(2 * m, 2 * k) = D.d_xy.block<2, 2>(2 * k, 2 * m) = b.d_xy;
    }
  }
  return D;
}

/// Same-atom "Kronecker" of the averaging: 1 iff indices i and j (1-based)
/// belong to the same atom, i.e. j = i or j = i + (-1)^(i+1).
inline int same_atom_delta(int i, int j) {
  const int partner = i + ((i % 2 == 1) ? 1 : -1);
  return (j == i || j == partner) ? 1 : 0;
}

/// Mean second-order perturbation (1/6)(D_xx + D_yy).
inline CMatrix mean_second_order_perturbation(const DerivativeMatrices& D) { return (D.d_xx + D.d_yy) / 6.0; }

struct PerturbedSpectrum {
  CVector lambda0;
  CVector lambda2;  ///< disorder-averaged second-order coefficient

  std::size_t size() const { return static_cast<std::size_t>(lambda0.size()); }

  /// Mean eigenvalue at disorder W (first order vanishes on average).
  cplx mean_lambda(std::size_t alpha, double W, double a) const {
    const auto i = static_cast<Eigen::Index>(alpha);
    return lambda0(i) + (W * a) * (W * a) * lambda2(i);
  }
};

namespace detail {

// Rows 2m and 2m + 1 exchanged.
inline CMatrix partner_rows(const CMatrix& X) {
  CMatrix out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i + 1 < X.rows(); i += 2) {
    out.row(i) = X.row(i + 1);
    out.row(i + 1) = X.row(i);
  }
  return out;
}

// Averaged product <<L_a|V1|R_b><L_b|V1|R_a>> for one derivative direction,
// without the 1/6: entry (a, b).
inline CMatrix pair_correlation(const CMatrix& Dd, const CMatrix& R, const CMatrix& Lc) {
  const CMatrix DR = Dd * R;                          // (D R^T)_{i b}
  const CMatrix LDt = (Lc.transpose() * Dd).transpose();  // (L* D)_{a j}, stored as (j, a)
  const CMatrix DRp = partner_rows(DR);
  const CMatrix Rp = partner_rows(R);
  const CMatrix Lcp = partner_rows(Lc);
  const CMatrix LDtp = partner_rows(LDt);

  const CMatrix M1 = Lc.cwiseProduct(DR);
  const CMatrix M2 = Lc.cwiseProduct(DRp);
  const CMatrix K3 = R.cwiseProduct(LDt);
  const CMatrix K4 = Rp.cwiseProduct(LDt);
  const CMatrix P5 = Lc.cwiseProduct(R);
  const CMatrix Q5 = DR.cwiseProduct(LDt);
  const CMatrix P6 = Lc.cwiseProduct(Rp);
  const CMatrix Q6 = DR.cwiseProduct(LDtp);
  const CMatrix A8 = LDt.cwiseProduct(DRp);
  const CMatrix B8 = R.cwiseProduct(Lcp);

  CMatrix out = M1.transpose() * M1;              // k = i
  out.noalias() += M2.transpose() * partner_rows(M2);  // k = partner(i)
  out.noalias() += K3.transpose() * K3;           // l = j
  out.noalias() += K4.transpose() * partner_rows(K4);  // l = partner(j)
  out.noalias() -= P5.transpose() * Q5;           // l = i
  out.noalias() -= P6.transpose() * Q6;           // l = partner(i)
  out.noalias() -= Q5.transpose() * P5;           // k = j
  out.noalias() -= A8.transpose() * B8;           // k = partner(j)
  return out;
}

}  // namespace detail

struct PerturbOptions {
  double degeneracy_threshold = 1e-8;
  double numerator_floor = 1e-12;  ///< relative to the largest numerator
};

/// Disorder-averaged second-order eigenvalue coefficients for every mode of
/// the ideal lattice.
inline PerturbedSpectrum averaged_second_order_shift(const ModeSet& modes0, const DerivativeMatrices& D,
                                                     const PerturbOptions& opts = {}) {
  const CMatrix& R = modes0.right;
  const CMatrix Lc = modes0.left.conjugate();
  const Eigen::Index n = R.cols();
  if (D.d_x.rows() != n) throw std::invalid_argument("derivative matrices do not match the mode set");

  const CMatrix V2 = mean_second_order_perturbation(D);
  const CVector first = (Lc.transpose() * (V2 * R)).diagonal();

  const CMatrix numer = (detail::pair_correlation(D.d_x, R, Lc) + detail::pair_correlation(D.d_y, R, Lc)) / 6.0;
  const double floor = opts.numerator_floor * std::max(numer.cwiseAbs().maxCoeff(), 1e-300);

  PerturbedSpectrum out{modes0.lambda, CVector(n)};
  for (Eigen::Index a = 0; a < n; ++a) {
    cplx sum = first(a);
    for (Eigen::Index b = 0; b < n; ++b) {
      if (b == a) continue;
      const cplx gap = modes0.lambda(a) - modes0.lambda(b);
      if (std::abs(gap) < opts.degeneracy_threshold) {
        if (std::abs(numer(a, b)) > floor)
          throw DegenerateSpectrum(static_cast<std::size_t>(a), static_cast<std::size_t>(b),
                                   "near-degenerate unperturbed modes " + std::to_string(a) + " and " +
                                       std::to_string(b));
        continue;
      }
      sum += numer(a, b) / gap;
    }
    out.lambda2(a) = sum;
  }
  return out;
}

struct EdgeCurve {
  std::size_t alpha = 0;
  std::vector<double> W;
  std::vector<double> detuning;
  std::vector<double> decay;
};

struct PredictedEdgeSpectrum {
  std::vector<EdgeCurve> curves;  ///< sorted by ideal detuning
  /// Indices into `curves` of the lowest- and highest-frequency edge modes,
  /// which approximate the band edges.
  std::size_t lowest = 0;
  std::size_t highest = 0;
};

/// Ideal-lattice modes classified Edge whose detuning lies in [lo, hi].
inline std::vector<std::size_t> in_gap_edge_modes(const ModeSet& modes, double lo, double hi) {
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < modes.size(); ++a)
    if (passes(modes, a, ModeFilter::Edge) && modes.detuning[a] >= lo && modes.detuning[a] <= hi) out.push_back(a);
  return out;
}

inline PredictedEdgeSpectrum predicted_edge_spectrum(const PerturbedSpectrum& ps, std::span<const std::size_t> edge,
                                                     std::span<const double> W_grid, double a) {
  PredictedEdgeSpectrum out;
  for (auto alpha : edge) {
    EdgeCurve c{alpha, {}, {}, {}};
    for (double W : W_grid) {
      const cplx lam = ps.mean_lambda(alpha, W, a);
      c.W.push_back(W);
      c.detuning.push_back(-0.5 * lam.real());
      c.decay.push_back(lam.imag());
    }
    out.curves.push_back(std::move(c));
  }
  std::sort(out.curves.begin(), out.curves.end(), [&](const EdgeCurve& p, const EdgeCurve& q) {
    return ps.lambda0(static_cast<Eigen::Index>(p.alpha)).real() > ps.lambda0(static_cast<Eigen::Index>(q.alpha)).real();
  });
  if (!out.curves.empty()) out.highest = out.curves.size() - 1;
  return out;
}

/// CSV: alpha,re_lambda0,im_lambda0,re_lambda2,im_lambda2.
inline void write_perturbation_csv(std::ostream& os, const PerturbedSpectrum& ps) {
  csv::Writer w(os);
  w.header("alpha", "re_lambda0", "im_lambda0", "re_lambda2", "im_lambda2");
  for (std::size_t a = 0; a < ps.size(); ++a) {
    const auto i = static_cast<Eigen::Index>(a);
    w.row(a, ps.lambda0(i).real(), ps.lambda0(i).imag(), ps.lambda2(i).real(), ps.lambda2(i).imag());
  }
}

/// CSV: alpha,W,detuning,decay.
inline void write_curves_csv(std::ostream& os, const PredictedEdgeSpectrum& pred) {
  csv::Writer w(os);
  w.header("alpha", "W", "detuning", "decay");
  for (const auto& c : pred.curves)
    for (std::size_t t = 0; t < c.W.size(); ++t) w.row(c.alpha, c.W[t], c.detuning[t], c.decay[t]);
}

}  // namespace honeytopo
