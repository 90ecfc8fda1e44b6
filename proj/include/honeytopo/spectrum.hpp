#pragma once

// Biorthogonal eigendecomposition of the Green's matrix and per-mode
// observables.
//
// Conventions: right vectors are the columns of `right` and have unit 2-norm;
// left vectors are the columns of `left`, scaled so that
// left.col(a).adjoint() * right.col(b) = delta_ab. Modes are sorted by
// increasing detuning -Re(Lambda) / 2.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "honeytopo/csv.hpp"
#include "honeytopo/green.hpp"
#include "honeytopo/lapack.hpp"
#include "honeytopo/lattice.hpp"

namespace honeytopo {

enum class ModeFilter : std::uint8_t { All, Bulk, Edge };

struct ModeSet {
  CVector lambda;
  CMatrix right;
  CMatrix left;
  std::vector<double> detuning;  ///< (omega - omega0) / Gamma0 = -Re(Lambda) / 2
  std::vector<double> decay;     ///< Gamma / Gamma0 = Im(Lambda)
  std::vector<double> ipr;
  std::vector<Region> klass;     ///< empty until classify_modes
  /// Index pairs closer than the degeneracy threshold; their left vectors were
  /// biorthogonalised within the cluster.
  std::vector<std::pair<std::size_t, std::size_t>> near_degenerate;

  std::size_t size() const { return static_cast<std::size_t>(lambda.size()); }
  bool classified() const { return klass.size() == size(); }
};

struct DiagonalizeOptions {
  double degenerate_threshold = 1e-10;  ///< warning level, complex distance
  double cluster_threshold = 1e-8;      ///< relative; modes this close share a biorthogonalised cluster
  double pairing_tolerance = 1e-6;      ///< hard error if the left Rayleigh quotient misses Lambda
  bool verify_pairing = true;
};

/// Eq. IPR = sum_m w_m^2 / (sum_m w_m)^2 with w_m = sum_sigma |R_m sigma|^2.
inline double compute_ipr(std::span<const cplx> right) {
  if (right.size() % 2 != 0) throw std::invalid_argument("mode vector length must be even");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t m = 0; m < right.size() / 2; ++m) {
    const double w = std::norm(right[2 * m]) + std::norm(right[2 * m + 1]);
    num += w * w;
    den += w;
  }
  if (!(den > 0.0)) throw std::invalid_argument("IPR of a zero vector");
  return num / (den * den);
}

inline double compute_ipr(const CVector& right) { return compute_ipr(std::span<const cplx>(right.data(), right.size())); }

namespace detail {

inline void biorthonormalize(ModeSet& ms, const DiagonalizeOptions& opts) {
  const Eigen::Index n = ms.lambda.size();
  // Clusters of (numerically) coincident eigenvalues. Modes are sorted by
  // -Re(Lambda), so candidates lie in a window of that key.
  std::vector<Eigen::Index> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Eigen::Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Eigen::Index a = 0; a < n; ++a) {
    const double tol = opts.cluster_threshold * std::max(1.0, std::abs(ms.lambda(a)));
    for (Eigen::Index b = a + 1; b < n; ++b) {
      if (std::abs(ms.lambda(b).real() - ms.lambda(a).real()) > tol) break;
      const double dist = std::abs(ms.lambda(b) - ms.lambda(a));
      if (dist < tol) parent[find(b)] = find(a);
      if (dist < opts.degenerate_threshold)
        ms.near_degenerate.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    }
  }
  std::vector<std::vector<Eigen::Index>> clusters(n);
  for (Eigen::Index a = 0; a < n; ++a) clusters[find(a)].push_back(a);

  for (const auto& c : clusters) {
    if (c.empty()) continue;
    const auto k = static_cast<Eigen::Index>(c.size());
    CMatrix Rc(n, k);
    CMatrix Lc(n, k);
    for (Eigen::Index t = 0; t < k; ++t) {
      Rc.col(t) = ms.right.col(c[t]);
      Lc.col(t) = ms.left.col(c[t]);
    }
    const CMatrix M = Lc.adjoint() * Rc;
    Eigen::FullPivLU<CMatrix> lu(M);
    if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-300)
      throw EigenError("left/right eigenvectors are orthogonal (defective spectrum) near mode " +
                       std::to_string(c.front()));
    const CMatrix Lnew = Lc * lu.inverse().adjoint();
    for (Eigen::Index t = 0; t < k; ++t) ms.left.col(c[t]) = Lnew.col(t);
  }
}

}  // namespace detail

/// Right and left eigenvectors come paired from one Schur factorisation;
/// the pairing is verified through the left Rayleigh quotient.
inline ModeSet diagonalize_biorthogonal(const CMatrix& G, const DiagonalizeOptions& opts = {}) {
  if (!G.allFinite()) throw EigenError("matrix has non-finite entries");
  auto es = lapack::eig(G);
  const Eigen::Index n = es.values.size();

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index p, Eigen::Index q) {
    const cplx a = es.values(p);
    const cplx b = es.values(q);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() < b.imag();
  });

  ModeSet ms;
  ms.lambda.resize(n);
  ms.right.resize(n, n);
  ms.left.resize(n, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    ms.lambda(t) = es.values(order[t]);
    ms.right.col(t) = es.right.col(order[t]).normalized();
    ms.left.col(t) = es.left.col(order[t]);
  }
  detail::biorthonormalize(ms, opts);

  if (opts.verify_pairing && n > 0) {
    const CMatrix GR = G * ms.right;
    for (Eigen::Index t = 0; t < n; ++t) {
      const cplx rq = ms.left.col(t).dot(GR.col(t));  // <L|G|R> with <L|R> = 1
      const double scale = std::max(1.0, std::abs(ms.lambda(t)));
      if (std::abs(rq - ms.lambda(t)) > opts.pairing_tolerance * scale)
        throw EigenError("left/right pairing mismatch at mode " + std::to_string(t));
    }
  }

  ms.detuning.resize(n);
  ms.decay.resize(n);
  ms.ipr.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    ms.detuning[t] = -0.5 * ms.lambda(t).real();
    ms.decay[t] = ms.lambda(t).imag();
    ms.ipr[t] = compute_ipr(CVector(ms.right.col(t)));
  }
  return ms;
}

inline ModeSet diagonalize_biorthogonal(const GreenMatrix& G, const DiagonalizeOptions& opts = {}) {
  return diagonalize_biorthogonal(G.entries, opts);
}

/// Fraction of the right vector's weight <R|R> on bulk atoms.
inline double bulk_weight(const CVector& right, const RegionLabels& regions) {
  double bulk = 0.0;
  double total = 0.0;
  for (std::size_t m = 0; m < regions.labels.size(); ++m) {
    const double w = std::norm(right(2 * m)) + std::norm(right(2 * m + 1));
    total += w;
    if (regions.is_bulk(m)) bulk += w;
  }
  return total > 0.0 ? bulk / total : 0.0;
}

/// Bulk iff at least half of the weight sits on bulk atoms.
inline ModeSet classify_modes(ModeSet modes, const RegionLabels& regions) {
  if (static_cast<Eigen::Index>(2 * regions.labels.size()) != modes.right.rows())
    throw std::invalid_argument("region labels do not match the mode dimension");
  modes.klass.resize(modes.size());
  for (std::size_t a = 0; a < modes.size(); ++a)
    modes.klass[a] = bulk_weight(modes.right.col(static_cast<Eigen::Index>(a)), regions) >= 0.5 ? Region::Bulk
                                                                                                  : Region::Edge;
  return modes;
}

inline bool passes(const ModeSet& ms, std::size_t a, ModeFilter f) {
  if (f == ModeFilter::All) return true;
  if (!ms.classified()) throw std::logic_error("mode filter requires classified modes");
  return ms.klass[a] == (f == ModeFilter::Bulk ? Region::Bulk : Region::Edge);
}

/// Uniform bins [lo + i w, lo + (i + 1) w) covering [lo, hi).
struct Binning {
  double lo = 0.0;
  double hi = 0.0;
  double width = 0.1;

  Binning(double lo_, double hi_, double width_) : lo(lo_), hi(hi_), width(width_) {
    if (!(width > 0.0)) throw std::invalid_argument("bin width must be positive");
  }
  std::size_t count() const {
    if (!(hi > lo)) return 0;
    return static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9));
  }
  double left(std::size_t i) const { return lo + static_cast<double>(i) * width; }
  double center(std::size_t i) const { return left(i) + 0.5 * width; }
  std::optional<std::size_t> index(double v) const {
    if (!(v >= lo) || !(v < hi)) return std::nullopt;
    const auto i = static_cast<std::size_t>(std::floor((v - lo) / width));
    if (i >= count()) return std::nullopt;
    return i;
  }
};

struct Histogram {
  Binning bins;
  std::vector<double> counts;
};

/// Raw mode counts per detuning bin for one realization.
inline Histogram density_of_states(const ModeSet& modes, double bin_width, ModeFilter filter, double lo, double hi) {
  Histogram h{Binning(lo, hi, bin_width), {}};
  h.counts.assign(h.bins.count(), 0.0);
  for (std::size_t a = 0; a < modes.size(); ++a) {
    if (!passes(modes, a, filter)) continue;
    if (auto i = h.bins.index(modes.detuning[a])) h.counts[*i] += 1.0;
  }
  return h;
}

struct SpectralGap {
  double lower = 0.0;  ///< highest detuning below the gap
  double upper = 0.0;  ///< lowest detuning above the gap
  double width() const { return upper - lower; }
  double center() const { return 0.5 * (lower + upper); }
};

/// Widest spacing between consecutive detunings of the filtered modes within
/// [lo, hi]; nullopt when fewer than two such modes exist.
inline std::optional<SpectralGap> widest_gap(const ModeSet& modes, ModeFilter filter, double lo, double hi) {
  std::vector<double> d;
  for (std::size_t a = 0; a < modes.size(); ++a)
    if (passes(modes, a, filter) && modes.detuning[a] >= lo && modes.detuning[a] <= hi) d.push_back(modes.detuning[a]);
  if (d.size() < 2) return std::nullopt;
  std::sort(d.begin(), d.end());
  SpectralGap best{d[0], d[0]};
  for (std::size_t t = 1; t < d.size(); ++t)
    if (d[t] - d[t - 1] > best.width()) best = {d[t - 1], d[t]};
  return best;
}

/// CSV: alpha,re_lambda,im_lambda,detuning,decay,ipr,class.
inline void write_mode_table_csv(std::ostream& os, const ModeSet& modes) {
  csv::Writer w(os);
  w.header("alpha", "re_lambda", "im_lambda", "detuning", "decay", "ipr", "class");
  for (std::size_t a = 0; a < modes.size(); ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    const std::string k = modes.classified() ? to_string(modes.klass[a]) : "unclassified";
    w.row(a, modes.lambda(ia).real(), modes.lambda(ia).imag(), modes.detuning[a], modes.decay[a], modes.ipr[a], k);
  }
}

}  // namespace honeytopo
