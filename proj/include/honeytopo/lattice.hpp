#pragma once

// Honeycomb samples: armchair hexagons, square cuts, positional disorder and
// the bulk/edge split.
//
// Frame: zigzag rows run along x, so armchair edges run along y. The
// lattice vectors are a1 = sqrt(3) a (1, 0) and a2 = sqrt(3) a (1/2, sqrt(3)/2);
// atom B of a cell sits at A + (0, a). The origin is the centre of the
// plaquette spanned by cell (0, 0).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <set>
#include <tuple>
#include <variant>
#include <vector>

#include "honeytopo/csv.hpp"
#include "honeytopo/params.hpp"
#include "honeytopo/random.hpp"

namespace honeytopo {

enum class Sublattice : std::uint8_t { A, B };
enum class Region : std::uint8_t { Bulk, Edge };
enum class DisorderTarget : std::uint8_t { AllAtoms, SublatticeBOnly };

inline const char* to_string(Sublattice s) { return s == Sublattice::A ? "A" : "B"; }
inline const char* to_string(Region r) { return r == Region::Bulk ? "bulk" : "edge"; }

struct HexagonShape {
  int n_layers = 1;
};

/// Square cut. lx, ly are the sides of the mask used by the Bott index.
struct SquareShape {
  double side = 0.0;
  double lx = 0.0;
  double ly = 0.0;
};

using SampleShape = std::variant<HexagonShape, SquareShape>;

struct SampleGeometry {
  std::vector<Vec2> positions;
  std::vector<Sublattice> sublattice;
  SampleShape shape;
  std::vector<int> layer_depth;  ///< onion-peeling depth, >= 1
  double a = 0.0;

  std::size_t size() const { return positions.size(); }

  Vec2 centroid() const {
    Vec2 c;
    for (auto p : positions) c = c + p;
    return size() ? (1.0 / static_cast<double>(size())) * c : c;
  }
};

struct DisorderedConfiguration {
  SampleGeometry base;
  std::vector<Vec2> displacements;
  double W = 0.0;
  DisorderTarget target = DisorderTarget::AllAtoms;
  std::uint64_t seed = 0;

  std::vector<Vec2> positions() const {
    std::vector<Vec2> out(base.size());
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = base.positions[m] + displacements[m];
    return out;
  }
};

/// Configuration with no displacement at all.
inline DisorderedConfiguration ideal_configuration(const SampleGeometry& geom) {
  return {geom, std::vector<Vec2>(geom.size()), 0.0, DisorderTarget::AllAtoms, 0};
}

struct RegionLabels {
  std::vector<Region> labels;
  int n_edge = 4;
  double bulk_radius = 0.0;
  Vec2 center;
  std::size_t bulk_count = 0;

  bool bulk_empty() const { return bulk_count == 0; }
  bool is_bulk(std::size_t m) const { return labels[m] == Region::Bulk; }
};

namespace detail {

inline constexpr double neighbor_tolerance = 1e-6;

struct CellSite {
  int i;
  int j;
  Sublattice s;
  friend auto operator<=>(const CellSite&, const CellSite&) = default;
};

// Position of a lattice site with the origin at the centre of plaquette (0, 0).
inline Vec2 site_position(const CellSite& c, double a) {
  const double r3 = std::sqrt(3.0);
  Vec2 p{r3 * a * (c.i + 0.5 * c.j), 1.5 * a * c.j};
  if (c.s == Sublattice::B) p.y += a;
  return p - Vec2{0.5 * r3 * a, 0.5 * a};
}

inline SampleGeometry from_sites(const std::set<CellSite>& sites, SampleShape shape, double a);

}  // namespace detail

/// Nearest-neighbour lists on the ideal positions (|r - a| / a < 1e-6).
inline std::vector<std::vector<std::size_t>> nearest_neighbors(const std::vector<Vec2>& pos, double a) {
  const std::size_t n = pos.size();
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = m + 1; k < n; ++k) {
      if (std::abs((pos[m] - pos[k]).norm() - a) < detail::neighbor_tolerance * a) {
        nb[m].push_back(k);
        nb[k].push_back(m);
      }
    }
  }
  return nb;
}

/// Onion peeling: depth d atoms are those with fewer than three neighbours
/// once all atoms of depth < d have been removed.
inline std::vector<int> peeling_depth(const std::vector<Vec2>& pos, double a) {
  const auto nb = nearest_neighbors(pos, a);
  const std::size_t n = pos.size();
  std::vector<int> depth(n, 0);
  std::vector<int> degree(n);
  for (std::size_t m = 0; m < n; ++m) degree[m] = static_cast<int>(nb[m].size());
  std::size_t removed = 0;
  for (int layer = 1; removed < n; ++layer) {
    std::vector<std::size_t> boundary;
    for (std::size_t m = 0; m < n; ++m)
      if (depth[m] == 0 && degree[m] < 3) boundary.push_back(m);
    if (boundary.empty()) {
      // Closed shell with no boundary; cannot happen for finite cuts.
      for (std::size_t m = 0; m < n; ++m)
        if (depth[m] == 0) boundary.push_back(m);
    }
    for (auto m : boundary) depth[m] = layer;
    for (auto m : boundary)
      for (auto k : nb[m]) --degree[k];
    removed += boundary.size();
  }
  return depth;
}

/// Armchair hexagon made of ring-count n_layers: the union of all plaquettes
/// whose centres lie inside the hexagon with inradius (n_layers - 1) * 3 sqrt(3) a / 2.
/// N = 18 n^2 - 18 n + 6.
inline SampleGeometry build_hexagonal_sample(int n_layers, const PhysicalParams& params) {
  params.validate();
  if (n_layers < 1) throw GeometryError("n_layers must be >= 1");
  const double a = params.a;
  const double r3 = std::sqrt(3.0);
  const double reach = (n_layers - 1) * 1.5 * r3 * a + 1e-9 * a;
  const Vec2 normals[3] = {{1.0, 0.0}, {0.5, 0.5 * r3}, {-0.5, 0.5 * r3}};

  std::set<detail::CellSite> sites;
  const int span = 2 * n_layers + 2;
  for (int i = -span; i <= span; ++i) {
    for (int j = -span; j <= span; ++j) {
      const Vec2 c{r3 * a * (i + 0.5 * j), 1.5 * a * j};
      bool inside = true;
      for (auto nrm : normals) inside = inside && std::abs(nrm.dot(c)) <= reach;
      if (!inside) continue;
      using S = Sublattice;
      for (auto s : {detail::CellSite{i, j, S::A}, {i, j, S::B}, {i, j + 1, S::A}, {i + 1, j, S::B},
                     {i + 1, j, S::A}, {i + 1, j - 1, S::B}})
        sites.insert(s);
    }
  }
  return detail::from_sites(sites, HexagonShape{n_layers}, a);
}

/// Square cut of side `side` centred at the origin, keeping whole unit cells
/// (both atoms inside the mask).
inline SampleGeometry build_square_sample(double side, const PhysicalParams& params) {
  params.validate();
  const double a = params.a;
  if (!(side >= 3.0 * a * (1.0 - 1e-12))) throw GeometryError("square side must be at least 3a");
  const double half = 0.5 * side + 1e-9 * a;
  const int span = static_cast<int>(std::ceil(side / a)) + 2;
  std::set<detail::CellSite> sites;
  for (int i = -2 * span; i <= 2 * span; ++i) {
    for (int j = -span; j <= span; ++j) {
      const detail::CellSite ca{i, j, Sublattice::A};
      const detail::CellSite cb{i, j, Sublattice::B};
      const Vec2 pa = detail::site_position(ca, a);
      const Vec2 pb = detail::site_position(cb, a);
      auto in = [&](Vec2 p) { return std::abs(p.x) <= half && std::abs(p.y) <= half; };
      if (in(pa) && in(pb)) {
        sites.insert(ca);
        sites.insert(cb);
      }
    }
  }
  if (sites.empty()) throw GeometryError("square side too small to contain a unit cell");
  return detail::from_sites(sites, SquareShape{side, side, side}, a);
}

inline SampleGeometry detail::from_sites(const std::set<CellSite>& sites, SampleShape shape, double a) {
  // Order atoms row by row (y, then x) so indices are easy to read in dumps.
  std::vector<CellSite> ordered(sites.begin(), sites.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const CellSite& p, const CellSite& q) {
    const int rp = 2 * p.j + (p.s == Sublattice::B);
    const int rq = 2 * q.j + (q.s == Sublattice::B);
    if (rp != rq) return rp < rq;
    return 2 * p.i + p.j < 2 * q.i + q.j;
  });
  SampleGeometry g;
  g.a = a;
  g.shape = shape;
  for (const auto& c : ordered) {
    g.positions.push_back(site_position(c, a));
    g.sublattice.push_back(c.s);
  }
  g.layer_depth = peeling_depth(g.positions, a);
  return g;
}

/// Displaces each targeted atom by a radius uniform on [0, W a] in a uniformly
/// random direction. Pure function of (geom, W, target, seed).
inline DisorderedConfiguration apply_positional_disorder(const SampleGeometry& geom, double W,
                                                         DisorderTarget target, std::uint64_t seed) {
  if (!(W >= 0.0) || !std::isfinite(W)) throw std::invalid_argument("disorder strength W must be >= 0");
  DisorderedConfiguration cfg{geom, std::vector<Vec2>(geom.size()), W, target, seed};
  if (W == 0.0) return cfg;
  UniformStream rng(seed);
  const double rmax = W * geom.a;
  for (std::size_t m = 0; m < geom.size(); ++m) {
    // Draw for every atom so the stream for atom m does not depend on the target.
    const double r = rmax * rng.next();
    const double phi = 2.0 * pi * rng.next();
    if (target == DisorderTarget::SublatticeBOnly && geom.sublattice[m] != Sublattice::B) continue;
    cfg.displacements[m] = {r * std::cos(phi), r * std::sin(phi)};
  }
  return cfg;
}

/// Bulk = open disk around the sample centroid whose radius is the distance to
/// the closest atom of peeling depth <= max(n_edge, 1). Labels use ideal
/// positions only.
inline RegionLabels partition_bulk_edge(const SampleGeometry& geom, int n_edge) {
  if (n_edge < 0) throw std::invalid_argument("n_edge must be >= 0");
  RegionLabels out;
  out.n_edge = n_edge;
  out.center = geom.centroid();
  const int cutoff = std::max(n_edge, 1);
  double radius = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < geom.size(); ++m)
    if (geom.layer_depth[m] <= cutoff) radius = std::min(radius, (geom.positions[m] - out.center).norm());
  out.bulk_radius = std::isfinite(radius) ? radius : 0.0;
  out.labels.assign(geom.size(), Region::Edge);
  const double strict = out.bulk_radius * (1.0 - 1e-9);
  for (std::size_t m = 0; m < geom.size(); ++m) {
    if ((geom.positions[m] - out.center).norm() < strict) {
      out.labels[m] = Region::Bulk;
      ++out.bulk_count;
    }
  }
  return out;
}

/// CSV: index,x,y,sublattice,region,layer_depth with 12 significant digits.
inline void write_geometry_csv(std::ostream& os, const SampleGeometry& geom, const RegionLabels& regions,
                               const std::vector<Vec2>* displaced = nullptr) {
  csv::Writer w(os);
  w.header("index", "x", "y", "sublattice", "region", "layer_depth");
  for (std::size_t m = 0; m < geom.size(); ++m) {
    const Vec2 p = displaced ? (*displaced)[m] : geom.positions[m];
    w.row(m, csv::num(p.x), csv::num(p.y), std::string(to_string(geom.sublattice[m])),
          std::string(to_string(regions.labels[m])), geom.layer_depth[m]);
  }
}

}  // namespace honeytopo
