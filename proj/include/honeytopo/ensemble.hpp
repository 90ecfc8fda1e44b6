#pragma once

// Disorder ensembles over a (detuning, W) grid.
//
// Every realization is a pure function of (plan, W-index, realization-index):
// its seed is derived from the master seed, it writes into its own slot, and
// aggregation runs afterwards in index order. Results are therefore
// bit-identical for any thread count.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "honeytopo/bott.hpp"
#include "honeytopo/csv.hpp"
#include "honeytopo/green.hpp"
#include "honeytopo/lattice.hpp"
#include "honeytopo/random.hpp"
#include "honeytopo/spectrum.hpp"
#include "honeytopo/version.hpp"

namespace honeytopo {

enum class Observable : std::uint8_t { Bott, EdgeDOS, BulkDOS, BulkIPR, Decay, EdgeDecay };

inline const char* to_string(Observable o) {
  switch (o) {
    case Observable::Bott: return "bott";
    case Observable::EdgeDOS: return "edge_dos";
    case Observable::BulkDOS: return "bulk_dos";
    case Observable::BulkIPR: return "bulk_ipr";
    case Observable::Decay: return "decay";
    case Observable::EdgeDecay: return "edge_decay";
  }
  return "?";
}

inline std::optional<Observable> observable_from_string(std::string_view s) {
  for (auto o : {Observable::Bott, Observable::EdgeDOS, Observable::BulkDOS, Observable::BulkIPR, Observable::Decay,
                 Observable::EdgeDecay})
    if (s == to_string(o)) return o;
  return std::nullopt;
}

struct SweepPlan {
  int hex_layers = 0;        ///< hexagon for DOS / IPR / decay (0 = none)
  double square_side = 0.0;  ///< square for the Bott index, in wavelengths (0 = none)
  int n_edge = 4;
  PhysicalParams params;
  std::vector<double> W_grid;
  /// Bott: evaluation points. Spectral observables: bin centres; bin edges
  /// sit at the midpoints, the outer bins are symmetric.
  std::vector<double> delta_grid;
  double bin_width = 1.0;  ///< only used when delta_grid has a single point
  int n_realizations = 1;
  DisorderTarget target = DisorderTarget::AllAtoms;
  std::uint64_t master_seed = 0;
  std::set<Observable> observables;
  unsigned threads = 1;
  /// Called before each realization with (W-index, realization-index); an
  /// exception thrown here counts as a failed realization. Test seam.
  std::function<void(std::size_t, std::size_t)> before_realization;

  bool needs_hexagon() const {
    for (auto o : observables)
      if (o != Observable::Bott) return true;
    return false;
  }
  bool needs_square() const { return observables.count(Observable::Bott) > 0; }

  void validate() const {
    params.validate();
    if (n_realizations < 1) throw ConfigError("n_realizations must be >= 1");
    if (W_grid.empty() || delta_grid.empty()) throw ConfigError("W_grid and delta_grid must be non-empty");
    for (std::size_t i = 1; i < W_grid.size(); ++i)
      if (!(W_grid[i] > W_grid[i - 1])) throw ConfigError("W_grid must be strictly increasing");
    for (std::size_t i = 1; i < delta_grid.size(); ++i)
      if (!(delta_grid[i] > delta_grid[i - 1])) throw ConfigError("delta_grid must be strictly increasing");
    if (W_grid.front() < 0.0) throw ConfigError("W must be >= 0");
    if (observables.empty()) throw ConfigError("no observables requested");
    if (needs_hexagon() && hex_layers < 1) throw ConfigError("spectral observables need hex_layers >= 1");
    if (needs_square() && !(square_side > 0.0)) throw ConfigError("the Bott index needs square_side > 0");
    if (!(bin_width > 0.0)) throw ConfigError("bin_width must be positive");
    if (n_edge < 0) throw ConfigError("n_edge must be >= 0");
    if (threads < 1) throw ConfigError("threads must be >= 1");
  }
};

/// Welford mean / variance.
struct Accumulator {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double stderr_mean() const { return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

enum class CellStatus : std::uint8_t { Ok, NoModes, Aborted };

struct Cell {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stderr_mean = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
  CellStatus status = CellStatus::NoModes;
};

struct RealizationFailure {
  double W = 0.0;
  std::uint64_t seed = 0;
  std::string what;
};

struct PhaseDiagram {
  std::vector<double> delta;
  std::vector<double> W;
  /// cells[obs][w * delta.size() + d]
  std::map<Observable, std::vector<Cell>> cells;
  std::vector<std::vector<std::uint64_t>> seeds;  ///< seeds[w][r]
  std::vector<RealizationFailure> failures;
  double wall_seconds = 0.0;

  const Cell& at(Observable o, std::size_t d, std::size_t w) const { return cells.at(o).at(w * delta.size() + d); }
};

/// Seed of realization r at W-index w.
inline std::uint64_t realization_seed(std::uint64_t master, std::size_t w, std::size_t r) {
  return derive_seed(master, {static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(r)});
}

/// Bin edges around the centres of `grid`.
inline std::vector<double> bin_edges(const std::vector<double>& grid, double single_width) {
  std::vector<double> e(grid.size() + 1);
  if (grid.size() == 1) {
    e[0] = grid[0] - 0.5 * single_width;
    e[1] = grid[0] + 0.5 * single_width;
    return e;
  }
  for (std::size_t i = 1; i < grid.size(); ++i) e[i] = 0.5 * (grid[i - 1] + grid[i]);
  e.front() = grid.front() - (e[1] - grid.front());
  e.back() = grid.back() + (grid.back() - e[grid.size() - 1]);
  return e;
}

namespace detail {

// Per-realization values, NaN = no contribution.
using Sample = std::map<Observable, std::vector<double>>;

inline Sample spectral_sample(const ModeSet& ms, const SweepPlan& plan, const std::vector<double>& edges) {
  const std::size_t nb = plan.delta_grid.size();
  std::vector<double> edge_n(nb, 0.0), bulk_n(nb, 0.0), ipr(nb, 0.0), dec(nb, 0.0), edec(nb, 0.0);
  std::vector<double> all_n(nb, 0.0);
  for (std::size_t a = 0; a < ms.size(); ++a) {
    const double x = ms.detuning[a];
    if (!(x >= edges.front()) || !(x < edges.back())) continue;
    const auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin()) - 1;
    all_n[b] += 1.0;
    dec[b] += ms.decay[a];
    if (ms.klass[a] == Region::Bulk) {
      bulk_n[b] += 1.0;
      ipr[b] += ms.ipr[a];
    } else {
      edge_n[b] += 1.0;
      edec[b] += ms.decay[a];
    }
  }
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  Sample s;
  for (auto o : plan.observables) {
    if (o == Observable::Bott) continue;
    std::vector<double> v(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      const double w = edges[b + 1] - edges[b];
      switch (o) {
        case Observable::EdgeDOS: v[b] = edge_n[b] / w; break;
        case Observable::BulkDOS: v[b] = bulk_n[b] / w; break;
        case Observable::BulkIPR: v[b] = bulk_n[b] > 0 ? ipr[b] / bulk_n[b] : nan; break;
        case Observable::Decay: v[b] = all_n[b] > 0 ? dec[b] / all_n[b] : nan; break;
        case Observable::EdgeDecay: v[b] = edge_n[b] > 0 ? edec[b] / edge_n[b] : nan; break;
        default: break;
      }
    }
    s[o] = std::move(v);
  }
  return s;
}

}  // namespace detail

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Minimum fraction of successful realizations for a W column to be kept.
inline constexpr double min_success_fraction = 0.8;

inline PhaseDiagram run_sweep(const SweepPlan& plan, const ProgressFn& progress = {}) {
  plan.validate();
  const auto t0 = std::chrono::steady_clock::now();

  std::optional<SampleGeometry> hex, square;
  std::optional<RegionLabels> regions;
  if (plan.needs_hexagon()) {
    hex = build_hexagonal_sample(plan.hex_layers, plan.params);
    regions = partition_bulk_edge(*hex, plan.n_edge);
  }
  if (plan.needs_square()) square = build_square_sample(plan.square_side, plan.params);
  const auto edges = bin_edges(plan.delta_grid, plan.bin_width);

  const std::size_t nw = plan.W_grid.size();
  const auto nr = static_cast<std::size_t>(plan.n_realizations);
  const std::size_t nd = plan.delta_grid.size();

  PhaseDiagram out;
  out.delta = plan.delta_grid;
  out.W = plan.W_grid;
  out.seeds.assign(nw, std::vector<std::uint64_t>(nr));
  for (std::size_t w = 0; w < nw; ++w)
    for (std::size_t r = 0; r < nr; ++r) out.seeds[w][r] = realization_seed(plan.master_seed, w, r);

  std::vector<std::optional<detail::Sample>> samples(nw * nr);
  std::vector<std::string> errors(nw * nr);

  auto run_one = [&](std::size_t task) {
    const std::size_t w = task / nr;
    const double W = plan.W_grid[w];
    const std::uint64_t seed = out.seeds[w][task % nr];
    if (plan.before_realization) plan.before_realization(w, task % nr);
    detail::Sample s;
    if (hex) {
      const auto cfg = apply_positional_disorder(*hex, W, plan.target, seed);
      auto ms = classify_modes(diagonalize_biorthogonal(assemble_green_matrix(cfg, plan.params)), *regions);
      s = detail::spectral_sample(ms, plan, edges);
    }
    if (square) {
      const auto cfg = apply_positional_disorder(*square, W, plan.target, seed);
      const auto pos = cfg.positions();
      const auto ms = diagonalize_biorthogonal(assemble_green_matrix(cfg, plan.params));
      const auto& sq = std::get<SquareShape>(square->shape);
      const BottEvaluator ev(ms, pos, sq.lx, sq.ly);
      std::vector<double> v(nd);
      for (std::size_t d = 0; d < nd; ++d) v[d] = ev.evaluate(plan.delta_grid[d]).index;
      s[Observable::Bott] = std::move(v);
    }
    samples[task] = std::move(s);
  };

  const std::size_t total = nw * nr;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t task = next++; task < total; task = next++) {
      try {
        run_one(task);
      } catch (const std::exception& e) {
        errors[task] = e.what()[0] ? e.what() : "unknown failure";
      }
      const std::size_t k = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(k, total);
      }
    }
  };
  const unsigned nt = std::max(1u, std::min<unsigned>(plan.threads, static_cast<unsigned>(total)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
  }

  for (auto o : plan.observables) out.cells[o].assign(nw * nd, Cell{});
  for (std::size_t w = 0; w < nw; ++w) {
    std::size_t ok = 0;
    for (std::size_t r = 0; r < nr; ++r) {
      const std::size_t task = w * nr + r;
      if (samples[task]) ++ok;
      else out.failures.push_back({plan.W_grid[w], out.seeds[w][r], errors[task]});
    }
    const bool keep = static_cast<double>(ok) >= min_success_fraction * static_cast<double>(nr);
    for (auto o : plan.observables) {
      for (std::size_t d = 0; d < nd; ++d) {
        Cell& c = out.cells[o][w * nd + d];
        if (!keep) {
          c.status = CellStatus::Aborted;
          continue;
        }
        Accumulator acc;
        for (std::size_t r = 0; r < nr; ++r) {
          const auto& s = samples[w * nr + r];
          if (!s) continue;
          const double v = s->at(o)[d];
          if (!std::isnan(v)) acc.add(v);
        }
        c.n = acc.n;
        if (acc.n > 0) {
          c.mean = acc.mean;
          c.stderr_mean = acc.stderr_mean();
          c.status = CellStatus::Ok;
        }
      }
    }
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

struct SectionPoint {
  double delta = 0.0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::size_t n = 0;
};

/// Mean bulk IPR against detuning at a single W.
inline std::vector<SectionPoint> ipr_section(SweepPlan plan, const ProgressFn& progress = {}) {
  if (plan.W_grid.size() != 1) throw ConfigError("ipr_section needs exactly one W");
  plan.observables = {Observable::BulkIPR};
  const auto pd = run_sweep(plan, progress);
  std::vector<SectionPoint> out;
  for (std::size_t d = 0; d < pd.delta.size(); ++d) {
    const Cell& c = pd.at(Observable::BulkIPR, d, 0);
    out.push_back({pd.delta[d], c.mean, c.stderr_mean, c.n});
  }
  return out;
}

/// Mean decay rate over all modes per (delta, W) bin, or over edge modes only.
inline PhaseDiagram decay_map(SweepPlan plan, bool edge_only = false, const ProgressFn& progress = {}) {
  plan.observables = {edge_only ? Observable::EdgeDecay : Observable::Decay};
  return run_sweep(plan, progress);
}

/// CSV: delta,W,mean,stderr,n. Cells without modes have n = 0 and an empty
/// mean; aborted cells carry "aborted" in the mean column.
inline void write_observable_csv(std::ostream& os, const PhaseDiagram& pd, Observable o) {
  csv::Writer w(os);
  w.header("delta", "W", "mean", "stderr", "n");
  const auto& cells = pd.cells.at(o);
  for (std::size_t wi = 0; wi < pd.W.size(); ++wi) {
    for (std::size_t d = 0; d < pd.delta.size(); ++d) {
      const Cell& c = cells[wi * pd.delta.size() + d];
      switch (c.status) {
        case CellStatus::Ok: w.row(pd.delta[d], pd.W[wi], c.mean, c.stderr_mean, c.n); break;
        case CellStatus::NoModes: w.row(pd.delta[d], pd.W[wi], std::string(), std::string(), c.n); break;
        case CellStatus::Aborted: w.row(pd.delta[d], pd.W[wi], std::string("aborted"), std::string(), c.n); break;
      }
    }
  }
}

inline void write_section_csv(std::ostream& os, std::span<const SectionPoint> pts) {
  csv::Writer w(os);
  w.header("delta", "mean", "stderr", "n");
  for (const auto& p : pts) {
    if (p.n > 0) w.row(p.delta, p.mean, p.stderr_mean, p.n);
    else w.row(p.delta, std::string(), std::string(), p.n);
  }
}

inline nlohmann::json plan_to_json(const SweepPlan& p) {
  nlohmann::json j;
  j["geometry"] = {{"hex_layers", p.hex_layers}, {"square_side", p.square_side}, {"n_edge", p.n_edge}};
  j["params"] = {{"a", p.params.a}, {"delta_B", p.params.delta_B}, {"delta_AB", p.params.delta_AB}};
  j["W_grid"] = p.W_grid;
  j["delta_grid"] = p.delta_grid;
  j["bin_width"] = p.bin_width;
  j["n_realizations"] = p.n_realizations;
  j["target"] = p.target == DisorderTarget::AllAtoms ? "all" : "b-only";
  j["master_seed"] = p.master_seed;
  std::vector<std::string> obs;
  for (auto o : p.observables) obs.emplace_back(to_string(o));
  j["observables"] = obs;
  return j;
}

/// Run manifest. Wall-clock and thread count are recorded here and nowhere
/// else so the CSVs stay reproducible.
inline nlohmann::json run_manifest(const SweepPlan& plan, const PhaseDiagram& pd) {
  nlohmann::json j;
  j["version"] = version_string;
  j["plan"] = plan_to_json(plan);
  j["threads"] = plan.threads;
  j["seed_rule"] = "splitmix64 chain over (master_seed, W_index, realization_index)";
  j["seeds"] = pd.seeds;
  j["wall_seconds"] = pd.wall_seconds;
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : pd.failures) fails.push_back({{"W", f.W}, {"seed", f.seed}, {"error", f.what}});
  j["failures"] = fails;
  return j;
}

}  // namespace honeytopo
