#pragma once

// Command-line front end. `run_cli` is the whole program; tools/honeytopo.cpp
// only forwards argv. Exit codes: 0 success, 1 computation failure, 2 usage
// or config error. Output files are written only after every computation of
// the command has succeeded.

#include <CLI11.hpp>

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "honeytopo/bott.hpp"
#include "honeytopo/config.hpp"
#include "honeytopo/ensemble.hpp"
#include "honeytopo/green.hpp"
#include "honeytopo/lattice.hpp"
#include "honeytopo/perturb.hpp"
#include "honeytopo/spectrum.hpp"
#include "honeytopo/version.hpp"

namespace honeytopo {

namespace cli_detail {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  int hex_layers = 0;
  double square_side = 0.0;
  PhysicalParams params;
  double W = 0.0;
  std::uint64_t seed = 0;
  std::string target = "all";
  std::string out = ".";
  int n_edge = 4;
  unsigned threads = 0;
};

inline void add_sample_flags(CLI::App& sub, Common& c) {
  sub.add_option("--hex-layers", c.hex_layers, "armchair hexagon with this many rings");
  sub.add_option("--square-side", c.square_side, "square sample side in wavelengths");
  sub.add_option("--a", c.params.a, "nearest-neighbour spacing in wavelengths")->capture_default_str();
  sub.add_option("--delta-b", c.params.delta_B, "Zeeman shift in units of Gamma0")->capture_default_str();
  sub.add_option("--delta-ab", c.params.delta_AB, "sublattice detuning in units of Gamma0")->capture_default_str();
  sub.add_option("--w", c.W, "disorder strength W (displacements up to W a)")->capture_default_str();
  sub.add_option("--seed", c.seed, "disorder seed")->capture_default_str();
  sub.add_option("--target", c.target, "displaced atoms")->check(CLI::IsMember({"all", "b-only"}))->capture_default_str();
  sub.add_option("--out", c.out, "output directory")->capture_default_str();
  sub.add_option("--n-edge", c.n_edge, "edge thickness in atomic layers")->capture_default_str();
  sub.add_option("--threads", c.threads, "worker threads (default: HONEYTOPO_THREADS or all cores)");
}

inline DisorderTarget parse_target(const std::string& s) {
  return s == "b-only" ? DisorderTarget::SublatticeBOnly : DisorderTarget::AllAtoms;
}

inline SampleGeometry build_sample(const Common& c, bool square_only = false) {
  const bool hex = c.hex_layers != 0;
  const bool sq = c.square_side != 0.0;
  if (hex == sq) throw UsageError("give exactly one of --hex-layers or --square-side");
  if (square_only && !sq) throw UsageError("this command needs --square-side");
  if (hex && c.hex_layers < 1) throw UsageError("--hex-layers must be >= 1");
  return hex ? build_hexagonal_sample(c.hex_layers, c.params) : build_square_sample(c.square_side, c.params);
}

/// "lo:hi:step" -> inclusive grid.
inline std::vector<double> parse_numbers(const std::string& s, std::size_t count, const char* shape) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("bad value '" + s + "', expected " + shape);
    }
  }
  if (v.size() != count) throw UsageError("bad value '" + s + "', expected " + shape);
  return v;
}

inline std::vector<double> parse_scan(const std::string& s) {
  const auto v = parse_numbers(s, 3, "lo:hi:step");
  try {
    return arithmetic_grid(v[0], v[1], v[2]);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

inline unsigned resolve_threads(unsigned flag, std::optional<unsigned> from_config = std::nullopt) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("HONEYTOPO_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  if (from_config) return *from_config;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Files are assembled in memory and written together at the end.
struct Outputs {
  std::ostringstream& add(const std::string& name) {
    streams.emplace_back();
    names.push_back(name);
    return streams.back();
  }
  void write(const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto path = std::filesystem::path(dir) / names[i];
      std::ofstream os(path, std::ios::binary);
      os << streams[i].str();
      if (!os) throw Error("cannot write " + path.string());
    }
  }

 private:
  std::deque<std::ostringstream> streams;
  std::vector<std::string> names;
};

inline ModeSet diagonalize_or_explain(const GreenMatrix& G, std::uint64_t seed, double W) {
  try {
    return diagonalize_biorthogonal(G);
  } catch (const Error& e) {
    throw Error(std::string(e.what()) + " (seed " + std::to_string(seed) + ", W " + csv::num(W) + ")");
  }
}

// Widest bulk gap; falls back to all modes when fewer than two bulk modes
// lie in the window (small samples with a thick edge).
inline std::optional<SpectralGap> gap_estimate(const ModeSet& ms, double lo, double hi) {
  if (auto g = widest_gap(ms, ModeFilter::Bulk, lo, hi)) return g;
  return widest_gap(ms, ModeFilter::All, lo, hi);
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"Coupled-dipole honeycomb lattices: spectra, Bott index, disorder ensembles", "honeytopo"};
  app.set_version_flag("--version", version_string);
  app.require_subcommand(1);

  Common geo, spec, bott, pert, sweep_c;
  auto* c_geo = app.add_subcommand("geometry", "write the sample geometry and print N");
  add_sample_flags(*c_geo, geo);

  auto* c_spec = app.add_subcommand("spectrum", "diagonalize one realization and write the mode table");
  add_sample_flags(*c_spec, spec);
  std::string gap_window = "-10:30";
  c_spec->add_option("--gap-window", gap_window, "detuning window lo:hi searched for the gap")->capture_default_str();

  auto* c_bott = app.add_subcommand("bott", "Bott index against detuning on a square sample");
  add_sample_flags(*c_bott, bott);
  std::string delta_scan = "0:14:0.25";
  c_bott->add_option("--delta-scan", delta_scan, "lo:hi:step")->capture_default_str();

  auto* c_pert = app.add_subcommand("perturb", "second-order disorder-averaged eigenvalue shifts");
  add_sample_flags(*c_pert, pert);
  std::string w_scan;
  std::string method = "analytic";
  c_pert->add_option("--w-scan", w_scan, "lo:hi:step for the predicted curves (default: 0 and --w)");
  c_pert->add_option("--derivatives", method, "derivative matrices")
      ->check(CLI::IsMember({"analytic", "fd"}))
      ->capture_default_str();
  c_pert->add_option("--gap-window", gap_window, "detuning window lo:hi searched for the gap")->capture_default_str();

  auto* c_sweep = app.add_subcommand("sweep", "run a disorder sweep from a JSON config");
  std::string config_path;
  c_sweep->add_option("config", config_path, "config file")->required();
  std::optional<std::string> sweep_out;
  c_sweep->add_option("--out", sweep_out, "output directory (overrides the config)");
  c_sweep->add_option("--threads", sweep_c.threads, "worker threads");

  CLI::App* active = &app;
  try {
    app.parse(argc, argv);
    for (auto* s : {c_geo, c_spec, c_bott, c_pert, c_sweep})
      if (s->parsed()) active = s;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << version_string << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    for (auto* s : {c_geo, c_spec, c_bott, c_pert, c_sweep})
      if (s->parsed()) active = s;
    if (e.get_exit_code() == 0) {
      out << active->help();
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << active->help();
    return 2;
  }

  try {
    Outputs files;
    std::string out_dir;

    if (c_geo->parsed()) {
      const auto g = build_sample(geo);
      const auto regions = partition_bulk_edge(g, geo.n_edge);
      const auto cfg = apply_positional_disorder(g, geo.W, parse_target(geo.target), geo.seed);
      const auto pos = cfg.positions();
      write_geometry_csv(files.add("geometry.csv"), g, regions, geo.W > 0.0 ? &pos : nullptr);
      out << "N = " << g.size() << '\n'
          << "bulk = " << regions.bulk_count << '\n'
          << "edge = " << g.size() - regions.bulk_count << '\n';
      if (regions.bulk_empty()) out << "bulk region is empty\n";
      out_dir = geo.out;
    } else if (c_spec->parsed()) {
      const auto g = build_sample(spec);
      const auto window = parse_numbers(gap_window, 2, "lo:hi");
      const auto regions = partition_bulk_edge(g, spec.n_edge);
      const auto cfg = apply_positional_disorder(g, spec.W, parse_target(spec.target), spec.seed);
      const auto ms =
          classify_modes(diagonalize_or_explain(assemble_green_matrix(cfg, spec.params), spec.seed, spec.W), regions);
      write_mode_table_csv(files.add("modes.csv"), ms);
      out << "N = " << g.size() << '\n';
      if (auto gap = gap_estimate(ms, window.front(), window.back()))
        out << "gap = [" << csv::num(gap->lower, 6) << ", " << csv::num(gap->upper, 6)
            << "] width = " << csv::num(gap->width(), 6) << '\n';
      else out << "gap = none (fewer than two modes in the window)\n";
      out_dir = spec.out;
    } else if (c_bott->parsed()) {
      const auto g = build_sample(bott, true);
      const auto deltas = parse_scan(delta_scan);
      const auto cfg = apply_positional_disorder(g, bott.W, parse_target(bott.target), bott.seed);
      const auto pos = cfg.positions();
      const auto ms = diagonalize_or_explain(assemble_green_matrix(cfg, bott.params), bott.seed, bott.W);
      const auto& sq = std::get<SquareShape>(g.shape);
      const auto pts = BottEvaluator(ms, pos, sq.lx, sq.ly).scan(deltas);
      write_bott_scan_csv(files.add("bott.csv"), pts);
      out << "N = " << g.size() << '\n';
      double lo = 0, hi = 0;
      bool found = false;
      for (const auto& p : pts)
        if (std::abs(p.index + 1.0) < 1e-3) {
          if (!found) lo = p.delta;
          hi = p.delta;
          found = true;
        }
      if (found) out << "C_B = -1 for delta in [" << csv::num(lo, 6) << ", " << csv::num(hi, 6) << "]\n";
      else out << "no C_B = -1 plateau on the scan\n";
      out_dir = bott.out;
    } else if (c_pert->parsed()) {
      const auto g = build_sample(pert);
      const auto window = parse_numbers(gap_window, 2, "lo:hi");
      std::vector<double> ws = w_scan.empty() ? std::vector<double>{0.0} : parse_scan(w_scan);
      if (w_scan.empty() && pert.W > 0.0) ws.push_back(pert.W);
      const auto regions = partition_bulk_edge(g, pert.n_edge);
      const auto ms = classify_modes(
          diagonalize_or_explain(assemble_green_matrix(ideal_configuration(g), pert.params), 0, 0.0), regions);
      const DerivativeMethod dm = method == "fd" ? DerivativeMethod{FiniteDifference{1e-6 * g.a}}
                                                 : DerivativeMethod{AnalyticDerivative{}};
      const auto ps = averaged_second_order_shift(ms, derivative_matrices(g, dm));
      const auto gap = gap_estimate(ms, window.front(), window.back());
      std::vector<std::size_t> edge;
      if (gap) edge = in_gap_edge_modes(ms, gap->lower, gap->upper);
      const auto pred = predicted_edge_spectrum(ps, edge, ws, g.a);
      write_perturbation_csv(files.add("perturbation.csv"), ps);
      write_curves_csv(files.add("curves.csv"), pred);
      out << "N = " << g.size() << '\n' << "in-gap edge modes = " << edge.size() << '\n';
      out_dir = pert.out;
    } else if (c_sweep->parsed()) {
      RunConfig rc = load_run_config(config_path);
      rc.plan.threads =
          resolve_threads(sweep_c.threads, rc.threads_set ? std::optional<unsigned>(rc.plan.threads) : std::nullopt);
      out_dir = sweep_out.value_or(rc.out_dir);
      const auto pd = run_sweep(rc.plan, [&](std::size_t k, std::size_t n) {
        err << "\r" << k << "/" << n << " realizations" << (k == n ? "\n" : "") << std::flush;
      });
      for (const auto& [obs, cells] : pd.cells) write_observable_csv(files.add(std::string(to_string(obs)) + ".csv"), pd, obs);
      files.add("manifest.json") << run_manifest(rc.plan, pd).dump(2) << '\n';
      for (const auto& f : pd.failures)
        err << "realization failed (W " << csv::num(f.W) << ", seed " << f.seed << "): " << f.what << '\n';
      std::size_t aborted = 0;
      for (const auto& [obs, cells] : pd.cells)
        for (const auto& c : cells) aborted += c.status == CellStatus::Aborted;
      if (aborted) err << aborted << " cells aborted (fewer than 80% of realizations succeeded)\n";
    }
    files.write(out_dir);
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace honeytopo
