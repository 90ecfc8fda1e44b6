#pragma once

// Run configuration for `sweep`: a JSON document validated against a fixed
// schema before anything is computed. Every problem is reported with its
// JSON path, all at once.
//
//   {
//     "geometry":  {"hex_layers": 6, "square_side": 1.0, "n_edge": 4},
//     "params":    {"a": 0.05, "delta_B": 5, "delta_AB": 0},
//     "disorder":  {"W": [0, 0.1, 0.2], "target": "all", "realizations": 25, "seed": 1},
//     "delta":     {"lo": -5, "hi": 15, "step": 0.5}      or  [d0, d1, ...],
//     "bin_width": 0.5,
//     "observables": ["bott", "edge_dos", "bulk_dos", "bulk_ipr", "decay", "edge_decay"],
//     "output":    {"dir": "out"},
//     "threads":   4
//   }

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "honeytopo/ensemble.hpp"

namespace honeytopo {

struct RunConfig {
  SweepPlan plan;
  std::string out_dir = ".";
  bool threads_set = false;
};

/// Inclusive arithmetic grid lo, lo + step, ... <= hi (+ 1e-9 step slack).
inline std::vector<double> arithmetic_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ConfigError("grid needs step > 0 and hi >= lo");
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) g.push_back(lo + static_cast<double>(i) * step);
  return g;
}

namespace detail {

class SchemaCheck {
 public:
  using json = nlohmann::json;

  void allow(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) {
      fail(path, "expected an object");
      return;
    }
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items())
      if (!ok.count(k)) fail(path + "/" + k, "unknown key");
  }

  const json* get(const json& obj, const std::string& path, const char* key, bool required) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(path + "/" + key, "missing required key");
      return nullptr;
    }
    return &*it;
  }

  template <typename T>
  bool read(const json& obj, const std::string& path, const char* key, T& out, bool required = false) {
    const json* v = get(obj, path, key, required);
    if (!v) return false;
    const std::string p = path + "/" + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) return fail(p, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer()) return fail(p, "expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (v->is_number_integer() && !v->is_number_unsigned()) return fail(p, "expected a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) return fail(p, "expected a number");
    } else {
      if (!v->is_string()) return fail(p, "expected a string");
    }
    out = v->get<T>();
    return true;
  }

  bool fail(const std::string& path, const std::string& msg) {
    problems_.push_back(path + ": " + msg);
    return false;
  }

  void raise_if_any() const {
    if (problems_.empty()) return;
    std::ostringstream os;
    os << "invalid config:";
    for (const auto& p : problems_) os << "\n  " << p;
    throw ConfigError(os.str());
  }

 private:
  std::vector<std::string> problems_;
};

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using json = nlohmann::json;
  detail::SchemaCheck c;
  RunConfig rc;
  SweepPlan& p = rc.plan;

  c.allow(j, "", {"geometry", "params", "disorder", "delta", "bin_width", "observables", "output", "threads"});
  if (!j.is_object()) c.raise_if_any();

  if (const json* g = c.get(j, "", "geometry", true)) {
    c.allow(*g, "/geometry", {"hex_layers", "square_side", "n_edge"});
    c.read(*g, "/geometry", "hex_layers", p.hex_layers);
    c.read(*g, "/geometry", "square_side", p.square_side);
    c.read(*g, "/geometry", "n_edge", p.n_edge);
  }
  if (const json* q = c.get(j, "", "params", true)) {
    c.allow(*q, "/params", {"a", "delta_B", "delta_AB"});
    c.read(*q, "/params", "a", p.params.a);
    c.read(*q, "/params", "delta_B", p.params.delta_B, true);
    c.read(*q, "/params", "delta_AB", p.params.delta_AB, true);
  }
  if (const json* d = c.get(j, "", "disorder", true)) {
    c.allow(*d, "/disorder", {"W", "target", "realizations", "seed"});
    if (const json* w = c.get(*d, "/disorder", "W", true)) {
      if (!w->is_array()) c.fail("/disorder/W", "expected an array of numbers");
      else
        for (std::size_t i = 0; i < w->size(); ++i) {
          if ((*w)[i].is_number()) p.W_grid.push_back((*w)[i].get<double>());
          else c.fail("/disorder/W/" + std::to_string(i), "expected a number");
        }
    }
    std::string target = "all";
    if (c.read(*d, "/disorder", "target", target)) {
      if (target == "all") p.target = DisorderTarget::AllAtoms;
      else if (target == "b-only") p.target = DisorderTarget::SublatticeBOnly;
      else c.fail("/disorder/target", "expected \"all\" or \"b-only\"");
    }
    c.read(*d, "/disorder", "realizations", p.n_realizations, true);
    c.read(*d, "/disorder", "seed", p.master_seed);
  }
  if (const json* d = c.get(j, "", "delta", true)) {
    if (d->is_array()) {
      for (std::size_t i = 0; i < d->size(); ++i) {
        if ((*d)[i].is_number()) p.delta_grid.push_back((*d)[i].get<double>());
        else c.fail("/delta/" + std::to_string(i), "expected a number");
      }
    } else {
      c.allow(*d, "/delta", {"lo", "hi", "step"});
      double lo = 0, hi = 0, step = 0;
      const bool ok = c.read(*d, "/delta", "lo", lo, true) & c.read(*d, "/delta", "hi", hi, true) &
                      c.read(*d, "/delta", "step", step, true);
      if (ok) {
        try {
          p.delta_grid = arithmetic_grid(lo, hi, step);
        } catch (const ConfigError& e) {
          c.fail("/delta", e.what());
        }
      }
    }
  }
  c.read(j, "", "bin_width", p.bin_width);
  if (const json* o = c.get(j, "", "observables", true)) {
    if (!o->is_array()) c.fail("/observables", "expected an array of strings");
    else
      for (std::size_t i = 0; i < o->size(); ++i) {
        const auto& v = (*o)[i];
        const auto obs = v.is_string() ? observable_from_string(v.get<std::string>()) : std::nullopt;
        if (obs) p.observables.insert(*obs);
        else c.fail("/observables/" + std::to_string(i), "unknown observable");
      }
  }
  if (const json* o = c.get(j, "", "output", false)) {
    c.allow(*o, "/output", {"dir"});
    c.read(*o, "/output", "dir", rc.out_dir);
  }
  rc.threads_set = c.read(j, "", "threads", p.threads);
  c.raise_if_any();

  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_run_config(j);
}

}  // namespace honeytopo
