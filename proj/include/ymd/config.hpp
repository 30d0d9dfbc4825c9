#pragma once

// Run configuration: one JSON document, every section optional, unknown keys
// rejected.

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ymd/error.hpp"
#include "ymd/fields.hpp"
#include "ymd/liealg.hpp"

namespace ymd {

struct RunConfig {
  struct GridSection {
    int n = 16;
    double length = 2.0 * std::numbers::pi;
  } grid;
  Exponents exponents;
  struct DataSection {
    double eps = 1e-3;
    std::uint64_t seed = 1;
    bool abelian = false;
  } data;
  struct IntegratorSection {
    double dt = 1e-3;
    double t_end = 1.0;
    double picard_tol = 1e-12;
    int picard_max = 50;
  } integrator;
  Convention convention = Convention::physics;
  struct OutputSection {
    std::string directory = "ymd_out";
    int snapshot_stride = 100;
  } output;
  struct GaugeSection {
    double tol = 1e-10;
    int max_iter = 30;
  } gauge;

  Grid make_grid() const { return Grid(grid.n, grid.length); }
  int steps() const { return int(std::lround(integrator.t_end / integrator.dt)); }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) throw Error(ErrorCode::config_violation, where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw Error(ErrorCode::config_violation, "unknown key '" + where + "." + key + "'");
}

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_violation, where + "." + key + ": " + e.what());
  }
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::config_violation, what);
}

}  // namespace detail

/// Checks the numeric ranges and the exponent constraints.
inline void validate(const RunConfig& c) {
  using detail::require;
  require(c.grid.n >= 8 && (c.grid.n & (c.grid.n - 1)) == 0, "grid.N must be a power of two >= 8");
  require(c.grid.length > 0.0 && std::isfinite(c.grid.length), "grid.L must be positive");
  require(std::isfinite(c.exponents.delta) && c.exponents.delta > 0.0, "exponents.delta must be positive");
  require(c.data.eps >= 0.0 && std::isfinite(c.data.eps), "data.eps must be >= 0");
  require(c.integrator.dt > 0.0 && std::isfinite(c.integrator.dt), "integrator.dt must be positive");
  require(c.integrator.t_end > 0.0 && std::isfinite(c.integrator.t_end), "integrator.T must be positive");
  require(c.integrator.picard_tol > 0.0, "integrator.picard_tol must be positive");
  require(c.integrator.picard_max > 0, "integrator.picard_max must be positive");
  require(c.output.snapshot_stride > 0, "output.snapshot_stride must be positive");
  require(c.gauge.tol > 0.0, "gauge.tol must be positive");
  require(c.gauge.max_iter > 0, "gauge.max_iter must be positive");
  const double r = c.integrator.t_end / c.integrator.dt;
  require(std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r), "integrator.T must be a multiple of integrator.dt");
  check_exponents(c.exponents.s, c.exponents.l);
}

inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::read_key;
  using detail::reject_unknown;
  RunConfig c;
  reject_unknown(j, "config", {"grid", "exponents", "data", "integrator", "convention", "output", "gauge"});
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    reject_unknown(g, "grid", {"N", "L"});
    read_key(g, "N", c.grid.n, "grid");
    read_key(g, "L", c.grid.length, "grid");
  }
  if (j.contains("exponents")) {
    const auto& e = j["exponents"];
    reject_unknown(e, "exponents", {"s", "l", "delta"});
    read_key(e, "s", c.exponents.s, "exponents");
    read_key(e, "l", c.exponents.l, "exponents");
    read_key(e, "delta", c.exponents.delta, "exponents");
  }
  if (j.contains("data")) {
    const auto& d = j["data"];
    reject_unknown(d, "data", {"eps", "seed", "abelian"});
    read_key(d, "eps", c.data.eps, "data");
    read_key(d, "seed", c.data.seed, "data");
    read_key(d, "abelian", c.data.abelian, "data");
  }
  if (j.contains("integrator")) {
    const auto& i = j["integrator"];
    reject_unknown(i, "integrator", {"dt", "T", "picard_tol", "picard_max"});
    read_key(i, "dt", c.integrator.dt, "integrator");
    read_key(i, "T", c.integrator.t_end, "integrator");
    read_key(i, "picard_tol", c.integrator.picard_tol, "integrator");
    read_key(i, "picard_max", c.integrator.picard_max, "integrator");
  }
  if (j.contains("convention")) {
    std::string s;
    read_key(j, "convention", s, "config");
    if (s != "paper" && s != "physics") throw Error(ErrorCode::config_violation, "convention must be paper or physics");
    c.convention = convention_from_string(s);
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    reject_unknown(o, "output", {"directory", "snapshot_stride"});
    read_key(o, "directory", c.output.directory, "output");
    read_key(o, "snapshot_stride", c.output.snapshot_stride, "output");
  }
  if (j.contains("gauge")) {
    const auto& g = j["gauge"];
    reject_unknown(g, "gauge", {"tol", "max_iter"});
    read_key(g, "tol", c.gauge.tol, "gauge");
    read_key(g, "max_iter", c.gauge.max_iter, "gauge");
  }
  validate(c);
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::config_violation, std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_failure, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline nlohmann::json to_json(const RunConfig& c) {
  return {
      {"grid", {{"N", c.grid.n}, {"L", c.grid.length}}},
      {"exponents", {{"s", c.exponents.s}, {"l", c.exponents.l}, {"delta", c.exponents.delta}}},
      {"data", {{"eps", c.data.eps}, {"seed", c.data.seed}, {"abelian", c.data.abelian}}},
      {"integrator",
       {{"dt", c.integrator.dt},
        {"T", c.integrator.t_end},
        {"picard_tol", c.integrator.picard_tol},
        {"picard_max", c.integrator.picard_max}}},
      {"convention", to_string(c.convention)},
      {"output", {{"directory", c.output.directory}, {"snapshot_stride", c.output.snapshot_stride}}},
      {"gauge", {{"tol", c.gauge.tol}, {"max_iter", c.gauge.max_iter}}},
  };
}

}  // namespace ymd
