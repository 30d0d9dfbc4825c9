#pragma once

// The five batch commands. Each returns a process exit status; library errors
// are mapped by exit_code_for.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ymd/analysis.hpp"
#include "ymd/checkpoint.hpp"
#include "ymd/config.hpp"
#include "ymd/dynamics.hpp"
#include "ymd/gauge.hpp"
#include "ymd/verify.hpp"

namespace ymd {

/// 0 ok, 1 verification failed, 2 bad configuration or arguments,
/// 3 numerical failure, 4 i/o or checkpoint failure, 5 anything else.
enum ExitCode : int { exit_ok = 0, exit_verify_failed = 1, exit_config = 2, exit_numerical = 3, exit_io = 4, exit_internal = 5 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config_violation:
    case ErrorCode::invalid_argument:
    case ErrorCode::inadmissible_exponents:
    case ErrorCode::not_in_algebra:
    case ErrorCode::grid_mismatch:
    case ErrorCode::cost_guard:
      return exit_config;
    case ErrorCode::picard_divergence:
    case ErrorCode::blow_up:
    case ErrorCode::no_convergence:
    case ErrorCode::max_iterations:
      return exit_numerical;
    case ErrorCode::io_failure:
    case ErrorCode::corrupt_checkpoint:
    case ErrorCode::unsupported_version:
    case ErrorCode::dimension_mismatch:
      return exit_io;
  }
  return exit_internal;
}

inline constexpr int csv_version = 1;

// ---------------------------------------------------------------------------
// csv

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& table, const std::vector<std::string>& columns)
      : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    out_ << "# ymd " << table << " v" << csv_version << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  CsvWriter& cell(const std::string& s) {
    sep();
    out_ << s;
    return *this;
  }
  CsvWriter& cell(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return cell(std::string(buf));
  }
  CsvWriter& cell(long long v) { return cell(std::to_string(v)); }
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(bool v) { return cell(std::string(v ? "true" : "false")); }

  void end_row() {
    out_ << "\n";
    first_ = true;
    out_.flush();
    if (!out_) throw Error(ErrorCode::io_failure, "write failed for " + path_.string());
  }

 private:
  void sep() {
    if (!first_) out_ << ",";
    first_ = false;
  }

  std::filesystem::path path_;
  std::ofstream out_;
  bool first_ = true;
};

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw Error(ErrorCode::io_failure, "cannot create directory " + dir.string());
}

inline std::string snapshot_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%06d.ymd", step);
  return buf;
}

inline void write_gauge_history(const std::filesystem::path& path, const GaugeFixResult& r) {
  CsvWriter csv(path, "gauge_history", {"iteration", "v_norm_hs", "cf_norm_hs"});
  csv.cell(0).cell(0.0).cell(r.initial_cf_norm).end_row();
  for (const auto& h : r.history) csv.cell(h.iteration).cell(h.v_norm).cell(h.cf_norm).end_row();
}

inline SecondOrderState second_order_of(const GaugedFields& f, double t) {
  SecondOrderState s(f.a.grid());
  s.a = f.a;
  s.dta = f.dta;
  s.psi = f.psi;
  s.t = t;
  return s;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::io_failure, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// simulate

inline void write_diagnostics_row(CsvWriter& csv, int step, const Diagnostics& d) {
  csv.cell(step).cell(d.t).cell(d.gauss_residual).cell(d.charge).cell(d.energy).cell(d.hs_adf).cell(d.hs_acf).cell(
      d.hl_psi);
  csv.end_row();
}

inline const std::vector<std::string>& diagnostics_columns() {
  static const std::vector<std::string> c{"step", "t", "gauss_residual", "charge", "energy", "hs_adf", "hs_acf", "hl_psi"};
  return c;
}

/// Random data, gauge fix so that (TA)^cf(0) = 0, evolve the split system,
/// undo the gauge transformation. diagnostics.csv describes the gauge-fixed
/// solver state (the one in the checkpoints); diagnostics_original_gauge.csv
/// the same quantities after T^-1, and final_original_gauge.ymd the end state
/// after T^-1.
inline int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log = std::cerr) {
  ensure_directory(out_dir);
  const Grid g = cfg.make_grid();
  const auto& ex = cfg.exponents;
  const auto data = random_small_data(g, ex.s, ex.l, cfg.data.eps, cfg.data.seed, cfg.data.abelian);

  const auto fix = gauge_fix(data.a0(), data.a1, data.psi0, {ex.s, cfg.gauge.tol, cfg.gauge.max_iter});
  write_gauge_history(out_dir / "gauge_history.csv", fix);
  for (const auto& w : fix.warnings) log << "gauge-fix warning: " << w << "\n";
  const auto undo = inverse_gauge(fix.transform);

  DynamicsOptions opt;
  opt.convention = cfg.convention;
  opt.picard_tol = cfg.integrator.picard_tol;
  opt.picard_max = cfg.integrator.picard_max;

  CsvWriter fixed_csv(out_dir / "diagnostics.csv", "diagnostics", diagnostics_columns());
  CsvWriter orig_csv(out_dir / "diagnostics_original_gauge.csv", "diagnostics_original_gauge", diagnostics_columns());
  auto untransform = [&](const SimulationState& s) {
    const auto so = second_order_from(s);
    return split_from(second_order_of(apply_gauge(undo, so.a, so.dta, so.psi), s.t), s.convention);
  };
  auto record = [&](const SimulationState& s, int step) {
    write_diagnostics_row(fixed_csv, step, diagnostics(s, ex.s, ex.l));
    write_diagnostics_row(orig_csv, step, diagnostics(untransform(s), ex.s, ex.l));
    if (step % cfg.output.snapshot_stride == 0) checkpoint_write(s, (out_dir / snapshot_name(step)).string());
  };

  const int steps = cfg.steps();
  nlohmann::json summary = {{"config", to_json(cfg)},
                            {"gauge_fix",
                             {{"iterations", fix.iterations()},
                              {"initial_cf_norm", fix.initial_cf_norm},
                              {"final_cf_norm", fix.final_cf_norm()},
                              {"warnings", fix.warnings}}},
                            {"steps", steps}};
  // step being computed when a failure happens; 0 is the initial solve
  int current = 0;
  try {
    SplitEvolution e(with_consistent_dtacf(split_from(second_order_of(fix.fields, 0.0), cfg.convention), opt), opt);
    record(e.state(), 0);
    for (int i = 1; i <= steps; ++i) {
      current = i;
      e.step(cfg.integrator.dt);
      record(e.state(), i);
    }
    checkpoint_write(untransform(e.state()), (out_dir / "final_original_gauge.ymd").string());
  } catch (const Error& err) {
    const int code = exit_code_for(err.code());
    if (code != exit_numerical) throw;
    summary["status"] = "failed";
    summary["failing_step"] = current;
    summary["error"] = err.what();
    write_json(out_dir / "summary.json", summary);
    log << "simulate: step " << current << " failed: " << err.what() << "\n";
    return code;
  }
  summary["status"] = "ok";
  write_json(out_dir / "summary.json", summary);
  return exit_ok;
}

// ---------------------------------------------------------------------------
// gauge-fix

inline int cmd_gauge_fix(const RunConfig& cfg, const std::string& checkpoint, const std::filesystem::path& out_dir,
                         std::ostream& log = std::cerr) {
  const auto s = checkpoint_read(checkpoint, cfg.make_grid());
  ensure_directory(out_dir);
  const auto so = second_order_from(s);
  const auto fix = gauge_fix(so.a, so.dta, so.psi, {cfg.exponents.s, cfg.gauge.tol, cfg.gauge.max_iter});
  write_gauge_history(out_dir / "gauge_history.csv", fix);
  for (const auto& w : fix.warnings) log << "gauge-fix warning: " << w << "\n";
  DynamicsOptions opt;
  opt.convention = s.convention;
  opt.picard_tol = cfg.integrator.picard_tol;
  opt.picard_max = cfg.integrator.picard_max;
  const auto out = with_consistent_dtacf(split_from(second_order_of(fix.fields, s.t), s.convention), opt);
  checkpoint_write(out, (out_dir / "gauge_fixed.ymd").string());
  return exit_ok;
}

// ---------------------------------------------------------------------------
// verify

inline VerifyOptions verify_options_from(const RunConfig& cfg, bool quick) {
  VerifyOptions o;
  o.n = quick ? 8 : cfg.grid.n;
  o.length = cfg.grid.length;
  o.seed = cfg.data.seed;
  o.eps = cfg.data.eps;
  o.exponents = cfg.exponents;
  o.convention = cfg.convention;
  o.dt = cfg.integrator.dt;
  o.t_end = std::min(cfg.integrator.t_end, 0.05);
  if (o.t_end < o.dt) o.t_end = o.dt;
  return o;
}

inline int cmd_verify(const RunConfig& cfg, bool quick, const std::string& fault, const std::filesystem::path& out_dir,
                      std::ostream& out = std::cout) {
  auto o = verify_options_from(cfg, quick);
  o.inject_fault = fault;
  const auto results = run_verification(o, [&](const CheckResult& c) { out << format_check(c) << std::endl; });
  if (!out_dir.empty()) {
    ensure_directory(out_dir);
    CsvWriter csv(out_dir / "verify.csv", "verify", {"name", "value", "relation", "threshold", "pass"});
    for (const auto& r : results)
      csv.cell(r.name).cell(r.value).cell(std::string(r.upper ? "<=" : ">=")).cell(r.threshold).cell(r.pass).end_row();
  }
  const bool ok = std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
  out << (ok ? "verify: all checks passed" : "verify: FAILED") << std::endl;
  return ok ? exit_ok : exit_verify_failed;
}

// ---------------------------------------------------------------------------
// norms

inline std::vector<std::filesystem::path> list_snapshots(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::io_failure, "no trace directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("snapshot_", 0) == 0 && e.path().extension() == ".ymd") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::io_failure, "no snapshot_*.ymd files in " + dir.string());
  return files;
}

/// Regularity table for the snapshots of a finished simulate run; the slices
/// must be equally spaced in time.
inline int cmd_norms(const RunConfig& cfg, const std::filesystem::path& trace_dir, const std::filesystem::path& out_dir) {
  const auto files = list_snapshots(trace_dir);
  if (files.size() < 2) throw Error(ErrorCode::io_failure, "trace needs at least two snapshots");
  const Grid g = cfg.make_grid();
  auto first = checkpoint_read(files[0].string(), g);
  auto second = checkpoint_read(files[1].string(), g);
  const double dt = second.t - first.t;
  if (!(dt > 0.0)) throw Error(ErrorCode::corrupt_checkpoint, "snapshot times are not increasing");
  RunTraces tr(g, dt);
  tr.record(first);
  tr.record(second);
  for (std::size_t i = 2; i < files.size(); ++i) {
    const auto s = checkpoint_read(files[i].string(), g);
    if (std::abs(s.t - first.t - double(i) * dt) > 1e-9 * std::max(1.0, std::abs(s.t)))
      throw Error(ErrorCode::corrupt_checkpoint, "snapshot " + files[i].filename().string() + " is not equally spaced");
    tr.record(s);
  }
  const auto rows = regularity_report(tr, cfg.exponents.s, cfg.exponents.l, cfg.exponents.delta);
  ensure_directory(out_dir);
  CsvWriter csv(out_dir / "regularity.csv", "regularity", {"field", "flavor", "s", "b", "norm", "window_l2", "slices", "dt"});
  for (const auto& r : rows)
    csv.cell(r.field)
        .cell(std::string(to_string(r.spec.flavor)))
        .cell(r.spec.s)
        .cell(r.spec.b)
        .cell(r.norm.value)
        .cell(r.norm.window_l2)
        .cell(tr.steps())
        .cell(dt)
        .end_row();
  return exit_ok;
}

// ---------------------------------------------------------------------------
// convention

inline int cmd_convention(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out = std::cout) {
  const Grid g = cfg.make_grid();
  const auto& ex = cfg.exponents;
  const auto data = random_small_data(g, ex.s, ex.l, cfg.data.eps, cfg.data.seed, cfg.data.abelian);
  const auto rep = convention_experiment(data, cfg.integrator.t_end, cfg.integrator.dt);
  ensure_directory(out_dir);
  CsvWriter csv(out_dir / "convention.csv", "convention",
                {"convention", "dt", "charge_drift", "residual_drift", "charge_ratio", "residual_ratio", "consistent"});
  for (const auto& r : rep.rows) {
    const int k = int(r.convention);
    csv.cell(std::string(to_string(r.convention)))
        .cell(r.dt)
        .cell(r.charge_drift)
        .cell(r.residual_drift)
        .cell(rep.charge_ratio[k])
        .cell(rep.residual_ratio[k])
        .cell(bool(rep.consistent[k]))
        .end_row();
  }
  out << "convention: " << to_string(rep.chosen) << std::endl;
  return exit_ok;
}

}  // namespace ymd
