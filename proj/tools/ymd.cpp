// ymd: command-line driver.
//
//   ymd simulate|gauge-fix|verify|norms|convention --config <path>
//       [--checkpoint <path>] [--out <dir>]
//
// YMD_THREADS caps the worker count. Exit codes: 0 ok, 1 verification
// failed, 2 configuration, 3 numerical failure, 4 i/o, 5 internal.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ymd/commands.hpp"

namespace {

int apply_thread_env() {
  const char* env = std::getenv("YMD_THREADS");
  if (!env || !*env) return ymd::exit_ok;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) {
    std::cerr << "ymd: YMD_THREADS must be a positive integer, got '" << env << "'\n";
    return ymd::exit_config;
  }
  ymd::set_thread_count(int(n));
  return ymd::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Yang-Mills-Dirac pseudospectral simulator"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, out_dir, trace_dir, fault;
  bool quick = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--out", out_dir, "output directory (default: output.directory)");
  };
  auto* simulate = app.add_subcommand("simulate", "generate data, gauge fix, evolve, write diagnostics");
  common(simulate);
  auto* gauge = app.add_subcommand("gauge-fix", "gauge fix a checkpoint");
  common(gauge);
  gauge->add_option("--checkpoint", checkpoint, "input checkpoint")->required();
  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  common(verify);
  verify->add_flag("--quick", quick, "N = 8");
  verify->add_option("--inject-fault", fault)->group("");
  auto* norms = app.add_subcommand("norms", "regularity table of a simulate trace");
  common(norms);
  norms->add_option("--trace", trace_dir, "directory with snapshot_*.ymd (default: output.directory)");
  auto* convention = app.add_subcommand("convention", "coupling-convention consistency experiment");
  common(convention);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ymd::exit_ok : ymd::exit_config;
  }

  if (const int rc = apply_thread_env(); rc != ymd::exit_ok) return rc;

  try {
    const ymd::RunConfig cfg = config_path.empty() ? ymd::RunConfig{} : ymd::load_config(config_path);
    if (config_path.empty()) ymd::validate(cfg);
    const std::string out = out_dir.empty() ? cfg.output.directory : out_dir;

    if (simulate->parsed()) return ymd::cmd_simulate(cfg, out);
    if (gauge->parsed()) return ymd::cmd_gauge_fix(cfg, checkpoint, out);
    if (verify->parsed()) return ymd::cmd_verify(cfg, quick, fault, out_dir);
    if (norms->parsed()) return ymd::cmd_norms(cfg, trace_dir.empty() ? cfg.output.directory : trace_dir, out);
    if (convention->parsed()) return ymd::cmd_convention(cfg, out);
  } catch (const ymd::Error& e) {
    std::cerr << "ymd: " << e.what() << "\n";
    return ymd::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "ymd: internal error: " << e.what() << "\n";
    return ymd::exit_internal;
  }
  return ymd::exit_internal;
}
