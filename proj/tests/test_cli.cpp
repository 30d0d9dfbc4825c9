#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "ymd/commands.hpp"

using namespace ymd;
namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* b = std::getenv("YMD_BIN");
  return b ? b : "ymd";
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("ymd_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const std::string& json) {
    const auto p = dir_ / name;
    std::ofstream(p) << json;
    return p;
  }

  /// Runs the binary with the given arguments; stdout goes to out.txt.
  int run(const std::string& args, const std::string& env = "") {
    const std::string cmd =
        env + " " + binary() + " " + args + " > " + (dir_ / "out.txt").string() + " 2> " + (dir_ / "err.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  /// Data rows of a CSV written by CsvWriter, split into cells.
  std::vector<std::vector<std::string>> rows(const fs::path& p) const {
    std::ifstream in(p);
    std::string line;
    std::vector<std::vector<std::string>> out;
    int n = 0;
    while (std::getline(in, line)) {
      if (n++ < 2) continue;
      std::vector<std::string> cells;
      std::stringstream ls(line);
      std::string c;
      while (std::getline(ls, c, ',')) cells.push_back(c);
      out.push_back(cells);
    }
    return out;
  }

  fs::path dir_;
};

const char* small_run = R"({"grid": {"N": 8}, "integrator": {"dt": 0.01, "T": 0.1},
  "output": {"snapshot_stride": 1}})";

}  // namespace

TEST(Config, DefaultsAndStrictKeys) {
  const auto c = parse_config_text("{}");
  EXPECT_EQ(c.grid.n, 16);
  EXPECT_EQ(c.data.eps, 1e-3);
  EXPECT_EQ(c.integrator.t_end, 1.0);
  EXPECT_EQ(c.integrator.dt, 1e-3);
  EXPECT_EQ(c.steps(), 1000);
  auto code = [](const std::string& text) {
    try {
      parse_config_text(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::grid_mismatch;  // sentinel: no error
  };
  EXPECT_EQ(code(R"({"grid": {"N": 8, "M": 2}})"), ErrorCode::config_violation);
  EXPECT_EQ(code(R"({"grid": {"N": 12}})"), ErrorCode::config_violation);
  EXPECT_EQ(code(R"({"integrator": {"dt": -1}})"), ErrorCode::config_violation);
  EXPECT_EQ(code(R"({"integrator": {"dt": 0.3, "T": 1}})"), ErrorCode::config_violation);
  EXPECT_EQ(code(R"({"convention": "other"})"), ErrorCode::config_violation);
  EXPECT_EQ(code(R"({"data": {"seed": "x"}})"), ErrorCode::config_violation);
  EXPECT_EQ(code("{"), ErrorCode::config_violation);
  EXPECT_EQ(code(R"({"exponents": {"s": 1.0, "l": 0.2}})"), ErrorCode::inadmissible_exponents);
  const auto r = parse_config(to_json(parse_config_text(R"({"convention": "paper", "data": {"abelian": true}})")));
  EXPECT_EQ(r.convention, Convention::paper);
  EXPECT_TRUE(r.data.abelian);
}

TEST(Config, ExitCodeTableIsTotal) {
  for (int c = 0; c <= int(ErrorCode::max_iterations); ++c) {
    const int rc = exit_code_for(ErrorCode(c));
    EXPECT_GE(rc, 2);
    EXPECT_LE(rc, 4);
  }
}

TEST_F(Cli, SimulateWritesArtifactsDeterministically) {
  const auto cfg = write_config("c.json", small_run);
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + (dir_ / "a").string()), 0) << read(dir_ / "err.txt");
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + (dir_ / "b").string()), 0);
  const auto diag = read(dir_ / "a" / "diagnostics.csv");
  EXPECT_EQ(diag.rfind("# ymd diagnostics v1\nstep,t,gauss_residual,charge,energy,hs_adf,hs_acf,hl_psi\n", 0), 0u);
  EXPECT_EQ(diag, read(dir_ / "b" / "diagnostics.csv"));
  EXPECT_EQ(read(dir_ / "a" / "gauge_history.csv"), read(dir_ / "b" / "gauge_history.csv"));
  EXPECT_EQ(read(dir_ / "a" / "diagnostics_original_gauge.csv"), read(dir_ / "b" / "diagnostics_original_gauge.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "final_original_gauge.ymd"));
  EXPECT_EQ(rows(dir_ / "a" / "diagnostics.csv").size(), 11u);
  for (int s = 0; s <= 10; ++s) EXPECT_TRUE(fs::exists(dir_ / "a" / snapshot_name(s))) << s;
  const auto summary = nlohmann::json::parse(read(dir_ / "a" / "summary.json"));
  EXPECT_EQ(summary["status"], "ok");
  // the gauge-fixed state has no curl-free part at t = 0
  const auto s0 = checkpoint_read((dir_ / "a" / snapshot_name(0)).string());
  EXPECT_LE(hs_norm(s0.acf, 1.0), 1e-10);
}

TEST_F(Cli, VacuumRunIsZero) {
  const auto cfg = write_config("c.json", R"({"grid": {"N": 8}, "data": {"eps": 0},
    "integrator": {"dt": 0.05, "T": 0.2}, "output": {"snapshot_stride": 2}})");
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + dir_.string()), 0) << read(dir_ / "err.txt");
  for (const auto& r : rows(dir_ / "diagnostics.csv"))
    for (std::size_t c = 2; c < r.size(); ++c) EXPECT_EQ(std::stod(r[c]), 0.0) << c;
}

TEST_F(Cli, AbelianRunKeepsCurlFreePartZero) {
  const auto cfg = write_config("c.json", R"({"grid": {"N": 8}, "data": {"eps": 0.01, "abelian": true},
    "integrator": {"dt": 0.02, "T": 0.2}, "output": {"snapshot_stride": 5}})");
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + dir_.string()), 0) << read(dir_ / "err.txt");
  const auto hist = rows(dir_ / "gauge_history.csv");
  EXPECT_EQ(hist.size(), 2u);  // initial row plus exactly one iteration
  for (const auto& r : rows(dir_ / "diagnostics.csv")) EXPECT_LE(std::stod(r[6]), 1e-12);
  for (int s : {0, 5, 10}) EXPECT_LE(hs_norm(checkpoint_read((dir_ / snapshot_name(s)).string()).acf, 1.0), 1e-12);
  // T^-1 brings the curl-free part of the data back
  const auto orig = rows(dir_ / "diagnostics_original_gauge.csv");
  EXPECT_GT(std::stod(orig.front()[6]), 1e-6);
}

TEST_F(Cli, NumericalFailureIsRecorded) {
  const auto cfg = write_config("c.json", R"({"grid": {"N": 8}, "data": {"eps": 0.3},
    "integrator": {"dt": 0.01, "T": 0.05, "picard_max": 1}})");
  EXPECT_EQ(run("simulate --config " + cfg.string() + " --out " + dir_.string()), 3);
  const auto summary = nlohmann::json::parse(read(dir_ / "summary.json"));
  EXPECT_EQ(summary["status"], "failed");
  EXPECT_TRUE(summary.contains("failing_step"));
}

TEST_F(Cli, GaugeFixCommand) {
  const auto cfg = write_config("c.json", small_run);
  const Grid g(8);
  const auto d = random_small_data(g, 1.0, 0.75, 1e-2, 3);
  SecondOrderState so(g);
  so.a = d.a0();
  so.dta = d.a1;
  so.psi = d.psi0;
  checkpoint_write(split_from(so, Convention::physics), (dir_ / "raw.ymd").string());
  const auto out = dir_ / "gf";
  ASSERT_EQ(run("gauge-fix --config " + cfg.string() + " --checkpoint " + (dir_ / "raw.ymd").string() + " --out " +
                out.string()),
            0)
      << read(dir_ / "err.txt");
  const auto fixed = checkpoint_read((out / "gauge_fixed.ymd").string());
  EXPECT_LE(hs_norm(fixed.acf, 1.0), 1e-10);
  const auto hist = rows(out / "gauge_history.csv");
  ASSERT_GE(hist.size(), 3u);
  EXPECT_LT(std::stod(hist.back()[2]), 1e-10);
}

TEST_F(Cli, VerifyQuickAndFaultInjection) {
  ASSERT_EQ(run("verify --quick --out " + dir_.string()), 0) << read(dir_ / "out.txt");
  for (const auto& r : rows(dir_ / "verify.csv")) EXPECT_EQ(r.back(), "true") << r[0];
  EXPECT_EQ(run("verify --quick --inject-fault modified_riesz"), 1);
  std::stringstream out(read(dir_ / "out.txt"));
  std::string line;
  std::vector<std::string> failed;
  while (std::getline(out, line))
    if (line.find(" FAIL ") != std::string::npos) failed.push_back(line.substr(0, line.find(' ')));
  ASSERT_EQ(failed.size(), 1u);
  EXPECT_EQ(failed[0], "riesz_projector_identity");
  EXPECT_EQ(run("verify --quick --inject-fault nothing"), 2);
}

TEST_F(Cli, NormsFromTrace) {
  const auto cfg = write_config("c.json", small_run);
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + dir_.string()), 0);
  ASSERT_EQ(run("norms --config " + cfg.string() + " --trace " + dir_.string() + " --out " + dir_.string()), 0)
      << read(dir_ / "err.txt");
  const auto r = rows(dir_ / "regularity.csv");
  ASSERT_EQ(r.size(), 5u);
  EXPECT_EQ(r[0][0], "acf");
  for (const auto& row : r) {
    EXPECT_TRUE(std::isfinite(std::stod(row[4])));
    EXPECT_EQ(row[6], "11");
  }
  fs::remove(dir_ / snapshot_name(4));
  EXPECT_EQ(run("norms --config " + cfg.string() + " --trace " + dir_.string()), 4);
  EXPECT_EQ(run("norms --config " + cfg.string() + " --trace " + (dir_ / "missing").string()), 4);
}

TEST_F(Cli, ConventionCommand) {
  const auto cfg = write_config("c.json", R"({"grid": {"N": 8}, "data": {"eps": 0.3, "seed": 17},
    "integrator": {"dt": 0.02, "T": 0.2}})");
  ASSERT_EQ(run("convention --config " + cfg.string() + " --out " + dir_.string()), 0);
  EXPECT_NE(read(dir_ / "out.txt").find("convention: physics"), std::string::npos);
  EXPECT_EQ(rows(dir_ / "convention.csv").size(), 4u);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("bogus"), 2);
  EXPECT_EQ(run("simulate --config " + write_config("u.json", R"({"grid": {"N": 8}, "typo": 1})").string()), 2);
  EXPECT_EQ(run("simulate --config " + write_config("e.json", R"({"exponents": {"s": 0.7}})").string()), 2);
  EXPECT_EQ(run("simulate --config " + (dir_ / "none.json").string()), 4);
  EXPECT_EQ(run("gauge-fix"), 2);
  const auto junk = write_config("junk.ymd", "not a checkpoint");
  EXPECT_EQ(run("gauge-fix --checkpoint " + junk.string() + " --out " + dir_.string()), 4);
  EXPECT_EQ(run("verify --quick", "YMD_THREADS=zero"), 2);
  EXPECT_EQ(run("--help"), 0);
}
