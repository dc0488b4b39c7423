#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nde/cli.hpp"
#include "nde/errors.hpp"
#include "nde/grid_function.hpp"

using namespace nde;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nde");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "nde_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("spectrum of the pure neutral case") {
  const Result r = run_cli({"spectrum", "--a", "0", "--b", "0", "--c", "2", "--n-max", "5"});
  REQUIRE(r.code == cli::kOk);
  const json j = json::parse(r.out);
  CHECK(j["tool"] == "nde");
  CHECK(j["command"] == "spectrum");
  CHECK(j["config"]["c"] == 2.0);
  const auto& eigs = j["eigenvalues"];
  REQUIRE(eigs.size() == 12);
  int reals = 0;
  for (const auto& e : eigs) {
    CHECK(e["certified"] == true);
    if (e["im"].get<double>() == 0.0) {
      ++reals;
      CHECK(std::abs(e["re"].get<double>()) < 1e-14);
    } else {
      CHECK(std::abs(e["re"].get<double>() - std::log(2.0)) < 1e-13);
    }
  }
  CHECK(reals == 1);
  CHECK(eigs[0]["n"].is_null());  // real roots come first and carry no index

  const Result big = run_cli({"spectrum", "--a", "1", "--b", "2", "--c", "0.5", "--n-max", "50"});
  CHECK(big.code == cli::kOk);
  CHECK(json::parse(big.out)["eigenvalues"].size() == 102);
}

TEST_CASE("exit codes for invalid input") {
  CHECK(run_cli({"spectrum", "--c", "0"}).code == cli::kInvalidInput);
  CHECK(run_cli({"spectrum", "--grid", "7"}).code == cli::kInvalidInput);
  CHECK(run_cli({"spectrum", "--format", "xml"}).code == cli::kInvalidInput);
  CHECK(run_cli({"simulate", "--horizon", "80"}).code == cli::kInvalidInput);
  CHECK(run_cli({"spectrum", "--no-such-flag"}).code == cli::kInvalidInput);
  CHECK(run_cli({"frobnicate"}).code == cli::kInvalidInput);
  const Result r = run_cli({"spectrum", "--c", "0"});
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("config files: key=value and JSON, flags win") {
  cli::RunConfig cfg;
  cli::apply_config_text("# comment\na = 1\nb=2\nc = 0.5\nn_max = 7\n", cfg);
  CHECK(cfg.a == 1.0);
  CHECK(cfg.b == 2.0);
  CHECK(cfg.c == 0.5);
  CHECK(cfg.n_max == 7);
  cli::apply_config_text(R"({"a": -1.5, "seed": 9, "format": "csv"})", cfg);
  CHECK(cfg.a == -1.5);
  CHECK(cfg.seed == 9);
  CHECK(cfg.format == "csv");
  CHECK_THROWS_AS(cli::apply_config_text("bogus = 1\n", cfg), InvalidInput);
  CHECK_THROWS_AS(cli::apply_config_text(R"({"bogus": 1})", cfg), InvalidInput);

  const fs::path ini = scratch("params.ini");
  std::ofstream(ini) << "a = 0\nb = 0\nc = 2\nn_max = 3\n";
  const Result r = run_cli({"spectrum", "--config", ini.string(), "--n-max", "5"});
  REQUIRE(r.code == cli::kOk);
  const json j = json::parse(r.out);
  CHECK(j["config"]["n_max"] == 5);
  CHECK(j["config"]["c"] == 2.0);
  CHECK(j["eigenvalues"].size() == 12);

  const fs::path bad = scratch("bad.ini");
  std::ofstream(bad) << "colour = blue\n";
  CHECK(run_cli({"spectrum", "--config", bad.string()}).code == cli::kInvalidInput);
}

TEST_CASE("CSV output carries the configuration") {
  const Result r = run_cli({"spectrum", "--format", "csv", "--n-max", "2"});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.rfind("# tool=nde\n", 0) == 0);
  CHECK(r.out.find("# config.a=2\n") != std::string::npos);
  CHECK(r.out.find("# config.n_max=2\n") != std::string::npos);
}

TEST_CASE("gaps command") {
  const Result r = run_cli({"gaps", "--m-max", "5"});
  REQUIRE(r.code == cli::kOk);
  const json j = json::parse(r.out);
  CHECK(j["metadata"]["omega_case"] == "i");
  CHECK(j["metadata"]["side"] == "StableFinite");
  const auto& g = j["gaps"];
  REQUIRE(g.size() == 5);
  CHECK(g[0]["unbounded"] == true);
  CHECK(g[0]["K"] == 0);
  for (std::size_t m = 1; m < g.size(); ++m) {
    CHECK(g[m]["K"].get<int>() > g[m - 1]["K"].get<int>());
    CHECK(g[m]["beta"].get<double>() < g[m]["alpha"].get<double>());
  }

  // Finitely many dichotomies: asking for more than three gaps is degraded, not fatal.
  const Result v = run_cli({"gaps", "--a", "0", "--b", "0", "--c", "2", "--n-max", "10", "--m-max", "5"});
  CHECK(v.code == cli::kDegraded);
  const json jv = json::parse(v.out);
  CHECK(jv["metadata"]["omega_case"] == "v");
  CHECK(jv["gaps"].size() <= 3);
}

TEST_CASE("project, norms and simulate write their artifacts") {
  const fs::path proj = scratch("split.json");
  REQUIRE(run_cli({"project", "--gap", "2", "--grid", "512", "--out", proj.string()}).code == cli::kOk);
  const json pj = json::parse(slurp(proj));
  CHECK(pj["report"]["idempotence_residual"].get<double>() < 1e-9);
  CHECK(pj["report"]["realness_residual"].get<double>() <= 1e-10);
  std::ifstream fin(proj.string() + ".finite.csv"), comp(proj.string() + ".complement.csv");
  const GridFunction f = read_csv(fin), c = read_csv(comp);
  CHECK(f.intervals() == 512);
  CHECK(sup_norm(f + c - random_smooth(0, 512)) < 1e-12);

  // An explicit initial function file.
  const fs::path phi = scratch("phi.csv");
  {
    std::ofstream os(phi);
    write_csv(os, random_smooth(5, 256));
  }
  CHECK(run_cli({"project", phi.string(), "--grid", "256", "--out", scratch("split2.json").string()}).code ==
        cli::kOk);

  const Result n = run_cli({"norms", "--n-max", "80", "--m-max", "12"});
  REQUIRE(n.code == cli::kOk);
  const json nj = json::parse(n.out);
  CHECK(nj["fit"]["projection"] == "P_minus");
  CHECK(nj["fit"]["slope_vs_lnK"].get<double>() > 0);
  CHECK(nj["norm_growth"][0]["norm"] == 0.0);
  CHECK(nj["fit"]["perturbation_loglog_slope"].get<double>() <= -0.8);

  const fs::path sim = scratch("sim.json");
  REQUIRE(run_cli({"simulate", "--horizon", "12", "--out", sim.string()}).code == cli::kOk);
  const json sj = json::parse(slurp(sim));
  CHECK(sj["report"]["stable_rate"].get<double>() <= sj["report"]["beta"].get<double>() + 0.02);
  CHECK(slurp(sim.string() + ".trajectory.csv").find("t,x_re,x_im,dx_re,dx_im") != std::string::npos);
}

TEST_CASE("verify is deterministic and names failed invariants") {
  cli::RunConfig cfg;
  cfg.n_max = 30;
  cfg.grid = 512;
  std::ostringstream a, b, e1, e2;
  CHECK(cli::cmd_verify(cfg, a, e1) == cli::kOk);
  CHECK(cli::cmd_verify(cfg, b, e2) == cli::kOk);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("failures=\"0\"") != std::string::npos);

  cfg.tol.quad = 1e-30;
  std::ostringstream c, e3;
  CHECK(cli::cmd_verify(cfg, c, e3) == cli::kDegraded);
  CHECK(c.str().find("<failure") != std::string::npos);
  CHECK(c.str().find("name=\"oracle_triangle\"") != std::string::npos);

  // c = -1 skips the double auxiliary root instead of failing.
  cli::RunConfig neg;
  neg.a = 1, neg.b = 1, neg.c = -1, neg.n_max = 30, neg.grid = 512;
  std::ostringstream d, e4;
  CHECK(cli::cmd_verify(neg, d, e4) == cli::kOk);
  CHECK(d.str().find("<skipped") != std::string::npos);
  CHECK(e4.str().find("skipped") != std::string::npos);
}
