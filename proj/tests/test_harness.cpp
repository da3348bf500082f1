#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "softclip/harness/experiment.hpp"

using namespace softclip;
using namespace softclip::harness;
namespace fs = std::filesystem;

namespace {

json base_config() {
  return json::parse(R"({
    "problem": {"name": "sc_quadratic", "dim": 4, "noise": 0.1, "c": 1, "L": 5},
    "methods": [{"name": "softclip_cw", "scheme": "tamed"}, {"name": "sgd"}],
    "schedule": {"kind": "inverse_linear", "beta": 0.75, "gamma": 1},
    "seeds": [0, 1, 2],
    "iters": 200,
    "record_every": 10,
    "w1": {"norm": 3}
  })");
}

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, DefaultsAndLabels) {
  const auto cfg = parse_config(base_config());
  ASSERT_EQ(cfg.methods.size(), 2u);
  EXPECT_EQ(cfg.methods[0].label, "softclip_cw_tamed");
  EXPECT_EQ(cfg.methods[1].label, "sgd");
  EXPECT_EQ(cfg.alphas, preset_alpha_grid());
  EXPECT_EQ(cfg.workers, 1u);
  EXPECT_EQ(cfg.schedule.beta, 0.75);
}

TEST(Config, FailFastValidation) {
  auto j = base_config();
  j["problem"]["name"] = "quadratic";
  EXPECT_NE(config_error(j).find("problem.name"), std::string::npos);

  j = base_config();
  j["methods"][0]["scheme"] = "atan";
  EXPECT_NE(config_error(j).find("methods.0.scheme"), std::string::npos);

  j = base_config();
  j["seeds"] = {1, 2, 1};
  EXPECT_NE(config_error(j).find("distinct"), std::string::npos);

  j = base_config();
  j["methods"].push_back({{"name", "sgd"}});
  EXPECT_NE(config_error(j).find("duplicate label"), std::string::npos);

  j = base_config();
  j["problem"]["nosie"] = 0.1;
  EXPECT_NE(config_error(j).find("problem.nosie"), std::string::npos);

  j = base_config();
  j["schedule"]["kind"] = "horizon_sqrt";
  EXPECT_EQ(config_error(j), "");  // horizon defaults to iters
  EXPECT_EQ(*parse_config(j).schedule.horizon, 200u);

  j = base_config();
  j["methods"] = json::array();
  EXPECT_NE(config_error(j), "");
}

TEST(Config, EpochAccounting) {
  auto j = base_config();
  j.erase("iters");
  j["epochs"] = 15;
  EXPECT_EQ(parse_config(j).iters, 480u);
  j["iters"] = 480;
  EXPECT_EQ(parse_config(j).iters, 480u);
  j["iters"] = 500;
  EXPECT_NE(config_error(j).find("epochs"), std::string::npos);
}

TEST(Config, Overrides) {
  auto j = base_config();
  apply_override(j, "problem.noise=0.25");
  apply_override(j, "methods.0.scheme=arctan");
  apply_override(j, "seeds=[5,6]");
  apply_override(j, "out=some/dir");
  apply_override(j, "verify.checks=[\"moments\"]");
  const auto cfg = parse_config(j);
  EXPECT_EQ(cfg.problem.noise, 0.25);
  EXPECT_EQ(cfg.methods[0].label, "softclip_cw_arctan");
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{5, 6}));
  EXPECT_EQ(cfg.out, "some/dir");
  EXPECT_EQ(cfg.verify.checks, (std::vector<std::string>{"moments"}));
  EXPECT_THROW(apply_override(j, "methods.7.scheme=log"), ConfigError);
  EXPECT_THROW(apply_override(j, "noequals"), ConfigError);
}

TEST(Config, EffectiveRoundTrip) {
  auto j = base_config();
  j["methods"].push_back({{"name", "adam"}, {"eps", 1e-8}, {"label", "adam8"}});
  const auto cfg = parse_config(j);
  const auto echo = effective_json(cfg);
  const auto again = parse_config(echo);
  EXPECT_EQ(effective_json(again).dump(), echo.dump());
  EXPECT_EQ(cli_run(again), cli_run(cfg));
}

TEST(Run, ArtifactsAndDeterminism) {
  auto cfg = parse_config(base_config());
  const auto a = cli_run(cfg);
  EXPECT_TRUE(a.count("runs/softclip_cw_tamed/0.csv"));
  EXPECT_TRUE(a.count("runs/sgd/2.csv"));
  EXPECT_TRUE(a.count("summary.json"));
  EXPECT_TRUE(a.count("config.effective.json"));
  cfg.workers = 3;
  EXPECT_EQ(cli_run(cfg).at("summary.json"), a.at("summary.json"));
  EXPECT_EQ(cli_run(cfg), a);
  const auto csv = a.at("runs/sgd/0.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,alpha,f_value,grad_norm_sq,dist_to_opt");
}

TEST(Run, IdentityEqualsSgd) {
  auto j = base_config();
  j["methods"] = json::array({json{{"name", "softclip_cw"}, {"scheme", "identity"}, {"label", "m"}}});
  const auto a = cli_run(parse_config(j));
  j["methods"] = json::array({json{{"name", "sgd"}, {"label", "m"}}});
  const auto b = cli_run(parse_config(j));
  for (const auto& [path, text] : a) {
    if (path == "config.effective.json") continue;
    if (path == "summary.json") {
      auto ja = json::parse(text), jb = json::parse(b.at(path));
      for (auto& r : ja["runs"]) r.erase("method");
      for (auto& r : jb["runs"]) r.erase("method");
      EXPECT_EQ(ja, jb);
      continue;
    }
    EXPECT_EQ(text, b.at(path)) << path;
  }
}

TEST(Run, QuarticSummaryMarksDivergence) {
  const auto j = json::parse(R"({
    "problem": {"name": "quartic"},
    "methods": [{"name": "sgd"}, {"name": "softclip_cw", "scheme": "tamed", "gamma": 1}],
    "schedule": {"kind": "inverse_linear", "beta": 1, "gamma": 0},
    "seeds": [0], "iters": 480, "w1": {"values": [2]}
  })");
  const auto files = cli_run(parse_config(j));
  const auto s = json::parse(files.at("summary.json"));
  EXPECT_TRUE(s["runs"][0]["diverged"].get<bool>());
  EXPECT_FALSE(s["runs"][1]["diverged"].get<bool>());
  EXPECT_EQ(s["methods"][0]["diverged_count"], 1);
  EXPECT_TRUE(s["methods"][0]["mean_final_f_value"].is_null());
  // |w_k| ≥ 2·k! on every recorded row.
  std::istringstream csv(files.at("runs/sgd/0.csv"));
  std::string line;
  std::getline(csv, line);
  double fact = 1.0;
  int rows = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    fact *= std::stod(f[0]);
    EXPECT_GE(std::stod(f[4]), 2.0 * fact);
    ++rows;
  }
  EXPECT_GE(rows, 3);
}

TEST(Sweep, LayoutAndCounts) {
  auto j = base_config();
  j["sweep"] = {{"alphas", {0.01, 0.1, 10.0}}};
  const auto files = cli_sweep(parse_config(j));
  std::istringstream rows(files.at("sweep.csv"));
  std::string line;
  std::getline(rows, line);
  EXPECT_EQ(line, "method,alpha,seed,final_error,diverged");
  int n = 0, diverged = 0;
  while (std::getline(rows, line)) {
    ++n;
    if (line.back() == '1') {
      ++diverged;
      EXPECT_NE(line.find(",,1"), std::string::npos) << line;
      EXPECT_EQ(line.rfind("sgd,", 0), 0u) << line;
    }
  }
  EXPECT_EQ(n, 2 * 3 * 3);
  EXPECT_EQ(diverged, 3);  // sgd at α = 10 with L = 5
  std::istringstream curves(files.at("sweep_curves.csv"));
  std::getline(curves, line);
  EXPECT_EQ(line, "method,alpha,n_seeds,diverged_count,mean_final_error,stderr_final_error");
  int m = 0;
  while (std::getline(curves, line)) ++m;
  EXPECT_EQ(m, 6);
}

TEST(Verify, ScQuadraticAllPass) {
  auto j = base_config();
  j["problem"]["noise"] = 0.0;
  j["methods"] = json::array({json{{"name", "softclip_cw"}, {"scheme", "arctan"}}});
  j["iters"] = 2000;
  j["verify"] = {{"checks", {"bound_constants", "descent", "theorem63", "corollary64", "theorem67", "as_convergence",
                             "moments", "appendix_a"}},
                 {"descent", {{"points", 5}, {"samples", 200}}},
                 {"epsilon", 1.0}};
  // appendix_a runs deterministic GD with the configured schedule; β/(k+γ) with β = 0.75 < 1/L fails
  // the step restriction for L = 5, which is reported, not an error.
  const auto res = cli_verify(parse_config(j));
  const auto doc = json::parse(res.files.at("verify.json"));
  for (const auto& c : doc["checks"]) EXPECT_EQ(c["status"], "pass") << c.dump();
  EXPECT_EQ(doc["status"], "pass");
  bool saw_cor = false;
  for (const auto& c : doc["checks"])
    if (c["check"] == "corollary64") {
      saw_cor = true;
      EXPECT_TRUE(c.contains("bound_stated"));
      EXPECT_TRUE(c.contains("bound_proof_level"));
    }
  EXPECT_TRUE(saw_cor);
  EXPECT_TRUE(res.files.count("verify/moments_softclip_cw_arctan.csv"));
}

TEST(Verify, B2OnNoisyProblemIsConfigError) {
  auto j = base_config();
  j["verify"] = {{"checks", {"bound_constants"}}, {"use_interpolation", true}};
  try {
    cli_verify(parse_config(j));
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("interpolating"), std::string::npos);
    EXPECT_NE(msg.find("sigma2"), std::string::npos);
  }
}

TEST(Verify, MissingConstantNamed) {
  auto j = base_config();
  j["problem"] = {{"name", "quartic"}};
  j["w1"] = {{"values", {1.0}}};
  j["verify"] = {{"checks", {"descent"}}};
  try {
    cli_verify(parse_config(j));
    FAIL();
  } catch (const MissingConstantError& e) {
    EXPECT_EQ(e.symbol(), "L");
  }
  j = base_config();
  j["schedule"] = {{"kind", "inverse_linear"}, {"beta", 5.0}, {"gamma", 1.0}};
  j["verify"] = {{"checks", {"theorem67"}}};
  EXPECT_THROW(cli_verify(parse_config(j)), ConfigError);
}

#ifdef SOFTCLIP_CONFIG_DIR
TEST(Config, ShippedConfigsValidate) {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(SOFTCLIP_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(parse_config(load_json_file(entry.path().string()))) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 4u);
}
#endif

// ---------------------------------------------------------------------------
// The executable

#ifdef SOFTCLIP_CLI
int cli(const std::string& args) {
  const int rc = std::system((std::string(SOFTCLIP_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Cli, RunIsReproducibleAcrossWorkerCounts) {
  const fs::path dir = fs::temp_directory_path() / "softclip_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << base_config().dump();
  const auto cfg = (dir / "cfg.json").string();
  ASSERT_EQ(cli("run --config " + cfg + " --out " + (dir / "a").string() + " --workers 1"), 0);
  ASSERT_EQ(cli("run --config " + cfg + " --out " + (dir / "b").string() + " --workers 4"), 0);
  EXPECT_EQ(read_file(dir / "a/summary.json"), read_file(dir / "b/summary.json"));
  EXPECT_EQ(read_file(dir / "a/runs/sgd/1.csv"), read_file(dir / "b/runs/sgd/1.csv"));
  // Re-running from the echoed config reproduces the artifacts (out and workers differ only).
  ASSERT_EQ(cli("run --config " + (dir / "a/config.effective.json").string() + " --out " + (dir / "c").string()), 0);
  EXPECT_EQ(read_file(dir / "a/summary.json"), read_file(dir / "c/summary.json"));
  EXPECT_EQ(read_file(dir / "a/runs/softclip_cw_tamed/2.csv"), read_file(dir / "c/runs/softclip_cw_tamed/2.csv"));
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = fs::temp_directory_path() / "softclip_cli_codes";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto bad = base_config();
  bad["methods"][0]["scheme"] = "nope";
  std::ofstream(dir / "bad.json") << bad.dump();
  EXPECT_EQ(cli("run --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string()), 2);
  std::ofstream(dir / "good.json") << base_config().dump();
  EXPECT_EQ(cli("run --config " + (dir / "good.json").string() + " --out " + (dir / "o").string() +
                " --set problem.noise=-1"),
            2);
  EXPECT_EQ(cli("sweep --config " + (dir / "good.json").string() + " --out " + (dir / "s").string() +
                " --alphas 0.01,0.1 --seeds 3,4"),
            0);
  EXPECT_TRUE(fs::exists(dir / "s/sweep.csv"));
  EXPECT_EQ(cli("list"), 0);
  EXPECT_EQ(cli("verify --config " + (dir / "good.json").string() + " --set 'verify.checks=[\"moments\"]' --out " +
                (dir / "v").string()),
            0);
  // Requesting B2 on the noisy problem.
  EXPECT_EQ(cli("verify --config " + (dir / "good.json").string() +
                " --set 'verify.checks=[\"descent\"]' --set verify.use_interpolation=true --out " + (dir / "v").string()),
            2);
  fs::remove_all(dir);
}
#endif
