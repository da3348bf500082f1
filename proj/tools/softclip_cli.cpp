// softclip: run, sweep and verify experiments described by a JSON config.
//
// Exit status: 0 success, 1 a verify check failed, 2 configuration error.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "softclip/harness/experiment.hpp"

namespace sh = softclip::harness;

namespace {

struct Common {
  std::string config;
  std::string seeds;
  std::optional<std::size_t> iters;
  std::string out;
  std::optional<std::size_t> workers;
  std::vector<std::string> sets;
  std::string alphas;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app->add_option("--seeds", c.seeds, "comma-separated run seeds, e.g. 0,1,2");
  app->add_option("--iters", c.iters, "iterations per run");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--workers", c.workers, "concurrent runs");
  app->add_option("--set", c.sets, "dotted-path override key=value (repeatable)");
}

/// Turn the command-line flags into the same overrides `--set` would apply.
sh::ExperimentConfig load(const Common& c) {
  sh::json j = sh::load_json_file(c.config);
  if (!c.seeds.empty()) sh::apply_override(j, "seeds=[" + c.seeds + "]");
  if (c.iters) {
    sh::apply_override(j, "iters=" + std::to_string(*c.iters));
    if (j.contains("epochs")) j.erase("epochs");
  }
  if (!c.out.empty()) j["out"] = c.out;
  if (c.workers) sh::apply_override(j, "workers=" + std::to_string(*c.workers));
  if (!c.alphas.empty()) sh::apply_override(j, "sweep.alphas=[" + c.alphas + "]");
  for (const auto& s : c.sets) sh::apply_override(j, s);
  return sh::parse_config(j);
}

void print_list() {
  std::cout << "problems:";
  for (const auto& n : sh::problem_catalogue()) std::cout << ' ' << n;
  std::cout << "\nmethods:";
  for (const auto& n : sh::method_catalogue()) std::cout << ' ' << n;
  std::cout << "\nschemes:";
  for (auto n : softclip::kClipKindNames) std::cout << ' ' << n;
  std::cout << "\nschedules:";
  for (auto n : softclip::kScheduleKindNames) std::cout << ' ' << n;
  std::cout << "\nchecks:";
  for (const auto& n : sh::check_catalogue()) std::cout << ' ' << n;
  std::cout << "\nsweep preset log_grid:";
  for (double a : sh::preset_alpha_grid()) std::cout << ' ' << softclip::fmt_double(a);
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft-clipped stochastic gradient experiments"};
  app.require_subcommand(1);
  Common run_opts, sweep_opts, verify_opts;
  auto* run_cmd = app.add_subcommand("run", "all methods x seeds; writes runs/<label>/<seed>.csv and summary.json");
  add_common(run_cmd, run_opts);
  auto* sweep_cmd = app.add_subcommand("sweep", "constant step sizes over a grid; writes sweep.csv, sweep_curves.csv");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--alphas", sweep_opts.alphas, "comma-separated step sizes (default: log_grid preset)");
  auto* verify_cmd = app.add_subcommand("verify", "diagnostics named in verify.checks; writes verify.json");
  add_common(verify_cmd, verify_opts);
  app.add_subcommand("list", "print the catalogues");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("list")) {
      print_list();
      return 0;
    }
    if (run_cmd->parsed()) {
      const auto cfg = load(run_opts);
      sh::write_artifacts(sh::cli_run(cfg), cfg.out);
      std::cout << "wrote " << cfg.out << "/summary.json\n";
      return 0;
    }
    if (sweep_cmd->parsed()) {
      const auto cfg = load(sweep_opts);
      sh::write_artifacts(sh::cli_sweep(cfg), cfg.out);
      std::cout << "wrote " << cfg.out << "/sweep.csv\n";
      return 0;
    }
    if (verify_cmd->parsed()) {
      const auto cfg = load(verify_opts);
      const auto res = sh::cli_verify(cfg);
      sh::write_artifacts(res.files, cfg.out);
      std::cout << "verify: " << sh::to_string(res.overall) << " (" << cfg.out << "/verify.json)\n";
      return res.overall == sh::Verdict::fail ? 1 : 0;
    }
  } catch (const softclip::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const softclip::HypothesisError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
