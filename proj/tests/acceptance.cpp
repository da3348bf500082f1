// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "softclip/harness/experiment.hpp"

using namespace softclip;
using namespace softclip::harness;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const Method kTamed = SoftclipCw{ClipScheme::tamed()};

// ---------------------------------------------------------------------------

Outcome ac1_clipping_algebra() {
  const std::size_t n = 1'000'000;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> ux(-1e6, 1e6), ua(0.0, 1e3);
  std::size_t bad = 0;
  double worst_rel = 0.0;
  for (const auto& s : catalogue()) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = ux(rng);
      double a = ua(rng);
      if (a == 0.0) a = 1e3;  // α ∈ (0, 1e3]
      const double g = s.g(x, a), h = s.h(x, a);
      const double rel = std::abs(a * g - (a * x - a * a * h)) / std::max(std::abs(a * x), 1e-300);
      worst_rel = std::max(worst_rel, rel);
      bad += std::abs(g) > s.c_g() * std::abs(x) || std::abs(h) > s.c_h() * x * x || rel > 1e-12;
    }
  }
  return {bad == 0, fmt("%zu schemes x %zu pairs, violations %zu, worst identity rel %.2e", catalogue().size(), n,
                        bad, worst_rel)};
}

Outcome ac2_quartic() {
  const auto p = make_quartic();
  const StepSchedule one_over_k = StepSchedule::inverse_linear(1.0, 0.0);
  const Vector w1{2.0};
  const auto sgd = run({Sgd{}, one_over_k}, *p, w1, 0, 480);
  bool growth = sgd.meta.diverged && sgd.trace.size() >= 3;
  double fact = 1.0;
  for (const auto& t : sgd.trace) {
    fact *= static_cast<double>(t.k);  // every k is recorded, so this is k!
    growth = growth && *t.dist_to_opt >= 2.0 * fact;
  }
  double worst = 0.0;
  bool bounded = true;
  for (auto scheme : {ClipScheme::tamed(), ClipScheme::tamed(1.0), ClipScheme::arctan(), ClipScheme::log(),
                      ClipScheme::sin()}) {
    const auto r = run({SoftclipCw{scheme}, one_over_k}, *p, w1, 0, 480);
    bounded = bounded && !r.meta.diverged && r.trace.size() == 481;
    for (const auto& t : r.trace) worst = std::max(worst, *t.dist_to_opt);
  }
  bounded = bounded && worst <= 10.0;
  return {growth && bounded, fmt("sgd diverged at k=%zu with factorial growth %s; softclip max |w_k| %.3f",
                                 sgd.meta.divergence_step.value_or(0), growth ? "yes" : "no", worst)};
}

json stiff_config() {
  return json::parse(R"({
    "problem": {"name": "stiff_diag", "dim": 50, "noise": 0.1, "data_seed": 7,
                "lambda_min": 0.079, "lambda_max": 38000},
    "methods": [{"name": "sgd"},
                {"name": "softclip_cw", "scheme": "tamed"},
                {"name": "softclip_cw", "scheme": "arctan"},
                {"name": "softclip_cw", "scheme": "log"},
                {"name": "softclip_cw", "scheme": "sin"},
                {"name": "softclip_norm"}],
    "seeds": [0, 1, 2, 3, 4],
    "epochs": 15,
    "w1": {"norm": 10}
  })");
}

Outcome ac3_stiff_sweep() {
  const auto cfg = parse_config(stiff_config());
  const auto files = cli_sweep(cfg);
  // method,alpha,n_seeds,diverged_count,mean_final_error,stderr_final_error
  std::istringstream in(files.at("sweep_curves.csv"));
  std::string line;
  std::getline(in, line);
  bool a = true, b = true;
  std::map<std::pair<std::string, double>, double> err;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    f.resize(6);
    const double alpha = std::stod(f[1]);
    const std::size_t div = std::stoul(f[3]);
    if (f[0] == "sgd") {
      if (alpha >= 1e-4 && div != 5) a = false;
      if (alpha == 1e-5 && div != 0) a = false;
    } else if (f[0].rfind("softclip_cw", 0) == 0 && div != 0) {
      b = false;
    }
    if (!f[4].empty()) err[{f[0], alpha}] = std::stod(f[4]);
  }
  bool c = true;
  std::string cmp;
  for (double alpha : {0.1, 0.5, 1.0}) {
    const auto t = err.find({"softclip_cw_tamed", alpha}), s = err.find({"softclip_norm", alpha});
    const bool ok = t != err.end() && s != err.end() && t->second < s->second;
    c = c && ok;
    if (t != err.end() && s != err.end()) cmp += fmt(" a=%g: %.3g<%.3g", alpha, t->second, s->second);
  }
  return {a && b && c, fmt("(a) sgd edge %s (b) softclip stable %s (c) tamed<norm %s;%s", a ? "ok" : "no",
                           b ? "ok" : "no", c ? "ok" : "no", cmp.c_str())};
}

Outcome ac4_descent() {
  std::size_t entries = 0, passed_points = 0, points = 0;
  for (double noise : {0.0, 0.1}) {
    auto j = json::parse(R"({
      "problem": {"name": "sc_quadratic", "dim": 10, "c": 1, "L": 10},
      "methods": [{"name": "softclip_cw", "scheme": "tamed"}, {"name": "softclip_cw", "scheme": "arctan"},
                  {"name": "softclip_cw", "scheme": "log"}, {"name": "softclip_cw", "scheme": "sin"}],
      "iters": 1,
      "verify": {"checks": ["descent"], "descent": {"points": 20, "samples": 10000}}
    })");
    j["problem"]["noise"] = noise;
    const auto res = cli_verify(parse_config(j));
    const auto doc = json::parse(res.files.at("verify.json"));
    for (const auto& e : doc["checks"]) {
      ++entries;
      points += e["points"].get<std::size_t>();
      passed_points += e["passed_points"].get<std::size_t>();
    }
  }
  return {entries == 8 && passed_points == points && points == 160,
          fmt("%zu/%zu points within 3 SE (B2 at noise 0, B1 at noise 0.1)", passed_points, points)};
}

json nonconvex_config() {
  return json::parse(R"({
    "problem": {"name": "nonconvex", "dim": 50, "noise": 0.1},
    "methods": [{"name": "softclip_cw", "scheme": "tamed"}],
    "schedule": {"kind": "inverse_linear", "beta": 1, "gamma": 1},
    "seeds": [0, 1, 2, 3, 4],
    "iters": 10000,
    "w1": {"norm": 10},
    "verify": {"checks": ["corollary64", "as_convergence"], "epsilon": 0.001}
  })");
}

json find_check(const json& doc, const std::string& name) {
  for (const auto& e : doc["checks"])
    if (e["check"] == name) return e;
  return json();
}

Outcome ac5_nonconvex_rate() {
  const auto doc = json::parse(cli_verify(parse_config(nonconvex_config())).files.at("verify.json"));
  const auto cor = find_check(doc, "corollary64");
  const bool a = !cor.is_null() && cor["status"] != "fail";

  const auto p = make_nonconvex(50, 0.1);
  const Vector w1 = scaled_ones(50, 10.0);
  std::vector<double> Ks, mins;
  for (std::size_t K : {1000u, 4000u, 16000u}) {
    double sum = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto r = run({kTamed, StepSchedule::horizon_sqrt(K)}, *p, w1, s, K, K);
      if (r.meta.diverged) return {false, "horizon-sqrt run diverged"};
      sum += min_grad_trace(r).back().second;
    }
    Ks.push_back(static_cast<double>(K));
    mins.push_back(sum / 5.0);
  }
  const auto fit = fit_points(Ks, mins, RateModel::power);
  const bool b = fit.p >= 0.3 && fit.p <= 0.7;
  return {a && b, fmt("(a) min-grad2 %.3g vs bound %.3g (%s) (b) exponent p=%.3f", cor.value("mean_min_grad_norm_sq", NAN),
                      cor.value("bound_stated", NAN), cor.is_null() ? "missing" : cor["status"].get<std::string>().c_str(),
                      fit.p)};
}

Outcome ac6_strongly_convex_rate() {
  auto j = json::parse(R"({
    "problem": {"name": "sc_quadratic", "dim": 10, "noise": 0.05, "c": 1, "L": 10},
    "methods": [{"name": "softclip_cw", "scheme": "tamed"}],
    "schedule": {"kind": "inverse_linear", "beta": 0.75, "gamma": 1},
    "seeds": [0, 1, 2, 3, 4],
    "iters": 100000,
    "record_every": 100,
    "w1": {"offset_from_opt": 0.05},
    "verify": {"checks": ["theorem67"]}
  })");
  const auto cfg = parse_config(j);
  const auto doc = json::parse(cli_verify(cfg).files.at("verify.json"));
  const auto t67 = find_check(doc, "theorem67");
  const bool pointwise = !t67.is_null() && t67["status"] != "fail";

  const auto p = build_problem(cfg.problem);
  const Vector w1 = build_start(cfg.w1, *p);
  std::vector<RunRecord> ens;
  for (auto s : cfg.seeds) ens.push_back(run({kTamed, cfg.schedule}, *p, w1, s, cfg.iters, cfg.record_every));
  const auto fit = fit_rate(ens, RateMetric::F_gap, RateModel::power, {1000, 100000}, p->constants().F_star);
  const bool rate = fit.p >= 0.85 && fit.p <= 1.15;
  return {pointwise && rate,
          fmt("exponent p=%.3f over k in [1e3,1e5]; bound check %s, %zu/%zu points outside, max ratio %.3g", fit.p,
              t67.is_null() ? "missing" : t67["status"].get<std::string>().c_str(), t67.value("violations", 0ul),
              t67.value("points", 0ul), t67.value("max_ratio_to_bound", NAN))};
}

Outcome ac7_almost_sure() {
  const auto p = make_nonconvex(50, 0.1);
  const Vector w1 = scaled_ones(50, 10.0);
  std::vector<RunRecord> ens;
  for (std::uint64_t s = 0; s < 5; ++s) ens.push_back(run({kTamed, StepSchedule::inverse_linear(1, 1)}, *p, w1, s, 10000));
  const auto rep = as_convergence_check(ens, 1e-3);
  double worst = 0.0;
  for (double z : rep.final_zeta) worst = std::max(worst, z);
  return {rep.structural_ok() && rep.fraction_below() == 1.0,
          fmt("monotone %s, %.0f%% of seeds below 1e-3, largest zeta_final %.3g", rep.structural_ok() ? "yes" : "no",
              100.0 * rep.fraction_below(), worst)};
}

Outcome ac8_appendix_a() {
  const auto p = make_sc_quadratic(1.0, 10.0, 10, 0.0, 0);
  const auto rep = appendix_a_bounds(*p, StepSchedule::constant(0.09), 200, scaled_ones(10, 10.0));
  bool ok = rep.step_restriction_holds;
  ok = ok && (!rep.step_restriction_holds || rep.empirical_sum <= rep.step_restriction_bound);
  ok = ok && (!rep.uniform_holds || rep.empirical_sum <= rep.uniform_bound);
  ok = ok && (!rep.moment_holds || rep.empirical_sum <= rep.moment_bound);
  ok = ok && rep.tightest() == "step_restriction";
  return {ok, fmt("sum %.4g; step-restriction %.4g, uniform %.4g, moment %.4g; tightest %s", rep.empirical_sum,
                  rep.step_restriction_bound, rep.uniform_bound, rep.moment_bound, rep.tightest().c_str())};
}

Outcome ac9_determinism() {
  std::size_t files = 0;
  bool same = true;
  auto compare = [&](const Artifacts& a, const Artifacts& b) {
    same = same && a == b;
    files += a.size();
  };
  auto stiff = parse_config(stiff_config());
  stiff.iters = 96;
  stiff.record_every = 8;
  auto c1 = stiff, c4 = stiff;
  c1.workers = 1;
  c4.workers = 4;
  compare(cli_run(c1), cli_run(c4));
  compare(cli_sweep(c1), cli_sweep(c4));

  auto nc = parse_config(nonconvex_config());
  nc.iters = 2000;
  nc.record_every = 10;
  c1 = nc;
  c4 = nc;
  c4.workers = 4;
  compare(cli_verify(c1).files, cli_verify(c4).files);
  return {same, fmt("%zu artifact files compared byte for byte (run, sweep, verify)", files)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"AC1", ac1_clipping_algebra}, {"AC2", ac2_quartic},    {"AC3", ac3_stiff_sweep},
      {"AC4", ac4_descent},          {"AC5", ac5_nonconvex_rate}, {"AC6", ac6_strongly_convex_rate},
      {"AC7", ac7_almost_sure},      {"AC8", ac8_appendix_a}, {"AC9", ac9_determinism}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s  %s  [%.2fs]\n", name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
