#pragma once

// Experiment configuration: a JSON document (comments allowed), dotted-path
// overrides, and fail-fast validation against the method/problem/schedule
// catalogues. Every field has a default, and `effective_json` writes the
// fully resolved document back out so a run can be reproduced from it.

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "softclip/errors.hpp"
#include "softclip/optim.hpp"
#include "softclip/problems.hpp"
#include "softclip/schedule.hpp"

namespace softclip::harness {

using nlohmann::json;

inline constexpr std::size_t kBatchesPerEpoch = 32;

/// 10⁻⁵, 5·10⁻⁵, …, 0.5, 1
inline std::vector<double> preset_alpha_grid() {
  return {1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 1.0};
}

inline const std::vector<std::string>& problem_catalogue() {
  static const std::vector<std::string> names = {"quartic",   "stiff_diag", "sc_quadratic",
                                                 "nonconvex", "appendix_e", "logreg"};
  return names;
}

inline const std::vector<std::string>& method_catalogue() {
  static const std::vector<std::string> names = {"softclip_cw", "softclip_norm", "sgd",
                                                 "sgd_momentum", "hard_clip",    "adam"};
  return names;
}

inline const std::vector<std::string>& check_catalogue() {
  static const std::vector<std::string> names = {"bound_constants", "descent",        "theorem63", "corollary64",
                                                 "theorem67",       "as_convergence", "moments",   "appendix_a"};
  return names;
}

struct ProblemConfig {
  std::string name = "sc_quadratic";
  std::size_t dim = 10;
  double noise = 0.0;
  std::uint64_t data_seed = 0;
  double lambda_min = 0.079;  // stiff_diag
  double lambda_max = 3.8e4;
  double c = 1.0;  // sc_quadratic
  double L = 10.0;
  double a = 2.5;  // nonconvex
  std::size_t n = 1000;  // appendix_e, logreg
  std::size_t batch = 32;
  std::size_t sigma2_batches = 100000;
  bool separable = false;
  std::optional<double> M;  // supplied moment bound, taken as exact
};

struct MethodConfig {
  std::string label;
  Method method;
};

/// Initial point: explicit values, ones scaled to a norm, or w* + offset·ones.
struct StartConfig {
  std::optional<std::vector<double>> values;
  double norm = 10.0;
  std::optional<double> offset_from_opt;
};

struct DescentCheckConfig {
  std::size_t points = 20;
  std::size_t samples = 10000;
  double alpha_min = 1e-3;
  double alpha_max = 1e-1;
  double radius = 2.0;
};

struct VerifyConfig {
  std::vector<std::string> checks;
  std::optional<bool> use_interpolation;  // default: the problem's own property
  DescentCheckConfig descent;
  std::vector<std::size_t> K = {100, 1000, 10000};
  double epsilon = 1e-3;
};

struct ExperimentConfig {
  ProblemConfig problem;
  std::vector<MethodConfig> methods;
  StepSchedule schedule = StepSchedule::inverse_linear(1.0, 1.0);
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::size_t iters = 480;
  std::optional<std::size_t> epochs;
  std::size_t record_every = 1;
  StartConfig w1;
  std::vector<double> alphas = preset_alpha_grid();
  std::size_t workers = 1;
  std::string out = "out";
  VerifyConfig verify;
};

// ---------------------------------------------------------------------------
// JSON access with unknown-key detection

namespace detail {

class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(j_.at(key), key);
  }

  template <class T>
  std::optional<T> opt(const std::string& key) {
    if (!has(key) || j_.at(key).is_null()) return std::nullopt;
    return as<T>(j_.at(key), key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown key '" + where(k) + "'");
  }

 private:
  template <class T>
  T as(const json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
          throw ConfigError(where(key) + " must be a non-negative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(where(key) + " must be true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

inline bool in(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

inline ProblemConfig parse_problem(const json& j) {
  Obj o(j, "problem");
  ProblemConfig p;
  p.name = o.get<std::string>("name", p.name);
  if (!in(problem_catalogue(), p.name))
    throw ConfigError("problem.name '" + p.name + "' is not one of: " + join(problem_catalogue()));
  if (p.name == "appendix_e") p.dim = 50;
  if (p.name == "logreg") p.dim = 5;
  if (p.name == "quartic") p.dim = 1;
  p.dim = o.get<std::size_t>("dim", p.dim);
  p.noise = o.get<double>("noise", p.noise);
  p.data_seed = o.get<std::uint64_t>("data_seed", p.data_seed);
  p.lambda_min = o.get<double>("lambda_min", p.lambda_min);
  p.lambda_max = o.get<double>("lambda_max", p.lambda_max);
  p.c = o.get<double>("c", p.c);
  p.L = o.get<double>("L", p.L);
  p.a = o.get<double>("a", p.a);
  p.n = o.get<std::size_t>("n", p.n);
  p.batch = o.get<std::size_t>("batch", p.batch);
  p.sigma2_batches = o.get<std::size_t>("sigma2_batches", p.sigma2_batches);
  p.separable = o.get<bool>("separable", p.separable);
  p.M = o.opt<double>("M");
  o.finish();
  if (p.name == "quartic" && p.dim != 1) throw ConfigError("problem.dim: quartic is one-dimensional");
  if (p.dim == 0) throw ConfigError("problem.dim must be positive");
  if (!(p.noise >= 0.0)) throw ConfigError("problem.noise must be non-negative");
  if (p.M && !(*p.M > 0.0)) throw ConfigError("problem.M must be positive");
  return p;
}

inline MethodConfig parse_method(const json& j, std::size_t idx) {
  Obj o(j, "methods." + std::to_string(idx));
  const auto name = o.get<std::string>("name", "");
  MethodConfig mc;
  if (name == "softclip_cw") {
    const auto scheme = o.get<std::string>("scheme", "tamed");
    if (!parse_clip_kind(scheme))
      throw ConfigError(o.where("scheme") + " '" + scheme + "' is not one of: tamed, arctan, log, sin, identity");
    const double gamma = o.get<double>("gamma", 1.0 / 3.0);
    if (!(gamma > 0.0)) throw ConfigError(o.where("gamma") + " must be positive");
    mc.method = SoftclipCw{ClipScheme::from_name(scheme, gamma)};
  } else if (name == "softclip_norm") {
    const double gamma = o.get<double>("gamma", 1.0 / 3.0);
    if (!(gamma > 0.0)) throw ConfigError(o.where("gamma") + " must be positive");
    mc.method = SoftclipNorm{gamma};
  } else if (name == "sgd") {
    mc.method = Sgd{};
  } else if (name == "sgd_momentum") {
    const double mu = o.get<double>("mu", 0.9);
    if (!(mu >= 0.0 && mu < 1.0)) throw ConfigError(o.where("mu") + " must be in [0, 1)");
    mc.method = SgdMomentum{mu};
  } else if (name == "hard_clip") {
    const double g = o.get<double>("gamma_c", 1.0);
    if (!(g > 0.0)) throw ConfigError(o.where("gamma_c") + " must be positive");
    mc.method = HardClip{g};
  } else if (name == "adam") {
    Adam a;
    a.beta1 = o.get<double>("beta1", a.beta1);
    a.beta2 = o.get<double>("beta2", a.beta2);
    a.eps = o.get<double>("eps", a.eps);
    if (!(a.beta1 >= 0.0 && a.beta1 < 1.0 && a.beta2 >= 0.0 && a.beta2 < 1.0 && a.eps > 0.0))
      throw ConfigError(o.where() + ": adam needs beta1, beta2 in [0, 1) and eps > 0");
    mc.method = a;
  } else {
    throw ConfigError(o.where("name") + " '" + name + "' is not one of: " + join(method_catalogue()));
  }
  mc.label = o.get<std::string>("label", method_label(mc.method));
  if (mc.label.empty() || mc.label.find_first_of("/\\ ") != std::string::npos || mc.label == "." || mc.label == "..")
    throw ConfigError(o.where("label") + " must be a non-empty name without spaces or slashes");
  o.finish();
  return mc;
}

inline StepSchedule parse_schedule(const json& j) {
  Obj o(j, "schedule");
  const auto kind_name = o.get<std::string>("kind", "inverse_linear");
  const auto kind = parse_schedule_kind(kind_name);
  if (!kind) throw ConfigError("schedule.kind '" + kind_name + "' is not a known schedule");
  StepSchedule s{*kind, 1.0, 0.0, std::nullopt};
  if (*kind == ScheduleKind::inverse_linear) s.gamma = 1.0;
  s.beta = o.get<double>("beta", s.beta);
  s.gamma = o.get<double>("gamma", s.gamma);
  if (auto h = o.opt<std::size_t>("horizon")) s.horizon = *h;
  o.finish();
  return s;
}

inline StartConfig parse_start(const json& j) {
  Obj o(j, "w1");
  StartConfig s;
  s.values = o.opt<std::vector<double>>("values");
  s.norm = o.get<double>("norm", s.norm);
  s.offset_from_opt = o.opt<double>("offset_from_opt");
  o.finish();
  if (s.values && s.offset_from_opt) throw ConfigError("w1: give either values or offset_from_opt, not both");
  if (!(s.norm >= 0.0)) throw ConfigError("w1.norm must be non-negative");
  return s;
}

inline VerifyConfig parse_verify(const json& j) {
  Obj o(j, "verify");
  VerifyConfig v;
  v.checks = o.get<std::vector<std::string>>("checks", v.checks);
  for (const auto& c : v.checks)
    if (!in(check_catalogue(), c)) throw ConfigError("verify.checks: '" + c + "' is not one of: " + join(check_catalogue()));
  v.use_interpolation = o.opt<bool>("use_interpolation");
  if (o.has("descent")) {
    Obj d(o.raw("descent"), "verify.descent");
    v.descent.points = d.get<std::size_t>("points", v.descent.points);
    v.descent.samples = d.get<std::size_t>("samples", v.descent.samples);
    v.descent.alpha_min = d.get<double>("alpha_min", v.descent.alpha_min);
    v.descent.alpha_max = d.get<double>("alpha_max", v.descent.alpha_max);
    v.descent.radius = d.get<double>("radius", v.descent.radius);
    d.finish();
    if (v.descent.points == 0 || v.descent.samples < 2) throw ConfigError("verify.descent needs points >= 1, samples >= 2");
    if (!(v.descent.alpha_min > 0.0 && v.descent.alpha_min <= v.descent.alpha_max))
      throw ConfigError("verify.descent needs 0 < alpha_min <= alpha_max");
    if (!(v.descent.radius >= 0.0)) throw ConfigError("verify.descent.radius must be non-negative");
  }
  v.K = o.get<std::vector<std::size_t>>("K", v.K);
  v.epsilon = o.get<double>("epsilon", v.epsilon);
  o.finish();
  if (!(v.epsilon > 0.0)) throw ConfigError("verify.epsilon must be positive");
  for (auto k : v.K)
    if (k == 0) throw ConfigError("verify.K entries must be positive");
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Parse and validate. Throws ConfigError naming the first offending field.
inline ExperimentConfig parse_config(const json& j) {
  detail::Obj o(j, "");
  ExperimentConfig cfg;
  if (o.has("problem")) cfg.problem = detail::parse_problem(o.raw("problem"));
  if (!o.has("methods")) throw ConfigError("methods: at least one method is required");
  const json& ms = o.raw("methods");
  if (!ms.is_array() || ms.empty()) throw ConfigError("methods must be a non-empty list");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    cfg.methods.push_back(detail::parse_method(ms[i], i));
    if (!labels.insert(cfg.methods.back().label).second)
      throw ConfigError("methods." + std::to_string(i) + ": duplicate label '" + cfg.methods.back().label +
                        "' (set an explicit label)");
  }
  if (o.has("schedule")) cfg.schedule = detail::parse_schedule(o.raw("schedule"));
  cfg.seeds = o.get<std::vector<std::uint64_t>>("seeds", cfg.seeds);
  if (cfg.seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
    throw ConfigError("seeds must be distinct");

  const auto iters = o.opt<std::size_t>("iters");
  cfg.epochs = o.opt<std::size_t>("epochs");
  const auto bpe = o.get<std::size_t>("batches_per_epoch", kBatchesPerEpoch);
  if (iters && cfg.epochs && *iters != *cfg.epochs * bpe)
    throw ConfigError("iters = " + std::to_string(*iters) + " disagrees with epochs x batches_per_epoch = " +
                      std::to_string(*cfg.epochs * bpe));
  cfg.iters = iters ? *iters : (cfg.epochs ? *cfg.epochs * bpe : cfg.iters);
  if (cfg.iters == 0) throw ConfigError("iters must be positive");
  cfg.record_every = o.get<std::size_t>("record_every", cfg.record_every);
  if (cfg.record_every == 0) throw ConfigError("record_every must be positive");

  if (o.has("w1")) cfg.w1 = detail::parse_start(o.raw("w1"));
  if (o.has("sweep")) {
    detail::Obj s(o.raw("sweep"), "sweep");
    const auto preset = s.get<std::string>("preset", "log_grid");
    if (preset != "log_grid") throw ConfigError("sweep.preset '" + preset + "' is unknown (only log_grid)");
    cfg.alphas = s.get<std::vector<double>>("alphas", cfg.alphas);
    s.finish();
  }
  if (cfg.alphas.empty()) throw ConfigError("sweep.alphas must be non-empty");
  for (double a : cfg.alphas)
    if (!(a > 0.0 && std::isfinite(a))) throw ConfigError("sweep.alphas must be positive and finite");
  cfg.workers = o.get<std::size_t>("workers", cfg.workers);
  if (cfg.workers == 0) throw ConfigError("workers must be positive");
  cfg.out = o.get<std::string>("out", cfg.out);
  if (o.has("verify")) cfg.verify = detail::parse_verify(o.raw("verify"));
  o.finish();

  // Horizon schedules default to the run length.
  if ((cfg.schedule.kind == ScheduleKind::horizon_sqrt || cfg.schedule.kind == ScheduleKind::horizon_inverse) &&
      !cfg.schedule.horizon)
    cfg.schedule.horizon = cfg.iters;
  try {
    cfg.schedule.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  if (cfg.w1.values && cfg.w1.values->size() != cfg.problem.dim)
    throw ConfigError("w1.values has " + std::to_string(cfg.w1.values->size()) + " entries, problem.dim is " +
                      std::to_string(cfg.problem.dim));
  return cfg;
}

/// The fully resolved configuration. Parsing it again yields the same config.
inline json effective_json(const ExperimentConfig& c) {
  json j;
  const auto& p = c.problem;
  j["problem"] = {{"name", p.name},   {"dim", p.dim},     {"noise", p.noise},   {"data_seed", p.data_seed},
                  {"lambda_min", p.lambda_min}, {"lambda_max", p.lambda_max}, {"c", p.c},
                  {"L", p.L},         {"a", p.a},         {"n", p.n},           {"batch", p.batch},
                  {"sigma2_batches", p.sigma2_batches},  {"separable", p.separable}};
  j["problem"]["M"] = p.M ? json(*p.M) : json(nullptr);
  j["methods"] = json::array();
  for (const auto& m : c.methods) {
    json mj = {{"name", method_name(m.method)}, {"label", m.label}};
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, SoftclipCw>) {
            mj["scheme"] = std::string(v.scheme.name());
            mj["gamma"] = v.scheme.gamma();
          } else if constexpr (std::is_same_v<T, SoftclipNorm>) {
            mj["gamma"] = v.gamma;
          } else if constexpr (std::is_same_v<T, SgdMomentum>) {
            mj["mu"] = v.mu;
          } else if constexpr (std::is_same_v<T, HardClip>) {
            mj["gamma_c"] = v.gamma_c;
          } else if constexpr (std::is_same_v<T, Adam>) {
            mj["beta1"] = v.beta1;
            mj["beta2"] = v.beta2;
            mj["eps"] = v.eps;
          }
        },
        m.method);
    j["methods"].push_back(mj);
  }
  j["schedule"] = {{"kind", std::string(to_string(c.schedule.kind))}, {"beta", c.schedule.beta},
                   {"gamma", c.schedule.gamma}};
  j["schedule"]["horizon"] = c.schedule.horizon ? json(*c.schedule.horizon) : json(nullptr);
  j["seeds"] = c.seeds;
  j["iters"] = c.iters;
  j["record_every"] = c.record_every;
  j["w1"] = {{"norm", c.w1.norm}};
  j["w1"]["values"] = c.w1.values ? json(*c.w1.values) : json(nullptr);
  j["w1"]["offset_from_opt"] = c.w1.offset_from_opt ? json(*c.w1.offset_from_opt) : json(nullptr);
  j["sweep"] = {{"preset", "log_grid"}, {"alphas", c.alphas}};
  // workers and out only say how and where to run; leaving them out keeps
  // the echo identical across worker counts and output directories.
  const auto& v = c.verify;
  j["verify"] = {{"checks", v.checks},
                 {"descent",
                  {{"points", v.descent.points},
                   {"samples", v.descent.samples},
                   {"alpha_min", v.descent.alpha_min},
                   {"alpha_max", v.descent.alpha_max},
                   {"radius", v.descent.radius}}},
                 {"K", v.K},
                 {"epsilon", v.epsilon}};
  j["verify"]["use_interpolation"] = v.use_interpolation ? json(*v.use_interpolation) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Overrides

/// Apply `a.b.c=value`. The value is read as JSON when it parses as JSON
/// (numbers, booleans, lists) and as a plain string otherwise. Numeric path
/// segments index into lists.
inline void apply_override(json& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + std::string(assignment) + "'");
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* cur = &root;
  std::string_view rest = path;
  while (true) {
    const auto dot = rest.find('.');
    const std::string seg(rest.substr(0, dot));
    if (seg.empty()) throw ConfigError("--set: empty path segment in '" + path + "'");
    const bool last = dot == std::string_view::npos;
    if (cur->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(seg, &used);
        if (used != seg.size()) throw std::invalid_argument(seg);
      } catch (const std::exception&) {
        throw ConfigError("--set: '" + seg + "' is not a list index in '" + path + "'");
      }
      if (idx >= cur->size()) throw ConfigError("--set: index " + seg + " out of range in '" + path + "'");
      cur = &(*cur)[idx];
    } else {
      if (cur->is_null()) *cur = json::object();
      if (!cur->is_object()) throw ConfigError("--set: '" + path + "' descends into a non-object");
      cur = &(*cur)[seg];
    }
    if (last) break;
    rest = rest.substr(dot + 1);
  }
  *cur = std::move(value);
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false, /*ignore_comments=*/true);
  if (j.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return j;
}

// ---------------------------------------------------------------------------
// Instantiation

inline ProblemPtr build_problem(const ProblemConfig& p) {
  ProblemPtr prob;
  try {
    if (p.name == "quartic") prob = make_quartic();
    else if (p.name == "stiff_diag") prob = make_stiff_diag(p.lambda_min, p.lambda_max, p.dim, p.noise, p.data_seed);
    else if (p.name == "sc_quadratic") prob = make_sc_quadratic(p.c, p.L, p.dim, p.noise, p.data_seed);
    else if (p.name == "nonconvex") prob = make_nonconvex(p.dim, p.noise, p.a);
    else if (p.name == "appendix_e")
      prob = make_appendix_e(p.data_seed, {p.n, p.dim, p.batch, p.sigma2_batches});
    else if (p.name == "logreg") prob = make_logreg(p.n, p.dim, p.separable, p.data_seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
  if (!prob) throw ConfigError("problem.name '" + p.name + "' is unknown");
  if (p.M) return with_moment_bound(prob, *p.M);
  return prob;
}

inline Vector build_start(const StartConfig& s, const Problem& problem) {
  if (s.values) return *s.values;
  if (s.offset_from_opt) {
    const auto& ws = problem.constants().w_star;
    if (!ws) throw MissingConstantError("w_star");
    Vector w = *ws;
    for (double& x : w) x += *s.offset_from_opt;
    return w;
  }
  return scaled_ones(problem.dim(), s.norm);
}

}  // namespace softclip::harness
