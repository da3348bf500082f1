#pragma once

// Executable forms of the descent lemmas and rate bounds, together with the
// empirical quantities they are compared against.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "softclip/errors.hpp"
#include "softclip/optim.hpp"
#include "softclip/problems.hpp"
#include "softclip/record.hpp"
#include "softclip/schedule.hpp"

namespace softclip {

// ---------------------------------------------------------------------------
// Error constants

/// Per-step error constant without interpolation:
///   B₁ = 2c_h L³M + 2c_h L M^{1/3} σ² + c_g² L³ M^{2/3} + c_g² L σ².
inline double b1_constant(double L, double M, double sigma2, double c_g, double c_h) {
  const double L3 = L * L * L;
  const double m13 = std::cbrt(M);
  return 2.0 * c_h * L3 * M + 2.0 * c_h * L * m13 * sigma2 + c_g * c_g * L3 * m13 * m13 + c_g * c_g * L * sigma2;
}

/// Per-step error constant under interpolation: B₂ = c_h L³M + (c_g² L³/2) M^{2/3}.
inline double b2_constant(double L, double M, double c_g, double c_h) {
  const double L3 = L * L * L;
  const double m13 = std::cbrt(M);
  return c_h * L3 * M + 0.5 * c_g * c_g * L3 * m13 * m13;
}

struct BoundConstants {
  double L = 0.0;
  double M = 0.0;
  Provenance M_provenance = Provenance::exact;
  std::optional<double> sigma2;
  double c_g = 1.0;
  double c_h = 0.0;
  std::optional<double> B1;
  std::optional<double> B2;

  /// B₂ when it was requested, B₁ otherwise.
  double B() const {
    if (B2) return *B2;
    if (B1) return *B1;
    throw std::logic_error("BoundConstants: neither B1 nor B2 computed");
  }
};

/// (c_g, c_h) of a method that fits the G/H form, if it does.
///
/// Norm-based soft clipping satisfies the same bounds with c_g = 1, c_h = 1/γ;
/// plain SGD is the identity scheme. Hard clipping and the adaptive
/// baselines have no such constants.
inline std::optional<std::pair<double, double>> clip_constants(const Method& m) {
  if (const auto* cw = std::get_if<SoftclipCw>(&m)) return std::pair{cw->scheme.c_g(), cw->scheme.c_h()};
  if (const auto* sn = std::get_if<SoftclipNorm>(&m)) return std::pair{1.0, 1.0 / sn->gamma};
  if (std::holds_alternative<Sgd>(m)) return std::pair{1.0, 0.0};
  return std::nullopt;
}

/// Compute B₁ (and B₂ when `use_interpolation`) from the problem's constants.
///
/// `M_override` replaces the problem's M; pass a provenance alongside it.
inline BoundConstants bound_constants(const Problem& problem, const ClipScheme& scheme, bool use_interpolation,
                                     std::optional<double> M_override = std::nullopt,
                                     Provenance M_provenance = Provenance::estimated) {
  const auto& k = problem.constants();
  if (!k.L) throw MissingConstantError("L");
  BoundConstants bc;
  bc.L = *k.L;
  if (M_override) {
    bc.M = *M_override;
    bc.M_provenance = M_provenance;
  } else if (k.M) {
    bc.M = *k.M;
    bc.M_provenance = k.M_provenance;
  } else {
    throw MissingConstantError("M");
  }
  bc.c_g = scheme.c_g();
  bc.c_h = scheme.c_h();
  bc.sigma2 = k.sigma2;
  if (use_interpolation) {
    if (!problem.interpolating())
      throw ConfigError("B2 requires the interpolation condition (grad f(w*, xi) = 0); problem '" + problem.name() +
                        "' has sigma2 > 0");
    bc.B2 = b2_constant(bc.L, bc.M, bc.c_g, bc.c_h);
  } else if (!k.sigma2) {
    throw MissingConstantError("sigma2");
  }
  if (bc.sigma2) bc.B1 = b1_constant(bc.L, bc.M, *bc.sigma2, bc.c_g, bc.c_h);
  return bc;
}

// ---------------------------------------------------------------------------
// One-step descent lemma

struct DescentReport {
  double lhs_mean = 0.0;  // Monte-Carlo E_ξ[F(w⁺)] − F(w)
  double lhs_stderr = 0.0;
  double rhs = 0.0;  // −α‖∇F(w)‖² + α²B
  double B = 0.0;
  bool interpolation = false;  // B = B₂ if true, B₁ otherwise
  double M = 0.0;
  std::size_t n_samples = 0;

  double margin() const { return rhs - lhs_mean; }
  bool passed(double n_se = 3.0) const { return lhs_mean <= rhs + n_se * lhs_stderr; }
};

/// Check E_ξ[F(w⁺)] − F(w) ≤ −α‖∇F(w)‖² + α²B at a fixed point w.
///
/// Conditioned on w_k = w the lemmas hold with M = ‖w − w*‖³ (the third
/// moment of the point mass at w), which is the default. B₂ is used on
/// interpolating problems, B₁ otherwise.
inline DescentReport verify_descent(const OptimizerSpec& spec, const Problem& problem, std::span<const double> w,
                                    double alpha, std::size_t n_samples, std::uint64_t seed = 0,
                                    std::optional<double> M_override = std::nullopt) {
  if (n_samples == 0) throw std::invalid_argument("verify_descent: n_samples must be positive");
  const auto cc = clip_constants(spec.method);
  if (!cc) throw ConfigError("verify_descent: method " + method_name(spec.method) + " has no (c_g, c_h) constants");
  const auto& k = problem.constants();
  if (!k.L) throw MissingConstantError("L");
  if (!k.w_star) throw MissingConstantError("w_star");

  DescentReport rep;
  rep.interpolation = problem.interpolating();
  const double r = distance(w, *k.w_star);
  rep.M = M_override ? *M_override : r * r * r;
  if (rep.interpolation) {
    rep.B = b2_constant(*k.L, rep.M, cc->first, cc->second);
  } else {
    if (!k.sigma2) throw MissingConstantError("sigma2");
    rep.B = b1_constant(*k.L, rep.M, *k.sigma2, cc->first, cc->second);
  }
  const Vector gF = problem.full_grad(w);
  rep.rhs = -alpha * norm_sq(gF) + alpha * alpha * rep.B;

  OptimizerSpec one_step{spec.method, StepSchedule::constant(alpha)};
  const double f0 = problem.value(w);
  Rng rng = make_rng(seed, 0xde5c);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t t = 0; t < n_samples; ++t) {
    OptimizerState s = OptimizerState::initial(Vector(w.begin(), w.end()));
    advance(one_step, s, problem.stoch_grad(w, rng));
    const double v = problem.value(s.w) - f0;
    const double delta = v - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (v - mean);
  }
  rep.n_samples = n_samples;
  rep.lhs_mean = mean;
  rep.lhs_stderr = n_samples > 1 ? std::sqrt(m2 / static_cast<double>(n_samples - 1) / static_cast<double>(n_samples)) : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Bound formulas

/// (F(w₁) − F*)/Σα_k + B·Σα_k²/Σα_k over k = 1..K.
inline double theorem63_bound(double F_w1, double F_star, double B, const StepSchedule& schedule, std::size_t K) {
  if (K == 0) throw std::invalid_argument("theorem63_bound: K must be positive");
  const auto s = partial_sums(schedule, K);
  return (F_w1 - F_star) / s.sum + B * s.sum_sq / s.sum;
}

/// Closed form for α_k = β/(k + γ), as stated (K may be any real ≥ 1):
///   (F(w₁) − F*)/(β ln(K+γ+1)) + B β(2+γ)/ln(K+γ+1).
inline double corollary64_bound(double F_w1, double F_star, double B, double beta, double gamma, double K) {
  if (!(beta > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("corollary64_bound: beta, gamma must be positive");
  const double l = std::log(K + gamma + 1.0);
  return (F_w1 - F_star) / (beta * l) + B * beta * (2.0 + gamma) / l;
}

/// The closed form with both integral estimates carried out exactly:
///   Σα_k ≥ β ln((K+γ+1)/(1+γ)),  Σα_k² ≤ β²(2+γ)/(1+γ)².
/// The stated form drops the 1/(1+γ) inside the logarithm (harmless only for
/// γ = 0) and the (1+γ)² divisor; unlike it, this one always dominates
/// theorem63_bound for the same schedule.
inline double corollary64_bound_proof(double F_w1, double F_star, double B, double beta, double gamma, double K) {
  if (!(beta > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("corollary64_bound: beta, gamma must be positive");
  const double l = std::log((K + gamma + 1.0) / (1.0 + gamma));
  return (F_w1 - F_star) / (beta * l) + B * beta * (2.0 + gamma) / ((1.0 + gamma) * (1.0 + gamma) * l);
}

/// Strongly convex bound for α_k = β/(k + γ), requiring β ∈ (1/(2c), (1+γ)/(2c)):
///   ((1+γ)/(k+1+γ))^{2βc}(F(w₁) − F*) + B e^{2βc/(1+γ)}/(2βc − 1) · 1/(k+1+γ).
inline double theorem67_bound(double F_w1, double F_star, double B, double beta, double gamma, double c,
                              std::size_t k) {
  if (!(c > 0.0)) throw HypothesisError("theorem67_bound: c must be positive");
  const double lo = 1.0 / (2.0 * c), hi = (1.0 + gamma) / (2.0 * c);
  if (!(beta > lo && beta < hi))
    throw HypothesisError("theorem67_bound: beta=" + std::to_string(beta) + " outside (" + std::to_string(lo) + ", " +
                          std::to_string(hi) + ")");
  const double x = 2.0 * beta * c;
  const double shifted = static_cast<double>(k) + 1.0 + gamma;
  return std::pow((1.0 + gamma) / shifted, x) * (F_w1 - F_star) + B * std::exp(x / (1.0 + gamma)) / (x - 1.0) / shifted;
}

// ---------------------------------------------------------------------------
// Trajectory summaries

/// ζ_K = min_{k ≤ K} ‖∇F(w_k)‖² at every recorded K.
inline std::vector<std::pair<std::size_t, double>> min_grad_trace(const RunRecord& record) {
  if (record.trace.empty()) throw std::invalid_argument("min_grad_trace: empty record");
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(record.trace.size());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : record.trace) {
    best = std::min(best, p.grad_norm_sq);
    out.emplace_back(p.k, best);
  }
  return out;
}

enum class RateMetric { min_grad_sq, F_gap };
enum class RateModel { power, log };

struct EnsemblePoint {
  std::size_t k = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

namespace detail {

inline void check_common_grid(std::span<const RunRecord> ensemble) {
  if (ensemble.empty()) throw std::invalid_argument("ensemble is empty");
  const auto& ref = ensemble.front().trace;
  for (const auto& r : ensemble) {
    if (r.trace.size() != ref.size()) throw std::invalid_argument("ensemble records have different trace lengths");
    for (std::size_t i = 0; i < ref.size(); ++i)
      if (r.trace[i].k != ref[i].k) throw std::invalid_argument("ensemble records have different k grids");
  }
}

}  // namespace detail

/// Seed-average of a metric at each recorded k, with the standard error across seeds.
inline std::vector<EnsemblePoint> ensemble_mean(std::span<const RunRecord> ensemble, RateMetric metric,
                                                std::optional<double> F_star = std::nullopt) {
  detail::check_common_grid(ensemble);
  const std::size_t n = ensemble.size();
  const std::size_t len = ensemble.front().trace.size();
  std::vector<std::vector<double>> per_seed(n);
  for (std::size_t s = 0; s < n; ++s) {
    per_seed[s].resize(len);
    if (metric == RateMetric::min_grad_sq) {
      const auto z = min_grad_trace(ensemble[s]);
      for (std::size_t i = 0; i < len; ++i) per_seed[s][i] = z[i].second;
    } else {
      if (!F_star) throw MissingConstantError("F_star");
      for (std::size_t i = 0; i < len; ++i) per_seed[s][i] = ensemble[s].trace[i].f_value - *F_star;
    }
  }
  std::vector<EnsemblePoint> out(len);
  for (std::size_t i = 0; i < len; ++i) {
    double mean = 0.0;
    for (std::size_t s = 0; s < n; ++s) mean += per_seed[s][i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t s = 0; s < n; ++s) var += (per_seed[s][i] - mean) * (per_seed[s][i] - mean);
    var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
    out[i] = {ensemble.front().trace[i].k, mean, std::sqrt(var / static_cast<double>(n)), n};
  }
  return out;
}

/// metric ≈ C / t^p with t = k (power) or t = ln k (log).
struct RateFit {
  RateModel model = RateModel::power;
  double C = 0.0;
  double p = 0.0;
  double residual = 0.0;  // RMS of log-space deviations
  std::size_t k_min = 0;
  std::size_t k_max = 0;
  std::size_t n_points = 0;
};

/// Least squares of log(y) = log C − p·log(t(x)) over the given points.
inline RateFit fit_points(std::span<const double> x, std::span<const double> y, RateModel model) {
  if (x.size() != y.size()) throw std::invalid_argument("fit: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0)) throw FitDomainError("fit: metric must be positive, got " + std::to_string(y[i]));
    const double t = model == RateModel::power ? x[i] : std::log(x[i]);
    if (!(t > 0.0)) throw FitDomainError("fit: abscissa must make log defined");
    lx.push_back(std::log(t));
    ly.push_back(std::log(y[i]));
  }
  if (lx.size() < 2) throw std::invalid_argument("fit: need at least two points");
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit: abscissae are all equal");
  RateFit fit;
  fit.model = model;
  const double slope = sxy / sxx;
  fit.p = -slope;
  fit.C = std::exp(my - slope * mx);
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (my + slope * (lx[i] - mx));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  fit.n_points = lx.size();
  return fit;
}

struct FitRange {
  std::optional<std::size_t> k_min;
  std::optional<std::size_t> k_max;
  double burn_in = 0.1;  // fraction of iterations skipped when k_min is not given
};

/// Fit the seed-averaged metric of an ensemble against k.
inline RateFit fit_rate(std::span<const RunRecord> ensemble, RateMetric metric, RateModel model,
                        FitRange range = {}, std::optional<double> F_star = std::nullopt) {
  if (ensemble.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 records");
  const auto pts = ensemble_mean(ensemble, metric, F_star);
  const std::size_t iters = ensemble.front().meta.iters;
  const std::size_t lo = range.k_min.value_or(
      std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(range.burn_in * static_cast<double>(iters)))));
  const std::size_t hi = range.k_max.value_or(std::numeric_limits<std::size_t>::max());
  std::vector<double> x, y;
  for (const auto& p : pts)
    if (p.k >= lo && p.k <= hi) {
      x.push_back(static_cast<double>(p.k));
      y.push_back(p.mean);
    }
  RateFit fit = fit_points(x, y, model);
  fit.k_min = static_cast<std::size_t>(x.front());
  fit.k_max = static_cast<std::size_t>(x.back());
  return fit;
}

// ---------------------------------------------------------------------------
// Almost-sure convergence

struct AsConvergenceReport {
  std::vector<double> final_zeta;
  std::vector<bool> monotone;
  double epsilon = 0.0;

  bool structural_ok() const { return std::ranges::all_of(monotone, [](bool b) { return b; }); }
  double fraction_below() const {
    if (final_zeta.empty()) return 0.0;
    const auto n = std::ranges::count_if(final_zeta, [&](double z) { return z <= epsilon; });
    return static_cast<double>(n) / static_cast<double>(final_zeta.size());
  }
};

inline AsConvergenceReport as_convergence_check(std::span<const RunRecord> ensemble, double epsilon) {
  if (ensemble.empty()) throw std::invalid_argument("as_convergence_check: empty ensemble");
  const auto& m0 = ensemble.front().meta;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const auto& m = ensemble[i].meta;
    if (m.method != m0.method || m.problem != m0.problem || m.schedule != m0.schedule)
      throw std::invalid_argument("as_convergence_check: records differ in method/problem/schedule");
    for (std::size_t j = 0; j < i; ++j)
      if (ensemble[j].meta.seed == m.seed) throw std::invalid_argument("as_convergence_check: duplicate seed");
  }
  AsConvergenceReport rep;
  rep.epsilon = epsilon;
  for (const auto& r : ensemble) {
    const auto z = min_grad_trace(r);
    bool mono = true;
    for (std::size_t i = 1; i < z.size(); ++i) mono = mono && z[i].second <= z[i - 1].second;
    rep.monotone.push_back(mono);
    rep.final_zeta.push_back(z.back().second);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Moments of ‖w_k − w*‖

struct MomentPoint {
  std::size_t k = 0;
  double m1 = 0.0, m2 = 0.0, m3 = 0.0;  // seed means of dist, dist², dist³
};

struct MomentReport {
  std::vector<MomentPoint> curve;
  double empirical_M = 0.0;  // max over k of m3
  bool holder_ok = true;     // m_q ≤ m3^{q/3}, q = 1, 2, at every k
};

/// Third-moment curve of the distance to w* and the Hölder chain on the empirical measure.
inline MomentReport moment_track(std::span<const RunRecord> ensemble) {
  detail::check_common_grid(ensemble);
  MomentReport rep;
  const std::size_t len = ensemble.front().trace.size();
  const double n = static_cast<double>(ensemble.size());
  constexpr double slack = 1.0 + 8.0 * std::numeric_limits<double>::epsilon();
  for (std::size_t i = 0; i < len; ++i) {
    MomentPoint p;
    p.k = ensemble.front().trace[i].k;
    for (const auto& r : ensemble) {
      const auto& d = r.trace[i].dist_to_opt;
      if (!d) throw MissingConstantError("w_star (records carry no dist_to_opt)");
      p.m1 += *d;
      p.m2 += *d * *d;
      p.m3 += *d * *d * *d;
    }
    p.m1 /= n;
    p.m2 /= n;
    p.m3 /= n;
    const double root = std::cbrt(p.m3);
    rep.holder_ok = rep.holder_ok && p.m1 <= root * slack && p.m2 <= root * root * slack;
    rep.empirical_M = std::max(rep.empirical_M, p.m3);
    rep.curve.push_back(p);
  }
  return rep;
}

/// M estimate from a pilot ensemble: 1.5 × the largest seed-mean of ‖w_k − w*‖³.
inline double estimate_M(std::span<const RunRecord> pilot) { return 1.5 * moment_track(pilot).empirical_M; }

// ---------------------------------------------------------------------------
// Deterministic gradient descent: three ways to bound Σ α_k‖∇F(w_k)‖²

struct AppendixAReport {
  std::size_t K = 0;
  double empirical_sum = 0.0;  // Σ α_k ‖∇F(w_k)‖²
  double F_gap = 0.0;          // F(w₁) − F*
  double sum_alpha_sq = 0.0;
  double L = 0.0;
  double A = 0.0;
  bool A_from_trajectory = false;
  double M = 0.0;

  double step_restriction_bound = 0.0;  // 2(F(w₁) − F*), needs α_k < 1/L
  double uniform_bound = 0.0;           // ΔF + (L A²/2) Σα², needs ‖∇F‖ ≤ A
  double moment_bound = 0.0;            // ΔF + (L³ M^{2/3}/2) Σα², needs ‖w_k − w*‖³ ≤ M
  bool step_restriction_holds = false;
  bool uniform_holds = false;
  bool moment_holds = false;

  /// empirical / bound, in (0, 1] when the bound is valid and nonzero.
  static double tightness(double empirical, double bound) { return bound > 0.0 ? empirical / bound : 1.0; }
  std::string tightest() const {
    std::string best;
    double best_val = std::numeric_limits<double>::infinity();
    auto consider = [&](bool holds, double v, const char* name) {
      if (holds && v < best_val) {
        best_val = v;
        best = name;
      }
    };
    consider(step_restriction_holds, step_restriction_bound, "step_restriction");
    consider(uniform_holds, uniform_bound, "uniform");
    consider(moment_holds, moment_bound, "moment");
    return best;
  }
};

/// Run K steps of w ← w − α_k∇F(w) from w1 and evaluate the three bounds.
///
/// A defaults to the largest ‖∇F(w_k)‖ on the trajectory; M defaults to
/// 1.5 × the largest ‖w_k − w*‖³ (the estimator used for ensembles).
inline AppendixAReport appendix_a_bounds(const Problem& problem, const StepSchedule& schedule, std::size_t K,
                                         Vector w1, std::optional<double> A_sup = std::nullopt,
                                         std::optional<double> M = std::nullopt) {
  const auto& c = problem.constants();
  if (!c.L) throw MissingConstantError("L");
  if (!c.F_star) throw MissingConstantError("F_star");
  if (!c.w_star) throw MissingConstantError("w_star");
  if (K == 0) throw std::invalid_argument("appendix_a_bounds: K must be positive");
  schedule.validate();

  AppendixAReport rep;
  rep.K = K;
  rep.L = *c.L;
  rep.F_gap = problem.value(w1) - *c.F_star;
  Vector w = std::move(w1);
  double max_grad = 0.0, max_dist3 = 0.0, sum = 0.0, sum_sq = 0.0;
  bool restricted = true;
  for (std::size_t k = 1; k <= K; ++k) {
    const double a = schedule.alpha_at(k);
    const Vector g = problem.full_grad(w);
    const double gn2 = norm_sq(g);
    const double r = distance(w, *c.w_star);
    max_grad = std::max(max_grad, std::sqrt(gn2));
    max_dist3 = std::max(max_dist3, r * r * r);
    sum += a * gn2;
    sum_sq += a * a;
    restricted = restricted && a < 1.0 / rep.L;
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= a * g[j];
  }
  rep.empirical_sum = sum;
  rep.sum_alpha_sq = sum_sq;
  rep.A_from_trajectory = !A_sup.has_value();
  rep.A = A_sup.value_or(max_grad);
  rep.M = M.value_or(1.5 * max_dist3);

  rep.step_restriction_holds = restricted;
  rep.uniform_holds = max_grad <= rep.A;
  rep.moment_holds = max_dist3 <= rep.M;
  rep.step_restriction_bound = 2.0 * rep.F_gap;
  rep.uniform_bound = rep.F_gap + 0.5 * rep.L * rep.A * rep.A * sum_sq;
  const double m13 = std::cbrt(rep.M);
  rep.moment_bound = rep.F_gap + 0.5 * rep.L * rep.L * rep.L * m13 * m13 * sum_sq;
  return rep;
}

}  // namespace softclip
