#pragma once

// Iteration engine: the soft-clipped update and its baselines.
//
//   softclip_cw    w ← w − α·G(∇f, α)
//   softclip_norm  w ← w − αγ/(γ + α‖∇f‖)·∇f
//   sgd            w ← w − α·∇f
//   sgd_momentum   v ← μv + ∇f,  w ← w − α·v
//   hard_clip      w ← w − α·min(1, γ_c/‖∇f‖)·∇f
//   adam           bias-corrected first/second moments, w ← w − α·m̂/(√v̂ + ε)

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>

#include "softclip/clipfuncs.hpp"
#include "softclip/errors.hpp"
#include "softclip/problems.hpp"
#include "softclip/record.hpp"
#include "softclip/schedule.hpp"
#include "softclip/vec.hpp"

namespace softclip {

/// Iterates with a non-finite component or ‖w‖ above this are declared diverged.
inline constexpr double kDivergenceNorm = 1e12;

struct SoftclipCw {
  ClipScheme scheme = ClipScheme::tamed();
};
struct SoftclipNorm {
  double gamma = 1.0 / 3.0;
};
struct Sgd {};
struct SgdMomentum {
  double mu = 0.9;
};
struct HardClip {
  double gamma_c = 1.0;
};
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
};

using Method = std::variant<SoftclipCw, SoftclipNorm, Sgd, SgdMomentum, HardClip, Adam>;

inline std::string method_name(const Method& m) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SoftclipCw>) return "softclip_cw";
        else if constexpr (std::is_same_v<T, SoftclipNorm>) return "softclip_norm";
        else if constexpr (std::is_same_v<T, Sgd>) return "sgd";
        else if constexpr (std::is_same_v<T, SgdMomentum>) return "sgd_momentum";
        else if constexpr (std::is_same_v<T, HardClip>) return "hard_clip";
        else return "adam";
      },
      m);
}

/// Short label that distinguishes component-wise schemes, e.g. "softclip_cw_tamed".
inline std::string method_label(const Method& m) {
  if (const auto* cw = std::get_if<SoftclipCw>(&m)) return "softclip_cw_" + std::string(cw->scheme.name());
  return method_name(m);
}

struct OptimizerSpec {
  Method method = Sgd{};
  StepSchedule schedule;
};

struct OptimizerState {
  Vector w;
  std::size_t k = 1;
  Vector momentum;  // sgd_momentum buffer
  Vector m1, m2;    // adam moments

  static OptimizerState initial(Vector w1) {
    OptimizerState s;
    s.w = std::move(w1);
    return s;
  }
};

namespace detail {

inline void ensure_buffer(Vector& buf, std::size_t d) {
  if (buf.empty()) buf.assign(d, 0.0);
}

}  // namespace detail

/// Advance `state` in place by one step of `spec` with the given stochastic gradient.
/// Throws DivergedError for non-finite gradients or iterates outside the divergence ball;
/// the state is left untouched in that case.
inline void advance(const OptimizerSpec& spec, OptimizerState& state, std::span<const double> grad) {
  const std::size_t d = state.w.size();
  if (grad.size() != d) throw std::invalid_argument("step: gradient dimension mismatch");
  if (!all_finite(grad)) throw DivergedError(state.k, norm(grad));
  const double alpha = spec.schedule.alpha_at(state.k);

  Vector w = state.w;
  OptimizerState next_aux;  // only the buffers are used
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SoftclipCw>) {
          const Vector g = apply_G(m.scheme, grad, alpha);
          for (std::size_t i = 0; i < d; ++i) w[i] -= alpha * g[i];
        } else if constexpr (std::is_same_v<T, SoftclipNorm>) {
          const double scale = alpha * m.gamma / (m.gamma + alpha * norm(grad));
          for (std::size_t i = 0; i < d; ++i) w[i] -= scale * grad[i];
        } else if constexpr (std::is_same_v<T, Sgd>) {
          for (std::size_t i = 0; i < d; ++i) w[i] -= alpha * grad[i];
        } else if constexpr (std::is_same_v<T, SgdMomentum>) {
          next_aux.momentum = state.momentum;
          detail::ensure_buffer(next_aux.momentum, d);
          for (std::size_t i = 0; i < d; ++i) {
            next_aux.momentum[i] = m.mu * next_aux.momentum[i] + grad[i];
            w[i] -= alpha * next_aux.momentum[i];
          }
        } else if constexpr (std::is_same_v<T, HardClip>) {
          const double gn = norm(grad);
          const double scale = gn > m.gamma_c ? m.gamma_c / gn : 1.0;
          for (std::size_t i = 0; i < d; ++i) w[i] -= alpha * scale * grad[i];
        } else {
          next_aux.m1 = state.m1;
          next_aux.m2 = state.m2;
          detail::ensure_buffer(next_aux.m1, d);
          detail::ensure_buffer(next_aux.m2, d);
          const double t = static_cast<double>(state.k);
          const double bc1 = 1.0 - std::pow(m.beta1, t);
          const double bc2 = 1.0 - std::pow(m.beta2, t);
          for (std::size_t i = 0; i < d; ++i) {
            next_aux.m1[i] = m.beta1 * next_aux.m1[i] + (1.0 - m.beta1) * grad[i];
            next_aux.m2[i] = m.beta2 * next_aux.m2[i] + (1.0 - m.beta2) * grad[i] * grad[i];
            const double mhat = next_aux.m1[i] / bc1;
            const double vhat = next_aux.m2[i] / bc2;
            w[i] -= alpha * mhat / (std::sqrt(vhat) + m.eps);
          }
        }
      },
      spec.method);

  const double wn = norm(w);
  if (!all_finite(w) || !(wn <= kDivergenceNorm)) throw DivergedError(state.k, wn);

  state.w = std::move(w);
  if (!next_aux.momentum.empty()) state.momentum = std::move(next_aux.momentum);
  if (!next_aux.m1.empty()) {
    state.m1 = std::move(next_aux.m1);
    state.m2 = std::move(next_aux.m2);
  }
  ++state.k;
}

/// Pure form of `advance`: returns the successor state.
inline OptimizerState step(const OptimizerSpec& spec, const OptimizerState& state, std::span<const double> grad) {
  OptimizerState next = state;
  advance(spec, next, grad);
  return next;
}

namespace detail {

inline TracePoint measure(const Problem& problem, const StepSchedule& schedule, std::span<const double> w,
                          std::size_t k) {
  TracePoint p;
  p.k = k;
  p.alpha = schedule.alpha_at(k);
  p.f_value = problem.value(w);
  p.grad_norm_sq = norm_sq(problem.full_grad(w));
  if (const auto& ws = problem.constants().w_star) p.dist_to_opt = distance(w, *ws);
  return p;
}

}  // namespace detail

/// Run `iters` steps from w1, drawing ∇f(w_k, ξ_k) from a stream seeded by `seed`.
///
/// The trace holds w_k for k = 1, 1 + r, 1 + 2r, … ≤ iters and always the
/// final iterate w_{iters+1}. On divergence the trace stops at the last
/// finite iterate and the record is marked diverged.
inline RunRecord run(const OptimizerSpec& spec, const Problem& problem, Vector w1, std::uint64_t seed,
                     std::size_t iters, std::size_t record_every = 1) {
  if (iters == 0) throw std::invalid_argument("run: iters must be positive");
  if (record_every == 0) throw std::invalid_argument("run: record_every must be positive");
  if (w1.size() != problem.dim()) throw std::invalid_argument("run: w1 dimension does not match problem");
  spec.schedule.validate();

  RunRecord rec;
  rec.meta.method = method_label(spec.method);
  rec.meta.schedule = spec.schedule.describe();
  rec.meta.problem = problem.name();
  rec.meta.seed = seed;
  rec.meta.iters = iters;
  rec.trace.reserve(iters / record_every + 2);

  Rng rng = make_rng(seed, 1);
  OptimizerState state = OptimizerState::initial(std::move(w1));
  try {
    for (std::size_t k = 1; k <= iters; ++k) {
      if ((k - 1) % record_every == 0) rec.trace.push_back(detail::measure(problem, spec.schedule, state.w, k));
      const Vector g = problem.stoch_grad(state.w, rng);
      advance(spec, state, g);
    }
    rec.trace.push_back(detail::measure(problem, spec.schedule, state.w, iters + 1));
  } catch (const DivergedError& e) {
    rec.meta.diverged = true;
    rec.meta.divergence_step = e.k();
  }
  rec.final_w = std::move(state.w);
  return rec;
}

/// All-ones direction scaled to the requested Euclidean norm.
inline Vector scaled_ones(std::size_t d, double target_norm) {
  return Vector(d, target_norm / std::sqrt(static_cast<double>(d)));
}

}  // namespace softclip
