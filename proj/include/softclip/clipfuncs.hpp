#pragma once

// Component-wise soft-clipping functions.
//
// Each scheme is a scalar pair (g, h) related by
//     α·g(x, α) = α·x − α²·h(x, α),
// lifted to vectors component by component. Both are evaluated as
//     g(x, α) = x · φ(α|x|),      h(x, α) = x|x| · ψ(α|x|),
// with 0 < φ ≤ c_g and |ψ| ≤ c_h, so |g| ≤ c_g|x| and |h| ≤ c_h·x² hold in
// floating point and not only in exact arithmetic.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "softclip/vec.hpp"

namespace softclip {

enum class ClipKind { tamed, arctan, log, sin, identity };

inline constexpr std::array<std::string_view, 5> kClipKindNames = {"tamed", "arctan", "log", "sin", "identity"};

inline std::string_view to_string(ClipKind k) { return kClipKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<ClipKind> parse_clip_kind(std::string_view name) {
  for (std::size_t i = 0; i < kClipKindNames.size(); ++i)
    if (kClipKindNames[i] == name) return static_cast<ClipKind>(i);
  return std::nullopt;
}

namespace detail {

// Below this value of u = α|x| the ψ functions are evaluated from their Taylor
// series; above it the direct difference (u − G(u))/u² keeps ≥ 10 digits.
inline constexpr double kSeriesThreshold = 1e-2;

inline double psi_arctan(double u) {
  if (u < kSeriesThreshold) {
    const double u2 = u * u;
    return u / 3.0 * (1.0 - u2 * (3.0 / 5.0) + u2 * u2 * (3.0 / 7.0));
  }
  return (u - std::atan(u)) / (u * u);
}

inline double psi_log(double u) {
  if (u < kSeriesThreshold) {
    // (u − ln(1+u)) / u² = ½ Σ_{n≥2} (−1)^n 2u^{n−2}/n
    return 0.5 * (1.0 + u * (-2.0 / 3.0 + u * (0.5 + u * (-0.4 + u * (1.0 / 3.0 + u * (-2.0 / 7.0))))));
  }
  return (u - std::log1p(u)) / (u * u);
}

inline double psi_sin(double u) {
  if (u < kSeriesThreshold) {
    const double u2 = u * u;
    return u / 6.0 * (1.0 - u2 / 20.0 + u2 * u2 / 840.0);
  }
  return (u - std::sin(u)) / (u * u);
}

inline void check_args(double x, double alpha) {
  if (!std::isfinite(x)) throw std::invalid_argument("clip: non-finite argument");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("clip: step size must be positive and finite");
}

}  // namespace detail

/// One soft-clipping family together with the constants of its norm bounds.
///
/// Values are immutable and cheap to copy; every member function is pure.
class ClipScheme {
 public:
  static ClipScheme tamed(double gamma = 1.0 / 3.0) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("tamed: gamma must be positive");
    // Only |h| ≤ x²/γ follows from h = x|x|/(γ + α|x|); the constant 1 holds for γ ≥ 1 only.
    return ClipScheme(ClipKind::tamed, gamma, 1.0, 1.0 / gamma);
  }
  static ClipScheme arctan() { return ClipScheme(ClipKind::arctan, 1.0, 1.0, 1.0 / 3.0); }
  static ClipScheme log() { return ClipScheme(ClipKind::log, 1.0, 1.0, 0.5); }
  static ClipScheme sin() { return ClipScheme(ClipKind::sin, 1.0, 1.0, 0.5); }
  static ClipScheme identity() { return ClipScheme(ClipKind::identity, 1.0, 1.0, 0.0); }

  /// Look up a scheme by its configuration name; `gamma` only affects `tamed`.
  static ClipScheme from_name(std::string_view name, double gamma = 1.0 / 3.0) {
    const auto kind = parse_clip_kind(name);
    if (!kind) throw std::invalid_argument("unknown clip scheme '" + std::string(name) + "'");
    switch (*kind) {
      case ClipKind::tamed: return tamed(gamma);
      case ClipKind::arctan: return arctan();
      case ClipKind::log: return log();
      case ClipKind::sin: return sin();
      case ClipKind::identity: return identity();
    }
    return identity();
  }

  ClipKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }
  double gamma() const noexcept { return gamma_; }
  double c_g() const noexcept { return c_g_; }
  double c_h() const noexcept { return c_h_; }

  /// Multiplier φ(u) with g(x, α) = x·φ(α|x|).
  double phi(double u) const {
    switch (kind_) {
      case ClipKind::tamed: return 1.0 / (1.0 + u * c_h_);
      case ClipKind::arctan: return u == 0.0 ? 1.0 : std::atan(u) / u;
      case ClipKind::log: return u == 0.0 ? 1.0 : std::log1p(u) / u;
      case ClipKind::sin: return u == 0.0 ? 1.0 : std::sin(u) / u;
      case ClipKind::identity: return 1.0;
    }
    return 1.0;
  }

  /// Multiplier ψ(u) with h(x, α) = x|x|·ψ(α|x|).
  double psi(double u) const {
    switch (kind_) {
      case ClipKind::tamed: return c_h_ / (1.0 + u * c_h_);
      case ClipKind::arctan: return detail::psi_arctan(u);
      case ClipKind::log: return detail::psi_log(u);
      case ClipKind::sin: return detail::psi_sin(u);
      case ClipKind::identity: return 0.0;
    }
    return 0.0;
  }

  double g(double x, double alpha) const {
    detail::check_args(x, alpha);
    if (x == 0.0) return 0.0;
    return x * phi(alpha * std::abs(x));
  }

  double h(double x, double alpha) const {
    detail::check_args(x, alpha);
    if (x == 0.0) return 0.0;
    return x * std::abs(x) * psi(alpha * std::abs(x));
  }

  friend bool operator==(const ClipScheme&, const ClipScheme&) = default;

 private:
  ClipScheme(ClipKind kind, double gamma, double c_g, double c_h) : kind_(kind), gamma_(gamma), c_g_(c_g), c_h_(c_h) {}

  ClipKind kind_;
  double gamma_;
  double c_g_;
  double c_h_;
};

/// The five built-in schemes; tamed uses the experiment value γ = 1/3.
inline std::vector<ClipScheme> catalogue() {
  return {ClipScheme::tamed(), ClipScheme::arctan(), ClipScheme::log(), ClipScheme::sin(), ClipScheme::identity()};
}

namespace detail {

template <typename F>
Vector apply_componentwise(std::span<const double> grad, double alpha, F&& f) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("clip: step size must be positive and finite");
  Vector out(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i]))
      throw std::invalid_argument("clip: non-finite gradient component at index " + std::to_string(i));
    out[i] = f(grad[i]);
  }
  return out;
}

}  // namespace detail

/// G(x, α): g applied to every component.
inline Vector apply_G(const ClipScheme& scheme, std::span<const double> grad, double alpha) {
  return detail::apply_componentwise(grad, alpha, [&](double x) { return scheme.g(x, alpha); });
}

/// H(x, α): h applied to every component.
inline Vector apply_H(const ClipScheme& scheme, std::span<const double> grad, double alpha) {
  return detail::apply_componentwise(grad, alpha, [&](double x) { return scheme.h(x, alpha); });
}

}  // namespace softclip
