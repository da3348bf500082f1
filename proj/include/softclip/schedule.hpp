#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "softclip/errors.hpp"

namespace softclip {

enum class ScheduleKind { inverse_linear, constant, horizon_sqrt, horizon_inverse, training_decay };

inline constexpr std::array<std::string_view, 5> kScheduleKindNames = {"inverse_linear", "constant", "horizon_sqrt",
                                                                       "horizon_inverse", "training_decay"};

inline std::string_view to_string(ScheduleKind k) { return kScheduleKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<ScheduleKind> parse_schedule_kind(std::string_view name) {
  for (std::size_t i = 0; i < kScheduleKindNames.size(); ++i)
    if (kScheduleKindNames[i] == name) return static_cast<ScheduleKind>(i);
  return std::nullopt;
}

/// Rule k ↦ α_k, k ≥ 1.
///
///   inverse_linear   β/(k + γ)
///   constant         β
///   horizon_sqrt     1/√K
///   horizon_inverse  1/K
///   training_decay   β/(1 + 10⁻⁴k)
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  double beta = 1.0;
  double gamma = 0.0;
  std::optional<std::size_t> horizon;

  static StepSchedule inverse_linear(double beta, double gamma) {
    return {ScheduleKind::inverse_linear, beta, gamma, std::nullopt};
  }
  static StepSchedule constant(double alpha) { return {ScheduleKind::constant, alpha, 0.0, std::nullopt}; }
  static StepSchedule horizon_sqrt(std::size_t K) { return {ScheduleKind::horizon_sqrt, 1.0, 0.0, K}; }
  static StepSchedule horizon_inverse(std::size_t K) { return {ScheduleKind::horizon_inverse, 1.0, 0.0, K}; }
  static StepSchedule training_decay(double beta) { return {ScheduleKind::training_decay, beta, 0.0, std::nullopt}; }

  /// Throws ConfigError for parameter combinations that would make α_k ≤ 0 or undefined.
  void validate() const {
    const bool uses_beta = kind != ScheduleKind::horizon_sqrt && kind != ScheduleKind::horizon_inverse;
    if (uses_beta && !(beta > 0.0 && std::isfinite(beta))) throw ConfigError("schedule: beta must be positive");
    if (kind == ScheduleKind::inverse_linear && !(gamma >= 0.0 && std::isfinite(gamma)))
      throw ConfigError("schedule: gamma must be nonnegative");
    if ((kind == ScheduleKind::horizon_sqrt || kind == ScheduleKind::horizon_inverse) && (!horizon || *horizon == 0))
      throw ConfigError("schedule: " + std::string(to_string(kind)) + " requires a positive horizon");
  }

  double alpha_at(std::size_t k) const {
    if (k == 0) throw std::invalid_argument("schedule: k starts at 1");
    switch (kind) {
      case ScheduleKind::inverse_linear: return beta / (static_cast<double>(k) + gamma);
      case ScheduleKind::constant: return beta;
      case ScheduleKind::horizon_sqrt:
        if (!horizon || *horizon == 0) throw ConfigError("schedule: horizon_sqrt requires a horizon");
        return 1.0 / std::sqrt(static_cast<double>(*horizon));
      case ScheduleKind::horizon_inverse:
        if (!horizon || *horizon == 0) throw ConfigError("schedule: horizon_inverse requires a horizon");
        return 1.0 / static_cast<double>(*horizon);
      case ScheduleKind::training_decay: return beta / (1.0 + 1e-4 * static_cast<double>(k));
    }
    return beta;
  }

  std::string describe() const {
    std::string s(to_string(kind));
    s += "(beta=" + std::to_string(beta) + ",gamma=" + std::to_string(gamma);
    if (horizon) s += ",K=" + std::to_string(*horizon);
    return s + ")";
  }
};

/// Σ_{k=1..K} α_k and Σ α_k², accumulated in extended precision.
struct ScheduleSums {
  double sum = 0.0;
  double sum_sq = 0.0;
};

inline ScheduleSums partial_sums(const StepSchedule& s, std::size_t K) {
  long double a = 0.0L, a2 = 0.0L;
  for (std::size_t k = 1; k <= K; ++k) {
    const long double ak = s.alpha_at(k);
    a += ak;
    a2 += ak * ak;
  }
  return {static_cast<double>(a), static_cast<double>(a2)};
}

}  // namespace softclip
