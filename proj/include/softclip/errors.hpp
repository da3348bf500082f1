#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace softclip {

/// Raised when a run or configuration references something invalid before any work starts.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A bound or check needs an analytic constant that the problem does not carry.
class MissingConstantError : public ConfigError {
 public:
  explicit MissingConstantError(std::string symbol)
      : ConfigError("missing constant: " + symbol), symbol_(std::move(symbol)) {}
  const std::string& symbol() const noexcept { return symbol_; }

 private:
  std::string symbol_;
};

/// Step-size parameters fall outside the admissible interval of a rate bound.
class HypothesisError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Log-space fitting was asked to take the log of a non-positive value.
class FitDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The iteration produced a non-finite gradient or iterate, or left the 1e12 ball.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(std::size_t k, double norm)
      : std::runtime_error("diverged at k=" + std::to_string(k) + " (norm " + std::to_string(norm) + ")"),
        k_(k),
        norm_(norm) {}
  std::size_t k() const noexcept { return k_; }
  double norm() const noexcept { return norm_; }

 private:
  std::size_t k_;
  double norm_;
};

}  // namespace softclip
