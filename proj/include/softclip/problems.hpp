#pragma once

// Stochastic test objectives with seeded gradient samplers.
//
// A Problem is immutable after construction. Every stochastic draw takes a
// caller-owned Rng, so concurrent runs never share mutable state.

#include <Eigen/Dense>

#include <algorithm>
#include <iterator>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "softclip/errors.hpp"
#include "softclip/vec.hpp"

namespace softclip {

enum class Provenance { exact, estimated };

inline std::string_view to_string(Provenance p) { return p == Provenance::exact ? "exact" : "estimated"; }

/// Constants known for a problem. Any subset may be absent.
struct ProblemConstants {
  std::optional<double> L;       // Lipschitz constant of ∇F and bound on E[L_ξ²]^{1/2}
  std::optional<double> sigma2;  // E‖∇f(w*, ξ)‖²
  std::optional<double> c;       // strong convexity
  std::optional<Vector> w_star;
  std::optional<double> F_star;
  std::optional<double> M;  // bound on E‖w_k − w*‖³; trajectory dependent, rarely analytic
  Provenance sigma2_provenance = Provenance::exact;
  double sigma2_stderr = 0.0;
  Provenance M_provenance = Provenance::exact;
};

class Problem {
 public:
  virtual ~Problem() = default;

  const std::string& name() const noexcept { return name_; }
  std::size_t dim() const noexcept { return dim_; }
  const ProblemConstants& constants() const noexcept { return constants_; }
  /// ∇f(w*, ξ) = 0 for every ξ.
  bool interpolating() const noexcept { return interpolating_; }

  virtual double value(std::span<const double> w) const = 0;
  virtual Vector full_grad(std::span<const double> w) const = 0;
  virtual Vector stoch_grad(std::span<const double> w, Rng& rng) const = 0;

  /// Number of summands for finite-sum objectives, 0 otherwise.
  virtual std::size_t num_samples() const { return 0; }
  /// Gradient of the i-th summand; the average over i equals full_grad.
  virtual Vector sample_grad(std::span<const double>, std::size_t) const {
    throw std::logic_error(name_ + " is not a finite sum");
  }

 protected:
  Problem(std::string name, std::size_t dim) : name_(std::move(name)), dim_(dim) {}

  void check_dim(std::span<const double> w) const {
    if (w.size() != dim_)
      throw std::invalid_argument(name_ + ": expected dimension " + std::to_string(dim_) + ", got " +
                                  std::to_string(w.size()));
  }

  std::string name_;
  std::size_t dim_;
  ProblemConstants constants_;
  bool interpolating_ = false;
};

using ProblemPtr = std::shared_ptr<const Problem>;

// ---------------------------------------------------------------------------

/// F(w) = w⁴/4 on ℝ. Deterministic; ∇F is not globally Lipschitz.
class Quartic final : public Problem {
 public:
  Quartic() : Problem("quartic", 1) {
    constants_.w_star = Vector{0.0};
    constants_.F_star = 0.0;
    constants_.sigma2 = 0.0;
    interpolating_ = true;
  }
  double value(std::span<const double> w) const override {
    check_dim(w);
    const double w2 = w[0] * w[0];
    return 0.25 * w2 * w2;
  }
  Vector full_grad(std::span<const double> w) const override {
    check_dim(w);
    return {w[0] * w[0] * w[0]};
  }
  Vector stoch_grad(std::span<const double> w, Rng&) const override { return full_grad(w); }
};

/// F(w) = ½ Σ λ_j (w_j − s_j)² + F*, with ∇f(w, ξ) = ∇F(w) + noise·z, z ~ N(0, I).
class DiagQuadratic final : public Problem {
 public:
  DiagQuadratic(std::string name, Vector eigenvalues, Vector shift, double noise)
      : Problem(std::move(name), eigenvalues.size()), lambda_(std::move(eigenvalues)), shift_(std::move(shift)),
        noise_(noise) {
    if (lambda_.empty()) throw std::invalid_argument(name_ + ": dimension must be positive");
    if (!(noise >= 0.0)) throw std::invalid_argument(name_ + ": noise must be nonnegative");
    const auto [lo, hi] = std::ranges::minmax(lambda_);
    if (!(lo > 0.0)) throw std::invalid_argument(name_ + ": eigenvalues must be positive");
    constants_.L = hi;
    constants_.c = lo;
    constants_.w_star = shift_;
    constants_.F_star = 0.0;
    constants_.sigma2 = noise * noise * static_cast<double>(dim_);
    interpolating_ = noise == 0.0;
  }

  const Vector& eigenvalues() const noexcept { return lambda_; }
  double noise() const noexcept { return noise_; }

  double value(std::span<const double> w) const override {
    check_dim(w);
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double e = w[j] - shift_[j];
      s += lambda_[j] * e * e;
    }
    return 0.5 * s;
  }
  Vector full_grad(std::span<const double> w) const override {
    check_dim(w);
    Vector g(dim_);
    for (std::size_t j = 0; j < dim_; ++j) g[j] = lambda_[j] * (w[j] - shift_[j]);
    return g;
  }
  Vector stoch_grad(std::span<const double> w, Rng& rng) const override {
    Vector g = full_grad(w);
    if (noise_ > 0.0) {
      std::normal_distribution<double> z;
      for (double& gj : g) gj += noise_ * z(rng);
    }
    return g;
  }

 private:
  Vector lambda_;
  Vector shift_;
  double noise_;
};

/// F(w) = Σ_j w_j² + a_j(1 − cos w_j).
///
/// F'' = 2 + a cos w takes values in [2 − a, 2 + a]; for a > 2 the Hessian is
/// indefinite near w_j = π while w* = 0 stays the unique stationary point.
class NonconvexSmooth final : public Problem {
 public:
  NonconvexSmooth(std::size_t d, double noise, double a)
      : Problem("nonconvex", d), a_(a), noise_(noise) {
    if (d == 0) throw std::invalid_argument("nonconvex: dimension must be positive");
    if (!(a > 0.0)) throw std::invalid_argument("nonconvex: a must be positive");
    if (!(noise >= 0.0)) throw std::invalid_argument("nonconvex: noise must be nonnegative");
    constants_.L = 2.0 + a;
    constants_.w_star = Vector(d, 0.0);
    constants_.F_star = 0.0;
    constants_.sigma2 = noise * noise * static_cast<double>(d);
    interpolating_ = noise == 0.0;
    verify_global_minimum();
  }

  double a() const noexcept { return a_; }
  double noise() const noexcept { return noise_; }
  double curvature(double x) const { return 2.0 + a_ * std::cos(x); }

  double value(std::span<const double> w) const override {
    check_dim(w);
    double s = 0.0;
    for (double x : w) s += scalar_value(x);
    return s;
  }
  Vector full_grad(std::span<const double> w) const override {
    check_dim(w);
    Vector g(dim_);
    for (std::size_t j = 0; j < dim_; ++j) g[j] = 2.0 * w[j] + a_ * std::sin(w[j]);
    return g;
  }
  Vector stoch_grad(std::span<const double> w, Rng& rng) const override {
    Vector g = full_grad(w);
    if (noise_ > 0.0) {
      std::normal_distribution<double> z;
      for (double& gj : g) gj += noise_ * z(rng);
    }
    return g;
  }

 private:
  double scalar_value(double x) const { return x * x + a_ * (1.0 - std::cos(x)); }

  void verify_global_minimum() const {
    for (int i = -4000; i <= 4000; ++i) {
      const double x = i * 5e-3;
      if (i != 0 && !(scalar_value(x) > 0.0))
        throw std::logic_error("nonconvex: origin is not the strict global minimizer");
    }
  }

  double a_;
  double noise_;
};

/// Finite-sum quadratic built from N sampled data vectors (d components each):
///   F(w) = ½ wᵀAw + bᵀw + 13,  A = diag(λ),
///   λ_j = 2/(Nd) Σ_i (x^i_j)²,  b_j = 26/(Nd) Σ_i x^i_j,
/// with x^i_j ~ N(1 + 10i/d, 1), i = 1..N. Stochastic gradients average a
/// uniformly drawn batch (without replacement) of per-sample gradients.
class AppendixEQuadratic final : public Problem {
 public:
  struct Options {
    std::size_t n = 1000;
    std::size_t d = 50;
    std::size_t batch = 32;
    std::size_t sigma2_batches = 100000;
  };

  AppendixEQuadratic(std::uint64_t seed, Options opt)
      : Problem("appendix_e", opt.d), n_(opt.n), batch_(opt.batch), x_(opt.n * opt.d), all_indices_(opt.n) {
    std::iota(all_indices_.begin(), all_indices_.end(), std::size_t{0});
    if (opt.n == 0 || opt.d == 0) throw std::invalid_argument("appendix_e: empty data");
    if (opt.batch == 0 || opt.batch > opt.n) throw std::invalid_argument("appendix_e: batch must be in [1, n]");
    Rng rng = make_rng(seed, 0xE);
    for (std::size_t i = 0; i < n_; ++i) {
      const double mean = 1.0 + 10.0 * static_cast<double>(i + 1) / static_cast<double>(dim_);
      std::normal_distribution<double> dist(mean, 1.0);
      for (std::size_t j = 0; j < dim_; ++j) x_[i * dim_ + j] = dist(rng);
    }
    lambda_.assign(dim_, 0.0);
    b_.assign(dim_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) {
        lambda_[j] += sample_curvature(i, j);
        b_[j] += sample_shift(i, j);
      }
    for (std::size_t j = 0; j < dim_; ++j) {
      lambda_[j] /= static_cast<double>(n_);
      b_[j] /= static_cast<double>(n_);
    }
    Vector w_star(dim_);
    for (std::size_t j = 0; j < dim_; ++j) w_star[j] = -b_[j] / lambda_[j];
    const auto [lo, hi] = std::ranges::minmax(lambda_);
    constants_.L = hi;
    constants_.c = lo;
    constants_.F_star = value(w_star);
    constants_.w_star = std::move(w_star);
    interpolating_ = false;
    if (opt.sigma2_batches > 0) estimate_sigma2(seed, opt.sigma2_batches);
  }

  const Vector& eigenvalues() const noexcept { return lambda_; }
  const Vector& linear_term() const noexcept { return b_; }
  std::size_t batch_size() const noexcept { return batch_; }

  double value(std::span<const double> w) const override {
    check_dim(w);
    double s = 13.0;
    for (std::size_t j = 0; j < dim_; ++j) s += 0.5 * lambda_[j] * w[j] * w[j] + b_[j] * w[j];
    return s;
  }
  Vector full_grad(std::span<const double> w) const override {
    check_dim(w);
    Vector g(dim_);
    for (std::size_t j = 0; j < dim_; ++j) g[j] = lambda_[j] * w[j] + b_[j];
    return g;
  }
  Vector stoch_grad(std::span<const double> w, Rng& rng) const override {
    check_dim(w);
    std::vector<std::size_t> idx;
    idx.reserve(batch_);
    std::sample(all_indices_.begin(), all_indices_.end(), std::back_inserter(idx), batch_, rng);
    return batch_grad(w, idx);
  }

  std::size_t num_samples() const override { return n_; }
  Vector sample_grad(std::span<const double> w, std::size_t i) const override {
    check_dim(w);
    Vector g(dim_);
    for (std::size_t j = 0; j < dim_; ++j) g[j] = sample_curvature(i, j) * w[j] + sample_shift(i, j);
    return g;
  }

  Vector batch_grad(std::span<const double> w, std::span<const std::size_t> batch) const {
    Vector g(dim_, 0.0);
    for (std::size_t i : batch)
      for (std::size_t j = 0; j < dim_; ++j) g[j] += sample_curvature(i, j) * w[j] + sample_shift(i, j);
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& gj : g) gj *= inv;
    return g;
  }

 private:
  double sample_curvature(std::size_t i, std::size_t j) const {
    const double x = x_[i * dim_ + j];
    return 2.0 * x * x / static_cast<double>(dim_);
  }
  double sample_shift(std::size_t i, std::size_t j) const {
    return 2.0 * 13.0 * x_[i * dim_ + j] / static_cast<double>(dim_);
  }

  // Plug-in estimate of E‖∇f(w*, ξ)‖² over seeded batches.
  void estimate_sigma2(std::uint64_t seed, std::size_t batches) {
    Rng rng = make_rng(seed, 0x5162);
    const Vector& ws = *constants_.w_star;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t t = 0; t < batches; ++t) {
      const double v = norm_sq(stoch_grad(ws, rng));
      const double delta = v - mean;
      mean += delta / static_cast<double>(t + 1);
      m2 += delta * (v - mean);
    }
    constants_.sigma2 = mean;
    constants_.sigma2_provenance = Provenance::estimated;
    constants_.sigma2_stderr =
        batches > 1 ? std::sqrt(m2 / static_cast<double>(batches - 1) / static_cast<double>(batches)) : 0.0;
  }

  std::size_t n_;
  std::size_t batch_;
  std::vector<double> x_;  // row-major N × d
  std::vector<std::size_t> all_indices_;
  Vector lambda_;
  Vector b_;
};

/// Binary logistic regression with a 10⁻⁴‖w‖² ridge and single-sample gradients.
class LogisticRegression final : public Problem {
 public:
  static constexpr double kRidge = 1e-4;

  LogisticRegression(std::size_t n, std::size_t d, bool separable, std::uint64_t seed)
      : Problem("logreg", d), n_(n), x_(n * d), y_(n) {
    if (n == 0 || d == 0) throw std::invalid_argument("logreg: empty data");
    Rng rng = make_rng(seed, 0x106);
    std::normal_distribution<double> z;
    Vector direction(d);
    for (double& u : direction) u = z(rng);
    const double dn = norm(direction);
    for (double& u : direction) u /= dn;
    std::bernoulli_distribution flip(0.2);
    double max_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double* xi = &x_[i * d];
      for (std::size_t j = 0; j < d; ++j) xi[j] = z(rng);
      const double s = dot(std::span<const double>(xi, d), direction);
      double y = s >= 0.0 ? 1.0 : -1.0;
      if (separable) {
        // Push each point away from the separating hyperplane by kMargin.
        for (std::size_t j = 0; j < d; ++j) xi[j] += y * kMargin * direction[j];
      } else if (flip(rng)) {
        y = -y;
      }
      y_[i] = y;
      max_sq = std::max(max_sq, norm_sq(std::span<const double>(xi, d)));
    }
    constants_.L = max_sq / 4.0 + 2.0 * kRidge;
    constants_.c = 2.0 * kRidge;
    interpolating_ = false;
    solve_minimizer();
  }

  double value(std::span<const double> w) const override {
    check_dim(w);
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += softplus(-margin(w, i));
    return s / static_cast<double>(n_) + kRidge * norm_sq(w);
  }
  Vector full_grad(std::span<const double> w) const override {
    check_dim(w);
    Vector g(dim_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) accumulate_loss_grad(w, i, 1.0 / static_cast<double>(n_), g);
    for (std::size_t j = 0; j < dim_; ++j) g[j] += 2.0 * kRidge * w[j];
    return g;
  }
  Vector stoch_grad(std::span<const double> w, Rng& rng) const override {
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
    return sample_grad(w, pick(rng));
  }
  std::size_t num_samples() const override { return n_; }
  Vector sample_grad(std::span<const double> w, std::size_t i) const override {
    check_dim(w);
    Vector g(dim_, 0.0);
    accumulate_loss_grad(w, i, 1.0, g);
    for (std::size_t j = 0; j < dim_; ++j) g[j] += 2.0 * kRidge * w[j];
    return g;
  }

 private:
  static constexpr double kMargin = 2.0;

  static double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }
  static double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  }

  double margin(std::span<const double> w, std::size_t i) const {
    return y_[i] * dot(std::span<const double>(&x_[i * dim_], dim_), w);
  }

  void accumulate_loss_grad(std::span<const double> w, std::size_t i, double scale, Vector& g) const {
    const double coeff = -y_[i] * sigmoid(-margin(w, i)) * scale;
    for (std::size_t j = 0; j < dim_; ++j) g[j] += coeff * x_[i * dim_ + j];
  }

  // Damped Newton iteration on the full objective until ‖∇F‖ ≤ 1e-10.
  void solve_minimizer() {
    Vector w(dim_, 0.0);
    const std::size_t d = dim_;
    for (int it = 0; it < 200; ++it) {
      const Vector g = full_grad(w);
      if (norm(g) <= 1e-10) break;
      Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d) * (2.0 * kRidge);
      for (std::size_t i = 0; i < n_; ++i) {
        const double s = sigmoid(margin(w, i));
        const double weight = s * (1.0 - s) / static_cast<double>(n_);
        Eigen::Map<const Eigen::VectorXd> xi(&x_[i * d], static_cast<Eigen::Index>(d));
        H.noalias() += weight * xi * xi.transpose();
      }
      Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(d));
      const Eigen::VectorXd step = H.llt().solve(gv);
      const double f0 = value(w);
      double t = 1.0;
      Vector trial(d);
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        for (std::size_t j = 0; j < d; ++j) trial[j] = w[j] - t * step(static_cast<Eigen::Index>(j));
        if (value(trial) <= f0 - 1e-4 * t * gv.dot(step)) break;
      }
      w = trial;
    }
    constants_.F_star = value(w);
    constants_.w_star = std::move(w);
  }

  std::size_t n_;
  std::vector<double> x_;  // row-major n × d
  Vector y_;
};

// ---------------------------------------------------------------------------
// Factories

inline ProblemPtr make_quartic() { return std::make_shared<Quartic>(); }

inline ProblemPtr make_appendix_e(std::uint64_t seed, AppendixEQuadratic::Options opt = {}) {
  return std::make_shared<AppendixEQuadratic>(seed, opt);
}

/// Diagonal quadratic with log-uniformly spaced eigenvalues in [lambda_min, lambda_max], w* = 0.
/// The seed permutes which coordinate receives which eigenvalue.
inline ProblemPtr make_stiff_diag(double lambda_min, double lambda_max, std::size_t d, double noise,
                                  std::uint64_t seed) {
  if (!(lambda_min > 0.0) || !(lambda_min <= lambda_max)) throw std::invalid_argument("stiff_diag: need 0 < lambda_min <= lambda_max");
  if (d == 0) throw std::invalid_argument("stiff_diag: dimension must be positive");
  Vector lambda(d);
  const double log_ratio = std::log(lambda_max / lambda_min);
  for (std::size_t j = 0; j < d; ++j)
    lambda[j] = d == 1 ? lambda_min : lambda_min * std::exp(log_ratio * static_cast<double>(j) / static_cast<double>(d - 1));
  lambda.front() = lambda_min;
  if (d > 1) lambda.back() = lambda_max;
  Rng rng = make_rng(seed, 0x57);
  std::ranges::shuffle(lambda, rng);
  return std::make_shared<DiagQuadratic>("stiff_diag", std::move(lambda), Vector(d, 0.0), noise);
}

/// Diagonal quadratic with linearly spaced eigenvalues in [c, L] and minimizer w* = (1, …, 1).
inline ProblemPtr make_sc_quadratic(double c, double L, std::size_t d, double noise, std::uint64_t seed) {
  if (!(c > 0.0) || !(c <= L)) throw std::invalid_argument("sc_quadratic: need 0 < c <= L");
  if (d == 0) throw std::invalid_argument("sc_quadratic: dimension must be positive");
  Vector lambda(d);
  for (std::size_t j = 0; j < d; ++j)
    lambda[j] = d == 1 ? c : c + (L - c) * static_cast<double>(j) / static_cast<double>(d - 1);
  lambda.front() = c;
  if (d > 1) lambda.back() = L;
  Rng rng = make_rng(seed, 0x5c);
  std::ranges::shuffle(lambda, rng);
  return std::make_shared<DiagQuadratic>("sc_quadratic", std::move(lambda), Vector(d, 1.0), noise);
}

inline ProblemPtr make_nonconvex(std::size_t d, double noise, double a = 2.5) {
  return std::make_shared<NonconvexSmooth>(d, noise, a);
}

inline ProblemPtr make_logreg(std::size_t n, std::size_t d, bool separable, std::uint64_t seed) {
  return std::make_shared<LogisticRegression>(n, d, separable, seed);
}

/// The same objective with a user-supplied moment bound M.
class WithMomentBound final : public Problem {
 public:
  WithMomentBound(ProblemPtr inner, double M) : Problem(inner->name(), inner->dim()), inner_(std::move(inner)) {
    constants_ = inner_->constants();
    constants_.M = M;
    constants_.M_provenance = Provenance::exact;
    interpolating_ = inner_->interpolating();
  }
  double value(std::span<const double> w) const override { return inner_->value(w); }
  Vector full_grad(std::span<const double> w) const override { return inner_->full_grad(w); }
  Vector stoch_grad(std::span<const double> w, Rng& rng) const override { return inner_->stoch_grad(w, rng); }
  std::size_t num_samples() const override { return inner_->num_samples(); }
  Vector sample_grad(std::span<const double> w, std::size_t i) const override { return inner_->sample_grad(w, i); }

 private:
  ProblemPtr inner_;
};

inline ProblemPtr with_moment_bound(ProblemPtr p, double M) { return std::make_shared<WithMomentBound>(std::move(p), M); }

}  // namespace softclip
