#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softclip/vec.hpp"

namespace softclip {

/// Metrics of one recorded iterate w_k.
struct TracePoint {
  std::size_t k = 0;
  double alpha = 0.0;
  double f_value = 0.0;
  double grad_norm_sq = 0.0;  // ‖∇F(w_k)‖², full gradient
  std::optional<double> dist_to_opt;  // ‖w_k − w*‖ when w* is known
};

struct RunMeta {
  std::string method;
  std::string schedule;
  std::string problem;
  std::uint64_t seed = 0;
  std::size_t iters = 0;
  bool diverged = false;
  std::optional<std::size_t> divergence_step;
};

/// One seeded trajectory. Only scalar metrics are kept per step; the full
/// parameter vector is kept for the last iterate reached.
struct RunRecord {
  RunMeta meta;
  std::vector<TracePoint> trace;
  Vector final_w;
};

}  // namespace softclip
