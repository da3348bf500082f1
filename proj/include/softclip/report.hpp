#pragma once

// Text forms of the diagnostics reports: `key=value` lines and CSV tables.

#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "softclip/diagnostics.hpp"
#include "softclip/format.hpp"

namespace softclip {

class KvWriter {
 public:
  KvWriter& put(const std::string& key, double v) { return raw(key, fmt_double(v)); }
  KvWriter& put(const std::string& key, std::size_t v) { return raw(key, std::to_string(v)); }
  KvWriter& put(const std::string& key, bool v) { return raw(key, v ? "true" : "false"); }
  KvWriter& put(const std::string& key, const std::string& v) { return raw(key, v); }
  KvWriter& put(const std::string& key, const char* v) { return raw(key, v); }
  KvWriter& put(const std::string& key, const std::optional<double>& v) {
    return raw(key, v ? fmt_double(*v) : std::string("none"));
  }
  std::string str() const { return out_.str(); }

 private:
  KvWriter& raw(const std::string& key, const std::string& v) {
    out_ << key << '=' << v << '\n';
    return *this;
  }
  std::ostringstream out_;
};

inline std::string to_kv(const BoundConstants& b) {
  KvWriter w;
  w.put("L", b.L).put("M", b.M).put("M_provenance", std::string(to_string(b.M_provenance)));
  w.put("sigma2", b.sigma2).put("c_g", b.c_g).put("c_h", b.c_h).put("B1", b.B1).put("B2", b.B2);
  return w.str();
}

inline std::string to_kv(const DescentReport& r) {
  KvWriter w;
  w.put("lhs_mean", r.lhs_mean).put("lhs_stderr", r.lhs_stderr).put("rhs", r.rhs).put("margin", r.margin());
  w.put("B", r.B).put("B_kind", r.interpolation ? "B2" : "B1").put("M", r.M).put("n_samples", r.n_samples);
  w.put("passed", r.passed());
  return w.str();
}

inline std::string to_kv(const RateFit& f) {
  KvWriter w;
  w.put("model", f.model == RateModel::power ? "power" : "log").put("C", f.C).put("p", f.p);
  w.put("residual", f.residual).put("k_min", f.k_min).put("k_max", f.k_max).put("n_points", f.n_points);
  return w.str();
}

inline std::string to_kv(const AsConvergenceReport& r) {
  KvWriter w;
  w.put("epsilon", r.epsilon).put("n_seeds", r.final_zeta.size()).put("structural_ok", r.structural_ok());
  w.put("fraction_below", r.fraction_below());
  for (std::size_t i = 0; i < r.final_zeta.size(); ++i) w.put("zeta_final." + std::to_string(i), r.final_zeta[i]);
  return w.str();
}

inline std::string to_kv(const AppendixAReport& r) {
  KvWriter w;
  w.put("K", r.K).put("empirical_sum", r.empirical_sum).put("F_gap", r.F_gap).put("sum_alpha_sq", r.sum_alpha_sq);
  w.put("L", r.L).put("A", r.A).put("A_from_trajectory", r.A_from_trajectory).put("M", r.M);
  w.put("step_restriction.bound", r.step_restriction_bound).put("step_restriction.holds", r.step_restriction_holds);
  w.put("step_restriction.tightness", AppendixAReport::tightness(r.empirical_sum, r.step_restriction_bound));
  w.put("uniform.bound", r.uniform_bound).put("uniform.holds", r.uniform_holds);
  w.put("uniform.tightness", AppendixAReport::tightness(r.empirical_sum, r.uniform_bound));
  w.put("moment.bound", r.moment_bound).put("moment.holds", r.moment_holds);
  w.put("moment.tightness", AppendixAReport::tightness(r.empirical_sum, r.moment_bound));
  w.put("tightest", r.tightest());
  return w.str();
}

/// k,alpha,f_value,grad_norm_sq,dist_to_opt; dist_to_opt is empty when w* is unknown.
inline void write_trace_csv(std::ostream& os, const RunRecord& r) {
  os << "k,alpha,f_value,grad_norm_sq,dist_to_opt\n";
  for (const auto& p : r.trace) {
    os << p.k << ',' << fmt_double(p.alpha) << ',' << fmt_double(p.f_value) << ',' << fmt_double(p.grad_norm_sq) << ',';
    if (p.dist_to_opt) os << fmt_double(*p.dist_to_opt);
    os << '\n';
  }
}

/// k,mean,stderr,n
inline void write_ensemble_csv(std::ostream& os, std::span<const EnsemblePoint> pts) {
  os << "k,mean,stderr,n\n";
  for (const auto& p : pts) os << p.k << ',' << fmt_double(p.mean) << ',' << fmt_double(p.stderr_) << ',' << p.n << '\n';
}

/// k,m1,m2,m3
inline void write_moment_csv(std::ostream& os, const MomentReport& r) {
  os << "k,m1,m2,m3\n";
  for (const auto& p : r.curve)
    os << p.k << ',' << fmt_double(p.m1) << ',' << fmt_double(p.m2) << ',' << fmt_double(p.m3) << '\n';
}

}  // namespace softclip
