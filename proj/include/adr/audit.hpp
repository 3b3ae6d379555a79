#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adr::audit {

struct Options {
  int samples = 100;
  std::uint64_t seed = 7;
  double rtol = 1e-5;
  double atol = 1e-8;
  // Test hook: added to the first analytic component of every check, so a
  // non-zero value must make the audit fail.
  double perturb = 0.0;
};

struct LossAudit {
  std::string name;
  int c = 0;
  int tau = 0;  // 0 when not applicable
  int points = 0;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  bool pass = true;
};

/// Discrepancy between the exact backward and the factored closed form,
/// over the selected components, per (c, tau) cell.
struct FactoredStats {
  int c = 0;
  int tau = 0;
  double min_rel = 0.0;
  double mean_rel = 0.0;
  double median_rel = 0.0;
  double max_rel = 0.0;
};

struct TauBench {
  int tau_small = 16;
  int tau_big = 64;
  double small_seconds = 0.0;
  double big_seconds = 0.0;
  double ratio = 0.0;
};

/// Gradient-regime summary along the confidence axis (c=10, tau=3).
struct RegimeProbe {
  double grad_norm_uniform = 0.0;
  double grad_norm_conf999 = 0.0;  // max probability 0.999
  double ratio = 0.0;
};

struct Report {
  std::vector<LossAudit> audits;
  std::vector<FactoredStats> factored;
  TauBench bench;
  RegimeProbe regime;
  bool all_pass = true;
  double seconds = 0.0;

  std::string text() const;
};

/// Runs the full analytic-vs-finite-difference audit: CE, soft-target CE,
/// the entropy regularizer, the exponential regularizer (both uncertainty
/// kinds), the combined loss, and full MLP parameter gradients.
Report run(const Options& opt);

}  // namespace adr::audit
