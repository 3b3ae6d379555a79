#include "adr/gradcheck.hpp"

#include <cmath>
#include <limits>

namespace adr::gradcheck {

namespace {
double eval_or_nan(const ScalarFn& f, std::span<const double> x) {
  try {
    return f(x);
  } catch (...) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}
}  // namespace

std::vector<double> central_difference(const ScalarFn& f, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("central_difference: h must be positive");
  const int n = static_cast<int>(x.size());
  std::vector<double> grad(n);
  std::vector<double> base(x.begin(), x.end());
  // Coordinates are independent; the probed functions are pure. Exceptions
  // must not cross the parallel region, so failures surface as NaN first.
#pragma omp parallel for schedule(static) firstprivate(base)
  for (int i = 0; i < n; ++i) {
    const double saved = base[i];
    base[i] = saved + h;
    const double fp = eval_or_nan(f, base);
    base[i] = saved - h;
    const double fm = eval_or_nan(f, base);
    base[i] = saved;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(grad[i]))
      throw OracleError("central_difference: non-finite evaluation at coordinate " +
                            std::to_string(i),
                        i);
  return grad;
}

GradReport compare(std::span<const double> analytic, std::span<const double> numeric, double rtol,
                   double atol) {
  if (analytic.size() != numeric.size())
    throw std::invalid_argument("compare: length mismatch");
  GradReport rep;
  rep.analytic.assign(analytic.begin(), analytic.end());
  rep.numeric.assign(numeric.begin(), numeric.end());
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double abs_err = std::abs(analytic[i] - numeric[i]);
    const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    const double rel_err = scale > 0.0 ? abs_err / scale : 0.0;
    if (abs_err > rep.max_abs_err) rep.max_abs_err = abs_err;
    if (rel_err > rep.max_rel_err) {
      rep.max_rel_err = rel_err;
      rep.worst_index = static_cast<int>(i);
    }
    if (abs_err > atol + rtol * scale) {
      rep.pass = false;
      ++rep.failed_count;
    }
  }
  return rep;
}

}  // namespace adr::gradcheck
