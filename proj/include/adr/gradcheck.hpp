#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adr::gradcheck {

/// Central-difference step; the double-precision sweet spot between
/// truncation and round-off for O(1)-scaled functions.
inline constexpr double kDefaultStep = 1e-6;

/// Raised when the probed function returns a non-finite value.
struct OracleError : std::runtime_error {
  int coordinate;
  OracleError(const std::string& msg, int coord) : std::runtime_error(msg), coordinate(coord) {}
};

using ScalarFn = std::function<double(std::span<const double>)>;

/// Component i of the result is (f(x + h e_i) - f(x - h e_i)) / (2h).
/// For simplex-constrained functions the caller passes f pre-composed with
/// softmax so perturbed points stay feasible.
std::vector<double> central_difference(const ScalarFn& f, std::span<const double> x,
                                       double h = kDefaultStep);

struct GradReport {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  int worst_index = -1;
  std::vector<double> analytic;
  std::vector<double> numeric;
  bool pass = true;
  int failed_count = 0;
};

/// Component-wise pass iff |a - n| <= atol + rtol * max(|a|, |n|).
GradReport compare(std::span<const double> analytic, std::span<const double> numeric,
                   double rtol = 1e-5, double atol = 1e-8);

}  // namespace adr::gradcheck
