#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace adr::curves {

/// The regularizer families plotted along the uniform-to-one-hot slice.
enum class Family { Variance, Entropy, ExpVariance, ExpEntropy, Ce, BinaryEntropyDerivative };

struct CurveSample {
  Family family;
  int c = 0;
  int tau = 0;
  double t = 0;           // slice parameter in [0, 1)
  double p = 0;           // top-class probability at t
  double value = 0;       // regularizer value
  double derivative = 0;  // directional derivative along the slice, or the
                          // closed binary form for the ce / binary families
};

/// Evaluates one family on the slice p(t) = (1-t)*uniform + t*onehot with
/// t = i/grid, i in [0, grid). The multiclass families report the directional
/// derivative along the slice via the exact gradients; the two binary
/// families use their closed-form derivatives in p with p = (1+t)/2.
std::vector<CurveSample> slice_curve(Family family, int c, int tau, int grid);

const char* family_name(Family f);
std::optional<Family> family_from_name(std::string_view name);

/// All six families in a fixed order, for the curves command.
std::vector<Family> all_families();

}  // namespace adr::curves
