#pragma once

#include <span>
#include <vector>

namespace adr::simplex {

/// Clamp floor applied to probabilities before any logarithm.
inline constexpr double kProbFloor = 1e-12;
/// Lower bound on uncertainty values; keeps 1/phi and (2*pi*phi)^(-tau/2) finite.
inline constexpr double kPhiFloor = 1e-6;

/// A point on the (c-1)-simplex: entries in [kProbFloor, 1], summing to 1
/// within 1e-9. Construct through softmax() or make_prob() only.
struct ProbVector {
  std::vector<double> v;

  int size() const { return static_cast<int>(v.size()); }
  double operator[](int i) const { return v[i]; }
  std::span<const double> span() const { return v; }
};

/// Uncertainty measure phi in (0, 1]. `clamped` records that the raw value hit
/// the floor or the cap, in which case phi is treated as locally constant.
struct Uncertainty {
  double phi = 0.0;
  bool clamped = false;
};

/// The tau largest probabilities with their class indices (descending,
/// ties broken by ascending index) and t_value = sum of their squares.
struct TopKStats {
  std::vector<int> indices;
  std::vector<double> selected;
  double t_value = 0.0;
};

/// Numerically stable softmax: max-subtraction, then floor at kProbFloor.
ProbVector softmax(std::span<const double> logits);

/// Clamps an arbitrary non-negative vector onto the simplex (floor,
/// renormalize, floor). Used for hand-built distributions.
ProbVector make_prob(std::vector<double> values);

bool on_simplex(const ProbVector& p, double tol = 1e-9);

/// Shannon entropy divided by log(c); 1 at uniform, kPhiFloor at one-hot.
Uncertainty normalized_entropy(const ProbVector& p);

/// 1 - Var(p)/Var_max(c) with Var_max = (c-1)/c^2, same range as above.
Uncertainty variance_uncertainty(const ProbVector& p);

TopKStats topk_stats(const ProbVector& p, int tau);

/// Applies the (symmetric) softmax Jacobian at p to a probability-space
/// gradient: out_k = p_k * (g_k - <p, g>).
std::vector<double> softmax_vjp(const ProbVector& p, std::span<const double> g);

/// Index of the largest entry, ties resolved to the lowest index.
int argmax_index(std::span<const double> x);

}  // namespace adr::simplex
