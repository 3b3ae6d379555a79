#include "adr/curves.hpp"

#include <cmath>
#include <stdexcept>

#include "adr/losses.hpp"
#include "adr/simplex.hpp"

namespace adr::curves {

namespace {

simplex::ProbVector slice_point(double t, int c) {
  std::vector<double> p(c, (1.0 - t) / c);
  p[0] += t;
  return simplex::make_prob(std::move(p));
}

// Directional derivative along d = onehot - uniform (sums to zero, so the
// ambient gradient is dotted without any tangent-space correction).
double along_slice(std::span<const double> grad, int c) {
  double mean = 0.0;
  for (double g : grad) mean += g;
  mean /= c;
  return grad[0] - mean;
}

std::vector<double> phi_gradient(const simplex::ProbVector& p, bool entropy_kind,
                                 bool clamped) {
  const int c = p.size();
  std::vector<double> g(c, 0.0);
  if (clamped) return g;
  if (entropy_kind) {
    const double logc = std::log(static_cast<double>(c));
    for (int k = 0; k < c; ++k) g[k] = -(std::log(p[k]) + 1.0) / logc;
  } else {
    double mean = 0.0;
    for (int k = 0; k < c; ++k) mean += p[k];
    mean /= c;
    const double var_max = static_cast<double>(c - 1) / (static_cast<double>(c) * c);
    for (int k = 0; k < c; ++k) g[k] = -2.0 * (p[k] - mean) / (c * var_max);
  }
  return g;
}

}  // namespace

std::vector<CurveSample> slice_curve(Family family, int c, int tau, int grid) {
  if (grid < 3) throw std::invalid_argument("slice_curve: grid must be >= 3");
  if (c < 2) throw std::invalid_argument("slice_curve: c must be >= 2");
  const bool exp_family = family == Family::ExpVariance || family == Family::ExpEntropy;
  if (exp_family && (tau < 1 || tau > c))
    throw std::invalid_argument("slice_curve: tau out of range");

  std::vector<CurveSample> out;
  out.reserve(grid);
  for (int i = 0; i < grid; ++i) {
    const double t = static_cast<double>(i) / grid;
    CurveSample s;
    s.family = family;
    s.t = t;
    switch (family) {
      case Family::Ce: {
        s.c = 2;
        s.tau = 0;
        s.p = (1.0 + t) / 2.0;
        s.value = -std::log(s.p);
        s.derivative = losses::ce_binary_derivative(s.p);
        break;
      }
      case Family::BinaryEntropyDerivative: {
        s.c = 2;
        s.tau = 0;
        s.p = (1.0 + t) / 2.0;
        s.value = -(s.p * std::log(s.p) + (1.0 - s.p) * std::log(1.0 - s.p));
        s.derivative = losses::entropy_binary_derivative(s.p);
        break;
      }
      case Family::Entropy:
      case Family::Variance: {
        s.c = c;
        s.tau = 0;
        const auto p = slice_point(t, c);
        s.p = p[0];
        const bool ent = family == Family::Entropy;
        const auto u = ent ? simplex::normalized_entropy(p) : simplex::variance_uncertainty(p);
        s.value = u.phi;
        s.derivative = along_slice(phi_gradient(p, ent, u.clamped), c);
        break;
      }
      case Family::ExpEntropy:
      case Family::ExpVariance: {
        s.c = c;
        s.tau = tau;
        const auto p = slice_point(t, c);
        s.p = p[0];
        const auto kind = family == Family::ExpEntropy ? losses::PhiKind::Entropy
                                                       : losses::PhiKind::Variance;
        const auto cache = losses::adr_forward(p, tau, kind);
        s.value = cache.f;
        s.derivative = along_slice(losses::adr_backward_exact(cache), c);
        break;
      }
    }
    out.push_back(s);
  }
  return out;
}

const char* family_name(Family f) {
  switch (f) {
    case Family::Variance: return "variance";
    case Family::Entropy: return "entropy";
    case Family::ExpVariance: return "exp-variance";
    case Family::ExpEntropy: return "exp-entropy";
    case Family::Ce: return "ce";
    case Family::BinaryEntropyDerivative: return "binary-entropy-derivative";
  }
  return "?";
}

std::optional<Family> family_from_name(std::string_view name) {
  for (Family f : all_families())
    if (name == family_name(f)) return f;
  return std::nullopt;
}

std::vector<Family> all_families() {
  return {Family::Variance,    Family::Entropy, Family::ExpVariance,
          Family::ExpEntropy,  Family::Ce,      Family::BinaryEntropyDerivative};
}

}  // namespace adr::curves
