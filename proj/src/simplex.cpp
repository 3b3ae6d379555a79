#include "adr/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace adr::simplex {

namespace {

void require_finite(std::span<const double> x, const char* what) {
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

Uncertainty clamp_phi(double raw) {
  Uncertainty u;
  if (raw < kPhiFloor) {
    u.phi = kPhiFloor;
    u.clamped = true;
  } else if (raw > 1.0) {
    u.phi = 1.0;
    u.clamped = true;
  } else {
    u.phi = raw;
  }
  return u;
}

}  // namespace

ProbVector softmax(std::span<const double> logits) {
  if (logits.size() < 2) throw std::invalid_argument("softmax: need at least 2 classes");
  require_finite(logits, "softmax");
  const double zmax = *std::max_element(logits.begin(), logits.end());
  ProbVector p;
  p.v.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p.v[i] = std::exp(logits[i] - zmax);
    sum += p.v[i];
  }
  for (double& x : p.v) x = std::max(x / sum, kProbFloor);
  return p;
}

ProbVector make_prob(std::vector<double> values) {
  if (values.size() < 2) throw std::invalid_argument("make_prob: need at least 2 classes");
  require_finite(values, "make_prob");
  for (double& x : values) {
    if (x < 0.0) throw std::invalid_argument("make_prob: negative entry");
    x = std::max(x, kProbFloor);
  }
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  for (double& x : values) x = std::max(x / sum, kProbFloor);
  return ProbVector{std::move(values)};
}

bool on_simplex(const ProbVector& p, double tol) {
  if (p.size() < 2) return false;
  double sum = 0.0;
  for (double x : p.v) {
    if (!std::isfinite(x) || x < kProbFloor * (1.0 - 1e-9) || x > 1.0 + tol) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

Uncertainty normalized_entropy(const ProbVector& p) {
  double h = 0.0;
  for (double x : p.v) h -= x * std::log(x);
  return clamp_phi(h / std::log(static_cast<double>(p.size())));
}

Uncertainty variance_uncertainty(const ProbVector& p) {
  const int c = p.size();
  double mean = 0.0;
  for (double x : p.v) mean += x;
  mean /= c;
  double var = 0.0;
  for (double x : p.v) var += (x - mean) * (x - mean);
  var /= c;
  const double var_max = static_cast<double>(c - 1) / (static_cast<double>(c) * c);
  return clamp_phi(1.0 - var / var_max);
}

TopKStats topk_stats(const ProbVector& p, int tau) {
  const int c = p.size();
  if (tau < 1 || tau > c) throw std::invalid_argument("topk_stats: tau out of range");
  std::vector<int> order(c);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + tau, order.end(), [&](int a, int b) {
    if (p[a] != p[b]) return p[a] > p[b];
    return a < b;  // ties: ascending class index
  });
  TopKStats s;
  s.indices.assign(order.begin(), order.begin() + tau);
  s.selected.resize(tau);
  for (int j = 0; j < tau; ++j) {
    s.selected[j] = p[s.indices[j]];
    s.t_value += s.selected[j] * s.selected[j];
  }
  return s;
}

std::vector<double> softmax_vjp(const ProbVector& p, std::span<const double> g) {
  if (static_cast<int>(g.size()) != p.size())
    throw std::invalid_argument("softmax_vjp: length mismatch");
  double dot = 0.0;
  for (int i = 0; i < p.size(); ++i) dot += p[i] * g[i];
  std::vector<double> out(g.size());
  for (int i = 0; i < p.size(); ++i) out[i] = p[i] * (g[i] - dot);
  return out;
}

int argmax_index(std::span<const double> x) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(x.size()); ++i)
    if (x[i] > x[best]) best = i;
  return best;
}

}  // namespace adr::simplex
