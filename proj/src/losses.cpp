#include "adr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "adr/kernels.hpp"

namespace adr::losses {

namespace {

using simplex::ProbVector;

void check_label(int label, int c) {
  if (label < 0 || label >= c) throw std::invalid_argument("label out of range");
}

LossOutput ce_from_probs(const ProbVector& p, int label) {
  LossOutput out;
  out.value = -std::log(p[label]);
  out.ce_part = out.value;
  out.grad = p.v;
  out.grad[label] -= 1.0;
  return out;
}

// Ambient partial derivative of phi; zero when the clamp froze phi.
double dphi_dp(const AdrCache& c, int k, double mean) {
  if (c.phi_clamped) return 0.0;
  if (c.kind == PhiKind::Entropy) {
    return -(std::log(c.p[k]) + 1.0) / std::log(static_cast<double>(c.p.size()));
  }
  const int n = c.p.size();
  const double var_max = static_cast<double>(n - 1) / (static_cast<double>(n) * n);
  return -2.0 * (c.p[k] - mean) / (n * var_max);
}

double mean_of(const ProbVector& p) {
  double m = 0.0;
  for (double x : p.v) m += x;
  return m / p.size();
}

int resolve_tau(const AdrHyper& h, int c) {
  const int tau = h.tau > 0 ? h.tau : default_tau(c);
  if (tau < 1 || tau > c) throw std::invalid_argument("tau out of range");
  return tau;
}

}  // namespace

int default_tau(int c) {
  const int t = static_cast<int>(std::lround(0.3 * c));
  return std::max(2, t);
}

LossOutput ce_forward_backward(std::span<const double> logits, int label) {
  check_label(label, static_cast<int>(logits.size()));
  return ce_from_probs(simplex::softmax(logits), label);
}

double ce_binary_derivative(double p_t) {
  if (!(p_t > 0.0) || p_t > 1.0) throw std::domain_error("ce_binary_derivative: p_t outside (0,1]");
  return -1.0 / p_t;
}

ProbVector label_smooth_targets(int label, double eps_ls, int c) {
  check_label(label, c);
  if (eps_ls < 0.0 || eps_ls >= 1.0)
    throw std::invalid_argument("label_smooth_targets: eps_ls outside [0,1)");
  std::vector<double> t(c, eps_ls / c);
  t[label] += 1.0 - eps_ls;
  return simplex::make_prob(std::move(t));
}

LossOutput soft_ce_forward_backward(std::span<const double> logits, const ProbVector& target) {
  if (static_cast<int>(logits.size()) != target.size())
    throw std::invalid_argument("soft_ce: length mismatch");
  const ProbVector p = simplex::softmax(logits);
  LossOutput out;
  for (int j = 0; j < p.size(); ++j) out.value -= target[j] * std::log(p[j]);
  out.ce_part = out.value;
  out.grad.resize(p.size());
  for (int j = 0; j < p.size(); ++j) out.grad[j] = p[j] - target[j];
  return out;
}

LossOutput entropy_reg_forward_backward(const ProbVector& p, const EntropyHyper& h) {
  if (h.lambda < 0.0) throw std::invalid_argument("entropy_reg: lambda must be non-negative");
  LossOutput out;
  double hent = 0.0;
  for (double x : p.v) hent -= x * std::log(x);
  out.reg_part = hent;
  out.value = h.lambda * hent;
  out.grad.resize(p.size());
  for (int j = 0; j < p.size(); ++j) out.grad[j] = h.lambda * (-std::log(p[j]) - 1.0);
  return out;
}

double entropy_binary_derivative(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::domain_error("entropy_binary_derivative: p outside (0,1)");
  return std::log((1.0 - p) / p);
}

AdrCache adr_forward(const ProbVector& p, int tau, PhiKind kind) {
  if (tau < 1 || tau > p.size()) throw std::invalid_argument("adr_forward: tau out of range");
  AdrCache c;
  c.p = p;
  c.kind = kind;
  c.tau = tau;
  const simplex::Uncertainty u =
      kind == PhiKind::Entropy ? simplex::normalized_entropy(p) : simplex::variance_uncertainty(p);
  c.phi = u.phi;
  c.phi_clamped = u.clamped;
  c.stats = simplex::topk_stats(p, tau);
  c.log_f = -0.5 * tau * std::log(2.0 * std::numbers::pi * c.phi) -
            c.stats.t_value / (2.0 * c.phi);
  c.f = std::exp(c.log_f);
  return c;
}

std::vector<double> adr_backward_exact(const AdrCache& cache) {
  const int c = cache.p.size();
  std::vector<double> g(c, 0.0);
  if (cache.f == 0.0) return g;  // exp underflow: the implemented forward is flat here
  const double dlogf_dphi =
      -0.5 * cache.tau / cache.phi + cache.stats.t_value / (2.0 * cache.phi * cache.phi);
  const double mean = cache.kind == PhiKind::Variance ? mean_of(cache.p) : 0.0;
  for (int k = 0; k < c; ++k) g[k] = cache.f * dlogf_dphi * dphi_dp(cache, k, mean);
  for (int idx : cache.stats.indices) g[idx] += cache.f * (-cache.p[idx] / cache.phi);
  return g;
}

FactoredGrad adr_backward_factored(const AdrCache& cache) {
  if (cache.kind != PhiKind::Entropy)
    throw std::invalid_argument("adr_backward_factored: requires the entropy uncertainty");
  FactoredGrad out;
  out.grad.resize(cache.tau);
  const double phi = cache.phi;
  const double two_phi2 = 2.0 * phi * phi;
  for (int j = 0; j < cache.tau; ++j) {
    const double y = cache.stats.selected[j];
    if (std::abs(1.0 - y) < 1e-12) {
      out.degenerate = true;
      break;
    }
    const double phi_prime = -(phi + std::log(y)) / (1.0 - y);
    out.grad[j] = cache.f * (y * y * phi_prime - 2.0 * y * phi - phi * phi_prime) / two_phi2;
  }
  if (out.degenerate) {
    // Singular 1 - y denominator: fall back to the exact gradient restricted
    // to the selected components.
    const std::vector<double> exact = adr_backward_exact(cache);
    for (int j = 0; j < cache.tau; ++j) out.grad[j] = exact[cache.stats.indices[j]];
  }
  return out;
}

LossOutput combined_forward_backward(std::span<const double> logits, int label,
                                     const AdrHyper& hyper, PhiKind kind) {
  const int c = static_cast<int>(logits.size());
  check_label(label, c);
  if (hyper.gamma < 0.0) throw std::invalid_argument("combined: gamma must be non-negative");
  const ProbVector p = simplex::softmax(logits);
  LossOutput out = ce_from_probs(p, label);
  if (hyper.gamma == 0.0) return out;
  const int tau = resolve_tau(hyper, c);
  const AdrCache cache = adr_forward(p, tau, kind);
  const std::vector<double> gp = adr_backward_exact(cache);
  const std::vector<double> gz = simplex::softmax_vjp(p, gp);
  out.reg_part = cache.f;
  out.value = out.ce_part + hyper.gamma * cache.f;
  for (int j = 0; j < c; ++j) out.grad[j] += hyper.gamma * gz[j];
  return out;
}

LossOutput eval_loss(const LossSpec& spec, std::span<const double> logits, int label) {
  const int c = static_cast<int>(logits.size());
  switch (spec.kind) {
    case LossKind::Ce:
      return ce_forward_backward(logits, label);
    case LossKind::CeAdr:
      return combined_forward_backward(logits, label, spec.adr, spec.phi);
    case LossKind::Ls:
      return soft_ce_forward_backward(logits, label_smooth_targets(label, spec.eps_ls, c));
    case LossKind::LsAdr: {
      LossOutput out =
          soft_ce_forward_backward(logits, label_smooth_targets(label, spec.eps_ls, c));
      if (spec.adr.gamma == 0.0) return out;
      const ProbVector p = simplex::softmax(logits);
      const AdrCache cache = adr_forward(p, resolve_tau(spec.adr, c), spec.phi);
      const std::vector<double> gz = simplex::softmax_vjp(p, adr_backward_exact(cache));
      out.reg_part = cache.f;
      out.value = out.ce_part + spec.adr.gamma * cache.f;
      for (int j = 0; j < c; ++j) out.grad[j] += spec.adr.gamma * gz[j];
      return out;
    }
    case LossKind::CeEntropy: {
      LossOutput out = ce_forward_backward(logits, label);
      if (spec.ent.lambda == 0.0) return out;
      const ProbVector p = simplex::softmax(logits);
      const LossOutput ent = entropy_reg_forward_backward(p, spec.ent);
      const std::vector<double> gz = simplex::softmax_vjp(p, ent.grad);
      out.reg_part = ent.reg_part;
      out.value = out.ce_part + spec.ent.lambda * ent.reg_part;
      for (int j = 0; j < c; ++j) out.grad[j] += gz[j];
      return out;
    }
  }
  throw std::invalid_argument("eval_loss: unknown loss kind");
}

namespace {

BatchLoss batch_reduce(const LossSpec& spec, const Matrix& logits, std::span<const int> labels,
                       std::vector<LossOutput>& per_sample) {
  const int batch = logits.rows;
  BatchLoss out;
  out.dlogits = Matrix(batch, logits.cols);
  double vsum = 0.0, csum = 0.0, rsum = 0.0;
  for (int i = 0; i < batch; ++i) {
    const LossOutput& s = per_sample[i];
    vsum += s.value;
    csum += s.ce_part;
    rsum += s.reg_part;
    std::copy(s.grad.begin(), s.grad.end(), out.dlogits.row(i));
    if (simplex::argmax_index(logits.row_span(i)) == labels[i]) ++out.correct;
  }
  (void)spec;
  out.value = vsum / batch;
  out.ce_part = csum / batch;
  out.reg_part = rsum / batch;
  return out;
}

}  // namespace

BatchLoss batch_eval_serial(const LossSpec& spec, const Matrix& logits,
                            std::span<const int> labels) {
  const int batch = logits.rows;
  if (static_cast<int>(labels.size()) != batch)
    throw std::invalid_argument("batch_eval: label count mismatch");
  std::vector<LossOutput> per_sample(batch);
  for (int i = 0; i < batch; ++i) per_sample[i] = eval_loss(spec, logits.row_span(i), labels[i]);
  return batch_reduce(spec, logits, labels, per_sample);
}

BatchLoss batch_eval_parallel(const LossSpec& spec, const Matrix& logits,
                              std::span<const int> labels) {
  const int batch = logits.rows;
  if (static_cast<int>(labels.size()) != batch)
    throw std::invalid_argument("batch_eval: label count mismatch");
  // Validate up front; throwing from inside the parallel region would abort.
  for (int i = 0; i < batch; ++i)
    if (labels[i] < 0 || labels[i] >= logits.cols)
      throw std::invalid_argument("batch_eval: label out of range");
  for (double v : logits.a)
    if (!std::isfinite(v)) throw std::invalid_argument("batch_eval: non-finite logit");
  std::vector<LossOutput> per_sample(batch);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < batch; ++i) per_sample[i] = eval_loss(spec, logits.row_span(i), labels[i]);
  return batch_reduce(spec, logits, labels, per_sample);
}

BatchLoss batch_eval(const LossSpec& spec, const Matrix& logits, std::span<const int> labels) {
  if (kernels::parallel_enabled() && logits.rows >= 16)
    return batch_eval_parallel(spec, logits, labels);
  return batch_eval_serial(spec, logits, labels);
}

const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::Ce: return "ce";
    case LossKind::CeAdr: return "ce+adr";
    case LossKind::Ls: return "ls";
    case LossKind::LsAdr: return "ls+adr";
    case LossKind::CeEntropy: return "ce+entropy";
  }
  return "?";
}

}  // namespace adr::losses
