#pragma once

#include <span>
#include <vector>

#include "adr/matrix.hpp"
#include "adr/simplex.hpp"

namespace adr::losses {

/// Which uncertainty measure feeds the exponential regularizer.
enum class PhiKind { Entropy, Variance };

/// Trade-off weight gamma and similar-class count tau. tau == 0 stands for
/// "use default_tau(c)" and is resolved at evaluation time.
struct AdrHyper {
  double gamma = 0.05;
  int tau = 0;
};

/// Default tau grows with the class count: max(2, round(0.3 * c)).
int default_tau(int c);

struct EntropyHyper {
  double lambda = 0.0;
};

/// Loss value plus the exact gradient with respect to the op's input.
/// reg_part carries the unweighted regularizer value (F or H) so the logged
/// decomposition value == ce_part + weight * reg_part holds exactly.
struct LossOutput {
  double value = 0.0;
  std::vector<double> grad;
  double ce_part = 0.0;
  double reg_part = 0.0;
};

/// Everything the backward passes reuse from one forward evaluation.
struct AdrCache {
  simplex::ProbVector p;
  simplex::TopKStats stats;
  double phi = 0.0;
  bool phi_clamped = false;
  PhiKind kind = PhiKind::Entropy;
  int tau = 0;
  double log_f = 0.0;
  double f = 0.0;  // regularizer value F(p)
};

/// Cross entropy of softmax(logits) against a hard label; grad is the fused
/// softmax form p - onehot, with respect to the logits.
LossOutput ce_forward_backward(std::span<const double> logits, int label);

/// Binary cross-entropy derivative -1/p_t, for the curve plots.
double ce_binary_derivative(double p_t);

/// (1 - eps) * onehot + eps * uniform, clamped onto the simplex.
simplex::ProbVector label_smooth_targets(int label, double eps_ls, int c);

/// Cross entropy of softmax(logits) against a soft target distribution.
LossOutput soft_ce_forward_backward(std::span<const double> logits,
                                    const simplex::ProbVector& target);

/// lambda * H(p) with H the un-normalized Shannon entropy; grad is with
/// respect to p: lambda * (-log p - 1).
LossOutput entropy_reg_forward_backward(const simplex::ProbVector& p, const EntropyHyper& h);

/// Binary entropy derivative log((1-p)/p), for the curve plots.
double entropy_binary_derivative(double p);

/// The exponential regularizer F(p) = (2*pi*phi)^(-tau/2) * exp(-T/(2*phi)),
/// evaluated in log space. The cache feeds both backward implementations.
AdrCache adr_forward(const simplex::ProbVector& p, int tau, PhiKind kind);

/// True gradient of the implemented forward with respect to all c components
/// of p. The TopK index set is frozen at the forward pass; selected entries
/// get the direct T-term plus the phi chain, unselected only the phi chain.
std::vector<double> adr_backward_exact(const AdrCache& cache);

struct FactoredGrad {
  std::vector<double> grad;  // one entry per selected component
  bool degenerate = false;   // a selected probability was 1 (division by 1-y)
};

/// Product-rule backward that treats F as a product of per-component factors
/// and uses the closed form phi' = -(phi + log y)/(1 - y) over the tau
/// selected components, reusing the cached F and phi. It disagrees with
/// adr_backward_exact by construction and exists for comparison reports;
/// training always uses the exact gradient.
FactoredGrad adr_backward_factored(const AdrCache& cache);

/// CE + gamma * F composed through the exact softmax Jacobian; grad is with
/// respect to the logits. gamma == 0 short-circuits to the plain CE path.
LossOutput combined_forward_backward(std::span<const double> logits, int label,
                                     const AdrHyper& hyper, PhiKind kind);

enum class LossKind { Ce, CeAdr, Ls, LsAdr, CeEntropy };

struct LossSpec {
  LossKind kind = LossKind::Ce;
  AdrHyper adr;
  EntropyHyper ent;
  double eps_ls = 0.1;
  PhiKind phi = PhiKind::Entropy;
};

/// Per-sample dispatcher used by the trainer; grad is w.r.t. logits.
LossOutput eval_loss(const LossSpec& spec, std::span<const double> logits, int label);

/// Per-batch evaluation: per-sample gradients land in dlogits rows (unscaled),
/// scalar parts are per-sample means, correct counts argmax hits.
struct BatchLoss {
  Matrix dlogits;
  double value = 0.0;
  double ce_part = 0.0;
  double reg_part = 0.0;
  int correct = 0;
};

BatchLoss batch_eval_serial(const LossSpec& spec, const Matrix& logits,
                            std::span<const int> labels);
BatchLoss batch_eval_parallel(const LossSpec& spec, const Matrix& logits,
                              std::span<const int> labels);
BatchLoss batch_eval(const LossSpec& spec, const Matrix& logits, std::span<const int> labels);

const char* loss_kind_name(LossKind k);

}  // namespace adr::losses
