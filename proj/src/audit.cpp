#include "adr/audit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "adr/gradcheck.hpp"
#include "adr/losses.hpp"
#include "adr/model.hpp"
#include "adr/simplex.hpp"

namespace adr::audit {

namespace {

using losses::AdrHyper;
using losses::PhiKind;
using simplex::ProbVector;

// Random logits whose softmax stays away from the clamp floor and the TopK
// tie boundaries: every probability at least 1e-3.
std::vector<double> interior_logits(int c, std::mt19937_64& rng) {
  const double span = c > 20 ? 1.0 : 2.0;
  std::uniform_real_distribution<double> u(-span, span);
  for (;;) {
    std::vector<double> z(c);
    for (double& v : z) v = u(rng);
    const ProbVector p = simplex::softmax(z);
    double mn = 1.0;
    for (int i = 0; i < c; ++i) mn = std::min(mn, p[i]);
    if (mn >= 1e-3) return z;
  }
}

struct CheckAccum {
  LossAudit audit;
  void absorb(const gradcheck::GradReport& rep) {
    audit.max_rel_err = std::max(audit.max_rel_err, rep.max_rel_err);
    audit.max_abs_err = std::max(audit.max_abs_err, rep.max_abs_err);
    if (!rep.pass) audit.pass = false;
    ++audit.points;
  }
};

void run_check(CheckAccum& acc, const Options& opt, const gradcheck::ScalarFn& f,
               std::span<const double> x, std::vector<double> analytic) {
  if (opt.perturb != 0.0 && !analytic.empty()) analytic[0] += opt.perturb;
  const auto numeric = gradcheck::central_difference(f, x);
  acc.absorb(gradcheck::compare(analytic, numeric, opt.rtol, opt.atol));
}

std::vector<double> adr_logit_grad(const ProbVector& p, int tau, PhiKind kind) {
  const auto cache = losses::adr_forward(p, tau, kind);
  return simplex::softmax_vjp(p, losses::adr_backward_exact(cache));
}

double grad_norm(std::span<const double> g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

}  // namespace

Report run(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  if (opt.samples < 1) throw std::invalid_argument("audit: samples must be >= 1");
  Report rep;
  std::mt19937_64 rng(opt.seed);
  const std::vector<int> class_counts{5, 10, 100};
  const std::vector<int> taus{2, 3, 5};

  for (int c : class_counts) {
    std::uniform_int_distribution<int> pick_label(0, c - 1);

    CheckAccum ce{{.name = "ce", .c = c}};
    CheckAccum ls{{.name = "ls", .c = c}};
    CheckAccum ent{{.name = "ce+entropy", .c = c}};
    for (int s = 0; s < opt.samples; ++s) {
      const auto z = interior_logits(c, rng);
      const int label = pick_label(rng);

      run_check(
          ce, opt,
          [label](std::span<const double> x) {
            return -std::log(simplex::softmax(x)[label]);
          },
          z, losses::ce_forward_backward(z, label).grad);

      const auto target = losses::label_smooth_targets(label, 0.1, c);
      run_check(
          ls, opt,
          [&target](std::span<const double> x) {
            const ProbVector p = simplex::softmax(x);
            double v = 0.0;
            for (int j = 0; j < p.size(); ++j) v -= target[j] * std::log(p[j]);
            return v;
          },
          z, losses::soft_ce_forward_backward(z, target).grad);

      const losses::EntropyHyper eh{0.7};
      const ProbVector pz = simplex::softmax(z);
      run_check(
          ent, opt,
          [eh](std::span<const double> x) {
            return losses::entropy_reg_forward_backward(simplex::softmax(x), eh).value;
          },
          z, simplex::softmax_vjp(pz, losses::entropy_reg_forward_backward(pz, eh).grad));
    }
    rep.audits.push_back(ce.audit);
    rep.audits.push_back(ls.audit);
    rep.audits.push_back(ent.audit);

    for (int tau : taus) {
      if (tau > c) continue;
      CheckAccum adr_e{{.name = "adr(entropy)", .c = c, .tau = tau}};
      CheckAccum adr_v{{.name = "adr(variance)", .c = c, .tau = tau}};
      CheckAccum comb{{.name = "ce+adr", .c = c, .tau = tau}};
      std::vector<double> discrepancies;
      for (int s = 0; s < opt.samples; ++s) {
        const auto z = interior_logits(c, rng);
        const ProbVector p = simplex::softmax(z);
        const int label = pick_label(rng);

        run_check(
            adr_e, opt,
            [tau](std::span<const double> x) {
              return losses::adr_forward(simplex::softmax(x), tau, PhiKind::Entropy).f;
            },
            z, adr_logit_grad(p, tau, PhiKind::Entropy));

        run_check(
            adr_v, opt,
            [tau](std::span<const double> x) {
              return losses::adr_forward(simplex::softmax(x), tau, PhiKind::Variance).f;
            },
            z, adr_logit_grad(p, tau, PhiKind::Variance));

        const AdrHyper hyper{0.05, tau};
        run_check(
            comb, opt,
            [hyper, label](std::span<const double> x) {
              return losses::combined_forward_backward(x, label, hyper, PhiKind::Entropy).value;
            },
            z, losses::combined_forward_backward(z, label, hyper, PhiKind::Entropy).grad);

        // Exact-vs-factored discrepancy over the selected components.
        const auto cache = losses::adr_forward(p, tau, PhiKind::Entropy);
        const auto exact = losses::adr_backward_exact(cache);
        const auto factored = losses::adr_backward_factored(cache);
        double diff2 = 0.0, na = 0.0, nb = 0.0;
        for (int j = 0; j < tau; ++j) {
          const double e = exact[cache.stats.indices[j]];
          const double d = factored.grad[j] - e;
          diff2 += d * d;
          na += e * e;
          nb += factored.grad[j] * factored.grad[j];
        }
        const double denom = std::max(std::sqrt(na), std::sqrt(nb));
        discrepancies.push_back(denom > 0.0 ? std::sqrt(diff2) / denom : 0.0);
      }
      rep.audits.push_back(adr_e.audit);
      rep.audits.push_back(adr_v.audit);
      rep.audits.push_back(comb.audit);

      std::sort(discrepancies.begin(), discrepancies.end());
      FactoredStats ps{.c = c, .tau = tau};
      ps.min_rel = discrepancies.front();
      ps.max_rel = discrepancies.back();
      ps.median_rel = discrepancies[discrepancies.size() / 2];
      double sum = 0.0;
      for (double d : discrepancies) sum += d;
      ps.mean_rel = sum / discrepancies.size();
      rep.factored.push_back(ps);
    }
  }

  // Full MLP parameter gradients through the combined loss.
  {
    CheckAccum mlp{{.name = "mlp(ce+adr)", .c = 4, .tau = 2}};
    const std::vector<int> sizes{2, 8, 4};
    losses::LossSpec spec;
    spec.kind = losses::LossKind::CeAdr;
    spec.adr = {0.05, 2};
    spec.phi = PhiKind::Entropy;
    std::uniform_real_distribution<double> ux(-1.5, 1.5);
    std::uniform_int_distribution<int> pick_label(0, sizes.back() - 1);
    const int batch = 4;
    for (int s = 0; s < opt.samples; ++s) {
      model::MlpParams params = model::init(sizes, opt.seed ^ (0x5bd1e995ULL * (s + 1)));
      Matrix x(batch, sizes.front());
      std::vector<int> y(batch);
      model::ForwardCache cache;
      bool usable = false;
      for (int attempt = 0; attempt < 64 && !usable; ++attempt) {
        for (double& v : x.a) v = ux(rng);
        for (int& v : y) v = pick_label(rng);
        const Matrix logits = model::forward(params, x, &cache);
        usable = true;
        // Keep the probe away from ReLU kinks and saturated softmax rows.
        for (const Matrix& pre : cache.pre)
          for (double v : pre.a)
            if (std::abs(v) < 1e-4) usable = false;
        for (int i = 0; i < logits.rows && usable; ++i) {
          const ProbVector p = simplex::softmax(logits.row_span(i));
          for (int j = 0; j < p.size(); ++j)
            if (p[j] < 1e-5) usable = false;
        }
      }
      if (!usable) continue;

      const auto loss_at = [&](std::span<const double> theta) {
        model::MlpParams probe = params;
        model::write_flat(theta, probe);
        const Matrix logits = model::forward(probe, x);
        return losses::batch_eval_serial(spec, logits, y).value;
      };
      const Matrix logits = model::forward(params, x, &cache);
      losses::BatchLoss bl = losses::batch_eval_serial(spec, logits, y);
      for (double& g : bl.dlogits.a) g /= batch;
      const auto grads = model::flatten(model::backward(params, cache, bl.dlogits));
      run_check(mlp, opt, loss_at, model::flatten(params), grads);
    }
    rep.audits.push_back(mlp.audit);
  }

  // Gradient-regime probe: the uniform point against a 0.999-confident one.
  {
    const int c = 10, tau = 3;
    std::vector<double> uni(c, 1.0 / c);
    rep.regime.grad_norm_uniform = grad_norm(
        losses::adr_backward_exact(losses::adr_forward(simplex::make_prob(uni), tau,
                                                       PhiKind::Entropy)));
    std::vector<double> conf(c, 0.001 / 9.0);
    conf[0] = 0.999;
    rep.regime.grad_norm_conf999 = grad_norm(
        losses::adr_backward_exact(losses::adr_forward(simplex::make_prob(conf), tau,
                                                       PhiKind::Entropy)));
    rep.regime.ratio = rep.regime.grad_norm_conf999 / rep.regime.grad_norm_uniform;
  }

  // tau-scaling micro-benchmark of the factored backward with a reused cache.
  {
    const int c = 128;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> z(c);
    for (double& v : z) v = u(rng);
    const ProbVector p = simplex::softmax(z);
    const auto time_tau = [&](int tau) {
      const auto cache = losses::adr_forward(p, tau, PhiKind::Entropy);
      const int reps = 200000;
      double best = 1e100;
      for (int trial = 0; trial < 5; ++trial) {
        volatile double sink = 0.0;
        const auto b0 = std::chrono::steady_clock::now();
        for (int r = 0; r < reps; ++r) {
          const auto g = losses::adr_backward_factored(cache);
          sink = sink + g.grad[0];
        }
        const double sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - b0).count();
        best = std::min(best, sec);
      }
      return best;
    };
    rep.bench.tau_small = 16;
    rep.bench.tau_big = 64;
    rep.bench.small_seconds = time_tau(rep.bench.tau_small);
    rep.bench.big_seconds = time_tau(rep.bench.tau_big);
    rep.bench.ratio = rep.bench.big_seconds / rep.bench.small_seconds;
  }

  for (const auto& a : rep.audits)
    if (!a.pass) rep.all_pass = false;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::string Report::text() const {
  std::ostringstream os;
  os << "gradient audit: analytic vs central finite differences (h=1e-6)\n";
  os << "================================================================\n";
  for (const auto& a : audits) {
    os << "  " << a.name << "  c=" << a.c;
    if (a.tau > 0) os << " tau=" << a.tau;
    os << "  points=" << a.points << "  max_rel_err=" << a.max_rel_err
       << "  max_abs_err=" << a.max_abs_err << "  " << (a.pass ? "PASS" : "FAIL") << '\n';
  }
  os << "\nexact vs factored backward, relative L2 over selected components\n";
  os << "----------------------------------------------------------------\n";
  for (const auto& p : factored) {
    os << "  c=" << p.c << " tau=" << p.tau << "  min=" << p.min_rel << "  mean=" << p.mean_rel
       << "  median=" << p.median_rel << "  max=" << p.max_rel << '\n';
  }
  os << "\ngradient regime (c=10, tau=3, entropy phi)\n";
  os << "  ||grad|| at uniform       = " << regime.grad_norm_uniform << '\n';
  os << "  ||grad|| at max-prob .999 = " << regime.grad_norm_conf999 << '\n';
  os << "  ratio                     = " << regime.ratio << '\n';
  os << "\nfactored backward micro-benchmark (cached forward)\n";
  os << "  tau=" << bench.tau_small << ": " << bench.small_seconds << " s\n";
  os << "  tau=" << bench.tau_big << ": " << bench.big_seconds << " s\n";
  os << "  ratio = " << bench.ratio << "  (quadratic bound for 4x tau: 16x)\n";
  os << "\noverall: " << (all_pass ? "PASS" : "FAIL") << "  (" << seconds << " s)\n";
  return os.str();
}

}  // namespace adr::audit
