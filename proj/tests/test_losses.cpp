#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "adr/gradcheck.hpp"
#include "adr/losses.hpp"

using namespace adr::losses;
using adr::simplex::make_prob;
using adr::simplex::ProbVector;
using adr::simplex::softmax;
using adr::simplex::softmax_vjp;

namespace {

std::vector<double> interior_logits(int c, std::mt19937_64& rng, double span = 2.0) {
  std::uniform_real_distribution<double> u(-span, span);
  for (;;) {
    std::vector<double> z(c);
    for (double& v : z) v = u(rng);
    const ProbVector p = softmax(z);
    double mn = 1.0;
    for (int i = 0; i < c; ++i) mn = std::min(mn, p[i]);
    if (mn >= 1e-3) return z;
  }
}

ProbVector confident_point(int c, double top) {
  std::vector<double> p(c, (1.0 - top) / (c - 1));
  p[0] = top;
  return make_prob(std::move(p));
}

double norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Reference evaluation of the regularizer straight from its definition,
// (1/sqrt(2*pi*phi))^tau * exp(-T/(2*phi)), independent of the log-space path.
double adr_reference(const ProbVector& p, int tau) {
  double h = 0.0;
  for (double x : p.v) h -= x * std::log(x);
  const double phi = std::min(std::max(h / std::log((double)p.size()), 1e-6), 1.0);
  std::vector<double> sorted = p.v;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double t = 0.0;
  for (int j = 0; j < tau; ++j) t += sorted[j] * sorted[j];
  return std::pow(1.0 / std::sqrt(2.0 * std::numbers::pi * phi), tau) *
         std::exp(-t / (2.0 * phi));
}

}  // namespace

TEST_CASE("cross entropy hand cases") {
  // saturated prediction: value and gradient collapse to zero
  const auto sat = ce_forward_backward(std::vector<double>{40.0, 0.0, 0.0}, 0);
  CHECK(sat.value == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(norm(sat.grad) <= 1e-9);

  const auto uni = ce_forward_backward(std::vector<double>(10, 0.7), 3);
  CHECK(uni.value == doctest::Approx(std::log(10.0)).epsilon(1e-12));

  CHECK_THROWS_AS(ce_forward_backward(std::vector<double>{0.0, 1.0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(ce_forward_backward(std::vector<double>{0.0, 1.0}, -1), std::invalid_argument);
}

TEST_CASE("cross entropy gradient matches finite differences") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int c = 6;
    const auto z = interior_logits(c, rng);
    const int label = trial % c;
    const auto out = ce_forward_backward(z, label);
    const auto fd = adr::gradcheck::central_difference(
        [label](std::span<const double> x) { return -std::log(softmax(x)[label]); }, z);
    const auto rep = adr::gradcheck::compare(out.grad, fd, 1e-7, 1e-12);
    CHECK(rep.pass);
  }
}

TEST_CASE("binary cross entropy derivative") {
  CHECK(ce_binary_derivative(0.5) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(ce_binary_derivative(1.0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(ce_binary_derivative(0.1) == doctest::Approx(-10.0).epsilon(1e-12));
  CHECK_THROWS_AS(ce_binary_derivative(0.0), std::domain_error);
}

TEST_CASE("label smoothing targets") {
  const auto identity = label_smooth_targets(1, 0.0, 3);
  CHECK(identity[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(identity[0] <= 1e-11);

  const auto t = label_smooth_targets(2, 0.1, 4);
  CHECK(t[0] == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(t[1] == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(t[2] == doctest::Approx(0.925).epsilon(1e-12));
  CHECK(t[3] == doctest::Approx(0.025).epsilon(1e-12));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> eps(0.0, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto tv = label_smooth_targets(trial % 7, eps(rng), 7);
    double sum = 0.0;
    for (int j = 0; j < 7; ++j) sum += tv[j];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(label_smooth_targets(0, 1.0, 3), std::invalid_argument);
}

TEST_CASE("entropy regularizer values and gradient") {
  std::vector<double> onehot(10, 0.0);
  onehot[2] = 1.0;
  const auto zero = entropy_reg_forward_backward(make_prob(onehot), {1.0});
  CHECK(zero.value == doctest::Approx(0.0).epsilon(1e-9));

  const auto uni = entropy_reg_forward_backward(make_prob(std::vector<double>(10, 0.1)), {1.0});
  CHECK(uni.value == doctest::Approx(std::log(10.0)).epsilon(1e-12));

  const auto sym = entropy_reg_forward_backward(make_prob(std::vector<double>{0.5, 0.5}), {0.8});
  CHECK(sym.grad[0] == doctest::Approx(sym.grad[1]).epsilon(1e-15));

  // composed through softmax the gradient matches finite differences
  std::mt19937_64 rng(7);
  const EntropyHyper h{0.7};
  for (int trial = 0; trial < 20; ++trial) {
    const auto z = interior_logits(8, rng);
    const ProbVector p = softmax(z);
    const auto analytic = softmax_vjp(p, entropy_reg_forward_backward(p, h).grad);
    const auto fd = adr::gradcheck::central_difference(
        [h](std::span<const double> x) {
          return entropy_reg_forward_backward(softmax(x), h).value;
        },
        z);
    CHECK(adr::gradcheck::compare(analytic, fd, 1e-6, 1e-9).pass);
  }
}

TEST_CASE("binary entropy derivative") {
  CHECK(entropy_binary_derivative(0.5) == 0.0);
  CHECK(entropy_binary_derivative(1.0 / (1.0 + std::numbers::e)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    const double p = u(rng);
    CHECK(entropy_binary_derivative(p) ==
          doctest::Approx(-entropy_binary_derivative(1.0 - p)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(entropy_binary_derivative(0.0), std::domain_error);
  CHECK_THROWS_AS(entropy_binary_derivative(1.0), std::domain_error);
}

TEST_CASE("adr forward frozen values") {
  const auto uniform = make_prob(std::vector<double>(10, 0.1));
  const auto cu = adr_forward(uniform, 3, PhiKind::Entropy);
  CHECK(cu.phi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cu.stats.t_value == doctest::Approx(0.03).epsilon(1e-12));
  // (2*pi)^(-3/2) * exp(-0.015), evaluated independently at 40 digits
  CHECK(cu.f == doctest::Approx(0.062548338847630839).epsilon(1e-12));

  const auto near = confident_point(10, 0.99);
  const auto cn = adr_forward(near, 3, PhiKind::Entropy);
  CHECK(cn.phi == doctest::Approx(0.033863582442818833).epsilon(1e-9));
  CHECK(cn.f == doctest::Approx(5.2882265838091662e-6).epsilon(1e-9));
  CHECK(cn.f <= 1e-4 * cu.f);  // deterministic predictions are barely penalized

  // one-hot limit: F collapses to zero
  std::vector<double> onehot(10, 0.0);
  onehot[0] = 1.0;
  const auto c1 = adr_forward(make_prob(onehot), 3, PhiKind::Entropy);
  CHECK(c1.f <= 1e-30);

  CHECK_THROWS_AS(adr_forward(uniform, 0, PhiKind::Entropy), std::invalid_argument);
  CHECK_THROWS_AS(adr_forward(uniform, 11, PhiKind::Entropy), std::invalid_argument);
}

TEST_CASE("adr forward agrees with the direct product-form reference") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 4 + trial % 20;
    const auto z = interior_logits(c, rng);
    const ProbVector p = softmax(z);
    const int tau = 1 + trial % c;
    const auto cache = adr_forward(p, tau, PhiKind::Entropy);
    CHECK(cache.f == doctest::Approx(adr_reference(p, tau)).epsilon(1e-10));
    CHECK(cache.f >= 0.0);
  }
}

TEST_CASE("adr exact backward matches finite differences through softmax") {
  std::mt19937_64 rng(31);
  for (const int c : {5, 10, 100}) {
    for (const int tau : {2, 3, 5}) {
      for (int trial = 0; trial < 12; ++trial) {
        const auto z = interior_logits(c, rng);
        const ProbVector p = softmax(z);
        for (const PhiKind kind : {PhiKind::Entropy, PhiKind::Variance}) {
          const auto cache = adr_forward(p, tau, kind);
          const auto analytic = softmax_vjp(p, adr_backward_exact(cache));
          const auto fd = adr::gradcheck::central_difference(
              [tau, kind](std::span<const double> x) {
                return adr_forward(softmax(x), tau, kind).f;
              },
              z);
          CHECK(adr::gradcheck::compare(analytic, fd, 1e-6, 1e-9).pass);
        }
      }
    }
  }
}

TEST_CASE("adr gradient collapses in the confident regime") {
  const auto uniform = make_prob(std::vector<double>(10, 0.1));
  const double g_uniform = norm(adr_backward_exact(adr_forward(uniform, 3, PhiKind::Entropy)));
  const double g_conf =
      norm(adr_backward_exact(adr_forward(confident_point(10, 0.999), 3, PhiKind::Entropy)));
  CHECK(g_uniform > 0.1);  // frozen oracle value 0.1723
  CHECK(g_conf <= 1e-3 * g_uniform);

  // phi <= 0.01 regime: gradient at least 1000x below the overall maximum.
  double g_max = g_uniform;
  for (double top = 0.15; top < 0.995; top += 0.005) {
    const auto cache = adr_forward(confident_point(10, top), 3, PhiKind::Entropy);
    g_max = std::max(g_max, norm(adr_backward_exact(cache)));
  }
  for (double top : {0.9975, 0.998, 0.999}) {
    const auto cache = adr_forward(confident_point(10, top), 3, PhiKind::Entropy);
    REQUIRE(cache.phi <= 0.01);
    CHECK(norm(adr_backward_exact(cache)) <= 1e-3 * g_max);
  }
}

TEST_CASE("adr gradient scales roughly with phi in the uncertain regime") {
  // Along the canonical slice, ||grad||/phi stays within a factor-10 band
  // for phi >= 0.5.
  double lo = 1e100, hi = 0.0;
  for (double top = 0.1; top <= 0.76; top += 0.004) {
    const auto cache = adr_forward(confident_point(10, top), 3, PhiKind::Entropy);
    if (cache.phi < 0.5) continue;
    const double r = norm(adr_backward_exact(cache)) / cache.phi;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  CHECK(hi / lo <= 10.0);
}

TEST_CASE("uniform point gradient has the two-level symmetry") {
  const auto cache = adr_forward(make_prob(std::vector<double>(10, 0.1)), 3, PhiKind::Entropy);
  const auto g = adr_backward_exact(cache);
  CHECK(cache.stats.indices == std::vector<int>{0, 1, 2});
  for (int j = 1; j < 3; ++j) CHECK(g[j] == doctest::Approx(g[0]).epsilon(1e-12));
  for (int j = 4; j < 10; ++j) CHECK(g[j] == doctest::Approx(g[3]).epsilon(1e-12));
  CHECK(g[0] != doctest::Approx(g[3]).epsilon(1e-6));
}

TEST_CASE("factored backward implements its closed form exactly") {
  std::mt19937_64 rng(41);
  const auto z = interior_logits(10, rng);
  const ProbVector p = softmax(z);
  const auto cache = adr_forward(p, 3, PhiKind::Entropy);
  const auto factored = adr_backward_factored(cache);
  REQUIRE(!factored.degenerate);
  REQUIRE(factored.grad.size() == 3);
  for (int j = 0; j < 3; ++j) {
    const double y = cache.stats.selected[j];
    const double phi_prime = -(cache.phi + std::log(y)) / (1.0 - y);
    const double expected = cache.f *
                            (y * y * phi_prime - 2.0 * y * cache.phi - cache.phi * phi_prime) /
                            (2.0 * cache.phi * cache.phi);
    CHECK(factored.grad[j] == doctest::Approx(expected).epsilon(1e-15));
  }

  // cached and freshly recomputed paths agree bitwise
  const auto cache2 = adr_forward(p, 3, PhiKind::Entropy);
  const auto factored2 = adr_backward_factored(cache2);
  for (int j = 0; j < 3; ++j) CHECK(factored.grad[j] == factored2.grad[j]);

  CHECK_THROWS_AS(adr_backward_factored(adr_forward(p, 3, PhiKind::Variance)),
                  std::invalid_argument);
}

TEST_CASE("factored backward disagrees with the exact gradient and is reported") {
  std::mt19937_64 rng(43);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto z = interior_logits(10, rng);
    const auto cache = adr_forward(softmax(z), 3, PhiKind::Entropy);
    const auto exact = adr_backward_exact(cache);
    const auto factored = adr_backward_factored(cache);
    for (int j = 0; j < 3; ++j) {
      const double e = exact[cache.stats.indices[j]];
      const double scale = std::max(std::abs(e), std::abs(factored.grad[j]));
      if (scale > 0) worst = std::max(worst, std::abs(e - factored.grad[j]) / scale);
    }
  }
  CHECK(worst > 1e-3);  // the factored derivative is a different function
}

TEST_CASE("factored backward wall time scales sub-quadratically in tau") {
  std::mt19937_64 rng(47);
  const auto z = interior_logits(128, rng, 1.0);
  const ProbVector p = softmax(z);
  const auto time_tau = [&](int tau) {
    const auto cache = adr_forward(p, tau, PhiKind::Entropy);
    double best = 1e100;
    for (int trial = 0; trial < 5; ++trial) {
      volatile double sink = 0.0;
      const auto t0 = std::chrono::steady_clock::now();
      for (int r = 0; r < 50000; ++r) sink = sink + adr_backward_factored(cache).grad[0];
      best = std::min(
          best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
  };
  const double t16 = time_tau(16);
  const double t64 = time_tau(64);
  CHECK(t64 <= 8.0 * t16);
}

TEST_CASE("combined loss degenerates to plain CE at gamma zero") {
  std::mt19937_64 rng(53);
  const auto z = interior_logits(10, rng);
  const auto ce = ce_forward_backward(z, 4);
  const auto comb = combined_forward_backward(z, 4, {0.0, 3}, PhiKind::Entropy);
  CHECK(comb.value == doctest::Approx(ce.value).epsilon(1e-12));
  for (int j = 0; j < 10; ++j) CHECK(comb.grad[j] == ce.grad[j]);
  CHECK(comb.reg_part == 0.0);
}

TEST_CASE("combined loss bookkeeping identity and finite differences") {
  std::mt19937_64 rng(59);
  const AdrHyper hyper{0.05, 3};
  for (int trial = 0; trial < 25; ++trial) {
    const auto z = interior_logits(10, rng);
    const int label = trial % 10;
    const auto out = combined_forward_backward(z, label, hyper, PhiKind::Entropy);
    CHECK(out.value == out.ce_part + hyper.gamma * out.reg_part);  // exact bookkeeping
    const auto fd = adr::gradcheck::central_difference(
        [label, hyper](std::span<const double> x) {
          return combined_forward_backward(x, label, hyper, PhiKind::Entropy).value;
        },
        z);
    CHECK(adr::gradcheck::compare(out.grad, fd, 1e-6, 1e-9).pass);
  }
}

TEST_CASE("permuting classes permutes gradients") {
  std::mt19937_64 rng(61);
  const int c = 8;
  for (int trial = 0; trial < 30; ++trial) {
    const auto z = interior_logits(c, rng);
    std::vector<int> perm(c);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> zp(c);
    for (int j = 0; j < c; ++j) zp[perm[j]] = z[j];
    const int label = trial % c;
    const AdrHyper hyper{0.07, 3};
    const auto a = combined_forward_backward(z, label, hyper, PhiKind::Entropy);
    const auto b = combined_forward_backward(zp, perm[label], hyper, PhiKind::Entropy);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
    for (int j = 0; j < c; ++j)
      CHECK(a.grad[j] == doctest::Approx(b.grad[perm[j]]).epsilon(1e-10));
  }
}

TEST_CASE("F(uniform) dominates every confident point") {
  std::mt19937_64 rng(67);
  std::uniform_int_distribution<int> cs(2, 100);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = cs(rng);
    const int tau = 1 + static_cast<int>(rng() % std::min(c, 10));
    std::uniform_real_distribution<double> top(0.99, 0.9999);
    const auto uniform = make_prob(std::vector<double>(c, 1.0 / c));
    const auto conf = confident_point(c, top(rng));
    CHECK(adr_forward(uniform, tau, PhiKind::Entropy).f >
          adr_forward(conf, tau, PhiKind::Entropy).f);
  }
}

TEST_CASE("batch_eval parallel path is bitwise equal to serial") {
  std::mt19937_64 rng(71);
  const int batch = 64, c = 10;
  adr::Matrix logits(batch, c);
  std::vector<int> labels(batch);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (double& v : logits.a) v = u(rng);
  for (int i = 0; i < batch; ++i) labels[i] = static_cast<int>(rng() % c);
  for (const LossKind kind : {LossKind::Ce, LossKind::CeAdr, LossKind::Ls, LossKind::LsAdr,
                              LossKind::CeEntropy}) {
    LossSpec spec;
    spec.kind = kind;
    spec.adr = {0.05, 3};
    spec.ent = {0.5};
    const auto s = batch_eval_serial(spec, logits, labels);
    const auto p = batch_eval_parallel(spec, logits, labels);
    CHECK(s.value == p.value);
    CHECK(s.ce_part == p.ce_part);
    CHECK(s.reg_part == p.reg_part);
    CHECK(s.correct == p.correct);
    CHECK(s.dlogits.a == p.dlogits.a);
  }
}

TEST_CASE("eval_loss finite-difference master property for every kind") {
  std::mt19937_64 rng(73);
  for (const LossKind kind : {LossKind::Ce, LossKind::CeAdr, LossKind::Ls, LossKind::LsAdr,
                              LossKind::CeEntropy}) {
    LossSpec spec;
    spec.kind = kind;
    spec.adr = {0.08, 3};
    spec.ent = {0.6};
    for (int trial = 0; trial < 10; ++trial) {
      const auto z = interior_logits(10, rng);
      const int label = trial % 10;
      const auto out = eval_loss(spec, z, label);
      const auto fd = adr::gradcheck::central_difference(
          [&spec, label](std::span<const double> x) { return eval_loss(spec, x, label).value; },
          z);
      CHECK(adr::gradcheck::compare(out.grad, fd, 1e-6, 1e-9).pass);
    }
  }
}
