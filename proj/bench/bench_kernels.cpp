// Wall-time comparison of the OpenMP kernels against the serial reference,
// plus a bitwise-equality check between the two paths.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "adr/kernels.hpp"
#include "adr/losses.hpp"

using adr::Matrix;
namespace kernels = adr::kernels;

namespace {

double seconds_of(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : m.a) v = u(rng);
  return m;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols && a.a == b.a;
}

void report(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-24s serial %8.3f ms   openmp %8.3f ms   speedup %5.2fx   %s\n", name,
              serial * 1e3, parallel * 1e3, serial / parallel,
              identical ? "bitwise-identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::mt19937_64 rng(42);
  std::printf("threads: %d\n\n", kernels::thread_count());

  {
    const int batch = 256, in = 512, out = 512;
    const Matrix x = random_matrix(batch, in, rng);
    const Matrix w = random_matrix(out, in, rng);
    std::vector<double> b(out, 0.1);
    Matrix zs, zp;
    const double ts = seconds_of([&] { kernels::linear_forward_serial(x, w, b, zs); }, 20);
    const double tp = seconds_of([&] { kernels::linear_forward_parallel(x, w, b, zp); }, 20);
    report("linear_forward", ts, tp, bitwise_equal(zs, zp));

    Matrix dws, dwp;
    std::vector<double> dbs(out), dbp(out);
    const Matrix dz = random_matrix(batch, out, rng);
    const double ts2 =
        seconds_of([&] { kernels::linear_backward_params_serial(dz, x, dws, dbs); }, 20);
    const double tp2 =
        seconds_of([&] { kernels::linear_backward_params_parallel(dz, x, dwp, dbp); }, 20);
    report("linear_backward_params", ts2, tp2, bitwise_equal(dws, dwp) && dbs == dbp);

    Matrix dxs, dxp;
    const double ts3 = seconds_of([&] { kernels::linear_backward_input_serial(dz, w, dxs); }, 20);
    const double tp3 =
        seconds_of([&] { kernels::linear_backward_input_parallel(dz, w, dxp); }, 20);
    report("linear_backward_input", ts3, tp3, bitwise_equal(dxs, dxp));
  }

  {
    const int batch = 512, classes = 100;
    const Matrix logits = random_matrix(batch, classes, rng);
    std::vector<int> labels(batch);
    std::uniform_int_distribution<int> lab(0, classes - 1);
    for (int& l : labels) l = lab(rng);
    adr::losses::LossSpec spec;
    spec.kind = adr::losses::LossKind::CeAdr;
    spec.adr = {0.05, 30};
    adr::losses::BatchLoss rs, rp;
    const double ts = seconds_of([&] { rs = adr::losses::batch_eval_serial(spec, logits, labels); }, 10);
    const double tp =
        seconds_of([&] { rp = adr::losses::batch_eval_parallel(spec, logits, labels); }, 10);
    report("batch_loss(ce+adr)", ts, tp,
           bitwise_equal(rs.dlogits, rp.dlogits) && rs.value == rp.value);
  }

  return 0;
}
