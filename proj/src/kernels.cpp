#include "adr/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace adr::kernels {

namespace {
std::atomic<bool> g_parallel{true};

// Small matrices are not worth a parallel region.
constexpr std::size_t kParallelCutoff = 2048;

bool use_parallel(std::size_t work) { return g_parallel.load() && work >= kParallelCutoff; }
}  // namespace

void set_parallel(bool on) { g_parallel.store(on); }
bool parallel_enabled() { return g_parallel.load(); }

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void linear_forward_serial(const Matrix& x, const Matrix& w, std::span<const double> b,
                           Matrix& z) {
  const int batch = x.rows, in = x.cols, out = w.rows;
  z = Matrix(batch, out);
  for (int i = 0; i < batch; ++i) {
    const double* xi = x.row(i);
    double* zi = z.row(i);
    for (int o = 0; o < out; ++o) {
      const double* wo = w.row(o);
      double s = b.empty() ? 0.0 : b[o];
      for (int k = 0; k < in; ++k) s += xi[k] * wo[k];
      zi[o] = s;
    }
  }
}

void linear_forward_parallel(const Matrix& x, const Matrix& w, std::span<const double> b,
                             Matrix& z) {
  const int batch = x.rows, in = x.cols, out = w.rows;
  z = Matrix(batch, out);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < batch; ++i) {
    const double* xi = x.row(i);
    double* zi = z.row(i);
    for (int o = 0; o < out; ++o) {
      const double* wo = w.row(o);
      double s = b.empty() ? 0.0 : b[o];
      for (int k = 0; k < in; ++k) s += xi[k] * wo[k];
      zi[o] = s;
    }
  }
}

void linear_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& z) {
  if (use_parallel(static_cast<std::size_t>(x.rows) * x.cols * w.rows))
    linear_forward_parallel(x, w, b, z);
  else
    linear_forward_serial(x, w, b, z);
}

void linear_backward_params_serial(const Matrix& dz, const Matrix& x, Matrix& dw,
                                   std::span<double> db) {
  const int batch = dz.rows, out = dz.cols, in = x.cols;
  dw = Matrix(out, in);
  for (int o = 0; o < out; ++o) {
    double* dwo = dw.row(o);
    double s = 0.0;
    for (int i = 0; i < batch; ++i) {
      const double g = dz.at(i, o);
      s += g;
      const double* xi = x.row(i);
      for (int k = 0; k < in; ++k) dwo[k] += g * xi[k];
    }
    db[o] = s;
  }
}

void linear_backward_params_parallel(const Matrix& dz, const Matrix& x, Matrix& dw,
                                     std::span<double> db) {
  const int batch = dz.rows, out = dz.cols, in = x.cols;
  dw = Matrix(out, in);
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out; ++o) {
    double* dwo = dw.row(o);
    double s = 0.0;
    for (int i = 0; i < batch; ++i) {
      const double g = dz.at(i, o);
      s += g;
      const double* xi = x.row(i);
      for (int k = 0; k < in; ++k) dwo[k] += g * xi[k];
    }
    db[o] = s;
  }
}

void linear_backward_params(const Matrix& dz, const Matrix& x, Matrix& dw, std::span<double> db) {
  if (use_parallel(static_cast<std::size_t>(dz.rows) * dz.cols * x.cols))
    linear_backward_params_parallel(dz, x, dw, db);
  else
    linear_backward_params_serial(dz, x, dw, db);
}

void linear_backward_input_serial(const Matrix& dz, const Matrix& w, Matrix& dx) {
  const int batch = dz.rows, out = dz.cols, in = w.cols;
  dx = Matrix(batch, in);
  for (int i = 0; i < batch; ++i) {
    const double* gi = dz.row(i);
    double* di = dx.row(i);
    for (int o = 0; o < out; ++o) {
      const double g = gi[o];
      const double* wo = w.row(o);
      for (int k = 0; k < in; ++k) di[k] += g * wo[k];
    }
  }
}

void linear_backward_input_parallel(const Matrix& dz, const Matrix& w, Matrix& dx) {
  const int batch = dz.rows, out = dz.cols, in = w.cols;
  dx = Matrix(batch, in);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < batch; ++i) {
    const double* gi = dz.row(i);
    double* di = dx.row(i);
    for (int o = 0; o < out; ++o) {
      const double g = gi[o];
      const double* wo = w.row(o);
      for (int k = 0; k < in; ++k) di[k] += g * wo[k];
    }
  }
}

void linear_backward_input(const Matrix& dz, const Matrix& w, Matrix& dx) {
  if (use_parallel(static_cast<std::size_t>(dz.rows) * dz.cols * w.cols))
    linear_backward_input_parallel(dz, w, dx);
  else
    linear_backward_input_serial(dz, w, dx);
}

void relu_forward(const Matrix& z, Matrix& a) {
  a = Matrix(z.rows, z.cols);
  const std::size_t n = z.size();
  if (use_parallel(n)) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
      a.a[i] = z.a[i] > 0.0 ? z.a[i] : 0.0;
  } else {
    for (std::size_t i = 0; i < n; ++i) a.a[i] = z.a[i] > 0.0 ? z.a[i] : 0.0;
  }
}

void relu_backward(const Matrix& da, const Matrix& zpre, Matrix& dz) {
  dz = Matrix(da.rows, da.cols);
  const std::size_t n = da.size();
  if (use_parallel(n)) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
      dz.a[i] = zpre.a[i] > 0.0 ? da.a[i] : 0.0;
  } else {
    for (std::size_t i = 0; i < n; ++i) dz.a[i] = zpre.a[i] > 0.0 ? da.a[i] : 0.0;
  }
}

}  // namespace adr::kernels
