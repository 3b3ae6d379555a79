#pragma once

#include <span>

#include "adr/matrix.hpp"

namespace adr::kernels {

// Runtime switch between the OpenMP kernels and the serial reference path.
// Both paths produce bitwise-identical results: every output element is owned
// by exactly one thread and inner accumulations run in a fixed index order,
// so parallelism never changes the floating-point reduction order.
void set_parallel(bool on);
bool parallel_enabled();

/// Caps the OpenMP thread pool; n <= 0 restores the library default.
void set_threads(int n);
int thread_count();

// Z[B x out] = X[B x in] * W^T + b,  W stored row-major [out x in].
void linear_forward_serial(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& z);
void linear_forward_parallel(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& z);
void linear_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& z);

// dW[out x in] = dZ^T * X, db[out] = column sums of dZ.
void linear_backward_params_serial(const Matrix& dz, const Matrix& x, Matrix& dw,
                                   std::span<double> db);
void linear_backward_params_parallel(const Matrix& dz, const Matrix& x, Matrix& dw,
                                     std::span<double> db);
void linear_backward_params(const Matrix& dz, const Matrix& x, Matrix& dw, std::span<double> db);

// dX[B x in] = dZ[B x out] * W[out x in].
void linear_backward_input_serial(const Matrix& dz, const Matrix& w, Matrix& dx);
void linear_backward_input_parallel(const Matrix& dz, const Matrix& w, Matrix& dx);
void linear_backward_input(const Matrix& dz, const Matrix& w, Matrix& dx);

// A = max(Z, 0) and its mask-gated backward dZ = dA * [Zpre > 0].
void relu_forward(const Matrix& z, Matrix& a);
void relu_backward(const Matrix& da, const Matrix& zpre, Matrix& dz);

}  // namespace adr::kernels
