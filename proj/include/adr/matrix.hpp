#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace adr {

/// Dense row-major matrix of doubles. The only tensor shape the library needs.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

  double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  std::span<const double> row_span(int i) const { return {row(i), static_cast<std::size_t>(cols)}; }
  std::span<double> row_span(int i) { return {row(i), static_cast<std::size_t>(cols)}; }

  std::size_t size() const { return a.size(); }
};

}  // namespace adr
