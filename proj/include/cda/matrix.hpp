#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "cda/errors.hpp"

namespace cda {

/// Dense row-major matrix of doubles. Deliberately minimal: storage plus
/// indexed access; all arithmetic lives in cda::kernels.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), v(r * c, fill) {}

  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  double* row(std::size_t r) { return v.data() + r * cols; }
  const double* row(std::size_t r) const { return v.data() + r * cols; }
  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }

  bool all_finite() const {
    for (const double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline void require_same_shape(const Matrix& a, const Matrix& b,
                               const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch (" +
                     std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                     " vs " + std::to_string(b.rows) + "x" +
                     std::to_string(b.cols) + ")");
}

}  // namespace cda
