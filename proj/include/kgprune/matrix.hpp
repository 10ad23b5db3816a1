#pragma once

#include <cstddef>
#include <vector>

namespace kgprune {

/// Dense row-major real matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool column_is_zero(std::size_t j) const {
    for (std::size_t i = 0; i < rows; ++i)
      if ((*this)(i, j) != 0.0) return false;
    return true;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace kgprune
