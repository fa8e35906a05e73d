#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace privkt {

/// Dense row-major array of doubles. Almost everything in the library is a
/// rank-2 batch (rows = examples), so the helpers are matrix-flavoured.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : shape{rows, cols}, values(rows * cols, fill) {}
  Tensor(std::vector<std::size_t> dims, std::vector<double> data);

  static Tensor from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const;
  std::size_t size() const { return values.size(); }

  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return values[r * cols() + c];
  }

  std::span<double> row(std::size_t r) {
    return {values.data() + r * cols(), cols()};
  }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols(), cols()};
  }

  // Copies the listed rows into a new tensor.
  Tensor gather_rows(std::span<const std::size_t> idx) const;

  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

double l2_norm(std::span<const double> v);

}  // namespace privkt
