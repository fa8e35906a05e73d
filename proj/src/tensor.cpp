#include "privkt/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "privkt/error.hpp"

namespace privkt {

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data)
    : shape(std::move(dims)), values(std::move(data)) {
  const std::size_t n = std::accumulate(shape.begin(), shape.end(),
                                        std::size_t{1}, std::multiplies<>());
  if (n != values.size()) {
    throw ConfigError("tensor shape product " + std::to_string(n) +
                      " does not match value count " +
                      std::to_string(values.size()));
  }
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Tensor(0, 0);
  Tensor out(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != out.cols()) {
      throw ConfigError("ragged rows in Tensor::from_rows");
    }
    std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
  }
  return out;
}

std::size_t Tensor::cols() const {
  if (shape.size() < 2) return shape.empty() ? 0 : 1;
  std::size_t c = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) c *= shape[i];
  return c;
}

Tensor Tensor::gather_rows(std::span<const std::size_t> idx) const {
  Tensor out(idx.size(), cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

bool Tensor::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace privkt
