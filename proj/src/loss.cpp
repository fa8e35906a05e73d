#include "privkt/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "privkt/error.hpp"

namespace privkt {

void softmax_inplace(std::span<double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : row) v /= sum;
}

Tensor softmax(const Tensor& logits) {
  Tensor out = logits;
  for (std::size_t r = 0; r < out.rows(); ++r) softmax_inplace(out.row(r));
  return out;
}

Tensor softmax_vjp(const Tensor& probs, const Tensor& grad_probs) {
  Tensor out(probs.rows(), probs.cols());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto p = probs.row(r);
    auto g = grad_probs.row(r);
    double dot = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) dot += p[k] * g[k];
    auto o = out.row(r);
    for (std::size_t k = 0; k < p.size(); ++k) o[k] = p[k] * (g[k] - dot);
  }
  return out;
}

LossAndGrad cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const std::size_t n = logits.rows();
  const std::size_t m = logits.cols();
  if (labels.size() != n) {
    throw InputError("label count does not match batch size");
  }
  LossAndGrad out{0.0, Tensor(n, m)};
  for (std::size_t r = 0; r < n; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= m) {
      throw InputError("label " + std::to_string(y) + " outside [0, " +
                       std::to_string(m) + ")");
    }
    auto z = logits.row(r);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double log_norm = mx + std::log(sum);
    out.value += log_norm - z[y];
    auto g = out.grad.row(r);
    for (std::size_t k = 0; k < m; ++k) {
      g[k] = std::exp(z[k] - log_norm) / static_cast<double>(n);
    }
    g[y] -= 1.0 / static_cast<double>(n);
  }
  out.value /= static_cast<double>(n);
  return out;
}

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(
      std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace privkt
