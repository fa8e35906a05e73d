#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "privkt/tensor.hpp"

namespace privkt {

struct LossAndGrad {
  double value = 0.0;
  Tensor grad;  // dLoss/dLogits
};

// Row-wise softmax with max subtraction.
Tensor softmax(const Tensor& logits);
void softmax_inplace(std::span<double> row);

// Vector-Jacobian product of a row-wise softmax: given the softmax output p
// and dL/dp, returns dL/dz with dz_k = p_k (g_k - <p, g>).
Tensor softmax_vjp(const Tensor& probs, const Tensor& grad_probs);

// Mean negative log-likelihood of the labels under softmax(logits).
LossAndGrad cross_entropy(const Tensor& logits, std::span<const int> labels);

// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> row);

}  // namespace privkt
