#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "privkt/tensor.hpp"

namespace privkt {

// Floor applied inside logarithms. 0 * ln 0 is taken as 0.
inline constexpr double kLogFloor = 1e-12;

struct ProbVector {
  std::vector<double> probs;
  double temperature = 1.0;
};

/// One softened distribution per row, all at the same temperature.
struct ProbBatch {
  Tensor probs;
  double temperature = 1.0;

  std::size_t size() const { return probs.rows(); }
  std::size_t classes() const { return probs.cols(); }
  ProbVector row(std::size_t i) const;
};

/// Per-example KL contribution vectors v^i, one row per example.
struct DistillBatch {
  Tensor per_example;

  std::size_t batch_size() const { return per_example.rows(); }
  std::size_t classes() const { return per_example.cols(); }
};

struct FloorDiagnostics {
  std::size_t floor_activations = 0;
};

// Row i = softmax(z_i / tau).
ProbBatch temperature_softmax(const Tensor& logits, double tau);

// v_k = pT_k * ln(pT_k / pS_k); the components sum to KL(pT || pS).
std::vector<double> per_example_vector(std::span<const double> teacher,
                                       std::span<const double> student,
                                       FloorDiagnostics* diag = nullptr);
std::vector<double> per_example_vector(const ProbVector& teacher,
                                       const ProbVector& student,
                                       FloorDiagnostics* diag = nullptr);

DistillBatch distill_vectors(const ProbBatch& teacher, const ProbBatch& student,
                             FloorDiagnostics* diag = nullptr);

// Sum over examples and classes of v^i.
double distill_loss(const DistillBatch& batch);

/// Gradient of sum_i weight_i * KL(pT_i || pS_i) with respect to the student
/// logits, where pS = softmax(z / tau). Teacher probabilities are constants.
/// With tau_squared_scaling the result is multiplied by tau^2.
Tensor distill_grad_logits(const ProbBatch& teacher, const ProbBatch& student,
                           std::span<const double> weights,
                           bool tau_squared_scaling = false);

double entropy(std::span<const double> probs);

}  // namespace privkt
