#include "privkt/distill.hpp"

#include <cmath>

#include "privkt/error.hpp"
#include "privkt/loss.hpp"

namespace privkt {

ProbVector ProbBatch::row(std::size_t i) const {
  auto r = probs.row(i);
  return {std::vector<double>(r.begin(), r.end()), temperature};
}

ProbBatch temperature_softmax(const Tensor& logits, double tau) {
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  ProbBatch out{logits, tau};
  for (double& v : out.probs.values) v /= tau;
  for (std::size_t r = 0; r < out.probs.rows(); ++r) {
    softmax_inplace(out.probs.row(r));
  }
  return out;
}

std::vector<double> per_example_vector(std::span<const double> teacher,
                                       std::span<const double> student,
                                       FloorDiagnostics* diag) {
  if (teacher.size() != student.size()) {
    throw ConfigError("teacher and student class counts differ");
  }
  std::vector<double> v(teacher.size(), 0.0);
  for (std::size_t k = 0; k < teacher.size(); ++k) {
    const double pt = teacher[k];
    if (pt <= 0.0) continue;
    double ps = student[k];
    if (ps < kLogFloor) {
      ps = kLogFloor;
      if (diag) ++diag->floor_activations;
    }
    v[k] = pt * (std::log(std::max(pt, kLogFloor)) - std::log(ps));
  }
  return v;
}

std::vector<double> per_example_vector(const ProbVector& teacher,
                                       const ProbVector& student,
                                       FloorDiagnostics* diag) {
  if (teacher.temperature != student.temperature) {
    throw ConfigError("teacher and student temperatures differ");
  }
  return per_example_vector(std::span<const double>(teacher.probs),
                            std::span<const double>(student.probs), diag);
}

DistillBatch distill_vectors(const ProbBatch& teacher, const ProbBatch& student,
                             FloorDiagnostics* diag) {
  if (teacher.temperature != student.temperature) {
    throw ConfigError("teacher and student temperatures differ");
  }
  if (teacher.size() != student.size() ||
      teacher.classes() != student.classes()) {
    throw ConfigError("teacher and student batches differ in shape");
  }
  DistillBatch out{Tensor(teacher.size(), teacher.classes())};
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    auto v = per_example_vector(teacher.probs.row(i), student.probs.row(i),
                                diag);
    std::copy(v.begin(), v.end(), out.per_example.row(i).begin());
  }
  return out;
}

double distill_loss(const DistillBatch& batch) {
  if (batch.batch_size() == 0) {
    throw InputError("distillation loss of an empty batch");
  }
  double total = 0.0;
  for (double v : batch.per_example.values) total += v;
  return total;
}

Tensor distill_grad_logits(const ProbBatch& teacher, const ProbBatch& student,
                           std::span<const double> weights,
                           bool tau_squared_scaling) {
  const std::size_t n = student.size();
  const std::size_t m = student.classes();
  if (weights.size() != n || teacher.size() != n || teacher.classes() != m) {
    throw ConfigError("distillation gradient shape mismatch");
  }
  Tensor grad_probs(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      const double ps = student.probs.at(i, k);
      if (ps < kLogFloor) continue;
      grad_probs.at(i, k) = -weights[i] * teacher.probs.at(i, k) / ps;
    }
  }
  Tensor grad = softmax_vjp(student.probs, grad_probs);
  const double tau = student.temperature;
  const double scale = tau_squared_scaling ? tau : 1.0 / tau;
  for (double& g : grad.values) g *= scale;
  return grad;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace privkt
