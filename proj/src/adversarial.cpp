#include "privkt/adversarial.hpp"

#include <cmath>
#include <limits>

#include "privkt/error.hpp"
#include "privkt/loss.hpp"

namespace privkt {

std::string to_string(GanMode mode) {
  return mode == GanMode::minimax ? "minimax" : "nonsaturating";
}

GanMode gan_mode_from_string(std::string_view name) {
  if (name == "minimax") return GanMode::minimax;
  if (name == "nonsaturating") return GanMode::nonsaturating;
  throw ConfigError("unknown gan mode '" + std::string(name) + "'");
}

double draw_gumbel(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  while (u <= 0.0) u = unif(rng);
  return -std::log(-std::log(u));
}

Tensor draw_gumbel_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor g(rows, cols);
  for (double& v : g.values) v = draw_gumbel(rng);
  return g;
}

std::vector<double> gumbel_relax(std::span<const double> probs,
                                 std::span<const double> gumbel,
                                 double lambda) {
  if (!(lambda > 0.0)) {
    throw ConfigError("relaxation temperature must be positive");
  }
  if (probs.size() != gumbel.size()) {
    throw ConfigError("gumbel noise length does not match class count");
  }
  std::vector<double> y(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) {
    y[k] = (std::log(std::max(probs[k], kLogFloor)) + gumbel[k]) / lambda;
  }
  softmax_inplace(y);
  return y;
}

RelaxedSample gumbel_sample(const ProbVector& p, double lambda, Rng& rng,
                            SampleSource source) {
  std::vector<double> g(p.probs.size());
  for (double& v : g) v = draw_gumbel(rng);
  return {gumbel_relax(p.probs, g, lambda), source, lambda};
}

Tensor gumbel_relax_batch(const Tensor& probs, const Tensor& gumbel,
                          double lambda) {
  if (probs.shape != gumbel.shape) {
    throw ConfigError("gumbel noise shape does not match probabilities");
  }
  Tensor y(probs.rows(), probs.cols());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto yr = gumbel_relax(probs.row(r), gumbel.row(r), lambda);
    std::copy(yr.begin(), yr.end(), y.row(r).begin());
  }
  return y;
}

Tensor gumbel_relax_vjp(const Tensor& probs, const Tensor& relaxed,
                        const Tensor& grad_relaxed, double lambda) {
  // y = softmax(s / lambda), s = ln p, p = softmax(z)
  Tensor grad_s = softmax_vjp(relaxed, grad_relaxed);
  Tensor grad_p(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.values.size(); ++i) {
    const double p = probs.values[i];
    if (p >= kLogFloor) grad_p.values[i] = grad_s.values[i] / (lambda * p);
  }
  return softmax_vjp(probs, grad_p);
}

DiscriminatorBatch discriminate_batch(const DenseNet& disc,
                                      const Tensor& inputs) {
  if (disc.output_dim() != 1 ||
      disc.layers().back().activation != Activation::sigmoid) {
    throw ConfigError("discriminator must have a single sigmoid output");
  }
  DiscriminatorBatch out;
  Tensor raw = disc.forward(inputs, out.tape);
  out.probs.reserve(raw.rows());
  out.clamped.reserve(raw.rows());
  for (double p : raw.values) {
    const double c =
        std::clamp(p, kDiscriminatorClamp, 1.0 - kDiscriminatorClamp);
    out.probs.push_back(c);
    out.clamped.push_back(c != p);
  }
  return out;
}

double discriminate(const DenseNet& disc, const RelaxedSample& sample) {
  Tensor in(1, sample.y.size());
  std::copy(sample.y.begin(), sample.y.end(), in.values.begin());
  return discriminate_batch(disc, in).probs.front();
}

namespace {

double mean_log(std::span<const double> v, bool complement) {
  double s = 0.0;
  for (double p : v) s += std::log(complement ? 1.0 - p : p);
  return s / static_cast<double>(v.size());
}

}  // namespace

double student_gan_loss(std::span<const double> pd_student, GanMode mode) {
  if (pd_student.empty()) {
    throw InputError("adversarial loss needs nonempty sample batches");
  }
  return mode == GanMode::minimax ? mean_log(pd_student, true)
                                  : -mean_log(pd_student, false);
}

std::vector<double> student_gan_loss_grad(std::span<const double> pd_student,
                                          GanMode mode) {
  if (pd_student.empty()) {
    throw InputError("adversarial loss needs nonempty sample batches");
  }
  const double ns = static_cast<double>(pd_student.size());
  std::vector<double> g;
  g.reserve(pd_student.size());
  for (double p : pd_student) {
    g.push_back(mode == GanMode::minimax ? -1.0 / (ns * (1.0 - p))
                                         : -1.0 / (ns * p));
  }
  return g;
}

GanLosses gan_losses(std::span<const double> pd_teacher,
                     std::span<const double> pd_student, GanMode mode) {
  if (pd_teacher.empty() || pd_student.empty()) {
    throw InputError("adversarial loss needs nonempty sample batches");
  }
  GanLosses out;
  out.loss_d = mean_log(pd_teacher, false) + mean_log(pd_student, true);
  out.loss_s = student_gan_loss(pd_student, mode);
  return out;
}

GanLossGrads gan_loss_grads(std::span<const double> pd_teacher,
                            std::span<const double> pd_student, GanMode mode) {
  if (pd_teacher.empty() || pd_student.empty()) {
    throw InputError("adversarial loss needs nonempty sample batches");
  }
  const double nt = static_cast<double>(pd_teacher.size());
  const double ns = static_cast<double>(pd_student.size());
  GanLossGrads g;
  for (double p : pd_teacher) g.d_loss_d_teacher.push_back(1.0 / (nt * p));
  for (double p : pd_student) {
    g.d_loss_d_student.push_back(-1.0 / (ns * (1.0 - p)));
  }
  g.d_loss_s_student = student_gan_loss_grad(pd_student, mode);
  return g;
}

}  // namespace privkt
