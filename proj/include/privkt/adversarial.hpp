#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "privkt/distill.hpp"
#include "privkt/net.hpp"
#include "privkt/privacy.hpp"

namespace privkt {

// Discriminator outputs are clamped into [eps, 1 - eps].
inline constexpr double kDiscriminatorClamp = 1e-7;

enum class SampleSource { teacher, student };

struct RelaxedSample {
  std::vector<double> y;
  SampleSource source = SampleSource::student;
  double temperature = 1.0;
};

enum class GanMode { minimax, nonsaturating };

std::string to_string(GanMode mode);
GanMode gan_mode_from_string(std::string_view name);

struct GanLosses {
  double loss_d = 0.0;  // maximized by the discriminator
  double loss_s = 0.0;  // minimized by the student
};

// -ln(-ln U), U ~ U(0, 1).
double draw_gumbel(Rng& rng);
Tensor draw_gumbel_noise(std::size_t rows, std::size_t cols, Rng& rng);

/// softmax((ln p + g) / lambda) for pre-drawn Gumbel noise g.
std::vector<double> gumbel_relax(std::span<const double> probs,
                                 std::span<const double> gumbel,
                                 double lambda);

RelaxedSample gumbel_sample(const ProbVector& p, double lambda, Rng& rng,
                            SampleSource source = SampleSource::student);

/// Row-wise relaxation of a batch of distributions.
Tensor gumbel_relax_batch(const Tensor& probs, const Tensor& gumbel,
                          double lambda);

/// Pulls dL/dy back through the relaxation and the softmax that produced
/// probs, giving dL/dlogits.
Tensor gumbel_relax_vjp(const Tensor& probs, const Tensor& relaxed,
                        const Tensor& grad_relaxed, double lambda);

struct DiscriminatorBatch {
  std::vector<double> probs;    // clamped pD per row
  std::vector<bool> clamped;    // clamp was active (zero gradient)
  GradTape tape;
};

double discriminate(const DenseNet& disc, const RelaxedSample& sample);
DiscriminatorBatch discriminate_batch(const DenseNet& disc,
                                      const Tensor& inputs);

GanLosses gan_losses(std::span<const double> pd_teacher,
                     std::span<const double> pd_student, GanMode mode);

struct GanLossGrads {
  std::vector<double> d_loss_d_teacher;  // dLoss_D / dpD(y_T)
  std::vector<double> d_loss_d_student;  // dLoss_D / dpD(y_S)
  std::vector<double> d_loss_s_student;  // dLoss_S / dpD(y_S)
};

GanLossGrads gan_loss_grads(std::span<const double> pd_teacher,
                            std::span<const double> pd_student, GanMode mode);

// The student's half of the objective (loss_S) and its gradient alone.
double student_gan_loss(std::span<const double> pd_student, GanMode mode);
std::vector<double> student_gan_loss_grad(std::span<const double> pd_student,
                                          GanMode mode);

}  // namespace privkt
