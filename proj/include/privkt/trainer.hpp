#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privkt/adversarial.hpp"
#include "privkt/data.hpp"
#include "privkt/distill.hpp"
#include "privkt/net.hpp"
#include "privkt/optim.hpp"
#include "privkt/privacy.hpp"

namespace privkt {

enum class TransferMode { joint, kd_only };

std::string to_string(TransferMode mode);
TransferMode transfer_mode_from_string(std::string_view name);

struct TeacherConfig {
  std::vector<std::size_t> hidden{64};
  std::size_t epochs = 50;
  std::size_t batch_size = 50;
  OptimizerConfig optimizer{};
  std::uint64_t seed = 1;
};

/// Hyperparameters of the three-player transfer. The sampling rate q and
/// dataset size N inside `dp` are filled from the public set at run time
/// (q = B / N).
struct TrainConfig {
  std::size_t epochs = 30;          // T
  std::size_t disc_epochs = 1;      // T_D
  std::size_t student_epochs = 1;   // T_S
  std::size_t batch_size = 50;      // B
  double temperature = 1.0;         // tau
  double alpha = 0.5;               // distillation weight
  double gumbel_temperature = 1.0;  // lambda_g
  double gumbel_anneal_rate = 0.0;  // lambda_t = max(min, lambda_g e^{-rate t})
  double gumbel_min_temperature = 0.1;
  std::size_t gumbel_samples = 1;
  GanMode gan_mode = GanMode::minimax;
  TransferMode mode = TransferMode::joint;
  bool tau_squared_scaling = false;
  bool condition_on_x = false;
  DpConfig dp{0.0, 1.0, 1.1, 1e-5, 0};
  int max_order = 128;
  std::vector<std::size_t> student_hidden{32};
  std::vector<std::size_t> disc_hidden{32};
  OptimizerConfig student_optimizer{};
  OptimizerConfig disc_optimizer{};
  std::uint64_t seed = 0;
  bool verbose = false;

  void validate(std::size_t public_size) const;
  DpConfig resolved_dp(std::size_t public_size) const;
  double effective_alpha() const {
    return mode == TransferMode::kd_only ? 1.0 : alpha;
  }
  double gumbel_temperature_at(std::size_t epoch) const;
  std::size_t batches_per_epoch(std::size_t public_size) const;
};

struct MetricsRecord {
  std::size_t epoch = 0;
  double l_ds = 0.0;        // clean distillation loss, per example
  double l_ds_noisy = 0.0;  // mean sanitized batch loss
  std::optional<double> l_ad_d;
  std::optional<double> l_ad_s;
  double acc_student = 0.0;
  double acc_teacher = 0.0;
  double eps = 0.0;
  double seconds = 0.0;
  std::size_t floor_activations = 0;
};

struct BatchRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double l_ds = 0.0;
  double l_ds_noisy = 0.0;
  std::optional<double> l_ad_s;
  double objective = 0.0;
};

/// Independent generator streams for one run.
struct RunStreams {
  Rng shuffle;       // student batches
  Rng disc_shuffle;  // discriminator batches
  Rng gumbel;
  Rng noise;

  static RunStreams from_seed(std::uint64_t seed);
};

// Fraction of argmax-correct predictions, ties toward the lowest class.
double evaluate(const DenseNet& net, const Dataset& test);

/// Minibatch cross-entropy training on the private split only.
DenseNet pretrain_teacher(const Dataset& private_set, const TeacherConfig& cfg);

// Stacks k copies of the batch, sample-major (row j*B + i).
Tensor repeat_rows(const Tensor& x, std::size_t copies);

struct DiscriminatorGrad {
  double loss_d = 0.0;
  std::vector<double> grad;  // gradient of -loss_d w.r.t. D's parameters
};

/// One discriminator iteration on batch x with pre-drawn Gumbel noise for
/// the teacher and student samples ((k*B) x M each).
DiscriminatorGrad discriminator_batch_grad(const TrainConfig& cfg,
                                           const DenseNet& student,
                                           const DenseNet& teacher,
                                           const DenseNet& disc,
                                           const Tensor& x,
                                           const Tensor& gumbel_teacher,
                                           const Tensor& gumbel_student,
                                           double lambda);

struct StudentGrad {
  double l_ds = 0.0;  // clean, summed over the batch
  SanitizeResult sanitized;
  std::optional<double> l_ad_s;  // loss_S, joint mode only
  double objective = 0.0;  // alpha * L~_DS + (1 - alpha) * loss_S
  std::vector<double> grad;
  std::size_t floor_activations = 0;
};

/// One student iteration with pre-drawn DP noise (length M) and Gumbel
/// noise ((k*B) x M, ignored when the adversarial path is off). Does not
/// touch any accountant.
StudentGrad student_batch_grad(const TrainConfig& cfg, const DpConfig& dp,
                               const DenseNet& student,
                               const DenseNet& teacher, const DenseNet& disc,
                               const Tensor& x, std::vector<double> dp_noise,
                               const Tensor& gumbel_student, double lambda);

/// One pass over the public set updating only the discriminator. Returns
/// the mean loss_D. Charges no privacy budget.
double discriminator_epoch(const TrainConfig& cfg, const DenseNet& student,
                           const DenseNet& teacher, DenseNet& disc,
                           Optimizer& disc_opt, const Dataset& public_set,
                           RunStreams& streams, double lambda);

struct StudentEpochStats {
  double l_ds = 0.0;
  double l_ds_noisy = 0.0;
  std::optional<double> l_ad_s;
  std::size_t floor_activations = 0;
  std::uint64_t sanitize_calls = 0;
  std::vector<BatchRecord> batches;
};

/// One pass over the public set updating only the student. Charges the
/// accountant once per batch.
StudentEpochStats student_epoch(const TrainConfig& cfg, DenseNet& student,
                                Optimizer& student_opt,
                                const DenseNet& teacher, const DenseNet& disc,
                                const Dataset& public_set,
                                RdpAccountant& accountant, RunStreams& streams,
                                double lambda, std::size_t epoch);

struct RunResult {
  DenseNet student;
  DenseNet discriminator;
  std::vector<MetricsRecord> metrics;
  std::vector<BatchRecord> batches;  // only when cfg.verbose
  AccountantState accountant;
  DpConfig dp;
  DpSpend spend;
  std::uint64_t sanitize_calls = 0;
};

/// The full alternating procedure: for each of T epochs, T_D discriminator
/// epochs then T_S student epochs, with metrics after each.
RunResult run(const TrainConfig& cfg, const DenseNet& teacher,
              const Dataset& public_set, const Dataset& test_set);

}  // namespace privkt
