#include "privkt/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "privkt/error.hpp"
#include "privkt/loss.hpp"

namespace privkt {

std::string to_string(TransferMode mode) {
  return mode == TransferMode::joint ? "joint" : "kd_only";
}

TransferMode transfer_mode_from_string(std::string_view name) {
  if (name == "joint") return TransferMode::joint;
  if (name == "kd_only") return TransferMode::kd_only;
  throw ConfigError("unknown transfer mode '" + std::string(name) + "'");
}

void TrainConfig::validate(std::size_t public_size) const {
  if (epochs < 1 || disc_epochs < 1 || student_epochs < 1) {
    throw ConfigError("T, T_D and T_S must all be >= 1");
  }
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (public_size == 0) throw ConfigError("public set is empty");
  if (batch_size > public_size) {
    throw ConfigError("batch size exceeds the public set size");
  }
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1]");
  }
  if (!(gumbel_temperature > 0.0) || !(gumbel_min_temperature > 0.0)) {
    throw ConfigError("gumbel temperatures must be positive");
  }
  if (gumbel_anneal_rate < 0.0) {
    throw ConfigError("gumbel anneal rate must be non-negative");
  }
  if (gumbel_samples < 1) throw ConfigError("gumbel samples must be >= 1");
  resolved_dp(public_size).validate();
}

DpConfig TrainConfig::resolved_dp(std::size_t public_size) const {
  DpConfig out = dp;
  out.dataset_size = public_size;
  out.sample_rate =
      static_cast<double>(batch_size) / static_cast<double>(public_size);
  return out;
}

double TrainConfig::gumbel_temperature_at(std::size_t epoch) const {
  if (gumbel_anneal_rate == 0.0) return gumbel_temperature;
  return std::max(gumbel_min_temperature,
                  gumbel_temperature *
                      std::exp(-gumbel_anneal_rate * static_cast<double>(epoch)));
}

std::size_t TrainConfig::batches_per_epoch(std::size_t public_size) const {
  return (public_size + batch_size - 1) / batch_size;
}

RunStreams RunStreams::from_seed(std::uint64_t seed) {
  auto make = [seed](std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32), stream};
    return Rng(seq);
  };
  return {make(1), make(4), make(2), make(3)};
}

double evaluate(const DenseNet& net, const Dataset& test) {
  if (test.size() == 0) throw InputError("evaluation set is empty");
  if (!test.labels) throw InputError("evaluation set has no labels");
  const Tensor logits = net.forward(test.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (static_cast<int>(argmax(logits.row(i))) == (*test.labels)[i]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

namespace {

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n,
                                                       std::size_t batch,
                                                       Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch) {
    out.emplace_back(perm.begin() + start,
                     perm.begin() + std::min(n, start + batch));
  }
  return out;
}

// Sums the k stacked copies of a (k*B) x M gradient back onto B rows.
Tensor fold_rows(const Tensor& stacked, std::size_t rows) {
  Tensor out(rows, stacked.cols());
  for (std::size_t r = 0; r < stacked.rows(); ++r) {
    auto src = stacked.row(r);
    auto dst = out.row(r % rows);
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
  }
  return out;
}

Tensor disc_inputs(const TrainConfig& cfg, const Tensor& relaxed,
                   const Tensor& x) {
  if (!cfg.condition_on_x) return relaxed;
  const Tensor xr = repeat_rows(x, relaxed.rows() / x.rows());
  Tensor out(relaxed.rows(), relaxed.cols() + xr.cols());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto dst = out.row(r);
    auto y = relaxed.row(r);
    auto xv = xr.row(r);
    std::copy(y.begin(), y.end(), dst.begin());
    std::copy(xv.begin(), xv.end(), dst.begin() + y.size());
  }
  return out;
}

// dLoss/dOutput for the discriminator given dLoss/dpD, zeroed where the
// clamp was active.
Tensor disc_output_grad(const DiscriminatorBatch& d,
                        const std::vector<double>& dloss_dp) {
  Tensor g(d.probs.size(), 1);
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    g.values[i] = d.clamped[i] ? 0.0 : dloss_dp[i];
  }
  return g;
}

void check_gumbel(const Tensor& g, std::size_t rows, std::size_t classes) {
  if (g.rows() != rows || g.cols() != classes) {
    throw ConfigError("gumbel noise must be (samples * B) x M");
  }
}

}  // namespace

Tensor repeat_rows(const Tensor& x, std::size_t copies) {
  Tensor out(x.rows() * copies, x.cols());
  for (std::size_t j = 0; j < copies; ++j) {
    std::copy(x.values.begin(), x.values.end(),
              out.values.begin() + static_cast<std::ptrdiff_t>(j * x.size()));
  }
  return out;
}

DenseNet pretrain_teacher(const Dataset& private_set,
                          const TeacherConfig& cfg) {
  if (private_set.size() == 0) throw ConfigError("private split is empty");
  if (!private_set.labels) throw ConfigError("private split has no labels");
  if (cfg.batch_size == 0) throw ConfigError("teacher batch size must be >= 1");
  private_set.validate();
  const auto spec = NetSpec::mlp(private_set.dim(), cfg.hidden,
                                 static_cast<std::size_t>(private_set.classes));
  DenseNet net = init_net(spec, cfg.seed);
  Optimizer opt(cfg.optimizer, net.param_count());
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  GradTape tape;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    for (const auto& idx :
         shuffled_batches(private_set.size(), cfg.batch_size, rng)) {
      const Tensor x = private_set.features.gather_rows(idx);
      std::vector<int> y;
      y.reserve(idx.size());
      for (std::size_t i : idx) y.push_back((*private_set.labels)[i]);
      const Tensor logits = net.forward(x, tape);
      const auto ce = cross_entropy(logits, y);
      const auto grads = net.backward(tape, ce.grad);
      opt.step(net.parameters(), grads.params);
    }
  }
  return net;
}

DiscriminatorGrad discriminator_batch_grad(const TrainConfig& cfg,
                                           const DenseNet& student,
                                           const DenseNet& teacher,
                                           const DenseNet& disc,
                                           const Tensor& x,
                                           const Tensor& gumbel_teacher,
                                           const Tensor& gumbel_student,
                                           double lambda) {
  const std::size_t k = cfg.gumbel_samples;
  const Tensor pt = repeat_rows(softmax(teacher.forward(x)), k);
  const Tensor ps = repeat_rows(softmax(student.forward(x)), k);
  check_gumbel(gumbel_teacher, pt.rows(), pt.cols());
  check_gumbel(gumbel_student, ps.rows(), ps.cols());

  const Tensor yt = gumbel_relax_batch(pt, gumbel_teacher, lambda);
  const Tensor ys = gumbel_relax_batch(ps, gumbel_student, lambda);
  const auto dt = discriminate_batch(disc, disc_inputs(cfg, yt, x));
  const auto ds = discriminate_batch(disc, disc_inputs(cfg, ys, x));

  const auto losses = gan_losses(dt.probs, ds.probs, cfg.gan_mode);
  const auto lg = gan_loss_grads(dt.probs, ds.probs, cfg.gan_mode);
  const auto gt = disc.backward(dt.tape, disc_output_grad(dt, lg.d_loss_d_teacher));
  const auto gs = disc.backward(ds.tape, disc_output_grad(ds, lg.d_loss_d_student));

  DiscriminatorGrad out;
  out.loss_d = losses.loss_d;
  out.grad.resize(disc.param_count());
  for (std::size_t i = 0; i < out.grad.size(); ++i) {
    out.grad[i] = -(gt.params[i] + gs.params[i]);
  }
  return out;
}

StudentGrad student_batch_grad(const TrainConfig& cfg, const DpConfig& dp,
                               const DenseNet& student,
                               const DenseNet& teacher, const DenseNet& disc,
                               const Tensor& x, std::vector<double> dp_noise,
                               const Tensor& gumbel_student, double lambda) {
  const double alpha = cfg.effective_alpha();
  const bool adversarial = cfg.mode == TransferMode::joint;
  const std::size_t b = x.rows();

  GradTape tape;
  const Tensor zs = student.forward(x, tape);
  const ProbBatch pt = temperature_softmax(teacher.forward(x), cfg.temperature);
  const ProbBatch ps = temperature_softmax(zs, cfg.temperature);

  StudentGrad out;
  FloorDiagnostics diag;
  const DistillBatch vectors = distill_vectors(pt, ps, &diag);
  out.floor_activations = diag.floor_activations;
  out.l_ds = distill_loss(vectors);
  out.sanitized = sanitize_with_noise(vectors, dp, std::move(dp_noise));

  // Clip scales and 1/(qN) enter as constants; noise has no gradient.
  const double inv_qn =
      1.0 / (dp.sample_rate * static_cast<double>(dp.dataset_size));
  std::vector<double> weights(b);
  for (std::size_t i = 0; i < b; ++i) {
    weights[i] = alpha * inv_qn * out.sanitized.clip_scales[i];
  }
  Tensor grad_z = distill_grad_logits(pt, ps, weights, cfg.tau_squared_scaling);
  out.objective = alpha * out.sanitized.noisy_loss;

  if (adversarial) {
    const std::size_t k = cfg.gumbel_samples;
    const Tensor probs = repeat_rows(softmax(zs), k);
    check_gumbel(gumbel_student, probs.rows(), probs.cols());
    const Tensor ys = gumbel_relax_batch(probs, gumbel_student, lambda);
    const auto ds = discriminate_batch(disc, disc_inputs(cfg, ys, x));
    out.l_ad_s = student_gan_loss(ds.probs, cfg.gan_mode);
    out.objective += (1.0 - alpha) * *out.l_ad_s;

    std::vector<double> dloss = student_gan_loss_grad(ds.probs, cfg.gan_mode);
    for (double& v : dloss) v *= (1.0 - alpha);
    const auto gd = disc.backward(ds.tape, disc_output_grad(ds, dloss));
    Tensor grad_y(ys.rows(), ys.cols());
    for (std::size_t r = 0; r < ys.rows(); ++r) {
      auto src = gd.input.row(r);
      std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(ys.cols()),
                grad_y.row(r).begin());
    }
    const Tensor gz = fold_rows(gumbel_relax_vjp(probs, ys, grad_y, lambda), b);
    for (std::size_t i = 0; i < grad_z.size(); ++i) {
      grad_z.values[i] += gz.values[i];
    }
  }

  out.grad = student.backward(tape, grad_z).params;
  return out;
}

double discriminator_epoch(const TrainConfig& cfg, const DenseNet& student,
                           const DenseNet& teacher, DenseNet& disc,
                           Optimizer& disc_opt, const Dataset& public_set,
                           RunStreams& streams, double lambda) {
  double total = 0.0;
  std::size_t count = 0;
  const std::size_t m = teacher.output_dim();
  for (const auto& idx : shuffled_batches(public_set.size(), cfg.batch_size,
                                          streams.disc_shuffle)) {
    const Tensor x = public_set.features.gather_rows(idx);
    const std::size_t rows = idx.size() * cfg.gumbel_samples;
    const Tensor gt = draw_gumbel_noise(rows, m, streams.gumbel);
    const Tensor gs = draw_gumbel_noise(rows, m, streams.gumbel);
    const auto g =
        discriminator_batch_grad(cfg, student, teacher, disc, x, gt, gs, lambda);
    disc_opt.step(disc.parameters(), g.grad);
    total += g.loss_d;
    ++count;
  }
  return total / static_cast<double>(count);
}

StudentEpochStats student_epoch(const TrainConfig& cfg, DenseNet& student,
                                Optimizer& student_opt,
                                const DenseNet& teacher, const DenseNet& disc,
                                const Dataset& public_set,
                                RdpAccountant& accountant, RunStreams& streams,
                                double lambda, std::size_t epoch) {
  const DpConfig dp = cfg.resolved_dp(public_set.size());
  const auto& acfg = accountant.config();
  if (acfg.sample_rate != dp.sample_rate ||
      acfg.noise_multiplier != dp.noise_multiplier) {
    throw ConfigError("accountant does not match the training DP config");
  }
  const std::size_t m = teacher.output_dim();
  std::normal_distribution<double> gauss(0.0, dp.sigma());
  StudentEpochStats stats;
  double l_ad = 0.0;
  std::size_t batches = 0;
  for (const auto& idx : shuffled_batches(public_set.size(), cfg.batch_size,
                                          streams.shuffle)) {
    const Tensor x = public_set.features.gather_rows(idx);
    std::vector<double> noise(m);
    for (double& v : noise) v = gauss(streams.noise);
    Tensor gumbel;
    if (cfg.mode == TransferMode::joint) {
      gumbel = draw_gumbel_noise(idx.size() * cfg.gumbel_samples, m,
                                 streams.gumbel);
    }
    const auto g = student_batch_grad(cfg, dp, student, teacher, disc, x,
                                      std::move(noise), gumbel, lambda);
    accountant.record_queries(1);
    student_opt.step(student.parameters(), g.grad);

    stats.l_ds += g.l_ds;
    stats.l_ds_noisy += g.sanitized.noisy_loss;
    stats.floor_activations += g.floor_activations;
    ++stats.sanitize_calls;
    if (g.l_ad_s) l_ad += *g.l_ad_s;
    if (cfg.verbose) {
      stats.batches.push_back(
          {epoch, batches, g.l_ds / static_cast<double>(idx.size()),
           g.sanitized.noisy_loss,
           g.l_ad_s, g.objective});
    }
    ++batches;
  }
  stats.l_ds /= static_cast<double>(public_set.size());
  stats.l_ds_noisy /= static_cast<double>(batches);
  if (cfg.mode == TransferMode::joint) {
    stats.l_ad_s = l_ad / static_cast<double>(batches);
  }
  return stats;
}

RunResult run(const TrainConfig& cfg, const DenseNet& teacher,
              const Dataset& public_set, const Dataset& test_set) {
  cfg.validate(public_set.size());
  if (public_set.dim() != teacher.input_dim()) {
    throw ConfigError("public features do not match the teacher input width");
  }
  const std::size_t m = teacher.output_dim();
  const std::size_t d = teacher.input_dim();
  const DpConfig dp = cfg.resolved_dp(public_set.size());
  const bool adversarial = cfg.mode == TransferMode::joint;

  RunResult result;
  result.dp = dp;
  result.student = init_net(NetSpec::mlp(d, cfg.student_hidden, m),
                            cfg.seed * 2 + 1);
  if (adversarial) {
    const std::size_t width = m + (cfg.condition_on_x ? d : 0);
    result.discriminator = init_net(
        NetSpec::mlp(width, cfg.disc_hidden, 1, Activation::sigmoid),
        cfg.seed * 2 + 2);
  }
  Optimizer student_opt(cfg.student_optimizer, result.student.param_count());
  Optimizer disc_opt(cfg.disc_optimizer, result.discriminator.param_count());
  RdpAccountant accountant(dp, default_orders(cfg.max_order));
  RunStreams streams = RunStreams::from_seed(cfg.seed);
  const double teacher_acc = evaluate(teacher, test_set);

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t t = 0; t < cfg.epochs; ++t) {
    const double lambda = cfg.gumbel_temperature_at(t);
    MetricsRecord rec;
    rec.epoch = t + 1;
    if (adversarial) {
      double loss_d = 0.0;
      for (std::size_t e = 0; e < cfg.disc_epochs; ++e) {
        loss_d = discriminator_epoch(cfg, result.student, teacher,
                                     result.discriminator, disc_opt,
                                     public_set, streams, lambda);
      }
      rec.l_ad_d = loss_d;
    }
    for (std::size_t e = 0; e < cfg.student_epochs; ++e) {
      auto s = student_epoch(cfg, result.student, student_opt, teacher,
                             result.discriminator, public_set, accountant,
                             streams, lambda, t + 1);
      rec.l_ds = s.l_ds;
      rec.l_ds_noisy = s.l_ds_noisy;
      rec.l_ad_s = s.l_ad_s;
      rec.floor_activations += s.floor_activations;
      result.sanitize_calls += s.sanitize_calls;
      if (cfg.verbose) {
        result.batches.insert(result.batches.end(), s.batches.begin(),
                              s.batches.end());
      }
    }
    rec.acc_student = evaluate(result.student, test_set);
    rec.acc_teacher = teacher_acc;
    rec.eps = accountant.spend().epsilon;
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    result.metrics.push_back(rec);
  }
  result.accountant = accountant.state();
  result.spend = accountant.spend();
  return result;
}

}  // namespace privkt
