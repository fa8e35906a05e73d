#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "privkt/distill.hpp"

namespace privkt {

using Rng = std::mt19937_64;

/// Sampled-Gaussian parameters for one sanitized query. sigma = m * C.
struct DpConfig {
  double sample_rate = 1.0;       // q
  double clip = 1.0;              // C
  double noise_multiplier = 1.0;  // m
  double delta = 1e-5;
  std::size_t dataset_size = 1;   // N

  double sigma() const { return noise_multiplier * clip; }
  void validate() const;
};

struct AccountantState {
  std::vector<double> orders;
  std::vector<double> eps_rdp;
  std::uint64_t steps = 0;
};

struct DpSpend {
  double epsilon = 0.0;
  double delta = 0.0;
  double argmin_order = 0.0;
};

// Integers 2..max_order.
std::vector<double> default_orders(int max_order = 128);

AccountantState make_accountant(std::vector<double> orders);

// x * min(1, C / ||x||).
std::vector<double> clip_l2(std::span<const double> v, double clip);

/// RDP of one sampled Gaussian query at each (integer) order.
std::vector<double> rdp_sgm_step(double sample_rate, double noise_multiplier,
                                 std::span<const double> orders);

AccountantState compose(const AccountantState& state,
                        std::span<const double> per_step,
                        std::uint64_t n_steps);

// eps = min_a [ eps_rdp(a) + ln(1/delta) / (a - 1) ].
DpSpend to_dp(const AccountantState& state, double delta);

/// Accountant bound to one DpConfig: caches the per-query RDP curve so each
/// sanitized query costs one vector add.
class RdpAccountant {
 public:
  explicit RdpAccountant(const DpConfig& cfg,
                         std::vector<double> orders = default_orders());

  void record_queries(std::uint64_t n = 1);
  const AccountantState& state() const { return state_; }
  const std::vector<double>& per_step() const { return per_step_; }
  const DpConfig& config() const { return cfg_; }
  DpSpend spend() const { return to_dp(state_, cfg_.delta); }

 private:
  DpConfig cfg_;
  std::vector<double> per_step_;
  AccountantState state_;
};

struct SanitizeResult {
  double noisy_loss = 0.0;            // sum of components of v~
  double clipped_loss = 0.0;          // same without noise
  std::vector<double> noisy_vector;   // v~ = (sum clip(v^i) + noise) / (qN)
  std::vector<double> noise;          // raw N(0, sigma^2) draws
  std::vector<double> clip_scales;    // min(1, C/||v^i||) per example
};

/// Clip each per-example vector, sum, add the given noise and scale by
/// 1/(qN). Deterministic core shared by sanitize() and the tests.
SanitizeResult sanitize_with_noise(const DistillBatch& batch,
                                   const DpConfig& cfg,
                                   std::vector<double> noise);

/// Draws the noise from rng and charges the accountant for one query. The
/// accountant must have been built for the same (q, m).
SanitizeResult sanitize(const DistillBatch& batch, const DpConfig& cfg,
                        RdpAccountant& accountant, Rng& rng);

using Density = std::function<double(double)>;

/// (1/(a-1)) ln integral q(x) (p(x)/q(x))^a dx over [lo, hi] by adaptive
/// Gauss-Kronrod quadrature. A test oracle for the accountant.
double renyi_divergence_numeric(const Density& p, const Density& q,
                                double order, double lo, double hi);

/// Same divergence from log-densities. The integrand is shifted by its
/// largest value on a probe grid, so orders and separations whose integral
/// overflows a double stay computable.
double renyi_divergence_numeric_log(const Density& log_p, const Density& log_q,
                                    double order, double lo, double hi);

}  // namespace privkt
