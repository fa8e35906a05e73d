#include "privkt/privacy.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "privkt/error.hpp"

namespace privkt {

void DpConfig::validate() const {
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    throw ConfigError("sampling probability q must lie in (0, 1]");
  }
  if (!(clip > 0.0)) throw ConfigError("clip threshold C must be positive");
  if (!(noise_multiplier > 0.0)) {
    throw ConfigError("noise multiplier m must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("delta must lie in (0, 1)");
  }
  if (dataset_size == 0) throw ConfigError("dataset size N must be positive");
}

std::vector<double> default_orders(int max_order) {
  if (max_order < 2) throw ConfigError("max Renyi order must be >= 2");
  std::vector<double> orders;
  for (int a = 2; a <= max_order; ++a) orders.push_back(a);
  return orders;
}

AccountantState make_accountant(std::vector<double> orders) {
  AccountantState s;
  s.eps_rdp.assign(orders.size(), 0.0);
  s.orders = std::move(orders);
  return s;
}

std::vector<double> clip_l2(std::span<const double> v, double clip) {
  if (!(clip > 0.0)) throw ConfigError("clip threshold must be positive");
  const double norm = l2_norm(v);
  const double scale = norm > clip ? clip / norm : 1.0;
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x *= scale;
  return out;
}

namespace {

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// ln sum_k binom(a,k) (1-q)^(a-k) q^k exp((k^2-k)/(2 m^2)).
double log_sgm_moment(int order, double q, double m) {
  const double lq = std::log(q);
  const double l1q = std::log1p(-q);
  const double two_m2 = 2.0 * m * m;
  const double a = order;
  const double lga = std::lgamma(a + 1.0);
  double acc = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= order; ++k) {
    const double kk = k;
    const double log_binom =
        lga - std::lgamma(kk + 1.0) - std::lgamma(a - kk + 1.0);
    double term = log_binom + (kk * kk - kk) / two_m2;
    if (k > 0) term += kk * lq;
    if (k < order) term += (a - kk) * l1q;
    acc = log_add(acc, term);
  }
  return acc;
}

}  // namespace

std::vector<double> rdp_sgm_step(double sample_rate, double noise_multiplier,
                                 std::span<const double> orders) {
  if (!(noise_multiplier > 0.0)) {
    throw ConfigError("noise multiplier must be positive");
  }
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    throw ConfigError("sampling probability must lie in (0, 1]");
  }
  std::vector<double> eps;
  eps.reserve(orders.size());
  for (double a : orders) {
    if (a < 2.0 || std::floor(a) != a) {
      throw ConfigError("Renyi orders must be integers >= 2, got " +
                        std::to_string(a));
    }
    if (sample_rate == 1.0) {
      eps.push_back(a / (2.0 * noise_multiplier * noise_multiplier));
      continue;
    }
    const double v =
        log_sgm_moment(static_cast<int>(a), sample_rate, noise_multiplier) /
        (a - 1.0);
    eps.push_back(std::max(0.0, v));
  }
  return eps;
}

AccountantState compose(const AccountantState& state,
                        std::span<const double> per_step,
                        std::uint64_t n_steps) {
  if (per_step.size() != state.orders.size() ||
      state.eps_rdp.size() != state.orders.size()) {
    throw ConfigError("RDP order grids do not match");
  }
  AccountantState out = state;
  const double n = static_cast<double>(n_steps);
  for (std::size_t i = 0; i < per_step.size(); ++i) {
    out.eps_rdp[i] += n * per_step[i];
  }
  out.steps += n_steps;
  return out;
}

DpSpend to_dp(const AccountantState& state, double delta) {
  if (state.orders.empty() || state.eps_rdp.size() != state.orders.size()) {
    throw UsageError("conversion requested from an empty accountant");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("delta must lie in (0, 1)");
  }
  const double log_inv_delta = -std::log(delta);
  DpSpend best{std::numeric_limits<double>::infinity(), delta, 0.0};
  for (std::size_t i = 0; i < state.orders.size(); ++i) {
    const double a = state.orders[i];
    const double eps = state.eps_rdp[i] + log_inv_delta / (a - 1.0);
    if (eps < best.epsilon) {
      best.epsilon = eps;
      best.argmin_order = a;
    }
  }
  return best;
}

RdpAccountant::RdpAccountant(const DpConfig& cfg, std::vector<double> orders)
    : cfg_(cfg) {
  cfg_.validate();
  per_step_ = rdp_sgm_step(cfg_.sample_rate, cfg_.noise_multiplier, orders);
  state_ = make_accountant(std::move(orders));
}

void RdpAccountant::record_queries(std::uint64_t n) {
  state_ = compose(state_, per_step_, n);
}

SanitizeResult sanitize_with_noise(const DistillBatch& batch,
                                   const DpConfig& cfg,
                                   std::vector<double> noise) {
  cfg.validate();
  const std::size_t m = batch.classes();
  if (batch.batch_size() == 0) throw InputError("sanitize of an empty batch");
  if (noise.size() != m) throw ConfigError("noise length must equal M");

  SanitizeResult out;
  out.noise = std::move(noise);
  out.clip_scales.reserve(batch.batch_size());
  std::vector<double> sum(m, 0.0);
  for (std::size_t i = 0; i < batch.batch_size(); ++i) {
    auto v = batch.per_example.row(i);
    const double norm = l2_norm(v);
    const double scale = norm > cfg.clip ? cfg.clip / norm : 1.0;
    out.clip_scales.push_back(scale);
    for (std::size_t k = 0; k < m; ++k) sum[k] += scale * v[k];
  }
  const double inv = 1.0 / (cfg.sample_rate *
                            static_cast<double>(cfg.dataset_size));
  out.noisy_vector.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    out.noisy_vector[k] = inv * (sum[k] + out.noise[k]);
    out.noisy_loss += out.noisy_vector[k];
    out.clipped_loss += inv * sum[k];
  }
  return out;
}

SanitizeResult sanitize(const DistillBatch& batch, const DpConfig& cfg,
                        RdpAccountant& accountant, Rng& rng) {
  cfg.validate();
  const auto& acfg = accountant.config();
  if (acfg.sample_rate != cfg.sample_rate ||
      acfg.noise_multiplier != cfg.noise_multiplier) {
    throw ConfigError("accountant was built for a different (q, m)");
  }
  std::normal_distribution<double> gauss(0.0, cfg.sigma());
  std::vector<double> noise(batch.classes());
  for (double& g : noise) g = gauss(rng);
  auto out = sanitize_with_noise(batch, cfg, std::move(noise));
  accountant.record_queries(1);
  return out;
}

namespace {

template <class F>
double integrate_checked(F f, double lo, double hi, double tol) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  double l1 = 0.0;
  const double value =
      gauss_kronrod<double, 61>::integrate(f, lo, hi, 20, tol, &err, &l1);
  if (!std::isfinite(value) || !(value > 0.0) || err > 1e-8 * std::abs(value)) {
    std::ostringstream msg;
    msg << "Renyi integral did not converge on [" << lo << ", " << hi
        << "]: value=" << value << " error estimate=" << err;
    throw NumericError(msg.str());
  }
  return value;
}

void check_renyi_args(double order, double lo, double hi) {
  if (!(order > 0.0) || order == 1.0) {
    throw ConfigError("Renyi order must be positive and != 1");
  }
  if (!(lo < hi)) throw ConfigError("integration domain is empty");
}

}  // namespace

double renyi_divergence_numeric(const Density& p, const Density& q,
                                double order, double lo, double hi) {
  check_renyi_args(order, lo, hi);
  auto integrand = [&](double x) {
    const double qx = q(x);
    const double px = p(x);
    if (!(qx > 0.0) || !(px > 0.0)) {
      std::ostringstream msg;
      msg << "density not positive at x=" << x << " (p=" << px << ", q=" << qx
          << ")";
      throw NumericError(msg.str());
    }
    return qx * std::pow(px / qx, order);
  };
  return std::log(integrate_checked(integrand, lo, hi, 1e-12)) /
         (order - 1.0);
}

double renyi_divergence_numeric_log(const Density& log_p, const Density& log_q,
                                    double order, double lo, double hi) {
  check_renyi_args(order, lo, hi);
  auto log_integrand = [&](double x) {
    const double lp = log_p(x);
    const double lq = log_q(x);
    if (!std::isfinite(lp) || !std::isfinite(lq)) {
      std::ostringstream msg;
      msg << "log-density not finite at x=" << x << " (log p=" << lp
          << ", log q=" << lq << ")";
      throw NumericError(msg.str());
    }
    return order * lp + (1.0 - order) * lq;
  };
  constexpr int kProbe = 4096;
  double shift = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kProbe; ++i) {
    shift = std::max(shift, log_integrand(lo + (hi - lo) * i / kProbe));
  }
  auto integrand = [&](double x) { return std::exp(log_integrand(x) - shift); };
  // a ln p + (1 - a) ln q cancels two large terms, which leaves relative
  // noise near a * eps * |ln p| in the integrand; 1e-12 is out of reach.
  return (shift + std::log(integrate_checked(integrand, lo, hi, 1e-9))) /
         (order - 1.0);
}

}  // namespace privkt
