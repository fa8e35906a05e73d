#include "privkt/report.hpp"

#include <sstream>

namespace privkt {

using nlohmann::json;

std::string format_number(double v) { return json(v).dump(); }

namespace {

std::string cell(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

json optimizer_json(const OptimizerConfig& o) {
  return {{"kind", to_string(o.kind)},
          {"lr", o.lr},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"eps", o.eps}};
}

}  // namespace

std::string metrics_csv(const std::vector<MetricsRecord>& records,
                        bool include_wall_clock) {
  std::ostringstream out;
  out << "epoch,l_ds,l_ds_noisy,l_ad_d,l_ad_s,acc_student,acc_teacher,eps,"
         "seconds\n";
  for (const auto& r : records) {
    out << r.epoch << ',' << format_number(r.l_ds) << ','
        << format_number(r.l_ds_noisy) << ',' << cell(r.l_ad_d) << ','
        << cell(r.l_ad_s) << ',' << format_number(r.acc_student) << ','
        << format_number(r.acc_teacher) << ',' << format_number(r.eps) << ','
        << (include_wall_clock ? format_number(r.seconds) : std::string())
        << '\n';
  }
  return out.str();
}

std::string batches_csv(const std::vector<BatchRecord>& records) {
  std::ostringstream out;
  out << "epoch,batch,l_ds,l_ds_noisy,l_ad_s,objective\n";
  for (const auto& r : records) {
    out << r.epoch << ',' << r.batch << ',' << format_number(r.l_ds) << ','
        << format_number(r.l_ds_noisy) << ',' << cell(r.l_ad_s) << ','
        << format_number(r.objective) << '\n';
  }
  return out.str();
}

json to_json(const DpConfig& dp) {
  return {{"q", dp.sample_rate},
          {"clip", dp.clip},
          {"noise_multiplier", dp.noise_multiplier},
          {"sigma", dp.sigma()},
          {"delta", dp.delta},
          {"dataset_size", dp.dataset_size}};
}

json to_json(const DpSpend& spend) {
  return {{"epsilon", spend.epsilon},
          {"delta", spend.delta},
          {"order", spend.argmin_order}};
}

json to_json(const TrainConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"epochs", c.epochs},
          {"disc_epochs", c.disc_epochs},
          {"student_epochs", c.student_epochs},
          {"batch_size", c.batch_size},
          {"temperature", c.temperature},
          {"alpha", c.alpha},
          {"effective_alpha", c.effective_alpha()},
          {"gan_mode", to_string(c.gan_mode)},
          {"gumbel_temperature", c.gumbel_temperature},
          {"gumbel_anneal_rate", c.gumbel_anneal_rate},
          {"gumbel_min_temperature", c.gumbel_min_temperature},
          {"gumbel_samples", c.gumbel_samples},
          {"tau_squared_scaling", c.tau_squared_scaling},
          {"condition_on_x", c.condition_on_x},
          {"clip", c.dp.clip},
          {"noise_multiplier", c.dp.noise_multiplier},
          {"delta", c.dp.delta},
          {"max_order", c.max_order},
          {"student_hidden", c.student_hidden},
          {"disc_hidden", c.disc_hidden},
          {"student_optimizer", optimizer_json(c.student_optimizer)},
          {"disc_optimizer", optimizer_json(c.disc_optimizer)},
          {"seed", c.seed}};
}

json privacy_report(const TrainConfig& cfg, const RunResult& result) {
  json orders = json::array();
  for (std::size_t i = 0; i < result.accountant.orders.size(); ++i) {
    orders.push_back({{"order", result.accountant.orders[i]},
                      {"eps_rdp", result.accountant.eps_rdp[i]}});
  }
  return {{"config", to_json(cfg)},
          {"dp", to_json(result.dp)},
          {"steps", result.accountant.steps},
          {"rdp", orders},
          {"order", result.spend.argmin_order},
          {"epsilon", result.spend.epsilon},
          {"delta", result.spend.delta},
          {"disclaimer", kPoissonDisclaimer},
          {"discriminator_caveat", kDiscriminatorCaveat}};
}

}  // namespace privkt
