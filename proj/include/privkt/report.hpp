#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "privkt/trainer.hpp"

namespace privkt {

inline constexpr const char* kPoissonDisclaimer =
    "RDP accounting assumes Poisson subsampling with rate q = B/N; training "
    "draws fixed-size shuffled batches, so the bound is the standard "
    "approximation for that sampler.";

inline constexpr const char* kDiscriminatorCaveat =
    "Discriminator updates consume teacher samples but are not charged to "
    "the privacy budget; the discriminator is discarded after training.";

// Columns: epoch, l_ds, l_ds_noisy, l_ad_d, l_ad_s, acc_student,
// acc_teacher, eps, seconds. Missing adversarial values are empty cells;
// seconds is empty unless include_wall_clock.
std::string metrics_csv(const std::vector<MetricsRecord>& records,
                        bool include_wall_clock);
std::string batches_csv(const std::vector<BatchRecord>& records);

nlohmann::json to_json(const DpConfig& dp);
nlohmann::json to_json(const DpSpend& spend);
nlohmann::json to_json(const TrainConfig& cfg);

nlohmann::json privacy_report(const TrainConfig& cfg, const RunResult& result);

// A double formatted exactly as the JSON reports write it.
std::string format_number(double v);

}  // namespace privkt
