#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "privkt/data.hpp"
#include "privkt/trainer.hpp"

namespace privkt {

struct ConfigKey {
  std::string name;  // "section.key"
  std::string default_value;
  std::string description;
};

// Every accepted key with its default. Anything else is rejected.
const std::vector<ConfigKey>& config_schema();

// Markdown table of config_schema().
std::string config_reference();

/// Flat "section.key" -> string map with a strict schema. Typed getters
/// throw ConfigError naming the offending key.
class Config {
 public:
  Config();  // schema defaults

  static Config from_file(const std::filesystem::path& path);

  // "section.key=value"
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool is_set(const std::string& key) const;  // non-empty value
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::size_t> get_size_list(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct DataConfig {
  std::string source = "blobs";
  std::size_t n = 3000;
  int classes = 3;
  std::size_t dim = 8;
  double spread = 1.0;
  std::uint64_t seed = 7;
  std::string images;
  std::string labels;
  SplitSpec split;
  bool standardize = true;
};

struct OutputConfig {
  std::filesystem::path dir = "out";
  bool record_wall_clock = false;
};

struct SweepConfig {
  std::string axis;
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds;
  bool parallel = false;
};

struct ExperimentConfig {
  DataConfig data;
  TeacherConfig teacher;
  TrainConfig train;
  OutputConfig output;
  SweepConfig sweep;
  double sample_rate = 0.0;  // > 0: batch size follows the public set size
};

ExperimentConfig build_experiment(const Config& cfg);

// With a sample rate set, B = max(1, round(q * public_size)).
void fit_batch_size(ExperimentConfig& exp, std::size_t public_size);

// Loads or generates the dataset and splits/standardizes it.
Splits prepare_data(const DataConfig& cfg);

}  // namespace privkt
