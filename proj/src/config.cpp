#include "privkt/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "privkt/error.hpp"

namespace privkt {

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = {
      {"data.source", "blobs", "blobs (synthetic) or idx"},
      {"data.n", "3000", "blobs: number of points"},
      {"data.classes", "3", "blobs: number of classes M"},
      {"data.dim", "8", "blobs: feature dimension d"},
      {"data.spread", "1.0", "blobs: cluster standard deviation"},
      {"data.seed", "7", "blobs: generator seed"},
      {"data.images", "", "idx: path to the images file (required for idx)"},
      {"data.labels", "", "idx: path to the labels file (required for idx)"},
      {"data.private_fraction", "0.5", "fraction of records given to the teacher"},
      {"data.n_pub", "1000", "public (student) set size"},
      {"data.n_test", "0", "held-out test size; 0 uses every remaining record"},
      {"data.strip_public_labels", "true", "drop labels from the public set"},
      {"data.allow_overlap", "false", "draw the public set from the private records"},
      {"data.split_seed", "11", "seed of the split permutation"},
      {"data.standardize", "true", "standardize features with private-split statistics"},
      {"teacher.hidden", "64", "comma-separated hidden widths"},
      {"teacher.epochs", "50", "pretraining epochs"},
      {"teacher.batch_size", "50", "pretraining batch size"},
      {"teacher.optimizer", "adam", "sgd or adam"},
      {"teacher.lr", "0.001", "learning rate"},
      {"teacher.seed", "1", "initialization and shuffling seed"},
      {"student.hidden", "32", "comma-separated hidden widths"},
      {"student.optimizer", "adam", "sgd or adam"},
      {"student.lr", "0.001", "learning rate"},
      {"discriminator.hidden", "32", "comma-separated hidden widths"},
      {"discriminator.optimizer", "adam", "sgd or adam"},
      {"discriminator.lr", "0.001", "learning rate"},
      {"discriminator.condition_on_x", "false", "append the input x to the sampled label vector"},
      {"train.mode", "joint", "joint or kd_only"},
      {"train.epochs", "30", "outer epochs T"},
      {"train.disc_epochs", "1", "discriminator epochs per outer epoch T_D"},
      {"train.student_epochs", "1", "student epochs per outer epoch T_S"},
      {"train.batch_size", "50", "batch size B (q = B / n_pub)"},
      {"train.sample_rate", "", "if set, B = round(q * n_pub) instead of train.batch_size"},
      {"train.temperature", "1.0", "distillation temperature tau"},
      {"train.alpha", "0.5", "distillation weight in [0, 1]"},
      {"train.gan_mode", "minimax", "minimax or nonsaturating"},
      {"train.gumbel_temperature", "1.0", "relaxation temperature lambda_g"},
      {"train.gumbel_anneal_rate", "0.0", "exponential decay of lambda_g per epoch"},
      {"train.gumbel_min_temperature", "0.1", "floor of the annealed lambda_g"},
      {"train.gumbel_samples", "1", "relaxed samples per example per step"},
      {"train.tau_squared_scaling", "false", "multiply distillation gradients by tau^2"},
      {"train.seed", "0", "seed of the transfer run"},
      {"train.verbose", "false", "also write per-batch metrics"},
      {"privacy.clip", "1.0", "clip threshold C"},
      {"privacy.noise_multiplier", "1.1", "noise multiplier m (sigma = m C)"},
      {"privacy.delta", "1e-5", "target delta"},
      {"privacy.max_order", "128", "largest integer Renyi order"},
      {"output.dir", "out", "directory for all artifacts"},
      {"output.record_wall_clock", "false", "fill the seconds column (breaks byte-identical reruns)"},
      {"sweep.axis", "", "one of n_pub, m, alpha, epochs"},
      {"sweep.values", "", "comma-separated axis values"},
      {"sweep.seeds", "0", "comma-separated transfer seeds"},
      {"sweep.parallel", "false", "run cells on threads (one seed stream per cell)"},
  };
  return keys;
}

std::string config_reference() {
  std::ostringstream out;
  out << "| key | default | description |\n|---|---|---|\n";
  for (const auto& k : config_schema()) {
    out << "| `" << k.name << "` | `" << k.default_value << "` | "
        << k.description << " |\n";
  }
  return out.str();
}

Config::Config() {
  for (const auto& k : config_schema()) values_[k.name] = k.default_value;
}

Config Config::from_file(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  Config cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError("config key '" + section + "' must be inside a section");
    }
    for (const auto& [key, value] : body) {
      cfg.set(section + "." + key, value.get_value<std::string>());
    }
  }
  return cfg;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  set(boost::trim_copy(assignment.substr(0, eq)),
      boost::trim_copy(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  it->second = boost::trim_copy(value);
}

bool Config::is_set(const std::string& key) const {
  return !get_string(key).empty();
}

std::string Config::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  return it->second;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& want) {
  throw ConfigError("config key '" + key + "' has invalid value '" + value +
                    "' (expected " + want + ")");
}

template <typename T>
T parse_number(const std::string& key, const std::string& s,
               const std::string& want) {
  T v{};
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) bad_value(key, s, want);
  return v;
}

}  // namespace

double Config::get_double(const std::string& key) const {
  return parse_number<double>(key, get_string(key), "a number");
}

std::size_t Config::get_size(const std::string& key) const {
  return parse_number<std::size_t>(key, get_string(key),
                                   "a non-negative integer");
}

std::uint64_t Config::get_u64(const std::string& key) const {
  return parse_number<std::uint64_t>(key, get_string(key),
                                     "a non-negative integer");
}

int Config::get_int(const std::string& key) const {
  return parse_number<int>(key, get_string(key), "an integer");
}

bool Config::get_bool(const std::string& key) const {
  const std::string s = boost::to_lower_copy(get_string(key));
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  bad_value(key, s, "true or false");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  const std::string s = get_string(key);
  std::vector<std::string> parts;
  if (s.empty()) return parts;
  boost::split(parts, s, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  return parts;
}

std::vector<std::size_t> Config::get_size_list(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& p : get_list(key)) {
    out.push_back(parse_number<std::size_t>(key, p,
                                            "comma-separated integers"));
  }
  return out;
}

namespace {

OptimizerConfig optimizer_config(const Config& c, const std::string& section) {
  OptimizerConfig o;
  try {
    o.kind = optimizer_from_string(c.get_string(section + ".optimizer"));
  } catch (const ConfigError&) {
    bad_value(section + ".optimizer", c.get_string(section + ".optimizer"),
              "sgd or adam");
  }
  o.lr = c.get_double(section + ".lr");
  if (!(o.lr > 0.0)) bad_value(section + ".lr", c.get_string(section + ".lr"), "a positive number");
  return o;
}

template <typename F>
auto keyed(const std::string& key, const Config& c, F parse) {
  try {
    return parse(c.get_string(key));
  } catch (const ConfigError&) {
    bad_value(key, c.get_string(key), "a recognized option");
  }
}

}  // namespace

ExperimentConfig build_experiment(const Config& c) {
  ExperimentConfig e;
  auto& d = e.data;
  d.source = c.get_string("data.source");
  if (d.source != "blobs" && d.source != "idx") {
    bad_value("data.source", d.source, "blobs or idx");
  }
  d.n = c.get_size("data.n");
  d.classes = c.get_int("data.classes");
  d.dim = c.get_size("data.dim");
  d.spread = c.get_double("data.spread");
  d.seed = c.get_u64("data.seed");
  d.images = c.get_string("data.images");
  d.labels = c.get_string("data.labels");
  if (d.source == "idx") {
    if (d.images.empty()) {
      throw ConfigError("config key 'data.images' is required when data.source = idx");
    }
    if (d.labels.empty()) {
      throw ConfigError("config key 'data.labels' is required when data.source = idx");
    }
  }
  d.split.private_fraction = c.get_double("data.private_fraction");
  d.split.n_pub = c.get_size("data.n_pub");
  d.split.n_test = c.get_size("data.n_test");
  d.split.strip_public_labels = c.get_bool("data.strip_public_labels");
  d.split.allow_overlap = c.get_bool("data.allow_overlap");
  d.split.seed = c.get_u64("data.split_seed");
  d.standardize = c.get_bool("data.standardize");

  auto& t = e.teacher;
  t.hidden = c.get_size_list("teacher.hidden");
  t.epochs = c.get_size("teacher.epochs");
  t.batch_size = c.get_size("teacher.batch_size");
  t.optimizer = optimizer_config(c, "teacher");
  t.seed = c.get_u64("teacher.seed");

  auto& r = e.train;
  r.student_hidden = c.get_size_list("student.hidden");
  r.student_optimizer = optimizer_config(c, "student");
  r.disc_hidden = c.get_size_list("discriminator.hidden");
  r.disc_optimizer = optimizer_config(c, "discriminator");
  r.condition_on_x = c.get_bool("discriminator.condition_on_x");
  r.mode = keyed("train.mode", c, transfer_mode_from_string);
  r.epochs = c.get_size("train.epochs");
  r.disc_epochs = c.get_size("train.disc_epochs");
  r.student_epochs = c.get_size("train.student_epochs");
  r.batch_size = c.get_size("train.batch_size");
  if (c.is_set("train.sample_rate")) {
    e.sample_rate = c.get_double("train.sample_rate");
    if (!(e.sample_rate > 0.0 && e.sample_rate <= 1.0)) {
      throw ConfigError("config key 'train.sample_rate' must lie in (0, 1]");
    }
  }
  r.temperature = c.get_double("train.temperature");
  r.alpha = c.get_double("train.alpha");
  r.gan_mode = keyed("train.gan_mode", c, gan_mode_from_string);
  r.gumbel_temperature = c.get_double("train.gumbel_temperature");
  r.gumbel_anneal_rate = c.get_double("train.gumbel_anneal_rate");
  r.gumbel_min_temperature = c.get_double("train.gumbel_min_temperature");
  r.gumbel_samples = c.get_size("train.gumbel_samples");
  r.tau_squared_scaling = c.get_bool("train.tau_squared_scaling");
  r.seed = c.get_u64("train.seed");
  r.verbose = c.get_bool("train.verbose");
  r.dp.clip = c.get_double("privacy.clip");
  r.dp.noise_multiplier = c.get_double("privacy.noise_multiplier");
  r.dp.delta = c.get_double("privacy.delta");
  r.max_order = c.get_int("privacy.max_order");

  e.output.dir = c.get_string("output.dir");
  e.output.record_wall_clock = c.get_bool("output.record_wall_clock");

  e.sweep.axis = c.get_string("sweep.axis");
  e.sweep.values = c.get_list("sweep.values");
  for (const auto& s : c.get_list("sweep.seeds")) {
    e.sweep.seeds.push_back(
        parse_number<std::uint64_t>("sweep.seeds", s, "comma-separated integers"));
  }
  e.sweep.parallel = c.get_bool("sweep.parallel");
  return e;
}

void fit_batch_size(ExperimentConfig& exp, std::size_t public_size) {
  if (exp.sample_rate <= 0.0) return;
  const auto b = static_cast<std::size_t>(
      std::llround(exp.sample_rate * static_cast<double>(public_size)));
  exp.train.batch_size = std::max<std::size_t>(1, b);
}

Splits prepare_data(const DataConfig& cfg) {
  Dataset data = cfg.source == "idx"
                     ? load_idx(cfg.images, cfg.labels)
                     : gen_blobs(cfg.n, cfg.classes, cfg.dim, cfg.spread,
                                 cfg.seed);
  Splits s = split(data, cfg.split);
  if (cfg.standardize) standardize(s);
  return s;
}

}  // namespace privkt
