#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "privkt/cli.hpp"
#include "privkt/config.hpp"
#include "privkt/error.hpp"
#include "privkt/privacy.hpp"
#include "privkt/report.hpp"

using namespace privkt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() /
             ("privkt_cli_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A small, fast experiment.
fs::path write_config(const fs::path& dir, const std::string& extra = "") {
  const fs::path p = dir / "run.ini";
  std::ofstream f(p);
  f << "[data]\nn = 600\nclasses = 3\ndim = 4\nn_pub = 100\n"
    << "[teacher]\nhidden = 16\nepochs = 10\n"
    << "[student]\nhidden = 8\n"
    << "[discriminator]\nhidden = 8\n"
    << "[train]\nepochs = 3\nbatch_size = 20\n"
    << "[output]\ndir = " << (dir / "out").string() << "\n"
    << extra;
  return p;
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

TEST_CASE("config: defaults, overrides and strictness") {
  Config c;
  CHECK(c.get_string("train.mode") == "joint");
  CHECK(c.get_double("privacy.noise_multiplier") == 1.1);
  c.apply_override("train.alpha=0.25");
  CHECK(build_experiment(c).train.alpha == 0.25);

  CHECK_THROWS_AS(c.apply_override("train.nonsense=1"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("no_equals_sign"), ConfigError);
  c.set("train.epochs", "three");
  try {
    c.get_size("train.epochs");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("train.epochs") != std::string::npos);
  }

  Config bad;
  bad.set("train.mode", "both");
  CHECK_THROWS_AS(build_experiment(bad), ConfigError);
  bad = Config{};
  bad.set("train.sample_rate", "1.5");
  CHECK_THROWS_AS(build_experiment(bad), ConfigError);
}

TEST_CASE("config: sample rate fixes B from the public set size") {
  Config c;
  c.set("train.sample_rate", "0.05");
  ExperimentConfig e = build_experiment(c);
  fit_batch_size(e, 1000);
  CHECK(e.train.batch_size == 50);
  fit_batch_size(e, 100);
  CHECK(e.train.batch_size == 5);
  fit_batch_size(e, 3);
  CHECK(e.train.batch_size == 1);
}

TEST_CASE("config-reference lists every key") {
  const auto r = cli({"config-reference"});
  CHECK(r.code == 0);
  for (const auto& k : config_schema()) {
    CHECK(r.out.find(k.name) != std::string::npos);
  }
}

TEST_CASE("cli: usage and config errors exit 2") {
  TempDir t("usage");
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"account", "--q", "0.01"}).code == kExitUsage);

  const auto idx = cli({"pretrain", "-c", write_config(t.path).string(), "--set",
                        "data.source=idx"});
  CHECK(idx.code == kExitUsage);
  CHECK(idx.err.find("data.images") != std::string::npos);

  const auto unknown = cli({"pretrain", "-c", write_config(t.path).string(),
                            "--set", "train.learning_speed=3"});
  CHECK(unknown.code == kExitUsage);
  CHECK(unknown.err.find("train.learning_speed") != std::string::npos);

  const fs::path typo = t.path / "typo.ini";
  std::ofstream(typo) << "[trian]\nepochs = 3\n";
  CHECK(cli({"pretrain", "-c", typo.string()}).code == kExitUsage);

  CHECK(cli({"pretrain", "-c", (t.path / "missing.ini").string()}).code ==
        kExitUsage);
  CHECK(cli({"account", "--q", "0.01", "--m", "1.1", "--steps", "10", "--delta",
             "2"}).code == kExitUsage);
}

TEST_CASE("cli: distill without a teacher exits 1") {
  TempDir t("noteacher");
  const auto r = cli({"distill", "-c", write_config(t.path).string()});
  CHECK(r.code == kExitRuntime);
  CHECK(r.err.find("teacher") != std::string::npos);
}

TEST_CASE("cli: pretrain then distill") {
  TempDir t("pipeline");
  const auto cfg = write_config(t.path).string();
  const fs::path out = t.path / "out";

  const auto p = cli({"pretrain", "-c", cfg});
  REQUIRE(p.code == 0);
  REQUIRE(fs::exists(out / "teacher.json"));
  const auto manifest = nlohmann::json::parse(slurp(out / "pretrain.manifest.json"));
  CHECK(manifest.dump().find((out / "teacher.json").string()) != std::string::npos);
  const std::string teacher_bytes = slurp(out / "teacher.json");
  REQUIRE(cli({"pretrain", "-c", cfg}).code == 0);
  CHECK(slurp(out / "teacher.json") == teacher_bytes);

  SUBCASE("joint") {
    const auto d = cli({"distill", "-c", cfg});
    REQUIRE(d.code == 0);
    const auto privacy = nlohmann::json::parse(slurp(out / "privacy.json"));
    const std::string needle =
        "(epsilon, delta) = (" + format_number(privacy["epsilon"].get<double>()) +
        ", " + format_number(privacy["delta"].get<double>()) + ")";
    CHECK(d.out.find(needle) != std::string::npos);
    CHECK(privacy["steps"].get<std::uint64_t>() == 3 * 5);
    CHECK(privacy.contains("disclaimer"));

    const auto lines = csv_lines(slurp(out / "metrics.csv"));
    REQUIRE(lines.size() == 4);
    CHECK(cells(lines[1])[3] != "");

    const std::string metrics_bytes = slurp(out / "metrics.csv");
    const std::string student_bytes = slurp(out / "student.json");
    REQUIRE(cli({"distill", "-c", cfg}).code == 0);
    CHECK(slurp(out / "metrics.csv") == metrics_bytes);
    CHECK(slurp(out / "student.json") == student_bytes);
    CHECK(slurp(out / "teacher.json") == teacher_bytes);
  }

  SUBCASE("kd_only leaves the adversarial columns empty") {
    const auto d = cli({"distill", "-c", cfg, "--mode", "kd_only"});
    REQUIRE(d.code == 0);
    const auto lines = csv_lines(slurp(out / "metrics.csv"));
    REQUIRE(lines.size() == 4);
    const auto header = cells(lines[0]);
    CHECK(header[3] == "l_ad_d");
    CHECK(header[4] == "l_ad_s");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto row = cells(lines[i]);
      CHECK(row[3].empty());
      CHECK(row[4].empty());
    }
  }

  SUBCASE("verbose writes one row per batch") {
    REQUIRE(cli({"distill", "-c", cfg, "--set", "train.verbose=true"}).code == 0);
    CHECK(csv_lines(slurp(out / "batches.csv")).size() == 1 + 3 * 5);
  }
}

TEST_CASE("cli: account") {
  const auto r = cli({"account", "--q", "0.005", "--m", "1.1", "--steps", "4000",
                      "--delta", "1e-5"});
  REQUIRE(r.code == 0);
  const auto lines = csv_lines(r.out);
  CHECK(lines.front() == "order,eps_rdp");
  CHECK(lines.size() == 1 + 127 + 1);
  const auto orders = default_orders();
  const auto spend = to_dp(
      compose(make_accountant(orders), rdp_sgm_step(0.005, 1.1, orders), 4000),
      1e-5);
  CHECK(lines.back().find("epsilon=" + format_number(spend.epsilon)) == 0);
  CHECK(spend.epsilon > 1.6);
  CHECK(spend.epsilon < 2.3);

  const auto zero = cli({"account", "--q", "0.005", "--m", "1.1", "--steps", "0"});
  REQUIRE(zero.code == 0);
  CHECK(csv_lines(zero.out).back() ==
        "epsilon=" + format_number(std::log(1e5) / 127.0) + " delta=" +
            format_number(1e-5) + " order=128");

  const auto full = cli({"account", "--q", "1", "--m", "1", "--steps", "1",
                         "--orders", "2,3"});
  REQUIRE(full.code == 0);
  const auto fl = csv_lines(full.out);
  CHECK(fl[1] == "2," + format_number(1.0));
  CHECK(fl[2] == "3," + format_number(1.5));
}

TEST_CASE("cli: sweep over n_pub at a fixed sample rate") {
  TempDir t("sweep");
  const auto r = cli({"sweep", "-c", write_config(t.path).string(), "--set",
                      "train.sample_rate=0.1", "--set", "sweep.axis=n_pub", "--set",
                      "sweep.values=100,200", "--set", "sweep.seeds=0,1"});
  REQUIRE(r.code == 0);
  const auto lines = csv_lines(slurp(t.path / "out" / "sweep.csv"));
  REQUIRE(lines.size() == 5);
  const std::string eps = cells(lines[1])[5];
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = cells(lines[i]);
    CHECK(row[5] == eps);
    CHECK(row[7] == "30");  // 3 epochs x 10 batches
  }
  CHECK(csv_lines(slurp(t.path / "out" / "sweep_summary.csv")).size() == 3);

  const auto multi = cli({"sweep", "-c", write_config(t.path).string(), "--set",
                          "sweep.axis=n_pub,m", "--set", "sweep.values=100"});
  CHECK(multi.code == kExitUsage);
}
