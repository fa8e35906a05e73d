#include "privkt/cli.hpp"

#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "privkt/checkpoint.hpp"
#include "privkt/config.hpp"
#include "privkt/error.hpp"
#include "privkt/report.hpp"

namespace privkt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

Config load_config(const std::string& path,
                   const std::vector<std::string>& overrides) {
  Config cfg = path.empty() ? Config() : Config::from_file(path);
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

json manifest(const std::string& command, const Config& cfg,
              const ExperimentConfig& exp, const json& artifacts) {
  json echo = json::object();
  for (const auto& [k, v] : cfg.values()) echo[k] = v;
  return {{"tool", "privkt"},
          {"version", kToolVersion},
          {"command", command},
          {"seed", command == "pretrain" ? exp.teacher.seed : exp.train.seed},
          {"config", echo},
          {"artifacts", artifacts}};
}

int cmd_pretrain(const Config& cfg, std::ostream& out) {
  const auto exp = build_experiment(cfg);
  const Splits data = prepare_data(exp.data);
  const DenseNet teacher = pretrain_teacher(data.private_set, exp.teacher);
  const double acc = evaluate(teacher, data.test_set);

  fs::create_directories(exp.output.dir);
  const fs::path ckpt = exp.output.dir / "teacher.json";
  save_checkpoint(teacher, ckpt);
  const fs::path man = exp.output.dir / "pretrain.manifest.json";
  write_text(man, manifest("pretrain", cfg, exp,
                           {{"teacher_checkpoint", ckpt.string()}})
                          .dump(2) +
                      "\n");
  out << "teacher test accuracy: " << format_number(acc) << "\n";
  out << "checkpoint: " << ckpt.string() << "\n";
  return kExitOk;
}

int cmd_distill(const Config& cfg, std::ostream& out, std::ostream& err) {
  auto exp = build_experiment(cfg);
  const fs::path ckpt = exp.output.dir / "teacher.json";
  if (!fs::exists(ckpt)) {
    err << "error: teacher checkpoint " << ckpt.string()
        << " not found; run `privkt pretrain` first\n";
    return kExitRuntime;
  }
  const DenseNet teacher = load_checkpoint(ckpt);
  const Splits data = prepare_data(exp.data);
  fit_batch_size(exp, data.public_set.size());
  const RunResult result =
      run(exp.train, teacher, data.public_set, data.test_set);

  const fs::path student = exp.output.dir / "student.json";
  const fs::path metrics = exp.output.dir / "metrics.csv";
  const fs::path privacy = exp.output.dir / "privacy.json";
  const fs::path summary = exp.output.dir / "summary.json";
  save_checkpoint(result.student, student);
  write_text(metrics,
             metrics_csv(result.metrics, exp.output.record_wall_clock));
  write_text(privacy, privacy_report(exp.train, result).dump(2) + "\n");

  const double acc = result.metrics.back().acc_student;
  json sum = {{"spend", to_json(result.spend)},
              {"acc_student", acc},
              {"acc_teacher", result.metrics.back().acc_teacher},
              {"steps", result.accountant.steps},
              {"sanitize_calls", result.sanitize_calls},
              {"config", to_json(exp.train)},
              {"dp", to_json(result.dp)}};
  write_text(summary, sum.dump(2) + "\n");

  json artifacts = {{"teacher_checkpoint", ckpt.string()},
                    {"student_checkpoint", student.string()},
                    {"metrics_csv", metrics.string()},
                    {"privacy_json", privacy.string()},
                    {"summary_json", summary.string()}};
  if (exp.train.verbose) {
    const fs::path batches = exp.output.dir / "batches.csv";
    write_text(batches, batches_csv(result.batches));
    artifacts["batches_csv"] = batches.string();
  }
  write_text(exp.output.dir / "distill.manifest.json",
             manifest("distill", cfg, exp, artifacts).dump(2) + "\n");

  out << "mode: " << to_string(exp.train.mode)
      << ", epochs: " << exp.train.epochs
      << ", steps: " << result.accountant.steps << "\n";
  out << "teacher accuracy: " << format_number(result.metrics.back().acc_teacher)
      << "\n";
  out << "(epsilon, delta) = (" << format_number(result.spend.epsilon) << ", "
      << format_number(result.spend.delta)
      << "), student accuracy = " << format_number(acc) << "\n";
  return kExitOk;
}

int cmd_account(double q, double m, std::uint64_t steps, double delta,
                int max_order, const std::vector<int>& explicit_orders,
                std::ostream& out) {
  std::vector<double> orders;
  if (explicit_orders.empty()) {
    orders = default_orders(max_order);
  } else {
    orders.assign(explicit_orders.begin(), explicit_orders.end());
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("delta must lie in (0, 1)");
  }
  const auto per_step = rdp_sgm_step(q, m, orders);
  const auto state = compose(make_accountant(orders), per_step, steps);
  const auto spend = to_dp(state, delta);
  out << "order,eps_rdp\n";
  for (std::size_t i = 0; i < orders.size(); ++i) {
    out << static_cast<int>(orders[i]) << ',' << format_number(state.eps_rdp[i])
        << '\n';
  }
  out << "epsilon=" << format_number(spend.epsilon)
      << " delta=" << format_number(spend.delta)
      << " order=" << static_cast<int>(spend.argmin_order) << '\n';
  return kExitOk;
}

struct SweepRow {
  std::string value;
  std::uint64_t seed = 0;
  double acc_student = 0.0;
  double acc_teacher = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  std::uint64_t steps = 0;
};

ExperimentConfig with_axis(ExperimentConfig e, const std::string& axis,
                           const std::string& value) {
  Config scratch;
  const std::map<std::string, std::string> key_of = {
      {"n_pub", "data.n_pub"},
      {"m", "privacy.noise_multiplier"},
      {"alpha", "train.alpha"},
      {"epochs", "train.epochs"}};
  const std::string key = key_of.at(axis);
  scratch.set(key, value);
  if (axis == "n_pub") e.data.split.n_pub = scratch.get_size(key);
  if (axis == "m") e.train.dp.noise_multiplier = scratch.get_double(key);
  if (axis == "alpha") e.train.alpha = scratch.get_double(key);
  if (axis == "epochs") e.train.epochs = scratch.get_size(key);
  return e;
}

int cmd_sweep(const Config& cfg, std::ostream& out) {
  const auto exp = build_experiment(cfg);
  const auto& sw = exp.sweep;
  if (sw.axis.empty()) throw UsageError("sweep.axis is required");
  if (sw.axis.find(',') != std::string::npos ||
      sw.axis.find(' ') != std::string::npos) {
    throw UsageError("sweep.axis names one axis per sweep, got '" + sw.axis +
                     "'");
  }
  if (sw.axis != "n_pub" && sw.axis != "m" && sw.axis != "alpha" &&
      sw.axis != "epochs") {
    throw UsageError("sweep.axis must be one of n_pub, m, alpha, epochs");
  }
  if (sw.values.empty()) throw UsageError("sweep.values is empty");
  if (sw.seeds.empty()) throw UsageError("sweep.seeds is empty");

  // Teachers depend only on the data config, so one per axis value.
  std::map<std::string, std::pair<Splits, DenseNet>> prepared;
  for (const auto& v : sw.values) {
    const auto cell = with_axis(exp, sw.axis, v);
    Splits data = prepare_data(cell.data);
    DenseNet teacher = pretrain_teacher(data.private_set, cell.teacher);
    prepared.emplace(v, std::make_pair(std::move(data), std::move(teacher)));
  }

  auto run_cell = [&](const std::string& value, std::uint64_t seed) {
    auto cell = with_axis(exp, sw.axis, value);
    cell.train.seed = seed;
    const auto& [data, teacher] = prepared.at(value);
    fit_batch_size(cell, data.public_set.size());
    const auto r = run(cell.train, teacher, data.public_set, data.test_set);
    return SweepRow{value,
                    seed,
                    r.metrics.back().acc_student,
                    r.metrics.back().acc_teacher,
                    r.spend.epsilon,
                    r.spend.delta,
                    r.accountant.steps};
  };

  std::vector<SweepRow> rows;
  if (sw.parallel) {
    std::vector<std::future<SweepRow>> jobs;
    for (const auto& v : sw.values) {
      for (auto s : sw.seeds) {
        jobs.push_back(std::async(std::launch::async, run_cell, v, s));
      }
    }
    for (auto& j : jobs) rows.push_back(j.get());
  } else {
    for (const auto& v : sw.values) {
      for (auto s : sw.seeds) rows.push_back(run_cell(v, s));
    }
  }

  std::ostringstream csv;
  csv << "axis,value,seed,acc_student,acc_teacher,eps,delta,steps\n";
  for (const auto& r : rows) {
    csv << sw.axis << ',' << r.value << ',' << r.seed << ','
        << format_number(r.acc_student) << ',' << format_number(r.acc_teacher)
        << ',' << format_number(r.eps) << ',' << format_number(r.delta) << ','
        << r.steps << '\n';
  }
  std::ostringstream agg;
  agg << "axis,value,runs,mean_acc_student,mean_acc_teacher,mean_eps\n";
  out << sw.axis << "  mean_acc_student  mean_eps\n";
  for (const auto& v : sw.values) {
    double acc = 0.0, tacc = 0.0, eps = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
      if (r.value != v) continue;
      acc += r.acc_student;
      tacc += r.acc_teacher;
      eps += r.eps;
      ++n;
    }
    const double dn = static_cast<double>(n);
    agg << sw.axis << ',' << v << ',' << n << ',' << format_number(acc / dn)
        << ',' << format_number(tacc / dn) << ',' << format_number(eps / dn)
        << '\n';
    out << v << "  " << format_number(acc / dn) << "  "
        << format_number(eps / dn) << "\n";
  }

  fs::create_directories(exp.output.dir);
  const fs::path rows_path = exp.output.dir / "sweep.csv";
  const fs::path agg_path = exp.output.dir / "sweep_summary.csv";
  write_text(rows_path, csv.str());
  write_text(agg_path, agg.str());
  write_text(exp.output.dir / "sweep.manifest.json",
             manifest("sweep", cfg, exp,
                      {{"sweep_csv", rows_path.string()},
                       {"sweep_summary_csv", agg_path.string()}})
                     .dump(2) +
                 "\n");
  return kExitOk;
}

int cmd_export(const Config& cfg, const std::string& images,
               const std::string& labels, std::ostream& out) {
  const auto exp = build_experiment(cfg);
  Dataset data = exp.data.source == "idx"
                     ? load_idx(exp.data.images, exp.data.labels)
                     : gen_blobs(exp.data.n, exp.data.classes, exp.data.dim,
                                 exp.data.spread, exp.data.seed);
  write_idx(rescale_unit(data), images, labels);
  out << "wrote " << data.size() << " records to " << images << " and "
      << labels << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Private knowledge transfer: teacher pretraining, DP "
               "distillation with an adversarial student, RDP accounting"};
  app.name("privkt");
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("-c,--config", config_path, "config file (INI)");
    if (required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--set", overrides, "override one key: section.key=value");
  };

  auto* pretrain = app.add_subcommand("pretrain", "train the private teacher");
  add_config(pretrain, true);

  auto* distill = app.add_subcommand("distill", "train the student from the teacher");
  add_config(distill, true);
  std::string mode_flag;
  distill->add_option("--mode", mode_flag, "joint or kd_only (same as --set train.mode=...)");

  double q = 0.0, m = 0.0, delta = 1e-5;
  std::uint64_t steps = 0;
  int max_order = 128;
  std::vector<int> orders;
  auto* account = app.add_subcommand("account", "print the RDP / (eps, delta) table");
  account->add_option("--q", q, "sampling probability")->required();
  account->add_option("--m", m, "noise multiplier")->required();
  account->add_option("--steps", steps, "number of composed queries")->required();
  account->add_option("--delta", delta, "target delta");
  account->add_option("--max-order", max_order, "grid 2..max_order");
  account->add_option("--orders", orders, "explicit integer orders")->delimiter(',');

  auto* sweep = app.add_subcommand("sweep", "grid over one axis and several seeds");
  add_config(sweep, true);

  auto* reference = app.add_subcommand("config-reference", "print the config key table");

  std::string idx_images, idx_labels;
  auto* exporter = app.add_subcommand("export-idx", "write the configured dataset as IDX");
  add_config(exporter, false);
  exporter->add_option("--images", idx_images)->required();
  exporter->add_option("--labels", idx_labels)->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*pretrain) return cmd_pretrain(load_config(config_path, overrides), out);
    if (*distill) {
      if (!mode_flag.empty()) overrides.push_back("train.mode=" + mode_flag);
      return cmd_distill(load_config(config_path, overrides), out, err);
    }
    if (*account) {
      return cmd_account(q, m, steps, delta, max_order, orders, out);
    }
    if (*sweep) return cmd_sweep(load_config(config_path, overrides), out);
    if (*reference) {
      out << config_reference();
      return kExitOk;
    }
    if (*exporter) {
      return cmd_export(load_config(config_path, overrides), idx_images,
                        idx_labels, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace privkt
