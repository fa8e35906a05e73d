#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "privkt/adversarial.hpp"
#include "privkt/cli.hpp"
#include "privkt/config.hpp"
#include "privkt/distill.hpp"
#include "privkt/error.hpp"
#include "privkt/privacy.hpp"
#include "privkt/trainer.hpp"

namespace py = pybind11;
using namespace privkt;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  if (a.ndim() != 2) throw ConfigError("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Tensor({rows, cols}, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  Array out({t.rows(), t.cols()});
  std::copy(t.values.begin(), t.values.end(), out.mutable_data());
  return out;
}

py::dict spend_dict(const AccountantState& state, const DpSpend& spend) {
  py::dict d;
  d["epsilon"] = spend.epsilon;
  d["delta"] = spend.delta;
  d["order"] = spend.argmin_order;
  d["steps"] = state.steps;
  d["orders"] = state.orders;
  d["eps_rdp"] = state.eps_rdp;
  return d;
}

py::dict account(double q, double m, std::uint64_t steps, double delta,
                 int max_order) {
  const auto orders = default_orders(max_order);
  const auto state =
      compose(make_accountant(orders), rdp_sgm_step(q, m, orders), steps);
  return spend_dict(state, to_dp(state, delta));
}

py::tuple gen_blobs_py(std::size_t n, int classes, std::size_t dim,
                       double spread, std::uint64_t seed) {
  const Dataset d = gen_blobs(n, classes, dim, spread, seed);
  py::array_t<int> labels(static_cast<py::ssize_t>(d.size()));
  std::copy(d.labels->begin(), d.labels->end(), labels.mutable_data());
  return py::make_tuple(to_array(d.features), labels);
}

// Pretrain and transfer in memory from "section.key" overrides.
py::dict experiment(const std::map<std::string, std::string>& overrides) {
  Config cfg;
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  ExperimentConfig exp = build_experiment(cfg);
  RunResult r;
  {
    py::gil_scoped_release release;
    const Splits data = prepare_data(exp.data);
    fit_batch_size(exp, data.public_set.size());
    const DenseNet teacher = pretrain_teacher(data.private_set, exp.teacher);
    r = run(exp.train, teacher, data.public_set, data.test_set);
  }
  py::list metrics;
  for (const auto& m : r.metrics) {
    py::dict row;
    row["epoch"] = m.epoch;
    row["l_ds"] = m.l_ds;
    row["l_ds_noisy"] = m.l_ds_noisy;
    row["l_ad_d"] = m.l_ad_d ? py::cast(*m.l_ad_d) : py::none();
    row["l_ad_s"] = m.l_ad_s ? py::cast(*m.l_ad_s) : py::none();
    row["acc_student"] = m.acc_student;
    row["acc_teacher"] = m.acc_teacher;
    row["eps"] = m.eps;
    metrics.append(row);
  }
  py::dict out = spend_dict(r.accountant, r.spend);
  out["metrics"] = metrics;
  out["acc_student"] = r.metrics.back().acc_student;
  out["acc_teacher"] = r.metrics.back().acc_teacher;
  out["sample_rate"] = r.dp.sample_rate;
  return out;
}

}  // namespace

PYBIND11_MODULE(_privkt, m) {
  m.doc() = "privkt core: RDP accounting, DP distillation, Gumbel-softmax";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def(
      "rdp_sgm_step",
      [](double q, double noise, const std::vector<double>& orders) {
        return rdp_sgm_step(q, noise, orders);
      },
      py::arg("q"), py::arg("m"), py::arg("orders"),
      "RDP of one sampled Gaussian query per order.");
  m.def("account", &account, py::arg("q"), py::arg("m"), py::arg("steps"),
        py::arg("delta") = 1e-5, py::arg("max_order") = 128,
        "Compose steps queries and convert to (epsilon, delta).");
  m.def(
      "clip_l2",
      [](const std::vector<double>& v, double clip) { return clip_l2(v, clip); },
      py::arg("v"), py::arg("clip"));
  m.def(
      "temperature_softmax",
      [](const Array& logits, double tau) {
        return to_array(temperature_softmax(to_tensor(logits), tau).probs);
      },
      py::arg("logits"), py::arg("tau"));
  m.def(
      "per_example_vector",
      [](const std::vector<double>& t, const std::vector<double>& s) {
        return per_example_vector(t, s);
      },
      py::arg("teacher"), py::arg("student"),
      "Componentwise p_T ln(p_T / p_S); sums to KL(p_T || p_S).");
  m.def(
      "gumbel_sample",
      [](const std::vector<double>& probs, double lambda, std::uint64_t seed) {
        Rng rng(seed);
        return gumbel_sample(ProbVector{probs, 1.0}, lambda, rng).y;
      },
      py::arg("probs"), py::arg("lam"), py::arg("seed") = 0);
  m.def("gen_blobs", &gen_blobs_py, py::arg("n"), py::arg("classes"),
        py::arg("dim"), py::arg("spread") = 1.0, py::arg("seed") = 0,
        "Returns (features, labels).");
  m.def("experiment", &experiment,
        py::arg("overrides") = std::map<std::string, std::string>{},
        "Pretrain a teacher and run the transfer; keys as in the config file.");
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line tool; returns (code, stdout, stderr).");
}
