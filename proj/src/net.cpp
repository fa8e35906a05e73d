#include "privkt/net.hpp"

#include <cmath>
#include <random>

#include "privkt/error.hpp"

namespace privkt {

namespace {

double activate(Activation act, double z) {
  switch (act) {
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::sigmoid:
      return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                      : std::exp(z) / (1.0 + std::exp(z));
    case Activation::identity:
      break;
  }
  return z;
}

// Derivative expressed through the activation output a = f(z).
double activate_grad(Activation act, double a) {
  switch (act) {
    case Activation::relu:
      return a > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid:
      return a * (1.0 - a);
    case Activation::identity:
      break;
  }
  return 1.0;
}

}  // namespace

std::string to_string(Activation act) {
  switch (act) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::identity:
      break;
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

NetSpec NetSpec::mlp(std::size_t input_dim,
                     const std::vector<std::size_t>& hidden,
                     std::size_t output_dim, Activation head) {
  NetSpec spec{input_dim, {}};
  for (std::size_t h : hidden) spec.layers.push_back({h, Activation::relu});
  spec.layers.push_back({output_dim, head});
  return spec;
}

DenseNet::DenseNet(const NetSpec& spec) {
  if (spec.layers.empty()) throw ConfigError("network spec has no layers");
  if (spec.input_dim == 0) throw ConfigError("network input width is zero");
  std::size_t in = spec.input_dim;
  std::size_t offset = 0;
  for (const auto& l : spec.layers) {
    if (l.units == 0) throw ConfigError("network layer with zero units");
    LayerShape shape{in, l.units, l.activation, offset, offset + in * l.units};
    offset = shape.bias_offset + l.units;
    layers_.push_back(shape);
    in = l.units;
  }
  params_.assign(offset, 0.0);
}

std::size_t DenseNet::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().in;
}

std::size_t DenseNet::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().out;
}

NetSpec DenseNet::spec() const {
  NetSpec s{input_dim(), {}};
  for (const auto& l : layers_) s.layers.push_back({l.out, l.activation});
  return s;
}

std::span<double> DenseNet::weights(std::size_t layer) {
  const auto& l = layers_.at(layer);
  return std::span<double>(params_).subspan(l.weight_offset, l.in * l.out);
}
std::span<const double> DenseNet::weights(std::size_t layer) const {
  const auto& l = layers_.at(layer);
  return std::span<const double>(params_).subspan(l.weight_offset,
                                                  l.in * l.out);
}
std::span<double> DenseNet::biases(std::size_t layer) {
  const auto& l = layers_.at(layer);
  return std::span<double>(params_).subspan(l.bias_offset, l.out);
}
std::span<const double> DenseNet::biases(std::size_t layer) const {
  const auto& l = layers_.at(layer);
  return std::span<const double>(params_).subspan(l.bias_offset, l.out);
}

void DenseNet::check_input(const Tensor& batch) const {
  if (layers_.empty()) throw UsageError("forward on an empty network");
  if (batch.shape.size() != 2 || batch.cols() != input_dim()) {
    throw ConfigError("batch width " + std::to_string(batch.cols()) +
                      " does not match network input width " +
                      std::to_string(input_dim()));
  }
}

Tensor DenseNet::forward(const Tensor& batch) const {
  GradTape scratch;
  return forward(batch, scratch);
}

Tensor DenseNet::forward(const Tensor& batch, GradTape& tape) const {
  check_input(batch);
  tape.clear();
  Tensor x = batch;
  const std::size_t n = batch.rows();
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    auto w = weights(li);
    auto b = biases(li);
    Tensor y(n, l.out);
    for (std::size_t r = 0; r < n; ++r) {
      auto xr = x.row(r);
      auto yr = y.row(r);
      for (std::size_t o = 0; o < l.out; ++o) {
        double z = b[o];
        const double* wr = w.data() + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) z += wr[i] * xr[i];
        yr[o] = activate(l.activation, z);
      }
    }
    tape.inputs.push_back(std::move(x));
    tape.outputs.push_back(y);
    x = std::move(y);
  }
  return x;
}

NetGradients DenseNet::backward(const GradTape& tape,
                                const Tensor& loss_grad) const {
  if (tape.empty() || tape.inputs.size() != layers_.size()) {
    throw UsageError("backward called without a recorded forward tape");
  }
  const std::size_t n = tape.inputs.front().rows();
  if (loss_grad.rows() != n || loss_grad.cols() != output_dim()) {
    throw ConfigError("loss gradient shape does not match network output");
  }
  NetGradients grads;
  grads.params.assign(params_.size(), 0.0);
  Tensor delta = loss_grad;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    const Tensor& in = tape.inputs[li];
    const Tensor& out = tape.outputs[li];
    auto w = weights(li);
    double* gw = grads.params.data() + l.weight_offset;
    double* gb = grads.params.data() + l.bias_offset;
    Tensor prev(n, l.in);
    for (std::size_t r = 0; r < n; ++r) {
      auto dr = delta.row(r);
      auto ar = out.row(r);
      auto xr = in.row(r);
      auto pr = prev.row(r);
      for (std::size_t o = 0; o < l.out; ++o) {
        const double dz = dr[o] * activate_grad(l.activation, ar[o]);
        if (dz == 0.0) continue;
        gb[o] += dz;
        double* gwr = gw + o * l.in;
        const double* wr = w.data() + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) {
          gwr[i] += dz * xr[i];
          pr[i] += dz * wr[i];
        }
      }
    }
    delta = std::move(prev);
  }
  grads.input = std::move(delta);
  return grads;
}

DenseNet init_net(const NetSpec& spec, std::uint64_t seed) {
  DenseNet net(spec);
  std::mt19937_64 rng(seed);
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(net.layers()[li].in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : net.weights(li)) w = dist(rng);
  }
  return net;
}

}  // namespace privkt
