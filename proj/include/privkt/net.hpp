#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "privkt/tensor.hpp"

namespace privkt {

enum class Activation { identity, relu, sigmoid };

std::string to_string(Activation act);
Activation activation_from_string(std::string_view name);

struct LayerSpec {
  std::size_t units = 0;
  Activation activation = Activation::identity;
};

struct NetSpec {
  std::size_t input_dim = 0;
  std::vector<LayerSpec> layers;

  // Hidden ReLU layers followed by an output layer with the given head.
  static NetSpec mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                     std::size_t output_dim,
                     Activation head = Activation::identity);
};

// Offsets of one affine layer inside the flat parameter vector. The weight
// block is out x in, row-major.
struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::identity;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

/// Values recorded by a training-mode forward pass: the input of every layer
/// and its post-activation output. Backward replays these in reverse.
struct GradTape {
  std::vector<Tensor> inputs;
  std::vector<Tensor> outputs;

  bool empty() const { return inputs.empty(); }
  void clear() {
    inputs.clear();
    outputs.clear();
  }
};

struct NetGradients {
  std::vector<double> params;  // same layout as DenseNet::parameters()
  Tensor input;                // dLoss/dInput, B x input_dim
};

/// A fixed chain of affine layers with elementwise activations. All
/// parameters live in one flat vector so optimizers and checkpoints can
/// treat the net as a single array.
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(const NetSpec& spec);  // all parameters zero

  Tensor forward(const Tensor& batch) const;
  Tensor forward(const Tensor& batch, GradTape& tape) const;

  // loss_grad is dLoss/dOutput (B x output_dim).
  NetGradients backward(const GradTape& tape, const Tensor& loss_grad) const;

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> biases(std::size_t layer);
  std::span<const double> biases(std::size_t layer) const;

  const std::vector<LayerShape>& layers() const { return layers_; }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  NetSpec spec() const;

  friend bool operator==(const DenseNet&, const DenseNet&) = default;

 private:
  void check_input(const Tensor& batch) const;

  std::vector<LayerShape> layers_;
  std::vector<double> params_;
};

/// Weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), biases zero.
DenseNet init_net(const NetSpec& spec, std::uint64_t seed);

}  // namespace privkt
