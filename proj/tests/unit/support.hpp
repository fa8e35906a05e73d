#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "privkt/net.hpp"
#include "privkt/tensor.hpp"

namespace test {

// Central-difference gradient of f at x (h = 1e-5).
inline std::vector<double> numeric_grad(
    const std::function<double(std::span<const double>)>& f,
    std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Relative error with a small absolute floor so exact zeros compare cleanly.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

inline double max_rel_err(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, rel_err(a[i], b[i]));
  }
  return worst;
}

inline privkt::Tensor random_tensor(std::size_t rows, std::size_t cols,
                                    std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  privkt::Tensor t(rows, cols);
  for (double& v : t.values) v = n(rng);
  return t;
}

// Uniform point on the simplex via normalized exponentials.
inline std::vector<double> random_simplex(std::size_t m, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(m);
  double s = 0.0;
  for (double& v : p) s += (v = e(rng));
  for (double& v : p) v /= s;
  return p;
}

// Up to 3 layers, up to 32 units; hidden activations drawn at random.
inline privkt::NetSpec random_spec(std::mt19937_64& rng, std::size_t in,
                                   std::size_t out,
                                   privkt::Activation head =
                                       privkt::Activation::identity) {
  std::uniform_int_distribution<int> depth(1, 3);
  std::uniform_int_distribution<std::size_t> width(1, 32);
  std::uniform_int_distribution<int> act(0, 2);
  privkt::NetSpec spec{in, {}};
  const int d = depth(rng);
  for (int i = 0; i + 1 < d; ++i) {
    spec.layers.push_back({width(rng), static_cast<privkt::Activation>(act(rng))});
  }
  spec.layers.push_back({out, head});
  return spec;
}

}  // namespace test
