#include <cmath>
#include <random>

#include "doctest.h"
#include "privkt/adversarial.hpp"
#include "privkt/error.hpp"
#include "privkt/loss.hpp"
#include "support.hpp"

using namespace privkt;

namespace {

DenseNet random_disc(std::mt19937_64& rng, std::size_t in) {
  return init_net(test::random_spec(rng, in, 1, Activation::sigmoid), rng());
}

double loss_d_of(const DenseNet& d, const Tensor& yt, const Tensor& ys) {
  return gan_losses(discriminate_batch(d, yt).probs,
                    discriminate_batch(d, ys).probs, GanMode::minimax)
      .loss_d;
}

// dLoss_D / dparams by the library's pieces.
std::vector<double> loss_d_grad(const DenseNet& d, const Tensor& yt,
                                const Tensor& ys) {
  const auto bt = discriminate_batch(d, yt);
  const auto bs = discriminate_batch(d, ys);
  const auto g = gan_loss_grads(bt.probs, bs.probs, GanMode::minimax);
  auto pull = [&](const DiscriminatorBatch& b, const std::vector<double>& dp) {
    Tensor up(dp.size(), 1);
    for (std::size_t i = 0; i < dp.size(); ++i) {
      up.values[i] = b.clamped[i] ? 0.0 : dp[i];
    }
    return d.backward(b.tape, up).params;
  };
  auto a = pull(bt, g.d_loss_d_teacher);
  const auto b = pull(bs, g.d_loss_d_student);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

struct StudentPath {
  Tensor gumbel;
  double lambda;
  GanMode mode;

  double loss(const DenseNet& d, const Tensor& z) const {
    const Tensor y = gumbel_relax_batch(softmax(z), gumbel, lambda);
    return student_gan_loss(discriminate_batch(d, y).probs, mode);
  }

  Tensor grad(const DenseNet& d, const Tensor& z) const {
    const Tensor p = softmax(z);
    const Tensor y = gumbel_relax_batch(p, gumbel, lambda);
    const auto b = discriminate_batch(d, y);
    const auto dp = student_gan_loss_grad(b.probs, mode);
    Tensor up(dp.size(), 1);
    for (std::size_t i = 0; i < dp.size(); ++i) {
      up.values[i] = b.clamped[i] ? 0.0 : dp[i];
    }
    const Tensor dy = d.backward(b.tape, up).input;
    return gumbel_relax_vjp(p, y, dy, lambda);
  }
};

}  // namespace

TEST_CASE("gumbel_sample: near-zero temperature gives the Gumbel-max one-hot") {
  Rng rng(31);
  const std::vector<double> p{0.5, 0.3, 0.2};
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> g(3);
    for (double& v : g) v = draw_gumbel(rng);
    const auto y = gumbel_relax(p, g, 1e-6);
    std::vector<double> s(3);
    for (int k = 0; k < 3; ++k) s[k] = std::log(p[k]) + g[k];
    CHECK(argmax(y) == argmax(s));
  }
  double max_mass = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto y = gumbel_sample(ProbVector{p, 1.0}, 1e-4, rng).y;
    max_mass += y[argmax(y)] / 1000.0;
  }
  CHECK(max_mass > 0.99);
}

TEST_CASE("gumbel_sample: argmax frequencies follow p") {
  Rng rng(2024);
  const ProbVector p{{0.7, 0.2, 0.1}, 1.0};
  std::vector<double> freq(3, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) freq[argmax(gumbel_sample(p, 0.1, rng).y)] += 1.0;
  for (int k = 0; k < 3; ++k) CHECK(std::abs(freq[k] / n - p.probs[k]) <= 0.02);
}

TEST_CASE("gumbel_sample: deterministic under a fixed seed") {
  const ProbVector p{{0.25, 0.25, 0.5}, 1.0};
  Rng a(7), b(7);
  const auto ya = gumbel_sample(p, 0.5, a, SampleSource::teacher);
  const auto yb = gumbel_sample(p, 0.5, b, SampleSource::teacher);
  CHECK(ya.y == yb.y);
  CHECK(ya.source == SampleSource::teacher);
  CHECK(ya.temperature == 0.5);
}

TEST_CASE("gumbel_sample: relaxed samples stay on the simplex") {
  Rng rng(8);
  std::mt19937_64 prng(9);
  for (double lambda : {0.01, 0.1, 0.5, 1.0, 3.0, 50.0}) {
    for (int i = 0; i < 500; ++i) {
      const ProbVector p{test::random_simplex(2 + i % 7, prng), 1.0};
      const auto y = gumbel_sample(p, lambda, rng).y;
      double s = 0.0;
      for (double v : y) {
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("gumbel_relax: non-positive temperature is a config error") {
  const std::vector<double> p{0.5, 0.5}, g{0.0, 0.0};
  CHECK_THROWS_AS(gumbel_relax(p, g, 0.0), ConfigError);
}

TEST_CASE("gumbel_relax_vjp: matches finite differences through softmax") {
  std::mt19937_64 rng(33);
  Rng grng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const double lambda = 0.3 + 0.2 * (trial % 5);
    const Tensor z = test::random_tensor(3, 4, rng);
    const Tensor g = draw_gumbel_noise(3, 4, grng);
    const Tensor c = test::random_tensor(3, 4, rng);
    auto f = [&](std::span<const double> v) {
      const Tensor y =
          gumbel_relax_batch(softmax(Tensor({3, 4}, {v.begin(), v.end()})), g,
                             lambda);
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) s += c.values[i] * y.values[i];
      return s;
    };
    const Tensor p = softmax(z);
    const Tensor y = gumbel_relax_batch(p, g, lambda);
    const Tensor grad = gumbel_relax_vjp(p, y, c, lambda);
    CHECK(test::max_rel_err(grad.values, test::numeric_grad(f, z.values)) < 1e-4);
  }
}

TEST_CASE("discriminate: examples") {
  const NetSpec spec{3, {{1, Activation::sigmoid}}};
  const RelaxedSample y{{0.2, 0.3, 0.5}, SampleSource::student, 1.0};
  CHECK(discriminate(DenseNet(spec), y) == 0.5);

  DenseNet d(spec);
  auto w = d.weights(0);
  w[0] = 1.0; w[1] = -2.0; w[2] = 0.5;
  d.biases(0)[0] = 0.1;
  const double logit = 0.2 - 0.6 + 0.25 + 0.1;
  CHECK(discriminate(d, y) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-logit))).epsilon(1e-15));

  d.biases(0)[0] = 100.0;
  CHECK(discriminate(d, y) == 1.0 - kDiscriminatorClamp);
  d.biases(0)[0] = -100.0;
  CHECK(discriminate(d, y) == kDiscriminatorClamp);
  Tensor in(1, 3);
  CHECK(discriminate_batch(d, in).clamped[0]);
}

TEST_CASE("discriminate: wrong head or width is a config error") {
  const RelaxedSample y{{0.5, 0.5}, SampleSource::student, 1.0};
  CHECK_THROWS_AS(discriminate(DenseNet(NetSpec{2, {{2, Activation::sigmoid}}}), y),
                  ConfigError);
  CHECK_THROWS_AS(discriminate(DenseNet(NetSpec{2, {{1, Activation::identity}}}), y),
                  ConfigError);
  CHECK_THROWS_AS(discriminate(DenseNet(NetSpec{3, {{1, Activation::sigmoid}}}), y),
                  ConfigError);
}

TEST_CASE("gan_losses: examples") {
  const std::vector<double> half{0.5, 0.5};
  CHECK(gan_losses(half, half, GanMode::minimax).loss_d ==
        doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-15));

  const std::vector<double> hi{1.0 - kDiscriminatorClamp};
  const std::vector<double> lo{kDiscriminatorClamp};
  const double perfect = gan_losses(hi, lo, GanMode::minimax).loss_d;
  CHECK(perfect < 0.0);
  CHECK(perfect > -1e-6);

  const std::vector<double> t{0.9, 0.6}, s{0.4, 0.1};
  const auto l = gan_losses(t, s, GanMode::minimax);
  const double expect =
      (std::log(0.9) + std::log(0.6)) / 2 + (std::log(0.6) + std::log(0.9)) / 2;
  CHECK(l.loss_d == doctest::Approx(expect).epsilon(1e-15));
  CHECK(l.loss_d == doctest::Approx(-0.6162).epsilon(1e-4));
  CHECK(l.loss_s == doctest::Approx((std::log(0.6) + std::log(0.9)) / 2));
  CHECK(gan_losses(t, s, GanMode::nonsaturating).loss_s ==
        doctest::Approx(-(std::log(0.4) + std::log(0.1)) / 2));
}

TEST_CASE("gan_losses: empty batches are input errors") {
  const std::vector<double> none, one{0.5};
  CHECK_THROWS_AS(gan_losses(none, one, GanMode::minimax), InputError);
  CHECK_THROWS_AS(gan_losses(one, none, GanMode::minimax), InputError);
}

TEST_CASE("gan_losses: identical sources bound loss_D by 2 ln 0.5") {
  std::mt19937_64 rng(40);
  Rng grng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const DenseNet d = random_disc(rng, 4);
    const Tensor p = softmax(test::random_tensor(16, 4, rng));
    const Tensor y = gumbel_relax_batch(p, draw_gumbel_noise(16, 4, grng), 1.0);
    CHECK(loss_d_of(d, y, y) <= 2.0 * std::log(0.5) + 1e-15);
  }
}

TEST_CASE("gan_losses: analytic gradients match finite differences") {
  std::mt19937_64 rng(42);
  for (auto mode : {GanMode::minimax, GanMode::nonsaturating}) {
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::vector<double> t(5), s(4);
    for (double& v : t) v = u(rng);
    for (double& v : s) v = u(rng);
    const auto g = gan_loss_grads(t, s, mode);
    const auto fdt = test::numeric_grad(
        [&](std::span<const double> v) {
          return gan_losses(v, s, mode).loss_d;
        },
        t);
    const auto fds = test::numeric_grad(
        [&](std::span<const double> v) {
          return gan_losses(t, v, mode).loss_d;
        },
        s);
    const auto fss = test::numeric_grad(
        [&](std::span<const double> v) {
          return gan_losses(t, v, mode).loss_s;
        },
        s);
    CHECK(test::max_rel_err(g.d_loss_d_teacher, fdt) < 1e-6);
    CHECK(test::max_rel_err(g.d_loss_d_student, fds) < 1e-6);
    CHECK(test::max_rel_err(g.d_loss_s_student, fss) < 1e-6);
  }
}

TEST_CASE("discriminator: parameter gradient matches finite differences") {
  std::mt19937_64 rng(43);
  Rng grng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseNet d = random_disc(rng, 3);
    const Tensor yt = gumbel_relax_batch(softmax(test::random_tensor(6, 3, rng)),
                                         draw_gumbel_noise(6, 3, grng), 1.0);
    const Tensor ys = gumbel_relax_batch(softmax(test::random_tensor(6, 3, rng)),
                                         draw_gumbel_noise(6, 3, grng), 1.0);
    const auto g = loss_d_grad(d, yt, ys);
    const auto fd = test::numeric_grad(
        [&](std::span<const double> p) {
          DenseNet probe = d;
          std::copy(p.begin(), p.end(), probe.parameters().begin());
          return loss_d_of(probe, yt, ys);
        },
        std::vector<double>(d.parameters().begin(), d.parameters().end()));
    CHECK(test::max_rel_err(g, fd) < 1e-4);
  }
}

TEST_CASE("student adversarial path: gradient through D and the relaxation") {
  std::mt19937_64 rng(45);
  Rng grng(46);
  for (auto mode : {GanMode::minimax, GanMode::nonsaturating}) {
    for (int trial = 0; trial < 20; ++trial) {
      const DenseNet d = random_disc(rng, 4);
      const StudentPath path{draw_gumbel_noise(5, 4, grng),
                             0.5 + 0.25 * (trial % 4), mode};
      const Tensor z = test::random_tensor(5, 4, rng);
      const Tensor g = path.grad(d, z);
      const auto fd = test::numeric_grad(
          [&](std::span<const double> v) {
            return path.loss(d, Tensor({5, 4}, {v.begin(), v.end()}));
          },
          z.values);
      CHECK(test::max_rel_err(g.values, fd) < 1e-4);
    }
  }
}

TEST_CASE("ascent on loss_D and descent on loss_S improve their objectives") {
  std::mt19937_64 rng(47);
  Rng grng(48);
  for (int trial = 0; trial < 100; ++trial) {
    DenseNet d = random_disc(rng, 3);
    const Tensor yt = gumbel_relax_batch(softmax(test::random_tensor(8, 3, rng)),
                                         draw_gumbel_noise(8, 3, grng), 1.0);
    const Tensor ys = gumbel_relax_batch(softmax(test::random_tensor(8, 3, rng)),
                                         draw_gumbel_noise(8, 3, grng), 1.0);
    const double before = loss_d_of(d, yt, ys);
    const auto g = loss_d_grad(d, yt, ys);
    for (std::size_t i = 0; i < g.size(); ++i) d.parameters()[i] += 1e-4 * g[i];
    CHECK(loss_d_of(d, yt, ys) > before);

    const StudentPath path{draw_gumbel_noise(8, 3, grng), 1.0, GanMode::minimax};
    Tensor z = test::random_tensor(8, 3, rng);
    const double s0 = path.loss(d, z);
    const Tensor gz = path.grad(d, z);
    for (std::size_t i = 0; i < z.size(); ++i) z.values[i] -= 1e-4 * gz.values[i];
    CHECK(path.loss(d, z) < s0);
  }
}
