#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "l2mu/grad.hpp"
#include "l2mu/loss.hpp"
#include "l2mu/random.hpp"

using namespace l2mu;

namespace {

Architecture small_arch(NeuronModel variant) {
  Architecture a;
  a.variant = variant;
  a.n_expand = 3;
  a.n_fuse = 10;
  a.n_harm = 5;
  a.n_u = 4;
  a.d = 3;
  a.n_h = 6;
  a.n_classes = 3;
  return a;
}

Sample random_sample(std::uint64_t seed, std::size_t steps = kWindowSteps) {
  Rng rng(seed);
  Sample s;
  s.steps = steps;
  s.values.resize(steps * s.channels);
  for (float& v : s.values) v = static_cast<float>(1.5 * rng.normal());
  return s;
}

}  // namespace

TEST_CASE("recorded forward is the plain forward") {
  for (auto variant : {NeuronModel::Leaky, NeuronModel::Synaptic}) {
    const auto model = Model<float>::initialize(small_arch(variant), {}, 4);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto s = random_sample(seed);
      const auto rec = forward_recorded(model, s);
      REQUIRE(rec.logits == forward(model, s));
      REQUIRE(rec.tape.size() == s.steps);
    }
    const auto rec = forward_recorded(model, random_sample(7));
    CHECK(replay_matches(rec.tape));
  }
}

TEST_CASE("backward is linear in the upstream gradient") {
  const auto model = Model<double>::initialize(small_arch(NeuronModel::Synaptic), {}, 6);
  const auto rec = forward_recorded(model, random_sample(2));
  const std::vector<double> g{0.3, -1.1, 0.25};
  std::vector<double> g2(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) g2[k] = 2.0 * g[k];
  const auto a = backward<double>(rec.tape, g);
  const auto b = backward<double>(rec.tape, g2);
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    const auto av = a.tensors[k].values();
    const auto bv = b.tensors[k].values();
    for (std::size_t i = 0; i < av.size(); ++i) CHECK(std::abs(bv[i] - 2.0 * av[i]) <= 1e-12 * (1.0 + std::abs(bv[i])));
  }
}

TEST_CASE("readout gradient is the spike count") {
  const auto model = Model<double>::initialize(small_arch(NeuronModel::Leaky), {}, 1);
  const auto rec = forward_recorded(model, random_sample(3));
  const std::vector<double> g{0.0, 1.0, 0.0};
  const auto grads = backward<double>(rec.tape, g);
  const auto& gw = grads.tensors[kTensorCount - 1];
  for (std::size_t j = 0; j < model.arch.n_h; ++j) {
    double count = 0.0;
    for (const auto& step : rec.tape.steps) count += step[Population::H].spikes[j];
    CHECK(gw(1, j) == count);
    CHECK(gw(0, j) == 0.0);
  }
}

TEST_CASE("linear rig: closed-form gradients of the h input weights") {
  // With an unreachable h threshold and a membrane readout the logits are a
  // linear filter of the x and m spikes:
  //   logits_k = sum_j W_out(k, j) sum_t sum_{s <= t} beta^(t - s) c_s[j].
  NeuronConfig neurons;
  neurons.h.threshold = std::numeric_limits<double>::infinity();
  auto arch = small_arch(NeuronModel::Leaky);
  arch.theta = 4.0;
  auto model = Model<double>::initialize(arch, neurons, 13);
  // Stronger weights keep every population of this small net active.
  for (auto* t : model.tensors()) {
    for (double& v : t->values()) v *= 3.0;
  }
  const ForwardOptions rig{SpikeFunction{}, ReadoutSource::Membrane};
  const auto s = random_sample(5);
  const auto rec = forward_recorded(model, s, rig);
  const std::vector<double> g{0.7, -0.2, 0.4};
  const auto grads = backward<double>(rec.tape, g);

  const double beta = neurons.h.beta;
  const std::size_t T = rec.tape.size();
  std::vector<double> tail(T);
  for (std::size_t s_ = 0; s_ < T; ++s_) {
    double acc = 0.0, p = 1.0;
    for (std::size_t t = s_; t < T; ++t, p *= beta) acc += p;
    tail[s_] = acc;
  }
  const auto check = [&](std::size_t tensor, Population source, std::size_t cols) {
    for (std::size_t j = 0; j < model.arch.n_h; ++j) {
      double upstream = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) upstream += g[k] * model.w_out(k, j);
      for (std::size_t i = 0; i < cols; ++i) {
        double drive = 0.0;
        for (std::size_t t = 0; t < T; ++t) drive += tail[t] * rec.tape.steps[t][source].spikes[i];
        const double expect = upstream * drive;
        CHECK(std::abs(grads.tensors[tensor](j, i) - expect) <= 1e-9 * std::max(1.0, std::abs(expect)));
      }
    }
  };
  check(6, Population::Harm, model.arch.n_x());
  check(8, Population::M, model.arch.n_m());
  double activity = 0.0;
  for (const auto& step : rec.tape.steps) {
    for (double v : step[Population::M].spikes) activity += v;
  }
  CHECK(activity > 0.0);
}

TEST_CASE("central differences agree with backpropagation") {
  for (auto variant : {NeuronModel::Leaky, NeuronModel::Synaptic}) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      CAPTURE(seed);
      const auto model = gradcheck_model(variant, seed);
      FiniteDifferenceOptions opts;
      opts.seed = seed;
      const auto report = finite_difference_check(model, gradcheck_sample(seed + 100),
                                                  static_cast<int>(seed % 2), 1e-6, opts);
      CHECK(report.checked == 64);
      CHECK(report.max_relative_error < 1e-4);
    }
  }
}

TEST_CASE("residual error at a coarse step is difference truncation") {
  // This network has one parameter where epsilon = 1e-5 misses by 1.8e-4; the
  // miss shrinks a hundredfold per decade of epsilon, as O(epsilon^2) should.
  const auto model = gradcheck_model(NeuronModel::Synaptic, 0);
  const auto sample = gradcheck_sample(1000);
  const double e4 = finite_difference_check(model, sample, 0, 1e-4).max_relative_error;
  const double e5 = finite_difference_check(model, sample, 0, 1e-5).max_relative_error;
  const double e6 = finite_difference_check(model, sample, 0, 1e-6).max_relative_error;
  CHECK(e4 / e5 == doctest::Approx(100.0).epsilon(0.05));
  CHECK(e5 / e6 == doctest::Approx(100.0).epsilon(0.05));
  CHECK(e6 < 1e-4);
}

TEST_CASE("difference error shrinks with the step") {
  const auto model = gradcheck_model(NeuronModel::Synaptic, 3);
  const auto sample = gradcheck_sample(9);
  const auto coarse = finite_difference_check(model, sample, 1, 1e-2);
  const auto fine = finite_difference_check(model, sample, 1, 1e-5);
  CHECK(fine.max_relative_error < coarse.max_relative_error);
  CHECK_THROWS_AS(finite_difference_check(model, sample, 1, 0.0), std::invalid_argument);
}

TEST_CASE("gradient set arithmetic") {
  const auto model = Model<float>::initialize(small_arch(NeuronModel::Leaky), {}, 2);
  auto a = GradientSet<float>::zeros_like(model);
  CHECK(a.squared_norm() == 0.0);
  a.tensors[0](0, 0) = 3.0f;
  a.tensors[9](1, 2) = 4.0f;
  CHECK(a.squared_norm() == 25.0);
  auto b = a;
  b.add(a);
  b.scale(0.5f);
  CHECK(b.squared_norm() == 25.0);
  CHECK(b.all_finite());
  b.tensors[3](0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(b.all_finite());
  b.set_zero();
  CHECK(b.squared_norm() == 0.0);
}

TEST_CASE("cross-entropy") {
  const std::vector<double> uniform(7, 0.3);
  const auto u = cross_entropy<double>(uniform, 4);
  CHECK(u.loss == doctest::Approx(std::log(7.0)).epsilon(1e-12));
  CHECK(u.loss == doctest::Approx(1.9459).epsilon(1e-4));
  double sum = 0.0;
  for (double v : u.gradient) sum += v;
  CHECK(std::abs(sum) < 1e-15);
  CHECK(u.gradient[4] == doctest::Approx(1.0 / 7.0 - 1.0));

  const std::vector<double> saturated{1000.0, 0.0};
  const auto right = cross_entropy<double>(saturated, 0);
  CHECK(std::isfinite(right.loss));
  CHECK(right.loss == doctest::Approx(0.0));
  CHECK(cross_entropy<double>(saturated, 1).loss == doctest::Approx(1000.0));

  CHECK_THROWS_AS(cross_entropy<double>(saturated, 2), std::invalid_argument);
  CHECK_THROWS_AS(cross_entropy<double>(saturated, -1), std::invalid_argument);
  const std::vector<double> bad{0.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(cross_entropy<double>(bad, 0), std::invalid_argument);
}

TEST_CASE("degenerate linear rig has exact differences") {
  NeuronConfig neurons;
  for (PopulationParams* p : {&neurons.expand, &neurons.fuse, &neurons.harm, &neurons.u, &neurons.m, &neurons.h}) {
    p->threshold = std::numeric_limits<double>::infinity();
  }
  auto model = gradcheck_model(NeuronModel::Leaky, 1);
  model = Model<double>::initialize(model.arch, neurons, 1);
  FiniteDifferenceOptions opts;
  opts.forward.readout = ReadoutSource::Membrane;
  const auto report = finite_difference_check(model, gradcheck_sample(2), 0, 1e-5, opts);
  CHECK(report.max_relative_error < 1e-9);
}

TEST_CASE("a silent sample leaves the readout gradient at zero") {
  const auto model = Model<double>::initialize(small_arch(NeuronModel::Leaky), {}, 3);
  Sample s;
  s.values.assign(s.steps * s.channels, 0.0f);
  const auto rec = forward_recorded(model, s);
  const std::vector<double> g{1.0, -0.5, 0.25};
  const auto grads = backward<double>(rec.tape, g);
  for (double v : grads.tensors[kTensorCount - 1].values()) CHECK(v == 0.0);
}
