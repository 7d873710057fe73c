#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "l2mu/data.hpp"
#include "l2mu/network.hpp"
#include "l2mu/random.hpp"

using namespace l2mu;

namespace {

Architecture small_arch(NeuronModel variant) {
  Architecture a;
  a.variant = variant;
  a.n_expand = 4;
  a.n_fuse = 12;
  a.n_harm = 6;
  a.n_u = 5;
  a.d = 3;
  a.n_h = 7;
  a.n_classes = 3;
  return a;
}

Sample random_sample(std::uint64_t seed, double scale = 2.0) {
  Rng rng(seed);
  Sample s;
  s.values.resize(s.steps * s.channels);
  for (float& v : s.values) v = static_cast<float>(scale * rng.normal());
  return s;
}

}  // namespace

TEST_CASE("reference architectures") {
  const auto leaky = Architecture::reference_leaky();
  CHECK(leaky.n_m() == 1050);
  CHECK(leaky.d == 7);
  CHECK(leaky.n_x() == 10);
  const auto syn = Architecture::reference_synaptic();
  CHECK(syn.n_m() == 1840);
  CHECK(syn.d == 8);
  CHECK(Model<float>::zeros(leaky, {}).parameter_count() == 268100);
  CHECK(Model<float>::zeros(syn, {}).parameter_count() == 867940);
}

TEST_CASE("tensor shapes follow the architecture") {
  const auto m = Model<float>::zeros(Architecture::reference_leaky(), {});
  const auto t = m.tensors();
  const std::size_t expect[kTensorCount][2] = {{6, 30},    {170, 180}, {10, 170}, {150, 10}, {150, 60},
                                                {150, 1050}, {60, 10},   {60, 60},  {60, 1050}, {7, 60}};
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    CAPTURE(kTensorNames[k]);
    CHECK(t[k]->rows() == expect[k][0]);
    CHECK(t[k]->cols() == expect[k][1]);
  }
}

TEST_CASE("architecture validation") {
  auto a = small_arch(NeuronModel::Leaky);
  a.d = 0;
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  a = small_arch(NeuronModel::Leaky);
  a.theta = 0.0;
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
}

TEST_CASE("a zero window yields zero logits and class 0") {
  for (auto variant : {NeuronModel::Leaky, NeuronModel::Synaptic}) {
    const auto model = Model<float>::initialize(small_arch(variant), {}, 3);
    Sample s;
    s.values.assign(s.steps * s.channels, 0.0f);
    const auto logits = forward(model, s);
    for (float v : logits) CHECK(v == 0.0f);
    CHECK(argmax<float>(logits) == 0);
  }
}

TEST_CASE("initialization is seeded") {
  const auto a = Model<float>::initialize(small_arch(NeuronModel::Leaky), {}, 11);
  const auto b = Model<float>::initialize(small_arch(NeuronModel::Leaky), {}, 11);
  const auto c = Model<float>::initialize(small_arch(NeuronModel::Leaky), {}, 12);
  for (std::size_t k = 0; k < kTensorCount; ++k) CHECK(*a.tensors()[k] == *b.tensors()[k]);
  CHECK_FALSE(*a.tensors()[1] == *c.tensors()[1]);
}

TEST_CASE("forward is deterministic and resets between samples") {
  const auto model = Model<float>::initialize(small_arch(NeuronModel::Synaptic), {}, 5);
  const auto s1 = random_sample(1);
  const auto s2 = random_sample(2);
  auto state = make_network_state(model);
  const auto first = forward(model, s1, state);
  forward(model, s2, state);
  CHECK(forward(model, s1, state) == first);
  CHECK(forward(model, s1) == first);
}

TEST_CASE("streaming steps match the batch forward") {
  const auto model = Model<float>::initialize(small_arch(NeuronModel::Leaky), {}, 8);
  const auto s = random_sample(4);
  auto state = make_network_state(model);
  network_reset(state);
  for (std::size_t t = 0; t < s.steps; ++t) network_step(model, state, s.at(t));
  CHECK(state.logits == forward(model, s));
}

TEST_CASE("logits are linear in the readout weights") {
  auto model = Model<float>::initialize(small_arch(NeuronModel::Leaky), {}, 21);
  const auto s = random_sample(3);
  const auto base = forward(model, s);
  for (float& w : model.w_out.values()) w *= 2.0f;
  const auto doubled = forward(model, s);
  for (std::size_t k = 0; k < base.size(); ++k) CHECK(doubled[k] == 2.0f * base[k]);
}

TEST_CASE("the network spikes on ordinary input") {
  const auto model = Model<float>::initialize(small_arch(NeuronModel::Leaky), {}, 2);
  double magnitude = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (float v : forward(model, random_sample(seed, 1.0))) magnitude += std::abs(v);
  }
  CHECK(magnitude > 0.0);
}

TEST_CASE("precision casts agree") {
  const auto model = Model<float>::initialize(small_arch(NeuronModel::Synaptic), {}, 9);
  const auto as_double = model.cast<double>();
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    CHECK(as_double.tensors()[k]->cast<float>() == *model.tensors()[k]);
  }
  const auto wide = as_double.cast<long double>();
  const auto s = synth_dataset(3, 1, 4)[0];
  const ForwardOptions smooth{SpikeFunction{SpikeMode::Smooth, 25.0}, ReadoutSource::Spikes};
  const auto ld = forward(wide, s, smooth);
  const auto d = forward(as_double, s, smooth);
  REQUIRE(ld.size() == d.size());
  for (std::size_t k = 0; k < d.size(); ++k) CHECK(static_cast<double>(ld[k]) == doctest::Approx(d[k]));
}

TEST_CASE("argmax ties go to the lowest index") {
  const std::vector<float> v{1.0f, 3.0f, 3.0f, -2.0f};
  CHECK(argmax<float>(v) == 1);
}

namespace {

CellParams<double> toy_cell(std::size_t n_x, std::size_t n_u, std::size_t d, std::size_t n_h) {
  CellParams<double> p;
  p.n_x = n_x;
  p.n_u = n_u;
  p.d = d;
  p.n_h = n_h;
  p.e_x = Matrix<double>(n_u, n_x);
  p.e_h = Matrix<double>(n_u, n_h);
  p.e_m = Matrix<double>(n_u, n_u * d);
  p.w_x = Matrix<double>(n_h, n_x);
  p.w_h = Matrix<double>(n_h, n_h);
  p.w_m = Matrix<double>(n_h, n_u * d);
  p.set_state_space(build_state_space(static_cast<int>(d), 10.0, 1.0));
  p.u = p.m = p.h = PopulationParams{0.5, 1.0, 0.5};
  p.validate();
  return p;
}

}  // namespace

TEST_CASE("u population: identity input fires on the input step") {
  auto p = toy_cell(3, 3, 2, 2);
  for (std::size_t i = 0; i < 3; ++i) p.e_x(i, i) = 1.0;
  auto st = make_cell_state(p);
  std::vector<double> x{0.0, 1.0, 0.0};
  const auto spk = u_step<double>(p, x, st.h.spikes, st.m.spikes, st.u, st.current, st.active);
  CHECK(std::vector<double>(spk.begin(), spk.end()) == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("m population: one u spike writes B_bar") {
  auto p = toy_cell(1, 1, 2, 1);
  p.m.threshold = 10.0;
  auto st = make_cell_state(p);
  const std::vector<double> u_spk{1.0};
  m_step<double>(p, u_spk, st.m, st.current);
  CHECK(st.current[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(st.current[1] == doctest::Approx(-0.3).epsilon(1e-15));
  CHECK(st.current[0] == p.b_bar[0]);
  CHECK(st.current[1] == p.b_bar[1]);
}

TEST_CASE("h population: a single m spike through an identity W_m") {
  auto p = toy_cell(1, 1, 2, 2);
  p.w_m(0, 0) = 1.0;
  p.w_m(1, 1) = 1.0;
  auto st = make_cell_state(p);
  const std::vector<double> x{0.0}, h_prev{0.0, 0.0}, m_spk{1.0, 0.0};
  h_step<double>(p, x, h_prev, m_spk, st.h, st.current, st.active);
  CHECK(st.h.spikes == std::vector<double>{1.0, 0.0});
}

TEST_CASE("cell stays silent on silent input") {
  auto p = toy_cell(2, 2, 3, 2);
  for (double& v : p.e_x.values()) v = 1.0;
  auto st = make_cell_state(p);
  const std::vector<double> x{0.0, 0.0};
  for (int t = 0; t < 20; ++t) {
    const auto h = cell_step<double>(p, x, st);
    for (double v : h) CHECK(v == 0.0);
  }
}

TEST_CASE("encoder output width and binary spikes") {
  const auto model = Model<float>::initialize(Architecture::reference_leaky(), {}, 1);
  auto st = make_encoder_state(model.encoder);
  Rng rng(2);
  std::vector<float> x(6);
  for (int t = 0; t < 40; ++t) {
    for (float& v : x) v = static_cast<float>(3.0 * rng.normal());
    const auto spk = encoder_step<float>(model.encoder, st, x);
    REQUIRE(spk.size() == 10);
    for (float v : spk) CHECK((v == 0.0f || v == 1.0f));
  }
  encoder_reset(st);
  auto again = st;
  encoder_reset(again);
  CHECK(again.same_dynamics(st));
  for (float v : st.fuse.membrane) CHECK(v == 0.0f);
}
