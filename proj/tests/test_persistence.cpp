#include <doctest.h>

#include <filesystem>
#include <limits>
#include <stdexcept>

#include "l2mu/binary_io.hpp"
#include "l2mu/checkpoint.hpp"
#include "l2mu/config.hpp"
#include "l2mu/errors.hpp"

using namespace l2mu;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("checkpoint round trip is byte-identical") {
  for (auto arch : {Architecture::reference_leaky(), Architecture::reference_synaptic()}) {
    NeuronConfig neurons;
    neurons.m.beta = 0.75;
    neurons.h.threshold = 0.8;
    const auto model = Model<float>::initialize(arch, neurons, 42);
    const auto path = temp_file("l2mu_test_model.ckpt");
    save_checkpoint(path, model);
    const auto first = read_file_bytes(path);
    const auto loaded = load_checkpoint(path);
    CHECK_FALSE(loaded.mask.has_value());
    CHECK(loaded.model.arch == arch);
    CHECK(loaded.model.neurons == neurons);
    CHECK(loaded.model.cell.a_bar == model.cell.a_bar);
    save_checkpoint(path, loaded.model);
    CHECK(read_file_bytes(path) == first);
    const auto s = synth_dataset(7, 1, 3)[5];
    CHECK(forward(loaded.model, s) == forward(model, s));
    std::filesystem::remove(path);
  }
}

TEST_CASE("checkpoint with a mask") {
  Architecture a;
  a.n_expand = 3;
  a.n_fuse = 9;
  a.n_harm = 5;
  a.n_u = 3;
  a.d = 3;
  a.n_h = 4;
  a.n_classes = 2;
  auto model = Model<float>::initialize(a, {}, 1);
  const auto mask = global_magnitude_prune(model, 0.37);
  apply_mask(model, mask);
  const auto bytes = encode_checkpoint(model, &mask);
  const auto back = decode_checkpoint(bytes);
  REQUIRE(back.mask.has_value());
  CHECK(*back.mask == mask);
  CHECK(encode_checkpoint(back.model, &*back.mask) == bytes);
}

TEST_CASE("damaged checkpoints are rejected") {
  Architecture a;
  a.n_expand = 2;
  a.n_fuse = 4;
  a.n_harm = 3;
  a.n_u = 2;
  a.d = 2;
  a.n_h = 2;
  a.n_classes = 2;
  const auto bytes = encode_checkpoint(Model<float>::initialize(a, {}, 2));
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_checkpoint(truncated), FormatError);
  CHECK_THROWS_AS(decode_checkpoint({}), FormatError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(magic), FormatError);
  auto version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(decode_checkpoint(version), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing), FormatError);
  auto n_x = bytes;
  n_x[7 + 4 * 4] ^= 1;  // n_x no longer equals n_harm
  CHECK_THROWS_AS(decode_checkpoint(n_x), FormatError);
  CHECK_THROWS_AS(load_checkpoint(temp_file("l2mu_missing.ckpt")), IoError);
}

TEST_CASE("config parsing") {
  const auto kv = parse_key_values("# comment\n n_u = 20 \nd=4\n\nvariant = synaptic # trailing\n");
  CHECK(kv.size() == 3);
  CHECK(kv.at("n_u") == "20");
  const auto cfg = build_run_config(kv);
  CHECK(cfg.train.arch.variant == NeuronModel::Synaptic);
  CHECK(cfg.train.arch.n_u == 20);
  CHECK(cfg.train.arch.d == 4);
  CHECK(cfg.train.arch.n_h == Architecture::reference_synaptic().n_h);
  CHECK(cfg.sparsity == 0.80);
  CHECK(build_run_config({}).sparsity == 0.55);
  CHECK(build_run_config(kv, NeuronModel::Leaky).train.arch.variant == NeuronModel::Leaky);

  const auto full = build_run_config(parse_key_values(
      "learning_rate = 0.01\nh.threshold = inf\nsplit_mode = subject\nstandardize = true\n"
      "energy_mj = 153.9\nlog_path = /tmp/x.log\n"));
  CHECK(full.train.adam.learning_rate == 0.01);
  CHECK(full.train.neurons.h.threshold == std::numeric_limits<double>::infinity());
  CHECK(full.split_mode == SplitMode::PerSubject);
  CHECK(full.standardize);
  CHECK(full.energy_mj == 153.9);
  CHECK(full.train.log_path == "/tmp/x.log");
}

TEST_CASE("config rejects typos and bad values") {
  CHECK_THROWS_AS(parse_key_values("n_uu = 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_key_values("n_u = 3\nn_u = 4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_key_values("n_u 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(build_run_config(parse_key_values("n_u = three\n")), std::invalid_argument);
  CHECK_THROWS_AS(build_run_config(parse_key_values("split_mode = random\n")), std::invalid_argument);
  CHECK_THROWS_AS(build_run_config(parse_key_values("sparsity = 1\n")), std::invalid_argument);
  CHECK_THROWS_AS(build_run_config(parse_key_values("u.beta = 1.5\n")), std::invalid_argument);
  CHECK_THROWS_AS(build_run_config(parse_key_values("variant = izhikevich\n")), std::invalid_argument);
  try {
    parse_key_values("n_u = 3\nlearning_rte = 0.1\n");
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_run_config(temp_file("l2mu_missing.cfg").string(), std::nullopt), IoError);
}
