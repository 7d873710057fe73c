#include "l2mu/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "l2mu/errors.hpp"

namespace l2mu {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("config: bad value for " + key + ": '" + value + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(const std::string& key, const std::string& v) {
  if (v == "inf") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v);
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

std::map<std::string, Setter> setters() {
  std::map<std::string, Setter> s;
  const auto arch_size = [](std::size_t Architecture::*field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.arch.*field = to_size(k, v);
    };
  };
  s["n_channels"] = arch_size(&Architecture::n_channels);
  s["n_expand"] = arch_size(&Architecture::n_expand);
  s["n_fuse"] = arch_size(&Architecture::n_fuse);
  s["n_harm"] = arch_size(&Architecture::n_harm);
  s["n_u"] = arch_size(&Architecture::n_u);
  s["n_h"] = arch_size(&Architecture::n_h);
  s["d"] = arch_size(&Architecture::d);
  s["n_classes"] = arch_size(&Architecture::n_classes);
  s["theta"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.arch.theta = to_double(k, v); };
  s["dt"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.arch.dt = to_double(k, v); };

  const std::pair<const char*, PopulationParams NeuronConfig::*> pops[] = {
      {"expand", &NeuronConfig::expand}, {"fuse", &NeuronConfig::fuse}, {"harm", &NeuronConfig::harm},
      {"u", &NeuronConfig::u},           {"m", &NeuronConfig::m},       {"h", &NeuronConfig::h}};
  for (const auto& [name, pop] : pops) {
    const std::pair<const char*, double PopulationParams::*> fields[] = {
        {"alpha", &PopulationParams::alpha},
        {"beta", &PopulationParams::beta},
        {"threshold", &PopulationParams::threshold}};
    for (const auto& [fname, field] : fields) {
      s[std::string(name) + "." + fname] = [pop, field](RunConfig& c, const std::string& k,
                                                        const std::string& v) {
        (c.train.neurons.*pop).*field = to_double(k, v);
      };
    }
  }

  s["epochs"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.epochs = to_size(k, v); };
  s["batch_size"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.batch_size = to_size(k, v); };
  s["learning_rate"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.adam.learning_rate = to_double(k, v); };
  s["adam_beta1"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.adam.beta1 = to_double(k, v); };
  s["adam_beta2"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.adam.beta2 = to_double(k, v); };
  s["adam_epsilon"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.adam.epsilon = to_double(k, v); };
  s["seed"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = to_u64(k, v); };
  s["surrogate_slope"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.surrogate_slope = to_double(k, v); };
  s["grad_clip"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.grad_clip = to_double(k, v); };
  s["weight_decay"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.weight_decay = to_double(k, v); };
  s["threads"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.threads = to_size(k, v); };
  s["log_path"] = [](RunConfig& c, const std::string&, const std::string& v) { c.train.log_path = v; };

  s["sparsity"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.sparsity = to_double(k, v); };
  s["finetune_epochs"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.finetune_epochs = to_size(k, v); };
  s["whitelist"] = [](RunConfig& c, const std::string&, const std::string& v) { c.whitelist = v; };
  s["standardize"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.standardize = to_bool(k, v); };
  s["split_mode"] = [](RunConfig& c, const std::string& k, const std::string& v) {
    if (v == "window") {
      c.split_mode = SplitMode::PerWindow;
    } else if (v == "subject") {
      c.split_mode = SplitMode::PerSubject;
    } else {
      bad_value(k, v);
    }
  };
  s["synth_classes"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.synth_classes = to_size(k, v); };
  s["synth_per_class"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.synth_per_class = to_size(k, v); };
  s["synth_amplitude"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.synth_amplitude = to_double(k, v); };
  s["bench_runs"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.bench_runs = to_size(k, v); };
  s["bench_warmup"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.bench_warmup = to_size(k, v); };
  s["bin_width_ms"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.bin_width_ms = to_double(k, v); };
  s["energy_mj"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.energy_mj = to_double(k, v); };
  s["variant"] = [](RunConfig&, const std::string&, const std::string&) {};
  return s;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  static const auto known = setters();
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(number);
    if (eq == std::string::npos) throw std::invalid_argument(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (known.find(key) == known.end()) throw std::invalid_argument(where + ": unknown key '" + key + "'");
    if (!kv.emplace(key, value).second) throw std::invalid_argument(where + ": repeated key '" + key + "'");
  }
  return kv;
}

double default_sparsity(NeuronModel variant) {
  return variant == NeuronModel::Leaky ? 0.55 : 0.80;
}

RunConfig build_run_config(const std::map<std::string, std::string>& kv,
                           std::optional<NeuronModel> variant_override) {
  static const auto known = setters();
  NeuronModel variant = NeuronModel::Leaky;
  if (variant_override) {
    variant = *variant_override;
  } else if (const auto it = kv.find("variant"); it != kv.end()) {
    variant = parse_neuron_model(it->second);
  }
  RunConfig c;
  c.train.arch = variant == NeuronModel::Leaky ? Architecture::reference_leaky() : Architecture::reference_synaptic();
  c.sparsity = default_sparsity(variant);
  for (const auto& [k, v] : kv) {
    const auto it = known.find(k);
    if (it == known.end()) throw std::invalid_argument("config: unknown key '" + k + "'");
    it->second(c, k, v);
  }
  c.train.validate();
  for (const PopulationParams* p : {&c.train.neurons.expand, &c.train.neurons.fuse, &c.train.neurons.harm,
                                    &c.train.neurons.u, &c.train.neurons.m, &c.train.neurons.h}) {
    p->validate(variant);
  }
  require(c.sparsity >= 0.0 && c.sparsity < 1.0, "config: sparsity must be in [0, 1)");
  return c;
}

RunConfig load_run_config(const std::string& path, std::optional<NeuronModel> variant_override) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  return build_run_config(parse_key_values(text), variant_override);
}

}  // namespace l2mu
