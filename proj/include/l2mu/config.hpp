#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "l2mu/data.hpp"
#include "l2mu/train.hpp"

namespace l2mu {

/// Everything a CLI run can be configured with.
struct RunConfig {
  TrainConfig train;
  double sparsity = 0.55;
  std::size_t finetune_epochs = 300;
  std::string whitelist = kDefaultWhitelist;
  bool standardize = false;
  SplitMode split_mode = SplitMode::PerWindow;
  std::size_t synth_classes = 3;
  std::size_t synth_per_class = 300;
  double synth_amplitude = 1.0;
  std::size_t bench_runs = 1000;
  std::size_t bench_warmup = 10;
  double bin_width_ms = 5.0;
  std::optional<double> energy_mj;
};

/// Flat `key = value` lines; `#` starts a comment. Unknown keys, repeated
/// keys and unparsable values are std::invalid_argument naming the line.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Builds a run configuration. The variant (from `variant_override`, else the
/// `variant` key, else leaky) selects the default architecture and sparsity;
/// other keys then override individual fields.
RunConfig build_run_config(const std::map<std::string, std::string>& kv,
                           std::optional<NeuronModel> variant_override = std::nullopt);

RunConfig load_run_config(const std::string& path, std::optional<NeuronModel> variant_override);

/// Default global sparsity per variant.
double default_sparsity(NeuronModel variant);

}  // namespace l2mu
