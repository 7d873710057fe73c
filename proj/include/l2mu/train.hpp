#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "l2mu/data.hpp"
#include "l2mu/grad.hpp"
#include "l2mu/loss.hpp"
#include "l2mu/network.hpp"

namespace l2mu {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  Architecture arch;
  NeuronConfig neurons;
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  AdamConfig adam;
  std::uint64_t seed = 0;
  double surrogate_slope = 25.0;
  double grad_clip = 0.0;     // global L2 norm; 0 disables
  double weight_decay = 0.0;  // L2 coefficient added to the gradient
  std::size_t threads = 1;
  std::string log_path;       // empty: no log file
  std::ostream* progress = nullptr;

  void validate() const;
};

/// Accuracy and confusion matrix (row = true class, column = predicted).
struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::size_t total = 0;
  std::vector<std::vector<std::size_t>> confusion;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
};

struct Metrics {
  std::vector<EpochRecord> epochs;
  Evaluation test;
};

/// Line-oriented progress record, also written to the log file.
std::string format_epoch(const EpochRecord& r);

template <typename Real>
Evaluation evaluate(const Model<Real>& model, const std::vector<Sample>& samples,
                    std::size_t threads = 1, const ForwardOptions& opts = {});

struct TrainHooks {
  /// Runs after every optimizer step, e.g. to re-apply a pruning mask.
  std::function<void(Model<float>&)> after_step;
  /// Runs after every epoch with the 1-based epoch number.
  std::function<void(std::size_t, const Model<float>&)> after_epoch;
};

struct TrainResult {
  Model<float> model;
  Metrics metrics;
};

/// Initializes a model from `config.seed` and trains it.
TrainResult train_model(const TrainConfig& config, const DatasetSplits& splits);

/// Trains an existing model in place. Batch order depends only on
/// `config.seed`; the result does not depend on `config.threads`.
Metrics train_existing(Model<float>& model, const TrainConfig& config,
                       const DatasetSplits& splits, const TrainHooks& hooks = {});

}  // namespace l2mu
