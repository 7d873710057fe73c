#include "l2mu/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "l2mu/errors.hpp"
#include "l2mu/parallel.hpp"
#include "l2mu/random.hpp"

namespace l2mu {

template <typename Real>
LossResult<Real> cross_entropy(std::span<const Real> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw std::invalid_argument("cross_entropy: label out of range");
  }
  Real top = logits[0];
  for (Real v : logits) {
    if (!std::isfinite(v)) throw std::invalid_argument("cross_entropy: non-finite logit");
    top = std::max(top, v);
  }
  Real sum{0};
  for (Real v : logits) sum += std::exp(v - top);
  const Real log_z = top + std::log(sum);
  LossResult<Real> out;
  out.loss = log_z - logits[static_cast<std::size_t>(label)];
  out.gradient.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out.gradient[k] = std::exp(logits[k] - log_z);
  out.gradient[static_cast<std::size_t>(label)] -= Real{1};
  return out;
}

template LossResult<float> cross_entropy<float>(std::span<const float>, int);
template LossResult<double> cross_entropy<double>(std::span<const double>, int);
template LossResult<long double> cross_entropy<long double>(std::span<const long double>, int);

void TrainConfig::validate() const {
  arch.validate();
  require(epochs > 0, "train: epochs must be positive");
  require(batch_size > 0, "train: batch size must be positive");
  require(threads > 0, "train: threads must be positive");
  require(adam.learning_rate > 0.0 && adam.epsilon > 0.0, "train: learning rate and epsilon must be positive");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0,
          "train: Adam decays must be in [0, 1)");
  require(surrogate_slope > 0.0, "train: surrogate slope must be positive");
  require(grad_clip >= 0.0 && weight_decay >= 0.0, "train: clip and decay must be non-negative");
}

std::string format_epoch(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "epoch=%zu loss=%.6f train_acc=%.4f val_acc=%.4f", r.epoch,
                r.train_loss, r.train_accuracy, r.validation_accuracy);
  return buf;
}

template <typename Real>
Evaluation evaluate(const Model<Real>& model, const std::vector<Sample>& samples,
                    std::size_t threads, const ForwardOptions& opts) {
  require(!samples.empty(), "evaluate: empty split");
  const std::size_t n_classes = model.arch.n_classes;
  for (const auto& s : samples) {
    require(s.label >= 0 && static_cast<std::size_t>(s.label) < n_classes,
            "evaluate: label out of range");
  }
  std::vector<int> predicted(samples.size());
  std::vector<double> losses(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const auto logits = forward(model, samples[i], opts);
    predicted[i] = argmax<Real>(logits);
    losses[i] = static_cast<double>(cross_entropy<Real>(logits, samples[i].label).loss);
  });
  Evaluation ev;
  ev.total = samples.size();
  ev.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ++ev.confusion[static_cast<std::size_t>(samples[i].label)][static_cast<std::size_t>(predicted[i])];
    if (predicted[i] == samples[i].label) ++correct;
    loss += losses[i];
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(ev.total);
  ev.mean_loss = loss / static_cast<double>(ev.total);
  return ev;
}

template Evaluation evaluate<float>(const Model<float>&, const std::vector<Sample>&, std::size_t,
                                    const ForwardOptions&);
template Evaluation evaluate<double>(const Model<double>&, const std::vector<Sample>&,
                                     std::size_t, const ForwardOptions&);

namespace {

class Adam {
 public:
  Adam(const Model<float>& model, const AdamConfig& cfg)
      : cfg_(cfg),
        m_(GradientSet<float>::zeros_like(model)),
        v_(GradientSet<float>::zeros_like(model)) {}

  void step(Model<float>& model, const GradientSet<float>& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto tensors = model.tensors();
    for (std::size_t k = 0; k < kTensorCount; ++k) {
      auto w = tensors[k]->values();
      auto m = m_.tensors[k].values();
      auto v = v_.tensors[k].values();
      const auto gk = g.tensors[k].values();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = gk[i];
        const double mi = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
        const double vi = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
        m[i] = static_cast<float>(mi);
        v[i] = static_cast<float>(vi);
        const double update = cfg_.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + cfg_.epsilon);
        w[i] = static_cast<float>(w[i] - update);
      }
    }
  }

 private:
  AdamConfig cfg_;
  GradientSet<float> m_;
  GradientSet<float> v_;
  std::uint64_t t_ = 0;
};

void check_split(const std::vector<Sample>& split, const char* name, std::size_t n_classes,
                 std::size_t channels) {
  if (split.empty()) throw std::invalid_argument(std::string("train: empty ") + name + " split");
  for (const auto& s : split) {
    require(s.label >= 0 && static_cast<std::size_t>(s.label) < n_classes,
            std::string("train: label out of range in ") + name + " split");
    require(s.channels == channels, std::string("train: channel count mismatch in ") + name + " split");
  }
}

}  // namespace

Metrics train_existing(Model<float>& model, const TrainConfig& config, const DatasetSplits& splits,
                       const TrainHooks& hooks) {
  config.validate();
  model.validate();
  const std::size_t n_classes = model.arch.n_classes;
  check_split(splits.train, "train", n_classes, model.arch.n_channels);
  check_split(splits.validation, "validation", n_classes, model.arch.n_channels);
  check_split(splits.test, "test", n_classes, model.arch.n_channels);

  std::ofstream log;
  if (!config.log_path.empty()) {
    log.open(config.log_path, std::ios::trunc);
    if (!log) throw IoError("cannot open log file " + config.log_path);
  }

  const ForwardOptions opts{SpikeFunction{SpikeMode::Heaviside, config.surrogate_slope},
                            ReadoutSource::Spikes};
  Rng rng(config.seed ^ 0x5DEECE66DULL);
  Adam adam(model, config.adam);
  std::vector<std::size_t> order(splits.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t slots = std::min(config.batch_size, order.size());
  std::vector<GradientSet<float>> per_sample(slots, GradientSet<float>::zeros_like(model));
  std::vector<double> sample_loss(slots);
  std::vector<char> sample_correct(slots);
  auto total = GradientSet<float>::zeros_like(model);

  Metrics metrics;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      parallel_for(count, config.threads, [&](std::size_t b) {
        const Sample& s = splits.train[order[start + b]];
        const auto rec = forward_recorded(model, s, opts);
        const auto loss = cross_entropy<float>(rec.logits, s.label);
        sample_loss[b] = loss.loss;
        sample_correct[b] = argmax<float>(rec.logits) == s.label;
        per_sample[b].set_zero();
        backward_accumulate<float>(rec.tape, loss.gradient, per_sample[b]);
      });
      total.set_zero();
      for (std::size_t b = 0; b < count; ++b) {
        if (!std::isfinite(sample_loss[b])) {
          throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
        }
        loss_sum += sample_loss[b];
        correct += static_cast<std::size_t>(sample_correct[b]);
        total.add(per_sample[b]);
      }
      total.scale(1.0f / static_cast<float>(count));
      if (config.weight_decay > 0.0) {
        const auto w = model.tensors();
        for (std::size_t k = 0; k < kTensorCount; ++k) {
          auto g = total.tensors[k].values();
          const auto wk = w[k]->values();
          for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += static_cast<float>(config.weight_decay) * wk[i];
          }
        }
      }
      if (!total.all_finite()) {
        throw std::runtime_error("train: non-finite gradient at epoch " + std::to_string(epoch));
      }
      if (config.grad_clip > 0.0) {
        const double norm = std::sqrt(total.squared_norm());
        if (norm > config.grad_clip) total.scale(static_cast<float>(config.grad_clip / norm));
      }
      adam.step(model, total);
      if (hooks.after_step) hooks.after_step(model);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    rec.validation_accuracy = evaluate(model, splits.validation, config.threads, opts).accuracy;
    metrics.epochs.push_back(rec);
    const std::string line = format_epoch(rec);
    if (config.progress != nullptr) *config.progress << line << '\n' << std::flush;
    if (log.is_open()) log << line << '\n' << std::flush;
    if (hooks.after_epoch) hooks.after_epoch(epoch, model);
  }
  metrics.test = evaluate(model, splits.test, config.threads, opts);
  return metrics;
}

TrainResult train_model(const TrainConfig& config, const DatasetSplits& splits) {
  config.validate();
  TrainResult out{Model<float>::initialize(config.arch, config.neurons, config.seed), {}};
  out.metrics = train_existing(out.model, config, splits);
  return out;
}

}  // namespace l2mu
