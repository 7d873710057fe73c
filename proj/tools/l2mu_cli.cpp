#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "l2mu/bench.hpp"
#include "l2mu/binary_io.hpp"
#include "l2mu/checkpoint.hpp"
#include "l2mu/compress.hpp"
#include "l2mu/config.hpp"
#include "l2mu/data.hpp"
#include "l2mu/errors.hpp"
#include "l2mu/grad.hpp"
#include "l2mu/lmu_math.hpp"
#include "l2mu/train.hpp"

namespace fs = std::filesystem;
using namespace l2mu;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitCheckFailed = 3;

/// Total number of windows the 7-class whitelist yields on the full public
/// smartwatch data; printed for comparison by `prepare`.
constexpr std::size_t kReferenceWindowCount = 36201;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::optional<std::size_t> threads;
};

RunConfig resolve(const Globals& g) {
  std::optional<NeuronModel> variant;
  if (!g.variant.empty()) variant = parse_neuron_model(g.variant);
  RunConfig c = load_run_config(g.config_path, variant);
  if (g.seed) c.train.seed = *g.seed;
  if (g.threads) c.train.threads = *g.threads;
  return c;
}

/// Raw files given directly or as directories of *.txt files, sorted by name.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> dir;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".txt") dir.push_back(e.path());
      }
      std::sort(dir.begin(), dir.end());
      out.insert(out.end(), dir.begin(), dir.end());
    } else {
      out.emplace_back(in);
    }
  }
  return out;
}

std::vector<RawRecord> read_all(const std::vector<std::string>& inputs) {
  std::vector<RawRecord> all;
  for (const auto& p : expand_inputs(inputs)) {
    auto r = parse_raw_file(p);
    all.insert(all.end(), r.records.begin(), r.records.end());
  }
  return all;
}

DatasetSplits load_splits(const RunConfig& c, const std::string& data_path) {
  auto splits = split_dataset(load_dataset(data_path), c.train.seed, c.split_mode);
  if (c.standardize) {
    const auto stats = channel_stats(splits.train);
    standardize(splits.train, stats);
    standardize(splits.validation, stats);
    standardize(splits.test, stats);
  }
  return splits;
}

void print_evaluation(const Evaluation& ev, const char* name) {
  std::printf("%s_accuracy=%.4f %s_loss=%.6f samples=%zu\n", name, ev.accuracy, name, ev.mean_loss,
              ev.total);
  std::printf("confusion (rows = true class, columns = predicted)\n");
  for (const auto& row : ev.confusion) {
    for (std::size_t k = 0; k < row.size(); ++k) std::printf(k == 0 ? "%zu" : ",%zu", row[k]);
    std::printf("\n");
  }
}

void check_model_matches_config(const Model<float>& m, const RunConfig& c) {
  if (m.arch.n_classes != c.train.arch.n_classes) {
    std::fprintf(stderr, "note: checkpoint has %zu classes, config %zu; using the checkpoint\n",
                 m.arch.n_classes, c.train.arch.n_classes);
  }
}

double mean_synops(const Model<float>& model, const std::vector<Sample>& samples) {
  double total = 0.0;
  for (const auto& s : samples) total += static_cast<double>(count_effective_synops(model, s).total());
  return total / static_cast<double>(samples.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking Legendre memory network: data, training, compression, benchmarking"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file");
  app.add_option("--seed", g.seed, "seed for initialization, batch order and splits");
  app.add_option("--variant", g.variant, "neuron model: leaky or synaptic");
  app.add_option("--threads", g.threads, "worker threads (results do not depend on it)");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "raw accelerometer/gyroscope files to a dataset cache");
  std::vector<std::string> accel_in, gyro_in;
  std::string out_path;
  prepare->add_option("--accel", accel_in, "accelerometer files or directories")->required();
  prepare->add_option("--gyro", gyro_in, "gyroscope files or directories")->required();
  prepare->add_option("--out", out_path, "dataset cache to write")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic sinusoid dataset");
  synth->add_option("--out", out_path, "dataset cache to write")->required();

  // train
  auto* train = app.add_subcommand("train", "train a model from scratch");
  std::string data_path, model_path, log_path;
  std::optional<std::size_t> epochs;
  train->add_option("--data", data_path, "dataset cache")->required();
  train->add_option("--out", out_path, "checkpoint to write")->required();
  train->add_option("--epochs", epochs, "override the configured epoch count");
  train->add_option("--log", log_path, "progress log file");

  // prune
  auto* prune = app.add_subcommand("prune", "global magnitude pruning");
  std::optional<double> sparsity;
  prune->add_option("--model", model_path, "input checkpoint")->required();
  prune->add_option("--out", out_path, "pruned checkpoint with mask")->required();
  prune->add_option("--sparsity", sparsity, "fraction of weights to remove");

  // finetune
  auto* finetune = app.add_subcommand("finetune", "train a pruned model with its mask held fixed");
  finetune->add_option("--model", model_path, "pruned checkpoint")->required();
  finetune->add_option("--data", data_path, "dataset cache")->required();
  finetune->add_option("--out", out_path, "checkpoint to write")->required();
  finetune->add_option("--epochs", epochs, "override the configured fine-tuning epochs");
  finetune->add_option("--log", log_path, "progress log file");

  // eval
  auto* eval = app.add_subcommand("eval", "accuracy and confusion matrix on the test split");
  eval->add_option("--model", model_path, "checkpoint")->required();
  eval->add_option("--data", data_path, "dataset cache")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "single-sample inference latency");
  std::optional<std::size_t> runs;
  std::string histogram_path, report_path;
  bench->add_option("--model", model_path, "checkpoint")->required();
  bench->add_option("--data", data_path, "dataset cache")->required();
  bench->add_option("--runs", runs, "timed runs (at least 100)");
  bench->add_option("--histogram", histogram_path, "write bin_start_ms,count CSV");
  bench->add_option("--report", report_path, "write the full latency report");

  // report
  auto* report = app.add_subcommand("report", "one metrics record: accuracy, size, synops, latency, EDP");
  std::optional<double> energy;
  std::string name = "model";
  report->add_option("--model", model_path, "checkpoint")->required();
  report->add_option("--data", data_path, "dataset cache")->required();
  report->add_option("--runs", runs, "timed runs (at least 100)");
  report->add_option("--energy-mj", energy, "measured energy per inference in mJ");
  report->add_option("--name", name, "value of the model column");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "backward pass against finite differences");
  double epsilon = 1e-6;
  std::size_t params = 64;
  gradcheck->add_option("--epsilon", epsilon, "finite-difference step");
  gradcheck->add_option("--params", params, "number of sampled parameters");

  // lmucheck
  auto* lmucheck = app.add_subcommand("lmucheck", "delay reconstruction of the Legendre memory");
  int order = 12;
  lmucheck->add_option("--d", order, "memory order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg = resolve(g);
    if (!log_path.empty()) cfg.train.log_path = log_path;
    cfg.train.progress = &std::cout;

    if (*prepare) {
      const auto accel = read_all(accel_in);
      const auto gyro = read_all(gyro_in);
      auto samples = make_windows(accel, gyro, cfg.whitelist);
      save_dataset(samples, out_path);
      const double diff = 100.0 * (static_cast<double>(samples.size()) / kReferenceWindowCount - 1.0);
      std::printf("windows=%zu reference=%zu difference=%+.2f%%\n", samples.size(),
                  kReferenceWindowCount, diff);
      return kExitOk;
    }
    if (*synth) {
      const auto samples = synth_dataset(cfg.synth_classes, cfg.synth_per_class, cfg.train.seed,
                                         cfg.synth_amplitude);
      save_dataset(samples, out_path);
      std::printf("samples=%zu classes=%zu\n", samples.size(), cfg.synth_classes);
      return kExitOk;
    }
    if (*train) {
      if (epochs) cfg.train.epochs = *epochs;
      const auto splits = load_splits(cfg, data_path);
      auto result = train_model(cfg.train, splits);
      save_checkpoint(out_path, result.model);
      print_evaluation(result.metrics.test, "test");
      return kExitOk;
    }
    if (*prune) {
      auto ck = load_checkpoint(model_path);
      const double s = sparsity.value_or(cfg.sparsity);
      const auto before = count_nonzero_params(ck.model);
      const auto mask = global_magnitude_prune(ck.model, s);
      apply_mask(ck.model, mask);
      const auto after = count_nonzero_params(ck.model, &mask);
      save_checkpoint(out_path, ck.model, &mask);
      std::printf("sparsity=%.4f nonzero_before=%zu nonzero_after=%zu footprint_bytes=%zu reduction=%.2f%%\n",
                  s, before.count, after.count, after.footprint_bytes,
                  reduction_percent(before.count, after.count));
      return kExitOk;
    }
    if (*finetune) {
      auto ck = load_checkpoint(model_path);
      if (!ck.mask) throw std::invalid_argument("finetune: checkpoint has no mask; run prune first");
      check_model_matches_config(ck.model, cfg);
      TrainConfig tc = cfg.train;
      tc.arch = ck.model.arch;
      tc.neurons = ck.model.neurons;
      tc.epochs = epochs.value_or(cfg.finetune_epochs);
      const auto splits = load_splits(cfg, data_path);
      const auto metrics = fine_tune(ck.model, *ck.mask, tc, splits);
      save_checkpoint(out_path, ck.model, &*ck.mask);
      const auto count = count_nonzero_params(ck.model, &*ck.mask);
      std::printf("nonzero=%zu footprint_bytes=%zu\n", count.count, count.footprint_bytes);
      print_evaluation(metrics.test, "test");
      return kExitOk;
    }
    if (*eval) {
      const auto ck = load_checkpoint(model_path);
      const auto splits = load_splits(cfg, data_path);
      print_evaluation(evaluate(ck.model, splits.test, cfg.train.threads), "test");
      return kExitOk;
    }
    if (*bench || *report) {
      const auto ck = load_checkpoint(model_path);
      const auto splits = load_splits(cfg, data_path);
      const auto latency = bench_inference(ck.model, splits.test, runs.value_or(cfg.bench_runs),
                                           cfg.bench_warmup, cfg.bin_width_ms);
      if (*bench) {
        std::printf("runs=%zu mean_ms=%.4f median_ms=%.4f p95_ms=%.4f p99_ms=%.4f\n",
                    latency.latencies_s.size(), latency.mean_s * 1e3, latency.median_s * 1e3,
                    latency.p95_s * 1e3, latency.p99_s * 1e3);
        if (!histogram_path.empty()) {
          const auto csv = histogram_csv(latency);
          write_file_atomic(histogram_path, std::vector<unsigned char>(csv.begin(), csv.end()));
        }
        if (!report_path.empty()) {
          const auto text = latency.serialize();
          write_file_atomic(report_path, std::vector<unsigned char>(text.begin(), text.end()));
        }
        return kExitOk;
      }
      SummaryInput in;
      in.name = name;
      in.accuracy = evaluate(ck.model, splits.test, cfg.train.threads).accuracy;
      in.params = count_nonzero_params(ck.model, ck.mask ? &*ck.mask : nullptr);
      in.synops_per_sample = mean_synops(ck.model, splits.test);
      in.latency = latency;
      if (energy) {
        in.energy_mj = energy;
      } else {
        in.energy_mj = cfg.energy_mj;
      }
      std::fputs(report_summary(in).c_str(), stdout);
      return kExitOk;
    }
    if (*gradcheck) {
      double worst = 0.0;
      for (NeuronModel v : {NeuronModel::Leaky, NeuronModel::Synaptic}) {
        const auto model = gradcheck_model(v, cfg.train.seed);
        FiniteDifferenceOptions opts;
        opts.parameters = params;
        opts.seed = cfg.train.seed;
        const auto rep = finite_difference_check(model, gradcheck_sample(cfg.train.seed + 1), 1,
                                                 epsilon, opts);
        std::printf("variant=%s checked=%zu max_relative_error=%.3e\n", to_string(v), rep.checked,
                    rep.max_relative_error);
        worst = std::max(worst, rep.max_relative_error);
      }
      return worst < 1e-4 ? kExitOk : kExitCheckFailed;
    }
    if (*lmucheck) {
      DelayExperiment exp;
      exp.d = order;
      const auto signal = random_band_limited_signal(cfg.train.seed);
      const double e = delay_reconstruction_nrmse(exp, signal);
      std::printf("d=%d theta=%d nrmse=%.5f\n", order, exp.window_samples, e);
      return e < 0.15 ? kExitOk : kExitCheckFailed;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return kExitUsage;
}
