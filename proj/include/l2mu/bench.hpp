#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "l2mu/compress.hpp"
#include "l2mu/network.hpp"

namespace l2mu {

struct HistogramBin {
  double start_ms = 0.0;
  std::size_t count = 0;

  friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

/// Per-inference wall times in seconds and their summary. Percentiles use
/// linear interpolation between order statistics.
struct LatencyReport {
  std::vector<double> latencies_s;
  double mean_s = 0.0;
  double median_s = 0.0;
  double p95_s = 0.0;
  double p99_s = 0.0;
  double bin_width_ms = 5.0;
  std::vector<HistogramBin> histogram;  // contiguous bins from the fastest to the slowest run

  std::string serialize() const;
  static LatencyReport parse(const std::string& text);

  friend bool operator==(const LatencyReport&, const LatencyReport&) = default;
};

LatencyReport summarize_latencies(std::vector<double> latencies_s, double bin_width_ms = 5.0);

/// Linear-interpolated percentile of sorted values, q in [0, 100].
double percentile(const std::vector<double>& sorted, double q);

inline constexpr std::size_t kMinBenchRuns = 100;
inline constexpr std::size_t kWarmupRuns = 10;

/// Times `runs` calls of fn(i) on a monotonic clock after `warmup` untimed
/// calls. Throws below kMinBenchRuns timed runs.
LatencyReport bench_callable(const std::function<void(std::size_t)>& fn, std::size_t runs,
                             std::size_t warmup = kWarmupRuns, double bin_width_ms = 5.0);

/// Single-sample inferences cycling through `samples`. When `outputs` is
/// given it receives the logits of the timed runs.
LatencyReport bench_inference(const Model<float>& model, const std::vector<Sample>& samples,
                              std::size_t runs, std::size_t warmup = kWarmupRuns,
                              double bin_width_ms = 5.0,
                              std::vector<std::vector<float>>* outputs = nullptr);

/// energy (mJ) x time (s), in mJ s.
double energy_delay_product(double energy_mj, double time_s);

struct SummaryInput {
  std::string name;
  std::optional<double> accuracy;
  ParamCount params;
  std::optional<double> synops_per_sample;
  LatencyReport latency;
  std::optional<double> energy_mj;  // measured externally, per inference
};

/// Ordered (column, value) pairs. EDP uses the mean latency and is present
/// only with an energy value.
std::vector<std::pair<std::string, std::string>> summary_fields(const SummaryInput& in);

/// Header row and one record, comma-separated, newline-terminated.
std::string report_summary(const SummaryInput& in);

/// `bin_start_ms,count` lines under a header.
std::string histogram_csv(const LatencyReport& report);

}  // namespace l2mu
