#include "l2mu/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "l2mu/errors.hpp"

namespace l2mu {

double percentile(const std::vector<double>& sorted, double q) {
  require(!sorted.empty(), "percentile: no values");
  require(q >= 0.0 && q <= 100.0, "percentile: q must be in [0, 100]");
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

LatencyReport summarize_latencies(std::vector<double> latencies_s, double bin_width_ms) {
  require(!latencies_s.empty(), "latency report: no runs");
  require(bin_width_ms > 0.0, "latency report: bin width must be positive");
  LatencyReport r;
  r.bin_width_ms = bin_width_ms;
  std::vector<double> sorted = latencies_s;
  std::sort(sorted.begin(), sorted.end());
  r.mean_s = std::accumulate(latencies_s.begin(), latencies_s.end(), 0.0) /
             static_cast<double>(latencies_s.size());
  r.median_s = percentile(sorted, 50.0);
  r.p95_s = percentile(sorted, 95.0);
  r.p99_s = percentile(sorted, 99.0);

  const auto bin_of = [&](double s) {
    return static_cast<std::size_t>(std::floor(s * 1000.0 / bin_width_ms));
  };
  const std::size_t first = bin_of(sorted.front());
  const std::size_t last = bin_of(sorted.back());
  r.histogram.resize(last - first + 1);
  for (std::size_t b = 0; b < r.histogram.size(); ++b) {
    r.histogram[b].start_ms = static_cast<double>(first + b) * bin_width_ms;
  }
  for (double s : sorted) ++r.histogram[bin_of(s) - first].count;
  r.latencies_s = std::move(latencies_s);
  return r;
}

std::string LatencyReport::serialize() const {
  nlohmann::json j;
  j["latencies_s"] = latencies_s;
  j["mean_s"] = mean_s;
  j["median_s"] = median_s;
  j["p95_s"] = p95_s;
  j["p99_s"] = p99_s;
  j["bin_width_ms"] = bin_width_ms;
  auto& bins = j["histogram"] = nlohmann::json::array();
  for (const auto& b : histogram) bins.push_back({b.start_ms, b.count});
  return j.dump();
}

LatencyReport LatencyReport::parse(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    LatencyReport r;
    r.latencies_s = j.at("latencies_s").get<std::vector<double>>();
    r.mean_s = j.at("mean_s").get<double>();
    r.median_s = j.at("median_s").get<double>();
    r.p95_s = j.at("p95_s").get<double>();
    r.p99_s = j.at("p99_s").get<double>();
    r.bin_width_ms = j.at("bin_width_ms").get<double>();
    for (const auto& b : j.at("histogram")) {
      r.histogram.push_back({b.at(0).get<double>(), b.at(1).get<std::size_t>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("latency report: ") + e.what());
  }
}

LatencyReport bench_callable(const std::function<void(std::size_t)>& fn, std::size_t runs,
                             std::size_t warmup, double bin_width_ms) {
  if (runs < kMinBenchRuns) {
    throw std::invalid_argument("bench: need at least " + std::to_string(kMinBenchRuns) + " runs");
  }
  for (std::size_t i = 0; i < warmup; ++i) fn(i);
  std::vector<double> times(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn(warmup + i);
    const auto t1 = std::chrono::steady_clock::now();
    times[i] = std::chrono::duration<double>(t1 - t0).count();
  }
  return summarize_latencies(std::move(times), bin_width_ms);
}

LatencyReport bench_inference(const Model<float>& model, const std::vector<Sample>& samples,
                              std::size_t runs, std::size_t warmup, double bin_width_ms,
                              std::vector<std::vector<float>>* outputs) {
  require(!samples.empty(), "bench: no samples");
  auto state = make_network_state(model);
  if (outputs != nullptr) {
    outputs->clear();
    outputs->reserve(runs);
  }
  std::vector<float> logits;
  auto report = bench_callable(
      [&](std::size_t i) { logits = forward(model, samples[i % samples.size()], state); }, runs,
      warmup, bin_width_ms);
  if (outputs != nullptr) {
    // Timed runs are replayed untimed so collecting them does not perturb the clock.
    for (std::size_t i = 0; i < runs; ++i) {
      outputs->push_back(forward(model, samples[(warmup + i) % samples.size()], state));
    }
  }
  return report;
}

double energy_delay_product(double energy_mj, double time_s) {
  if (!(energy_mj > 0.0) || !(time_s > 0.0)) {
    throw std::invalid_argument("energy_delay_product: energy and time must be positive");
  }
  return energy_mj * time_s;
}

namespace {

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> summary_fields(const SummaryInput& in) {
  std::vector<std::pair<std::string, std::string>> f;
  f.emplace_back("model", in.name);
  if (in.accuracy) f.emplace_back("accuracy", number(*in.accuracy));
  f.emplace_back("nonzero_params", std::to_string(in.params.count));
  f.emplace_back("footprint_bytes", std::to_string(in.params.footprint_bytes));
  if (in.synops_per_sample) f.emplace_back("synops_per_sample", number(*in.synops_per_sample));
  f.emplace_back("runs", std::to_string(in.latency.latencies_s.size()));
  f.emplace_back("mean_ms", number(in.latency.mean_s * 1e3));
  f.emplace_back("median_ms", number(in.latency.median_s * 1e3));
  f.emplace_back("p95_ms", number(in.latency.p95_s * 1e3));
  f.emplace_back("p99_ms", number(in.latency.p99_s * 1e3));
  if (in.energy_mj) {
    f.emplace_back("energy_mj", number(*in.energy_mj));
    f.emplace_back("edp_mj_s", number(energy_delay_product(*in.energy_mj, in.latency.mean_s)));
  }
  return f;
}

std::string report_summary(const SummaryInput& in) {
  std::string header, row;
  for (const auto& [k, v] : summary_fields(in)) {
    if (!header.empty()) {
      header += ',';
      row += ',';
    }
    header += k;
    row += v;
  }
  return header + '\n' + row + '\n';
}

std::string histogram_csv(const LatencyReport& report) {
  std::string out = "bin_start_ms,count\n";
  for (const auto& b : report.histogram) out += number(b.start_ms) + ',' + std::to_string(b.count) + '\n';
  return out;
}

}  // namespace l2mu
