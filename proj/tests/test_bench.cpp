#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "l2mu/bench.hpp"
#include "l2mu/errors.hpp"

using namespace l2mu;

namespace {

double round1(double v) { return std::round(v * 10.0) / 10.0; }

}  // namespace

TEST_CASE("energy-delay product") {
  CHECK(energy_delay_product(153.9, 0.03) == doctest::Approx(4.617));
  CHECK(round1(energy_delay_product(153.9, 0.03)) == doctest::Approx(4.6));
  CHECK(energy_delay_product(727.5, 0.15) == doctest::Approx(109.125));
  CHECK(round1(energy_delay_product(727.5, 0.15)) == doctest::Approx(109.1));
  CHECK_THROWS_AS(energy_delay_product(0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(energy_delay_product(1.0, -0.1), std::invalid_argument);
}

TEST_CASE("percentiles interpolate linearly") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(percentile(v, 0.0) == 1.0);
  CHECK(percentile(v, 50.0) == 3.0);
  CHECK(percentile(v, 100.0) == 5.0);
  CHECK(percentile(v, 95.0) == doctest::Approx(4.8));
  CHECK(percentile({7.0}, 99.0) == 7.0);
  CHECK_THROWS_AS(percentile({}, 50.0), std::invalid_argument);
  CHECK_THROWS_AS(percentile(v, 101.0), std::invalid_argument);
}

TEST_CASE("latency summary and histogram") {
  std::vector<double> t;
  for (int i = 0; i < 100; ++i) t.push_back(0.0101 + 0.0002 * i);  // 10.1 ms to 29.9 ms
  const auto r = summarize_latencies(t, 5.0);
  CHECK(r.mean_s == doctest::Approx(0.02));
  CHECK(r.median_s == doctest::Approx(0.02));
  CHECK(r.latencies_s == t);
  REQUIRE(r.histogram.size() == 4);
  CHECK(r.histogram.front().start_ms == 10.0);
  std::size_t total = 0;
  for (const auto& b : r.histogram) total += b.count;
  CHECK(total == 100);
  CHECK(r.histogram[0].count == 25);
  const auto csv = histogram_csv(r);
  CHECK(csv.rfind("bin_start_ms,count\n10,25\n", 0) == 0);
  CHECK_THROWS_AS(summarize_latencies({}, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(summarize_latencies({0.1}, 0.0), std::invalid_argument);
}

TEST_CASE("latency report serialization round trip") {
  std::vector<double> t;
  for (int i = 0; i < 120; ++i) t.push_back(1e-3 * (1.0 + std::sin(0.1 * i)));
  const auto r = summarize_latencies(t, 0.5);
  CHECK(LatencyReport::parse(r.serialize()) == r);
  CHECK_THROWS_AS(LatencyReport::parse("{"), FormatError);
  CHECK_THROWS_AS(LatencyReport::parse("{\"mean_s\": 1}"), FormatError);
}

TEST_CASE("timing harness") {
  std::size_t calls = 0;
  const auto r = bench_callable([&](std::size_t) { ++calls; }, 100, 10);
  CHECK(calls == 110);
  CHECK(r.latencies_s.size() == 100);
  for (double v : r.latencies_s) CHECK(v >= 0.0);
  CHECK_THROWS_AS(bench_callable([](std::size_t) {}, 99), std::invalid_argument);
}

TEST_CASE("inference benchmark outputs match plain forward passes") {
  Architecture a;
  a.n_expand = 3;
  a.n_fuse = 8;
  a.n_harm = 4;
  a.n_u = 4;
  a.d = 2;
  a.n_h = 5;
  a.n_classes = 3;
  const auto model = Model<float>::initialize(a, {}, 1);
  const auto data = synth_dataset(3, 2, 2);
  std::vector<std::vector<float>> outputs;
  const auto r = bench_inference(model, data, 100, 3, 5.0, &outputs);
  CHECK(r.latencies_s.size() == 100);
  REQUIRE(outputs.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(outputs[i] == forward(model, data[(3 + i) % data.size()]));
}

TEST_CASE("summary record") {
  SummaryInput in;
  in.name = "leaky";
  in.params = {128367, 4 * 128367};
  in.latency = summarize_latencies(std::vector<double>(100, 0.03));
  const auto plain = report_summary(in);
  CHECK(plain.find("edp") == std::string::npos);
  CHECK(plain.find("energy") == std::string::npos);
  CHECK(plain.find("accuracy") == std::string::npos);
  CHECK(plain.rfind("model,nonzero_params,footprint_bytes,runs,mean_ms,", 0) == 0);

  in.energy_mj = 153.9;
  in.accuracy = 0.93;
  in.synops_per_sample = 1234.0;
  const auto fields = summary_fields(in);
  CHECK(fields.back().first == "edp_mj_s");
  CHECK(std::stod(fields.back().second) == doctest::Approx(4.617));
  const auto full = report_summary(in);
  CHECK(full.find("accuracy") != std::string::npos);
  CHECK(full.find("synops_per_sample") != std::string::npos);
  CHECK(std::count(full.begin(), full.end(), '\n') == 2);
}
