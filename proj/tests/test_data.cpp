#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>

#include "l2mu/binary_io.hpp"
#include "l2mu/data.hpp"
#include "l2mu/errors.hpp"

using namespace l2mu;

namespace {

std::vector<RawRecord> stream(int subject, char activity, std::size_t n, double offset = 0.0) {
  std::vector<RawRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = {subject, activity, static_cast<std::int64_t>(i), offset + static_cast<double>(i), 0.5, -0.5};
  }
  return out;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

// Magnitude spectrum of one channel, bins 0..steps/2.
std::vector<double> spectrum(const Sample& s, std::size_t c) {
  std::vector<double> mag(s.steps / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < s.steps; ++t) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(s.steps);
      acc += static_cast<double>(s.at(t)[c]) * std::polar(1.0, angle);
    }
    mag[k] = std::abs(acc);
  }
  return mag;
}

std::vector<double> features(const Sample& s) {
  std::vector<double> f(s.steps / 2 + 1, 0.0);
  for (std::size_t c = 0; c < s.channels; ++c) {
    const auto m = spectrum(s, c);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] += m[k] / static_cast<double>(s.steps);
  }
  return f;
}

}  // namespace

TEST_CASE("raw line parsing") {
  const auto r = parse_raw_text("1600,A,25220766,-0.36,8.79,1.05;\n");
  REQUIRE(r.records.size() == 1);
  const RawRecord expect{1600, 'A', 25220766, -0.36, 8.79, 1.05};
  CHECK(r.records[0] == expect);
  CHECK(r.malformed == 0);
  CHECK(r.lines == 1);
}

TEST_CASE("blank input has no records") {
  const auto r = parse_raw_text("\n  \n");
  CHECK(r.records.empty());
  CHECK(r.lines == 0);
}

TEST_CASE("malformed lines are skipped up to ten percent") {
  std::string text;
  for (int i = 0; i < 9; ++i) text += "1600,B," + std::to_string(i) + ",0.1,0.2,0.3;\n";
  const auto ok = parse_raw_text(text + "1600,B,99,abc,0.2,0.3;\n");
  CHECK(ok.records.size() == 9);
  CHECK(ok.malformed == 1);
  CHECK_THROWS_AS(parse_raw_text(text + "1600,B,99,abc,0.2,0.3;\n1600,B,100;\n"), FormatError);
  CHECK(parse_raw_text("1600,BB,1,0,0,0;\n1,B,1,0,0,0;\n1,B,1,0,0,0;\n1,B,1,0,0,0;\n1,B,1,0,0,0;\n"
                       "1,B,1,0,0,0;\n1,B,1,0,0,0;\n1,B,1,0,0,0;\n1,B,1,0,0,0;\n1,B,1,0,0,0;\n")
            .malformed == 1);
  CHECK_THROWS_AS(parse_raw_text("1,B,1,0,0,0,7;\n"), FormatError);
  CHECK_THROWS_AS(parse_raw_text("1,B,1,0,nan,0;\n"), FormatError);
}

TEST_CASE("missing raw file") {
  CHECK_THROWS_AS(parse_raw_file(temp_file("l2mu_no_such_file.txt")), IoError);
}

TEST_CASE("windowing") {
  SUBCASE("trailing steps are dropped") {
    const auto w = make_windows(stream(1, 'F', 100), stream(1, 'F', 100, 1000.0));
    REQUIRE(w.size() == 2);
    CHECK(w[0].steps == 40);
    CHECK(w[0].channels == 6);
    CHECK(w[0].label == 0);
    CHECK(w[0].subject == 1);
    CHECK(w[1].at(0)[0] == 40.0f);
    CHECK(w[1].at(0)[3] == 1040.0f);
    CHECK(w[1].at(39)[0] == 79.0f);
  }
  SUBCASE("streams are truncated to the shorter one") {
    CHECK(make_windows(stream(1, 'G', 85), stream(1, 'G', 90)).size() == 2);
    CHECK(make_windows(stream(1, 'G', 90), stream(1, 'G', 79)).size() == 1);
  }
  SUBCASE("whitelist filters and labels") {
    auto accel = stream(2, 'S', 40);
    auto gyro = stream(2, 'S', 40);
    const auto more_a = stream(2, 'A', 80);
    const auto more_g = stream(2, 'A', 80);
    accel.insert(accel.end(), more_a.begin(), more_a.end());
    gyro.insert(gyro.end(), more_g.begin(), more_g.end());
    const auto w = make_windows(accel, gyro);
    REQUIRE(w.size() == 1);
    CHECK(w[0].label == 6);
    CHECK(make_windows(accel, gyro, "AS").size() == 3);
    CHECK_THROWS_AS(make_windows(accel, gyro, ""), std::invalid_argument);
  }
  SUBCASE("a group missing from one stream yields nothing") {
    CHECK(make_windows(stream(1, 'F', 80), stream(2, 'F', 80)).empty());
  }
  SUBCASE("output is ordered by subject then activity") {
    auto accel = stream(9, 'G', 40);
    auto gyro = stream(9, 'G', 40);
    for (const auto& part : {stream(3, 'P', 40), stream(3, 'F', 40)}) {
      accel.insert(accel.end(), part.begin(), part.end());
      gyro.insert(gyro.end(), part.begin(), part.end());
    }
    const auto w = make_windows(accel, gyro);
    REQUIRE(w.size() == 3);
    CHECK(w[0].subject == 3);
    CHECK(w[0].label == 0);
    CHECK(w[1].label == 3);
    CHECK(w[2].subject == 9);
  }
}

TEST_CASE("split sizes") {
  const auto data = synth_dataset(2, 5, 1);
  const auto s = split_dataset(data, 3);
  CHECK(s.train.size() == 6);
  CHECK(s.validation.size() == 2);
  CHECK(s.test.size() == 2);
  const auto tiny = split_dataset(synth_dataset(3, 1, 1), 3);
  CHECK(tiny.train.size() == 1);
  CHECK(tiny.validation.size() == 1);
  CHECK_THROWS_AS(split_dataset(synth_dataset(2, 1, 1), 0), std::invalid_argument);
}

TEST_CASE("split partitions and depends only on the seed") {
  auto data = synth_dataset(4, 250, 2);
  for (std::size_t i = 0; i < data.size(); ++i) data[i].subject = static_cast<int>(i);
  const auto a = split_dataset(data, 7);
  const auto b = split_dataset(data, 7);
  const auto c = split_dataset(data, 8);
  CHECK(a.train.size() == 600);
  CHECK(a.validation.size() == 200);
  CHECK(a.test.size() == 200);
  CHECK(a.test == b.test);
  CHECK_FALSE(a.test == c.test);
  std::set<int> seen;
  for (const auto* part : {&a.train, &a.validation, &a.test}) {
    for (const auto& s : *part) CHECK(seen.insert(s.subject).second);
  }
  CHECK(seen.size() == 1000);
}

TEST_CASE("per-subject split keeps subjects together") {
  auto data = synth_dataset(3, 40, 4);
  for (std::size_t i = 0; i < data.size(); ++i) data[i].subject = static_cast<int>(i % 10);
  const auto s = split_dataset(data, 1, SplitMode::PerSubject);
  std::set<int> train, val, test;
  for (const auto& x : s.train) train.insert(x.subject);
  for (const auto& x : s.validation) val.insert(x.subject);
  for (const auto& x : s.test) test.insert(x.subject);
  CHECK(train.size() == 6);
  CHECK(val.size() == 2);
  CHECK(test.size() == 2);
  for (int v : val) CHECK(train.count(v) == 0);
  for (int v : test) CHECK((train.count(v) == 0 && val.count(v) == 0));
  CHECK(s.train.size() + s.validation.size() + s.test.size() == data.size());
}

TEST_CASE("synthetic classes peak at their own frequency") {
  const auto data = synth_dataset(7, 20, 5);
  CHECK(data.size() == 140);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(data[i].label == static_cast<int>(i % 7));
    const auto f = features(data[i]);
    std::size_t best = 0;
    for (std::size_t k = 1; k < f.size(); ++k) {
      if (f[k] > f[best]) best = k;
    }
    CHECK(best == static_cast<std::size_t>(2 * data[i].label + 1));
  }
  CHECK(synth_dataset(3, 4, 6) == synth_dataset(3, 4, 6));
  CHECK_THROWS_AS(synth_dataset(8, 1, 1), std::invalid_argument);
}

TEST_CASE("synthetic classes are linearly separable from spectra") {
  const auto splits = split_dataset(synth_dataset(7, 60, 8), 9);
  const std::size_t nf = 21, nc = 7;
  const auto to_features = [](const std::vector<Sample>& xs) {
    std::vector<std::vector<double>> out;
    for (const auto& s : xs) out.push_back(features(s));
    return out;
  };
  const auto xtr = to_features(splits.train);
  const auto xte = to_features(splits.test);
  std::vector<double> w(nc * (nf + 1), 0.0);
  const auto scores = [&](const std::vector<double>& x) {
    std::vector<double> z(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      z[c] = w[c * (nf + 1) + nf];
      for (std::size_t k = 0; k < nf; ++k) z[c] += w[c * (nf + 1) + k] * x[k];
    }
    return z;
  };
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<double> g(w.size(), 0.0);
    for (std::size_t i = 0; i < xtr.size(); ++i) {
      auto z = scores(xtr[i]);
      const double top = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double& v : z) sum += (v = std::exp(v - top));
      for (std::size_t c = 0; c < nc; ++c) {
        const double err = z[c] / sum - (static_cast<int>(c) == splits.train[i].label ? 1.0 : 0.0);
        for (std::size_t k = 0; k < nf; ++k) g[c * (nf + 1) + k] += err * xtr[i][k];
        g[c * (nf + 1) + nf] += err;
      }
    }
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= 0.5 * g[j] / static_cast<double>(xtr.size());
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < xte.size(); ++i) {
    const auto z = scores(xte[i]);
    correct += static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin()) == splits.test[i].label;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(xte.size()) >= 0.95);
}

TEST_CASE("standardization") {
  auto data = synth_dataset(3, 20, 10, 2.5);
  for (auto& s : data) {
    for (std::size_t t = 0; t < s.steps; ++t) s.at(t)[2] += 9.81f;
  }
  const auto stats = channel_stats(data);
  CHECK(stats.mean[2] == doctest::Approx(9.81).epsilon(0.02));
  standardize(data, stats);
  const auto after = channel_stats(data);
  for (std::size_t c = 0; c < 6; ++c) {
    CHECK(std::abs(after.mean[c]) < 1e-5);
    CHECK(after.stddev[c] == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("dataset cache round trip") {
  auto data = synth_dataset(3, 5, 11);
  data[4].subject = 1612;
  const auto path = temp_file("l2mu_test_cache.bin");
  save_dataset(data, path);
  CHECK(load_dataset(path) == data);

  auto bytes = read_file_bytes(path);
  bytes.pop_back();
  write_file_atomic(path, bytes);
  CHECK_THROWS_AS(load_dataset(path), FormatError);
  bytes[0] = 'X';
  write_file_atomic(path, bytes);
  CHECK_THROWS_AS(load_dataset(path), FormatError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_dataset(path), IoError);
}
