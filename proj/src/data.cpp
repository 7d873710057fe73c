#include "l2mu/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string_view>

#include "l2mu/binary_io.hpp"
#include "l2mu/errors.hpp"
#include "l2mu/random.hpp"
#include "l2mu/tensor.hpp"

namespace l2mu {

namespace {

std::string_view trim(std::string_view s) {
  const auto blank = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && blank(s.front())) s.remove_prefix(1);
  while (!s.empty() && blank(s.back())) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    if (s.front() == '+') s.remove_prefix(1);
  }
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_line(std::string_view line, RawRecord& rec) {
  if (!line.empty() && line.back() == ';') line.remove_suffix(1);
  std::array<std::string_view, 6> fields;
  std::size_t n = 0;
  while (true) {
    const auto comma = line.find(',');
    if (n == fields.size()) return false;
    fields[n++] = line.substr(0, comma);
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  if (n != fields.size()) return false;
  const auto activity = trim(fields[1]);
  if (activity.size() != 1 || activity[0] < 'A' || activity[0] > 'Z') return false;
  rec.activity = activity[0];
  if (!parse_number(fields[0], rec.subject) || !parse_number(fields[2], rec.timestamp) ||
      !parse_number(fields[3], rec.x) || !parse_number(fields[4], rec.y) ||
      !parse_number(fields[5], rec.z)) {
    return false;
  }
  return std::isfinite(rec.x) && std::isfinite(rec.y) && std::isfinite(rec.z);
}

}  // namespace

ParseResult parse_raw_text(const std::string& text, const std::string& origin) {
  ParseResult out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    if (body.empty()) continue;
    ++out.lines;
    RawRecord rec;
    if (parse_line(body, rec)) {
      out.records.push_back(rec);
    } else {
      ++out.malformed;
    }
  }
  if (out.lines == 0) {
    std::cerr << "warning: " << origin << ": no records\n";
  } else if (out.malformed > 0) {
    std::cerr << "warning: " << origin << ": skipped " << out.malformed << " malformed of "
              << out.lines << " lines\n";
  }
  if (out.malformed * 10 > out.lines) {
    throw FormatError(origin + ": more than 10% of lines are malformed");
  }
  return out;
}

ParseResult parse_raw_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return parse_raw_text(buffer.str(), path.string());
}

std::vector<Sample> make_windows(const std::vector<RawRecord>& accel,
                                 const std::vector<RawRecord>& gyro, const std::string& whitelist,
                                 std::size_t window) {
  require(!whitelist.empty(), "make_windows: empty class whitelist");
  require(window > 0, "make_windows: window must be positive");
  using Key = std::pair<int, char>;
  std::map<Key, std::vector<const RawRecord*>> a_groups, g_groups;
  for (const auto& r : accel) {
    if (whitelist.find(r.activity) != std::string::npos) a_groups[{r.subject, r.activity}].push_back(&r);
  }
  for (const auto& r : gyro) {
    if (whitelist.find(r.activity) != std::string::npos) g_groups[{r.subject, r.activity}].push_back(&r);
  }

  std::vector<Sample> out;
  for (const auto& [key, a] : a_groups) {
    const auto it = g_groups.find(key);
    if (it == g_groups.end()) continue;
    const auto& g = it->second;
    const std::size_t aligned = std::min(a.size(), g.size());
    for (std::size_t w = 0; w + window <= aligned; w += window) {
      Sample s;
      s.steps = window;
      s.channels = kImuChannels;
      s.values.resize(window * kImuChannels);
      s.label = static_cast<int>(whitelist.find(key.second));
      s.subject = key.first;
      for (std::size_t t = 0; t < window; ++t) {
        const RawRecord& ra = *a[w + t];
        const RawRecord& rg = *g[w + t];
        auto row = s.at(t);
        row[0] = static_cast<float>(ra.x);
        row[1] = static_cast<float>(ra.y);
        row[2] = static_cast<float>(ra.z);
        row[3] = static_cast<float>(rg.x);
        row[4] = static_cast<float>(rg.y);
        row[5] = static_cast<float>(rg.z);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

namespace {

struct Cut {
  std::size_t train, validation, test;
};

Cut cut_sizes(std::size_t n) {
  const std::size_t holdout = std::max<std::size_t>(1, n / 5);
  return {n - 2 * holdout, holdout, holdout};
}

}  // namespace

DatasetSplits split_dataset(const std::vector<Sample>& samples, std::uint64_t seed,
                            SplitMode mode) {
  require(samples.size() >= 3, "split: need at least 3 samples");
  Rng rng(seed);
  DatasetSplits out;
  if (mode == SplitMode::PerWindow) {
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const Cut cut = cut_sizes(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      const Sample& s = samples[order[i]];
      if (i < cut.train) {
        out.train.push_back(s);
      } else if (i < cut.train + cut.validation) {
        out.validation.push_back(s);
      } else {
        out.test.push_back(s);
      }
    }
    return out;
  }

  std::set<int> subject_set;
  for (const auto& s : samples) subject_set.insert(s.subject);
  std::vector<int> subjects(subject_set.begin(), subject_set.end());
  require(subjects.size() >= 3, "split: per-subject mode needs at least 3 subjects");
  rng.shuffle(subjects);
  const Cut cut = cut_sizes(subjects.size());
  std::map<int, int> bucket;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    bucket[subjects[i]] = i < cut.train ? 0 : (i < cut.train + cut.validation ? 1 : 2);
  }
  for (const auto& s : samples) {
    const int b = bucket[s.subject];
    (b == 0 ? out.train : b == 1 ? out.validation : out.test).push_back(s);
  }
  return out;
}

std::vector<Sample> synth_dataset(std::size_t n_classes, std::size_t n_per_class,
                                  std::uint64_t seed, double amplitude, std::size_t steps,
                                  std::size_t channels) {
  require(n_classes >= 1 && n_classes <= 7, "synth_dataset: n_classes must be in 1..7");
  require(steps > 0 && channels > 0, "synth_dataset: empty window");
  require(amplitude > 0.0, "synth_dataset: amplitude must be positive");
  Rng rng(seed);
  const double sigma = amplitude / std::sqrt(20.0);
  std::vector<Sample> out;
  out.reserve(n_classes * n_per_class);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (std::size_t k = 0; k < n_classes; ++k) {
      Sample s;
      s.steps = steps;
      s.channels = channels;
      s.label = static_cast<int>(k);
      s.subject = static_cast<int>(i);
      s.values.resize(steps * channels);
      const double omega = 2.0 * std::numbers::pi * static_cast<double>(2 * k + 1) /
                           static_cast<double>(steps);
      std::vector<double> phase(channels);
      for (auto& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
          const double clean = amplitude * std::sin(omega * static_cast<double>(t) + phase[c]);
          s.values[t * channels + c] = static_cast<float>(clean + sigma * rng.normal());
        }
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

ChannelStats channel_stats(const std::vector<Sample>& samples) {
  require(!samples.empty(), "channel_stats: no samples");
  const std::size_t channels = samples.front().channels;
  ChannelStats st{std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
  std::size_t count = 0;
  for (const auto& s : samples) {
    require(s.channels == channels, "channel_stats: channel count differs between samples");
    for (std::size_t t = 0; t < s.steps; ++t) {
      for (std::size_t c = 0; c < channels; ++c) st.mean[c] += s.at(t)[c];
    }
    count += s.steps;
  }
  for (auto& m : st.mean) m /= static_cast<double>(count);
  for (const auto& s : samples) {
    for (std::size_t t = 0; t < s.steps; ++t) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = s.at(t)[c] - st.mean[c];
        st.stddev[c] += d * d;
      }
    }
  }
  for (auto& v : st.stddev) {
    v = std::sqrt(v / static_cast<double>(count));
    if (v == 0.0) v = 1.0;
  }
  return st;
}

void standardize(std::vector<Sample>& samples, const ChannelStats& stats) {
  for (auto& s : samples) {
    require(s.channels == stats.mean.size(), "standardize: channel count mismatch");
    for (std::size_t t = 0; t < s.steps; ++t) {
      auto row = s.at(t);
      for (std::size_t c = 0; c < s.channels; ++c) {
        row[c] = static_cast<float>((row[c] - stats.mean[c]) / stats.stddev[c]);
      }
    }
  }
}

void save_dataset(const std::vector<Sample>& samples, const std::filesystem::path& path) {
  const std::size_t steps = samples.empty() ? kWindowSteps : samples.front().steps;
  const std::size_t channels = samples.empty() ? kImuChannels : samples.front().channels;
  require(steps <= 0xFFFF && channels <= 0xFFFF && samples.size() <= 0xFFFFFFFFu,
          "save_dataset: dimensions exceed the cache format");
  ByteWriter w;
  w.put_bytes("L2MD");
  w.put<std::uint16_t>(kDatasetVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(samples.size()));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(steps));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(channels));
  for (const auto& s : samples) {
    require(s.steps == steps && s.channels == channels, "save_dataset: samples differ in shape");
    require(s.label >= 0 && s.label <= 0xFF, "save_dataset: label does not fit in a byte");
    w.put<std::uint8_t>(static_cast<std::uint8_t>(s.label));
    w.put<std::int32_t>(s.subject);
    for (float v : s.values) w.put<float>(v);
  }
  write_file_atomic(path, w.bytes());
}

std::vector<Sample> load_dataset(const std::filesystem::path& path) {
  ByteReader r(read_file_bytes(path));
  if (r.get_string(4, "magic") != "L2MD") throw FormatError(path.string() + ": bad magic");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kDatasetVersion) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>("sample count");
  const auto steps = r.get<std::uint16_t>("steps");
  const auto channels = r.get<std::uint16_t>("channels");
  const std::size_t per_sample = 1 + 4 + std::size_t{steps} * channels * sizeof(float);
  if (r.remaining() != per_sample * count) {
    throw FormatError(path.string() + ": sample count does not match file size");
  }
  std::vector<Sample> out(count);
  for (auto& s : out) {
    s.steps = steps;
    s.channels = channels;
    s.label = r.get<std::uint8_t>("label");
    s.subject = r.get<std::int32_t>("subject");
    s.values.resize(std::size_t{steps} * channels);
    for (auto& v : s.values) v = r.get<float>("values");
  }
  return out;
}

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("cannot read " + path.string());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

}  // namespace l2mu
