#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "l2mu/sample.hpp"

namespace l2mu {

/// One line of a raw sensor file: `subject,activity,timestamp,x,y,z;`.
struct RawRecord {
  int subject = 0;
  char activity = 'A';
  std::int64_t timestamp = 0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

struct ParseResult {
  std::vector<RawRecord> records;
  std::size_t malformed = 0;
  std::size_t lines = 0;  // non-blank lines seen
};

/// Parses one raw file. Malformed lines are skipped and counted; a warning
/// goes to stderr. More than 10% malformed lines is a FormatError, an
/// unreadable file an IoError.
ParseResult parse_raw_text(const std::string& text, const std::string& origin = "<text>");
ParseResult parse_raw_file(const std::filesystem::path& path);

/// Activity letters of the seven hand-oriented general activities: eating
/// soup, chips, pasta, sandwich, drinking, brushing teeth, folding clothes.
inline constexpr const char* kDefaultWhitelist = "FGOPQRS";

/// Cuts aligned accelerometer and gyroscope streams into non-overlapping
/// windows. Records are grouped by (subject, activity) in file order; the two
/// streams of a group are aligned by index and truncated to the shorter one.
/// Trailing steps that do not fill a window are dropped. Labels follow the
/// position of the activity letter in `whitelist`. Output is ordered by
/// (subject, activity letter, window index).
std::vector<Sample> make_windows(const std::vector<RawRecord>& accel,
                                 const std::vector<RawRecord>& gyro,
                                 const std::string& whitelist = kDefaultWhitelist,
                                 std::size_t window = kWindowSteps);

struct DatasetSplits {
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::vector<Sample> test;
};

enum class SplitMode : std::uint8_t {
  PerWindow,   // windows shuffled independently
  PerSubject,  // every window of a subject lands in the same split
};

/// Seeded shuffle followed by a contiguous 60:20:20 cut. Validation and test
/// each get max(1, floor(0.2 n)) items; training keeps the rest. In
/// PerSubject mode the items are subjects rather than windows.
DatasetSplits split_dataset(const std::vector<Sample>& samples, std::uint64_t seed,
                            SplitMode mode = SplitMode::PerWindow);

/// Sinusoid classes for smoke tests and acceptance runs. Class k oscillates
/// at 2k + 1 cycles per window on every channel with a per-sample, per-channel
/// random phase and amplitude `amplitude`; Gaussian noise with variance
/// amplitude^2 / 20 gives a signal-to-noise ratio of 10 dB. Samples are
/// interleaved by class (0, 1, ..., 0, 1, ...).
std::vector<Sample> synth_dataset(std::size_t n_classes, std::size_t n_per_class,
                                  std::uint64_t seed, double amplitude = 1.0,
                                  std::size_t steps = kWindowSteps,
                                  std::size_t channels = kImuChannels);

/// Per-channel mean and standard deviation.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

ChannelStats channel_stats(const std::vector<Sample>& samples);
void standardize(std::vector<Sample>& samples, const ChannelStats& stats);

/// Packed dataset cache: magic "L2MD", u16 version, u32 count, u16 steps,
/// u16 channels, then per sample a u8 label, an i32 subject and steps x channels float32 LE.
inline constexpr std::uint16_t kDatasetVersion = 1;

void save_dataset(const std::vector<Sample>& samples, const std::filesystem::path& path);
std::vector<Sample> load_dataset(const std::filesystem::path& path);

}  // namespace l2mu
