#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace l2mu {

inline constexpr std::size_t kWindowSteps = 40;
inline constexpr std::size_t kImuChannels = 6;

/// One window of raw sensor readings, `steps` x `channels` row-major
/// (accel x, y, z then gyro x, y, z for IMU data).
struct Sample {
  std::size_t steps = kWindowSteps;
  std::size_t channels = kImuChannels;
  std::vector<float> values;
  int label = 0;
  int subject = 0;

  std::span<const float> at(std::size_t t) const { return {values.data() + t * channels, channels}; }
  std::span<float> at(std::size_t t) { return {values.data() + t * channels, channels}; }

  friend bool operator==(const Sample&, const Sample&) = default;
};

}  // namespace l2mu
