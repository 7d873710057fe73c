#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "l2mu/compress.hpp"
#include "l2mu/network.hpp"

namespace l2mu {

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Binary layout, little-endian:
///   "L2MU", u16 version, u8 variant,
///   u32 n_channels n_expand n_fuse n_harm n_x n_u n_h n_m d,
///   f64 theta dt, u32 n_classes,
///   f64 (alpha, beta, threshold) for expand fuse harm u m h,
///   per tensor: u16 name length, name, u8 rank, u32 dims, f32 values,
///   u8 mask flag; if set: f64 target sparsity, then per tensor the keep
///   flags packed LSB-first into ceil(size / 8) bytes.
/// A_bar and B_bar are rebuilt from d, theta and dt on load.
struct Checkpoint {
  Model<float> model;
  std::optional<PruneMask> mask;
};

std::vector<unsigned char> encode_checkpoint(const Model<float>& model, const PruneMask* mask = nullptr);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

/// Atomic: writes a temporary sibling and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const PruneMask* mask = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace l2mu
