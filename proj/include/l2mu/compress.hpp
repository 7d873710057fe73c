#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "l2mu/grad.hpp"
#include "l2mu/network.hpp"
#include "l2mu/train.hpp"

namespace l2mu {

/// Keep-flags (1 = kept) per trainable tensor, in kTensorNames order.
struct PruneMask {
  std::array<std::vector<std::uint8_t>, kTensorCount> keep;
  double target_sparsity = 0.0;

  std::size_t total() const;
  std::size_t kept() const;
  void check_matches(const Model<float>& model) const;

  friend bool operator==(const PruneMask&, const PruneMask&) = default;
};

/// Number of weights a global prune at `sparsity` removes from `n`.
std::size_t pruned_count(std::size_t n, double sparsity);

/// Ranks every value of every group jointly by magnitude and clears the
/// floor(sparsity * N) smallest. Among equal magnitudes the later flat index
/// (groups concatenated in order) is pruned first.
template <typename Real>
std::vector<std::vector<std::uint8_t>> global_magnitude_prune(
    const std::vector<std::span<const Real>>& groups, double sparsity);

/// Global magnitude pruning over all trainable tensors. The fixed A_bar and
/// B_bar are not trainable and never pruned.
PruneMask global_magnitude_prune(const Model<float>& model, double sparsity);

/// Zeros every weight whose keep-flag is 0.
void apply_mask(Model<float>& model, const PruneMask& mask);

/// Trains with the mask re-applied after every optimizer step. Throws
/// std::logic_error if a pruned weight is non-zero at the end of an epoch.
Metrics fine_tune(Model<float>& model, const PruneMask& mask, const TrainConfig& config,
                  const DatasetSplits& splits);

struct ParamCount {
  std::size_t count = 0;
  std::size_t footprint_bytes = 0;  // count * 4 (float32 storage)
};

/// Non-zero trainable weights, restricted to kept entries when a mask is given.
ParamCount count_nonzero_params(const Model<float>& model, const PruneMask* mask = nullptr);

/// 100 * (1 - after / before).
double reduction_percent(std::size_t before, std::size_t after);

/// Sum over presynaptic neurons j with spikes[j] != 0 of the non-zero count
/// of column j of `w`.
template <typename Real>
std::uint64_t event_operations(const Matrix<Real>& w, std::span<const Real> spikes);

struct SynopCount {
  std::uint64_t dense = 0;         // W_expand and W_out, every non-zero weight every step
  std::uint64_t spike_driven = 0;  // one per spike per non-zero outgoing synapse
  std::uint64_t total() const { return dense + spike_driven; }
};

/// Effective synaptic operations for one sample, counted on a recorded
/// forward pass. Spike-driven paths per step t:
///   expand_t -> W_fuse, fuse_t -> W_harm, harm_t -> e_x and W_x,
///   h_{t-1} -> e_h and W_h, m_{t-1} -> e_m and the A_bar block,
///   u_t -> B_bar, m_t -> W_m.
template <typename Real>
SynopCount count_effective_synops(const Tape<Real>& tape);

template <typename Real>
SynopCount count_effective_synops(const Model<Real>& model, const Sample& sample);

}  // namespace l2mu
