#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "l2mu/neuron.hpp"
#include "l2mu/tensor.hpp"

namespace l2mu {

/// Three spiking layers turning raw channel values into spikes.
///
///  1. expansion: channel c drives its own population of `n_expand` neurons
///     with current w_expand(c, k) * x[c];
///  2. fusion: fully connected over the concatenated expansion spikes;
///  3. harmonization: fully connected over the fusion spikes.
///
/// No biases anywhere.
template <typename Real>
struct EncoderParams {
  NeuronModel model = NeuronModel::Leaky;
  std::size_t n_channels = 0;
  std::size_t n_expand = 0;
  std::size_t n_fuse = 0;
  std::size_t n_harm = 0;
  Matrix<Real> w_expand;  // n_channels x n_expand
  Matrix<Real> w_fuse;    // n_fuse x (n_channels * n_expand)
  Matrix<Real> w_harm;    // n_harm x n_fuse
  PopulationParams expand;
  PopulationParams fuse;
  PopulationParams harm;

  std::size_t n_expand_total() const { return n_channels * n_expand; }
  void validate() const;
};

template <typename Real>
struct EncoderState {
  PopulationState<Real> expand;
  PopulationState<Real> fuse;
  PopulationState<Real> harm;

  // Reused buffers; not part of the dynamical state.
  std::vector<Real> current;
  std::vector<std::size_t> active;

  bool same_dynamics(const EncoderState& other) const {
    return expand == other.expand && fuse == other.fuse && harm == other.harm;
  }
};

template <typename Real>
EncoderState<Real> make_encoder_state(const EncoderParams<Real>& params);

template <typename Real>
void encoder_reset(EncoderState<Real>& state);

/// Advances all three layers by one step. Returns the harmonization spikes,
/// which alias `state.harm.spikes`.
template <typename Real>
std::span<const Real> encoder_step(const EncoderParams<Real>& params, EncoderState<Real>& state,
                                   std::span<const Real> x, const SpikeFunction& fn = {});

}  // namespace l2mu
