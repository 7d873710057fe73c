#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "l2mu/cell.hpp"
#include "l2mu/encoder.hpp"
#include "l2mu/sample.hpp"

namespace l2mu {

struct Architecture {
  NeuronModel variant = NeuronModel::Leaky;
  std::size_t n_channels = 6;
  std::size_t n_expand = 30;
  std::size_t n_fuse = 170;
  std::size_t n_harm = 10;
  std::size_t n_u = 150;
  std::size_t n_h = 60;
  std::size_t d = 7;
  double theta = 40.0;
  double dt = 1.0;
  std::size_t n_classes = 7;

  std::size_t n_x() const { return n_harm; }
  std::size_t n_m() const { return n_u * d; }
  void validate() const;

  /// Population sizes of the two optimized HAR models. d follows from
  /// n_m / n_u (1050 / 150 and 1840 / 230).
  static Architecture reference_leaky();
  static Architecture reference_synaptic();

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Neuron constants for the six populations. A threshold of 0.5 keeps every
/// layer active under the default initialization.
struct NeuronConfig {
  PopulationParams expand{0.5, 0.9, 0.5};
  PopulationParams fuse{0.5, 0.9, 0.5};
  PopulationParams harm{0.5, 0.9, 0.5};
  PopulationParams u{0.5, 0.9, 0.5};
  PopulationParams m{0.5, 0.9, 0.5};
  PopulationParams h{0.5, 0.9, 0.5};

  friend bool operator==(const NeuronConfig&, const NeuronConfig&) = default;
};

inline constexpr std::size_t kTensorCount = 10;

/// Canonical order of the trainable tensors (checkpoints, masks, gradients).
inline constexpr std::array<std::string_view, kTensorCount> kTensorNames = {
    "encoder.w_expand", "encoder.w_fuse", "encoder.w_harm", "cell.e_x", "cell.e_h",
    "cell.e_m",         "cell.w_x",       "cell.w_h",       "cell.w_m", "readout.w_out"};

/// Encoder -> L2MU cell -> readout. The readout is a non-spiking integrator:
/// logits = sum_t W_out h_spk_t.
template <typename Real>
struct Model {
  Architecture arch;
  NeuronConfig neurons;
  EncoderParams<Real> encoder;
  CellParams<Real> cell;
  Matrix<Real> w_out;  // n_classes x n_h

  /// Zero weights with every shape and the state space in place.
  static Model zeros(const Architecture& arch, const NeuronConfig& neurons);
  /// Weights uniform in +-1/sqrt(fan_in); drawn tensor by tensor in
  /// kTensorNames order.
  static Model initialize(const Architecture& arch, const NeuronConfig& neurons,
                          std::uint64_t seed);

  std::array<Matrix<Real>*, kTensorCount> tensors();
  std::array<const Matrix<Real>*, kTensorCount> tensors() const;
  std::size_t parameter_count() const;

  void validate() const;

  template <typename Other>
  Model<Other> cast() const;
};

enum class ReadoutSource : std::uint8_t {
  Spikes,    // the network as specified
  Membrane,  // h membrane potentials; a linear test rig for gradient checks
};

struct ForwardOptions {
  SpikeFunction spike;
  ReadoutSource readout = ReadoutSource::Spikes;
};

template <typename Real>
struct NetworkState {
  EncoderState<Real> encoder;
  CellState<Real> cell;
  std::vector<Real> logits;
  std::vector<std::size_t> active;
};

template <typename Real>
NetworkState<Real> make_network_state(const Model<Real>& model);

template <typename Real>
void network_reset(NetworkState<Real>& state);

/// One timestep: encoder, cell, readout accumulation. Returns h spikes.
template <typename Real>
std::span<const Real> network_step(const Model<Real>& model, NetworkState<Real>& state,
                                   std::span<const Real> x, const ForwardOptions& opts = {});

/// Resets `state`, runs every step of `sample` and returns the logits.
template <typename Real>
std::vector<Real> forward(const Model<Real>& model, const Sample& sample,
                          NetworkState<Real>& state, const ForwardOptions& opts = {});

template <typename Real>
std::vector<Real> forward(const Model<Real>& model, const Sample& sample,
                          const ForwardOptions& opts = {});

/// Index of the largest logit; ties go to the lowest index.
template <typename Real>
int argmax(std::span<const Real> logits);

}  // namespace l2mu
