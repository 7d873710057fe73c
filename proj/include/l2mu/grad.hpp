#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "l2mu/network.hpp"

namespace l2mu {

enum class Population : std::size_t { Expand = 0, Fuse, Harm, U, M, H };
inline constexpr std::size_t kPopulationCount = 6;

template <typename Real>
struct PopulationTrace {
  std::vector<Real> membrane;  // after the update of this step
  std::vector<Real> spikes;    // emitted at this step
};

template <typename Real>
struct StepRecord {
  std::vector<Real> input;  // raw channel values fed at this step
  std::array<PopulationTrace<Real>, kPopulationCount> populations;

  const PopulationTrace<Real>& operator[](Population p) const {
    return populations[static_cast<std::size_t>(p)];
  }
};

/// Per-step record of every population's membrane and spikes, enough to run
/// backpropagation through time. The tape keeps a pointer to the model it
/// was recorded with; the model must outlive it and stay unchanged.
template <typename Real>
struct Tape {
  const Model<Real>* model = nullptr;
  ForwardOptions options;
  Sample sample;
  std::vector<StepRecord<Real>> steps;
  std::vector<Real> logits;

  std::size_t size() const { return steps.size(); }
};

/// One gradient array per trainable tensor, in kTensorNames order. The fixed
/// state-space matrices and neuron constants have no entry.
template <typename Real>
struct GradientSet {
  std::array<Matrix<Real>, kTensorCount> tensors;

  static GradientSet zeros_like(const Model<Real>& model);
  void set_zero();
  void add(const GradientSet& other);
  void scale(Real factor);
  bool all_finite() const;
  double squared_norm() const;
};

template <typename Real>
struct RecordedForward {
  std::vector<Real> logits;
  Tape<Real> tape;
};

/// Same arithmetic as forward(); additionally snapshots every step.
template <typename Real>
RecordedForward<Real> forward_recorded(const Model<Real>& model, const Sample& sample,
                                       const ForwardOptions& opts = {});

/// Gradients of sum_k loss_gradient[k] * logits[k] with respect to every
/// trainable tensor. Spike nonlinearities use `tape.options.spike.derivative`;
/// gradients flow through the reset term.
template <typename Real>
GradientSet<Real> backward(const Tape<Real>& tape, std::span<const Real> loss_gradient);

/// Accumulating variant: adds into `out`, which must be shaped like the model.
template <typename Real>
void backward_accumulate(const Tape<Real>& tape, std::span<const Real> loss_gradient,
                         GradientSet<Real>& out);

/// Re-runs the recorded sample and reports whether logits and every
/// snapshot are bitwise identical.
template <typename Real>
bool replay_matches(const Tape<Real>& tape);

struct FiniteDifferenceOptions {
  std::size_t parameters = 64;  // sampled parameters, at least 50
  std::uint64_t seed = 0;
  ForwardOptions forward{SpikeFunction{SpikeMode::Smooth, 25.0}, ReadoutSource::Spikes};
  double floor = 1e-8;  // denominator floor for the relative error
};

struct FiniteDifferenceReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

/// Central differences of the cross-entropy loss against backward() over a
/// random subset of parameters. The truncation error of the difference is
/// O(epsilon^2 f'''); with the steep smooth spike, epsilon = 1e-5 leaves about
/// 2e-4 on rare parameters, so callers use 1e-6. Relative error per parameter is
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
FiniteDifferenceReport finite_difference_check(const Model<double>& model, const Sample& sample,
                                               int label, double epsilon,
                                               const FiniteDifferenceOptions& opts = {});

/// Small double-precision network for gradient checks: 2 channels, n_x = 4,
/// n_u = 3, d = 2, n_h = 3, 2 classes, theta = 5 steps.
Model<double> gradcheck_model(NeuronModel variant, std::uint64_t seed);

/// Standard-normal inputs for gradcheck_model.
Sample gradcheck_sample(std::uint64_t seed, std::size_t steps = 5);

}  // namespace l2mu
