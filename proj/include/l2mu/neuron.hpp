#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace l2mu {

enum class NeuronModel : std::uint8_t { Leaky = 0, Synaptic = 1 };

const char* to_string(NeuronModel model);
NeuronModel parse_neuron_model(const std::string& text);

struct LeakyParams {
  double beta = 0.9;
  double theta_v = 1.0;

  void validate() const;
};

struct SynapticParams {
  double alpha = 0.5;
  double beta = 0.9;
  double theta_v = 1.0;

  void validate() const;
};

/// Population-level neuron constants. `alpha` is ignored by Leaky populations.
struct PopulationParams {
  double alpha = 0.5;
  double beta = 0.9;
  double threshold = 1.0;

  void validate(NeuronModel model) const;
  LeakyParams leaky() const { return {beta, threshold}; }
  SynapticParams synaptic() const { return {alpha, beta, threshold}; }
  friend bool operator==(const PopulationParams&, const PopulationParams&) = default;
};

/// Derivative of the fast-sigmoid relaxation of the spike threshold,
/// 1 / (1 + slope |v|)^2 with v = U - threshold. Peaks at 1 on the threshold.
double surrogate_derivative(double u_minus_theta, double slope);

/// How a membrane potential turns into a spike value.
///
/// Heaviside: 1 when U > threshold, else 0 (strict).
/// Smooth: 0.5 (1 + slope v / (1 + slope |v|)), a differentiable stand-in with
/// range (0, 1). Used only by gradient checking; its exact derivative is
/// (slope / 2) / (1 + slope |v|)^2.
enum class SpikeMode : std::uint8_t { Heaviside, Smooth };

struct SpikeFunction {
  SpikeMode mode = SpikeMode::Heaviside;
  double slope = 25.0;

  template <typename Real>
  Real fire(Real v) const {
    if (mode == SpikeMode::Heaviside) return v > Real{0} ? Real{1} : Real{0};
    if (std::isinf(v)) return v > Real{0} ? Real{1} : Real{0};
    const Real k = static_cast<Real>(slope);
    return Real{0.5} * (Real{1} + k * v / (Real{1} + k * std::abs(v)));
  }

  /// d(spike)/dv used by the backward pass: the surrogate in Heaviside mode,
  /// the exact derivative in Smooth mode.
  template <typename Real>
  Real derivative(Real v) const {
    const Real k = static_cast<Real>(slope);
    const Real denom = Real{1} + k * std::abs(v);
    const Real base = Real{1} / (denom * denom);
    return mode == SpikeMode::Heaviside ? base : Real{0.5} * k * base;
  }
};

template <typename Real>
struct PopulationState {
  std::vector<Real> membrane;
  std::vector<Real> syn_current;  // empty for Leaky populations
  std::vector<Real> spikes;

  PopulationState() = default;
  PopulationState(std::size_t n, NeuronModel model)
      : membrane(n, Real{0}),
        syn_current(model == NeuronModel::Synaptic ? n : 0, Real{0}),
        spikes(n, Real{0}) {}

  std::size_t size() const { return membrane.size(); }
  bool has_synaptic_current() const { return !syn_current.empty(); }

  friend bool operator==(const PopulationState&, const PopulationState&) = default;
};

// In-place updates used by the network layers. The reset term always uses the
// spikes of the previous step, then the new spikes overwrite them:
//
//   Leaky:     U' = beta U + c - S theta
//   Synaptic:  I' = alpha I + c;  U' = beta U + I' - S theta
//   S' = fire(U' - theta)

template <typename Real>
void leaky_update(const LeakyParams& p, PopulationState<Real>& s, std::span<const Real> current,
                  const SpikeFunction& fn = {});

template <typename Real>
void synaptic_update(const SynapticParams& p, PopulationState<Real>& s,
                     std::span<const Real> current, const SpikeFunction& fn = {});

template <typename Real>
void population_update(NeuronModel model, const PopulationParams& p, PopulationState<Real>& s,
                       std::span<const Real> current, const SpikeFunction& fn = {}) {
  if (model == NeuronModel::Leaky) {
    leaky_update(p.leaky(), s, current, fn);
  } else {
    synaptic_update(p.synaptic(), s, current, fn);
  }
}

/// Value-returning transitions. The new spikes are `result.spikes`.
template <typename Real>
PopulationState<Real> leaky_step(const LeakyParams& p, PopulationState<Real> state,
                                 std::span<const Real> current) {
  leaky_update(p, state, current);
  return state;
}

template <typename Real>
PopulationState<Real> synaptic_step(const SynapticParams& p, PopulationState<Real> state,
                                    std::span<const Real> current) {
  synaptic_update(p, state, current);
  return state;
}

template <typename Real>
PopulationState<Real> reset_population(PopulationState<Real> state) {
  std::fill(state.membrane.begin(), state.membrane.end(), Real{0});
  std::fill(state.syn_current.begin(), state.syn_current.end(), Real{0});
  std::fill(state.spikes.begin(), state.spikes.end(), Real{0});
  return state;
}

}  // namespace l2mu
