#include "l2mu/neuron.hpp"

#include <stdexcept>
#include <string>

namespace l2mu {

const char* to_string(NeuronModel model) {
  return model == NeuronModel::Leaky ? "leaky" : "synaptic";
}

NeuronModel parse_neuron_model(const std::string& text) {
  if (text == "leaky" || text == "Leaky") return NeuronModel::Leaky;
  if (text == "synaptic" || text == "Synaptic") return NeuronModel::Synaptic;
  throw std::invalid_argument("unknown neuron model '" + text + "' (expected leaky|synaptic)");
}

void LeakyParams::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must be in (0, 1]");
  if (!(theta_v > 0.0)) throw std::invalid_argument("threshold must be > 0");
}

void SynapticParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0, 1]");
  LeakyParams{beta, theta_v}.validate();
}

void PopulationParams::validate(NeuronModel model) const {
  if (model == NeuronModel::Leaky) {
    leaky().validate();
  } else {
    synaptic().validate();
  }
}

double surrogate_derivative(double u_minus_theta, double slope) {
  if (!(slope > 0.0)) throw std::invalid_argument("surrogate_derivative: slope must be > 0");
  const double denom = 1.0 + slope * std::abs(u_minus_theta);
  return 1.0 / (denom * denom);
}

namespace {

// S * theta, except that a silent neuron contributes an exact zero even when
// theta is infinite.
template <typename Real>
Real reset_term(Real spike, Real theta) {
  return spike != Real{0} ? spike * theta : Real{0};
}

}  // namespace

template <typename Real>
void leaky_update(const LeakyParams& p, PopulationState<Real>& s, std::span<const Real> current,
                  const SpikeFunction& fn) {
  const std::size_t n = s.size();
  if (current.size() != n || s.spikes.size() != n) {
    throw std::invalid_argument("leaky_step: current length does not match population");
  }
  const Real beta = static_cast<Real>(p.beta);
  const Real theta = static_cast<Real>(p.theta_v);
  for (std::size_t i = 0; i < n; ++i) {
    const Real u = beta * s.membrane[i] + current[i] - reset_term(s.spikes[i], theta);
    s.membrane[i] = u;
    s.spikes[i] = fn.fire<Real>(u - theta);
  }
}

template <typename Real>
void synaptic_update(const SynapticParams& p, PopulationState<Real>& s,
                     std::span<const Real> current, const SpikeFunction& fn) {
  const std::size_t n = s.size();
  if (current.size() != n || s.spikes.size() != n) {
    throw std::invalid_argument("synaptic_step: current length does not match population");
  }
  if (s.syn_current.size() != n) {
    throw std::invalid_argument("synaptic_step: population has no synaptic current state");
  }
  const Real alpha = static_cast<Real>(p.alpha);
  const Real beta = static_cast<Real>(p.beta);
  const Real theta = static_cast<Real>(p.theta_v);
  for (std::size_t i = 0; i < n; ++i) {
    const Real syn = alpha * s.syn_current[i] + current[i];
    const Real u = beta * s.membrane[i] + syn - reset_term(s.spikes[i], theta);
    s.syn_current[i] = syn;
    s.membrane[i] = u;
    s.spikes[i] = fn.fire<Real>(u - theta);
  }
}

template void leaky_update<float>(const LeakyParams&, PopulationState<float>&,
                                  std::span<const float>, const SpikeFunction&);
template void leaky_update<double>(const LeakyParams&, PopulationState<double>&,
                                   std::span<const double>, const SpikeFunction&);
template void synaptic_update<float>(const SynapticParams&, PopulationState<float>&,
                                     std::span<const float>, const SpikeFunction&);
template void synaptic_update<double>(const SynapticParams&, PopulationState<double>&,
                                      std::span<const double>, const SpikeFunction&);
template void leaky_update<long double>(const LeakyParams&, PopulationState<long double>&,
                                        std::span<const long double>, const SpikeFunction&);
template void synaptic_update<long double>(const SynapticParams&, PopulationState<long double>&,
                                           std::span<const long double>, const SpikeFunction&);

}  // namespace l2mu
