#include "l2mu/network.hpp"

#include <cmath>
#include <stdexcept>

#include "l2mu/random.hpp"

namespace l2mu {

void Architecture::validate() const {
  require(n_channels > 0 && n_expand > 0 && n_fuse > 0 && n_harm > 0,
          "architecture: encoder dimensions must be positive");
  require(n_u > 0 && n_h > 0 && d > 0, "architecture: cell dimensions must be positive");
  require(n_classes >= 2, "architecture: need at least two classes");
  require(theta > 0.0 && dt > 0.0 && dt <= theta, "architecture: need 0 < dt <= theta");
}

Architecture Architecture::reference_leaky() {
  Architecture a;
  a.variant = NeuronModel::Leaky;
  a.n_expand = 30;
  a.n_fuse = 170;
  a.n_harm = 10;
  a.n_u = 150;
  a.n_h = 60;
  a.d = 1050 / 150;
  return a;
}

Architecture Architecture::reference_synaptic() {
  Architecture a;
  a.variant = NeuronModel::Synaptic;
  a.n_expand = 30;
  a.n_fuse = 180;
  a.n_harm = 10;
  a.n_u = 230;
  a.n_h = 180;
  a.d = 1840 / 230;
  return a;
}

template <typename Real>
Model<Real> Model<Real>::zeros(const Architecture& arch, const NeuronConfig& neurons) {
  arch.validate();
  Model m;
  m.arch = arch;
  m.neurons = neurons;

  auto& e = m.encoder;
  e.model = arch.variant;
  e.n_channels = arch.n_channels;
  e.n_expand = arch.n_expand;
  e.n_fuse = arch.n_fuse;
  e.n_harm = arch.n_harm;
  e.w_expand = Matrix<Real>(arch.n_channels, arch.n_expand);
  e.w_fuse = Matrix<Real>(arch.n_fuse, arch.n_channels * arch.n_expand);
  e.w_harm = Matrix<Real>(arch.n_harm, arch.n_fuse);
  e.expand = neurons.expand;
  e.fuse = neurons.fuse;
  e.harm = neurons.harm;

  auto& c = m.cell;
  c.model = arch.variant;
  c.n_x = arch.n_x();
  c.n_u = arch.n_u;
  c.n_h = arch.n_h;
  c.d = arch.d;
  c.e_x = Matrix<Real>(arch.n_u, arch.n_x());
  c.e_h = Matrix<Real>(arch.n_u, arch.n_h);
  c.e_m = Matrix<Real>(arch.n_u, arch.n_m());
  c.w_x = Matrix<Real>(arch.n_h, arch.n_x());
  c.w_h = Matrix<Real>(arch.n_h, arch.n_h);
  c.w_m = Matrix<Real>(arch.n_h, arch.n_m());
  c.set_state_space(build_state_space(static_cast<int>(arch.d), arch.theta, arch.dt));
  c.u = neurons.u;
  c.m = neurons.m;
  c.h = neurons.h;

  m.w_out = Matrix<Real>(arch.n_classes, arch.n_h);
  m.validate();
  return m;
}

template <typename Real>
Model<Real> Model<Real>::initialize(const Architecture& arch, const NeuronConfig& neurons,
                                    std::uint64_t seed) {
  Model m = zeros(arch, neurons);
  Rng rng(seed);
  for (Matrix<Real>* t : m.tensors()) {
    // Each expand neuron sees a single channel.
    const std::size_t fan_in = t == &m.encoder.w_expand ? 1 : t->cols();
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Real& w : t->values()) w = static_cast<Real>(rng.uniform(-bound, bound));
  }
  return m;
}

template <typename Real>
std::array<Matrix<Real>*, kTensorCount> Model<Real>::tensors() {
  return {&encoder.w_expand, &encoder.w_fuse, &encoder.w_harm, &cell.e_x, &cell.e_h,
          &cell.e_m,         &cell.w_x,       &cell.w_h,       &cell.w_m, &w_out};
}

template <typename Real>
std::array<const Matrix<Real>*, kTensorCount> Model<Real>::tensors() const {
  return {&encoder.w_expand, &encoder.w_fuse, &encoder.w_harm, &cell.e_x, &cell.e_h,
          &cell.e_m,         &cell.w_x,       &cell.w_h,       &cell.w_m, &w_out};
}

template <typename Real>
std::size_t Model<Real>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

template <typename Real>
void Model<Real>::validate() const {
  arch.validate();
  encoder.validate();
  cell.validate();
  require(encoder.n_harm == cell.n_x, "model: encoder output width must equal cell n_x");
  require(encoder.model == arch.variant && cell.model == arch.variant,
          "model: encoder and cell must use the architecture's neuron model");
  require(w_out.rows() == arch.n_classes && w_out.cols() == cell.n_h,
          "model: W_out must be n_classes x n_h");
}

template <typename Real>
template <typename Other>
Model<Other> Model<Real>::cast() const {
  Model<Other> m = Model<Other>::zeros(arch, neurons);
  auto src = tensors();
  auto dst = m.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) *dst[k] = src[k]->template cast<Other>();
  return m;
}

template <typename Real>
NetworkState<Real> make_network_state(const Model<Real>& model) {
  NetworkState<Real> s;
  s.encoder = make_encoder_state(model.encoder);
  s.cell = make_cell_state(model.cell);
  s.logits.assign(model.arch.n_classes, Real{0});
  return s;
}

template <typename Real>
void network_reset(NetworkState<Real>& state) {
  encoder_reset(state.encoder);
  cell_reset(state.cell);
  std::fill(state.logits.begin(), state.logits.end(), Real{0});
}

template <typename Real>
std::span<const Real> network_step(const Model<Real>& model, NetworkState<Real>& state,
                                   std::span<const Real> x, const ForwardOptions& opts) {
  const auto x_spk = encoder_step<Real>(model.encoder, state.encoder, x, opts.spike);
  const auto h_spk = cell_step<Real>(model.cell, x_spk, state.cell, opts.spike);
  const std::span<const Real> readout_input =
      opts.readout == ReadoutSource::Spikes ? h_spk
                                            : std::span<const Real>(state.cell.h.membrane);
  matvec_accumulate<Real>(model.w_out, readout_input, state.logits, state.active);
  return h_spk;
}

template <typename Real>
std::vector<Real> forward(const Model<Real>& model, const Sample& sample,
                          NetworkState<Real>& state, const ForwardOptions& opts) {
  if (sample.channels != model.arch.n_channels || sample.steps == 0 ||
      sample.values.size() != sample.steps * sample.channels) {
    throw std::invalid_argument("forward: sample shape does not match the model");
  }
  network_reset(state);
  std::vector<Real> x(sample.channels);
  for (std::size_t t = 0; t < sample.steps; ++t) {
    const auto row = sample.at(t);
    for (std::size_t c = 0; c < sample.channels; ++c) x[c] = static_cast<Real>(row[c]);
    network_step<Real>(model, state, x, opts);
  }
  return state.logits;
}

template <typename Real>
std::vector<Real> forward(const Model<Real>& model, const Sample& sample,
                          const ForwardOptions& opts) {
  auto state = make_network_state(model);
  return forward(model, sample, state, opts);
}

template <typename Real>
int argmax(std::span<const Real> logits) {
  if (logits.empty()) throw std::invalid_argument("argmax: empty logits");
  std::size_t best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[best]) best = k;
  }
  return static_cast<int>(best);
}

#define L2MU_INSTANTIATE_NETWORK(Real)                                                        \
  template struct Model<Real>;                                                                \
  template NetworkState<Real> make_network_state<Real>(const Model<Real>&);                   \
  template void network_reset<Real>(NetworkState<Real>&);                                     \
  template std::span<const Real> network_step<Real>(const Model<Real>&, NetworkState<Real>&,  \
                                                    std::span<const Real>,                    \
                                                    const ForwardOptions&);                   \
  template std::vector<Real> forward<Real>(const Model<Real>&, const Sample&,                 \
                                           NetworkState<Real>&, const ForwardOptions&);       \
  template std::vector<Real> forward<Real>(const Model<Real>&, const Sample&,                 \
                                           const ForwardOptions&);                            \
  template int argmax<Real>(std::span<const Real>);

L2MU_INSTANTIATE_NETWORK(float)
L2MU_INSTANTIATE_NETWORK(double)
L2MU_INSTANTIATE_NETWORK(long double)

template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;
template Model<long double> Model<double>::cast<long double>() const;

}  // namespace l2mu
