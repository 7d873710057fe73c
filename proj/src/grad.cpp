#include "l2mu/grad.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "l2mu/loss.hpp"
#include "l2mu/random.hpp"

namespace l2mu {

template <typename Real>
GradientSet<Real> GradientSet<Real>::zeros_like(const Model<Real>& model) {
  GradientSet g;
  const auto src = model.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    g.tensors[k] = Matrix<Real>(src[k]->rows(), src[k]->cols());
  }
  return g;
}

template <typename Real>
void GradientSet<Real>::set_zero() {
  for (auto& t : tensors) t.fill(Real{0});
}

template <typename Real>
void GradientSet<Real>::add(const GradientSet& other) {
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    auto dst = tensors[k].values();
    const auto src = other.tensors[k].values();
    require(dst.size() == src.size(), "GradientSet::add: shape mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

template <typename Real>
void GradientSet<Real>::scale(Real factor) {
  for (auto& t : tensors) {
    for (Real& v : t.values()) v *= factor;
  }
}

template <typename Real>
bool GradientSet<Real>::all_finite() const {
  for (const auto& t : tensors) {
    for (Real v : t.values()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template <typename Real>
double GradientSet<Real>::squared_norm() const {
  double s = 0.0;
  for (const auto& t : tensors) {
    for (Real v : t.values()) s += static_cast<double>(v) * static_cast<double>(v);
  }
  return s;
}

namespace {

template <typename Real>
void snapshot(const PopulationState<Real>& s, PopulationTrace<Real>& trace) {
  trace.membrane = s.membrane;
  trace.spikes = s.spikes;
}

}  // namespace

template <typename Real>
RecordedForward<Real> forward_recorded(const Model<Real>& model, const Sample& sample,
                                       const ForwardOptions& opts) {
  if (sample.channels != model.arch.n_channels || sample.steps == 0 ||
      sample.values.size() != sample.steps * sample.channels) {
    throw std::invalid_argument("forward_recorded: sample shape does not match the model");
  }
  RecordedForward<Real> out;
  Tape<Real>& tape = out.tape;
  tape.model = &model;
  tape.options = opts;
  tape.sample = sample;
  tape.steps.resize(sample.steps);

  auto state = make_network_state(model);
  network_reset(state);
  for (std::size_t t = 0; t < sample.steps; ++t) {
    StepRecord<Real>& rec = tape.steps[t];
    const auto row = sample.at(t);
    rec.input.assign(sample.channels, Real{0});
    for (std::size_t c = 0; c < sample.channels; ++c) rec.input[c] = static_cast<Real>(row[c]);
    network_step<Real>(model, state, rec.input, opts);
    snapshot(state.encoder.expand, rec.populations[0]);
    snapshot(state.encoder.fuse, rec.populations[1]);
    snapshot(state.encoder.harm, rec.populations[2]);
    snapshot(state.cell.u, rec.populations[3]);
    snapshot(state.cell.m, rec.populations[4]);
    snapshot(state.cell.h, rec.populations[5]);
  }
  tape.logits = state.logits;
  out.logits = state.logits;
  return out;
}

namespace {

/// Backward state carried from step t + 1 into step t for one population.
template <typename Real>
struct Carry {
  std::vector<Real> grad_membrane;  // dL/dU_{t+1}
  std::vector<Real> grad_syn;       // dL/dI_{t+1}
};

/// Turns dL/dS_t (already summed over consumers) into dL/dcurrent_t and
/// updates the carry. Reset and decay contributions from step t + 1 are
/// folded in here.
template <typename Real>
void population_backward(NeuronModel model, const PopulationParams& p, const SpikeFunction& fn,
                         const PopulationTrace<Real>& trace, std::vector<Real>& grad_spikes,
                         const std::vector<Real>* direct_membrane, Carry<Real>& carry,
                         std::vector<Real>& grad_current) {
  const std::size_t n = trace.membrane.size();
  const Real theta = static_cast<Real>(p.threshold);
  const Real beta = static_cast<Real>(p.beta);
  const Real alpha = model == NeuronModel::Synaptic ? static_cast<Real>(p.alpha) : Real{0};
  grad_current.assign(n, Real{0});
  for (std::size_t i = 0; i < n; ++i) {
    const Real g_next = carry.grad_membrane[i];
    // U_{t+1} contains -theta * S_t.
    if (g_next != Real{0} && std::isfinite(theta)) grad_spikes[i] -= theta * g_next;
    Real g_u = beta * g_next;
    if (grad_spikes[i] != Real{0}) {
      g_u += grad_spikes[i] * fn.derivative<Real>(trace.membrane[i] - theta);
    }
    if (direct_membrane != nullptr) g_u += (*direct_membrane)[i];
    Real g_i = g_u;
    if (model == NeuronModel::Synaptic) g_i += alpha * carry.grad_syn[i];
    carry.grad_membrane[i] = g_u;
    carry.grad_syn[i] = g_i;
    grad_current[i] = g_i;
  }
}

}  // namespace

template <typename Real>
void backward_accumulate(const Tape<Real>& tape, std::span<const Real> loss_gradient,
                         GradientSet<Real>& out) {
  if (tape.model == nullptr) throw std::invalid_argument("backward: tape has no model");
  const Model<Real>& model = *tape.model;
  if (loss_gradient.size() != model.arch.n_classes) {
    throw std::invalid_argument("backward: loss gradient does not match logits");
  }
  const auto shapes = model.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    if (out.tensors[k].rows() != shapes[k]->rows() || out.tensors[k].cols() != shapes[k]->cols()) {
      throw std::invalid_argument("backward: gradient set does not match the model");
    }
  }

  const auto& enc = model.encoder;
  const auto& cell = model.cell;
  const SpikeFunction& fn = tape.options.spike;
  const NeuronModel nm = model.arch.variant;
  const std::size_t n_expand = enc.n_expand_total();
  const std::size_t n_m = cell.n_m();
  const std::size_t d = cell.d;

  auto& g_w_expand = out.tensors[0];
  auto& g_w_fuse = out.tensors[1];
  auto& g_w_harm = out.tensors[2];
  auto& g_e_x = out.tensors[3];
  auto& g_e_h = out.tensors[4];
  auto& g_e_m = out.tensors[5];
  auto& g_w_x = out.tensors[6];
  auto& g_w_h = out.tensors[7];
  auto& g_w_m = out.tensors[8];
  auto& g_w_out = out.tensors[9];

  const std::array<std::size_t, kPopulationCount> sizes = {
      n_expand, enc.n_fuse, enc.n_harm, cell.n_u, n_m, cell.n_h};
  std::array<Carry<Real>, kPopulationCount> carry;
  for (std::size_t p = 0; p < kPopulationCount; ++p) {
    carry[p].grad_membrane.assign(sizes[p], Real{0});
    carry[p].grad_syn.assign(sizes[p], Real{0});
  }
  // dL/dS_{t-1} contributions produced while processing step t.
  std::vector<Real> g_h_prev(cell.n_h, Real{0}), g_m_prev(n_m, Real{0});
  std::vector<Real> g_h_next, g_m_next;

  std::vector<Real> g_s_h, g_s_m, g_s_u, g_s_harm, g_s_fuse, g_s_expand;
  std::vector<Real> g_c_h, g_c_m, g_c_u, g_c_harm, g_c_fuse, g_c_expand;
  std::vector<Real> direct;
  std::vector<std::size_t> active;
  const std::vector<Real> zeros_h(cell.n_h, Real{0}), zeros_m(n_m, Real{0});
  const bool membrane_readout = tape.options.readout == ReadoutSource::Membrane;

  for (std::size_t step = tape.steps.size(); step-- > 0;) {
    const StepRecord<Real>& rec = tape.steps[step];
    const auto& s_expand = rec[Population::Expand].spikes;
    const auto& s_fuse = rec[Population::Fuse].spikes;
    const auto& s_harm = rec[Population::Harm].spikes;
    const auto& s_m = rec[Population::M].spikes;
    const auto& s_h = rec[Population::H].spikes;
    const std::vector<Real>& s_h_prev = step > 0 ? tape.steps[step - 1][Population::H].spikes : zeros_h;
    const std::vector<Real>& s_m_prev = step > 0 ? tape.steps[step - 1][Population::M].spikes : zeros_m;

    // Contributions to S_t from the consumers at step t + 1.
    g_h_next.swap(g_h_prev);
    g_m_next.swap(g_m_prev);
    g_h_prev.assign(cell.n_h, Real{0});
    g_m_prev.assign(n_m, Real{0});

    // Readout.
    g_s_h = g_h_next;
    const std::vector<Real>* direct_h = nullptr;
    if (membrane_readout) {
      direct.assign(cell.n_h, Real{0});
      matvec_transposed_accumulate<Real>(model.w_out, loss_gradient, direct);
      direct_h = &direct;
      outer_accumulate<Real>(g_w_out, loss_gradient, rec[Population::H].membrane, active);
    } else {
      matvec_transposed_accumulate<Real>(model.w_out, loss_gradient, g_s_h);
      outer_accumulate<Real>(g_w_out, loss_gradient, s_h, active);
    }

    // h: W_x x_t + W_h h_{t-1} + W_m m_t
    population_backward<Real>(nm, cell.h, fn, rec[Population::H], g_s_h, direct_h,
                              carry[5], g_c_h);
    outer_accumulate<Real>(g_w_x, g_c_h, s_harm, active);
    outer_accumulate<Real>(g_w_h, g_c_h, s_h_prev, active);
    outer_accumulate<Real>(g_w_m, g_c_h, s_m, active);
    g_s_harm.assign(enc.n_harm, Real{0});
    matvec_transposed_accumulate<Real>(cell.w_x, g_c_h, g_s_harm);
    matvec_transposed_accumulate<Real>(cell.w_h, g_c_h, g_h_prev);
    g_s_m = g_m_next;
    matvec_transposed_accumulate<Real>(cell.w_m, g_c_h, g_s_m);

    // m: per channel A_bar m_{t-1} + B_bar u_t
    population_backward<Real>(nm, cell.m, fn, rec[Population::M], g_s_m, nullptr, carry[4],
                              g_c_m);
    g_s_u.assign(cell.n_u, Real{0});
    for (std::size_t c = 0; c < cell.n_u; ++c) {
      for (std::size_t i = 0; i < d; ++i) {
        const Real g = g_c_m[c * d + i];
        if (g == Real{0}) continue;
        const auto row = cell.a_bar.row(i);
        for (std::size_t j = 0; j < d; ++j) g_m_prev[c * d + j] += row[j] * g;
        g_s_u[c] += cell.b_bar[i] * g;
      }
    }

    // u: e_x x_t + e_h h_{t-1} + e_m m_{t-1}
    population_backward<Real>(nm, cell.u, fn, rec[Population::U], g_s_u, nullptr, carry[3],
                              g_c_u);
    outer_accumulate<Real>(g_e_x, g_c_u, s_harm, active);
    outer_accumulate<Real>(g_e_h, g_c_u, s_h_prev, active);
    outer_accumulate<Real>(g_e_m, g_c_u, s_m_prev, active);
    matvec_transposed_accumulate<Real>(cell.e_x, g_c_u, g_s_harm);
    matvec_transposed_accumulate<Real>(cell.e_h, g_c_u, g_h_prev);
    matvec_transposed_accumulate<Real>(cell.e_m, g_c_u, g_m_prev);

    // Encoder, last layer first.
    population_backward<Real>(nm, enc.harm, fn, rec[Population::Harm], g_s_harm, nullptr,
                              carry[2], g_c_harm);
    outer_accumulate<Real>(g_w_harm, g_c_harm, s_fuse, active);
    g_s_fuse.assign(enc.n_fuse, Real{0});
    matvec_transposed_accumulate<Real>(enc.w_harm, g_c_harm, g_s_fuse);

    population_backward<Real>(nm, enc.fuse, fn, rec[Population::Fuse], g_s_fuse, nullptr,
                              carry[1], g_c_fuse);
    outer_accumulate<Real>(g_w_fuse, g_c_fuse, s_expand, active);
    g_s_expand.assign(n_expand, Real{0});
    matvec_transposed_accumulate<Real>(enc.w_fuse, g_c_fuse, g_s_expand);

    population_backward<Real>(nm, enc.expand, fn, rec[Population::Expand], g_s_expand, nullptr,
                              carry[0], g_c_expand);
    for (std::size_t c = 0; c < enc.n_channels; ++c) {
      const Real x = rec.input[c];
      if (x == Real{0}) continue;
      auto row = g_w_expand.row(c);
      for (std::size_t k = 0; k < enc.n_expand; ++k) row[k] += g_c_expand[c * enc.n_expand + k] * x;
    }
  }
}

template <typename Real>
GradientSet<Real> backward(const Tape<Real>& tape, std::span<const Real> loss_gradient) {
  if (tape.model == nullptr) throw std::invalid_argument("backward: tape has no model");
  auto g = GradientSet<Real>::zeros_like(*tape.model);
  backward_accumulate(tape, loss_gradient, g);
  return g;
}

template <typename Real>
bool replay_matches(const Tape<Real>& tape) {
  if (tape.model == nullptr) return false;
  const auto again = forward_recorded(*tape.model, tape.sample, tape.options);
  if (again.logits != tape.logits || again.tape.steps.size() != tape.steps.size()) return false;
  for (std::size_t t = 0; t < tape.steps.size(); ++t) {
    const auto& a = tape.steps[t];
    const auto& b = again.tape.steps[t];
    if (a.input != b.input) return false;
    for (std::size_t p = 0; p < kPopulationCount; ++p) {
      if (a.populations[p].membrane != b.populations[p].membrane ||
          a.populations[p].spikes != b.populations[p].spikes) {
        return false;
      }
    }
  }
  return true;
}

FiniteDifferenceReport finite_difference_check(const Model<double>& model, const Sample& sample,
                                               int label, double epsilon,
                                               const FiniteDifferenceOptions& opts) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite_difference_check: epsilon must be > 0");
  if (opts.parameters == 0) throw std::invalid_argument("finite_difference_check: no parameters");

  const auto recorded = forward_recorded(model, sample, opts.forward);
  const auto loss = cross_entropy<double>(recorded.logits, label);
  const auto analytic = backward(recorded.tape, std::span<const double>(loss.gradient));

  // Flat index over all trainable parameters, in canonical tensor order.
  const std::size_t total = model.parameter_count();
  std::vector<std::size_t> picks(total);
  for (std::size_t i = 0; i < total; ++i) picks[i] = i;
  Rng rng(opts.seed);
  rng.shuffle(picks);
  picks.resize(std::min(opts.parameters, total));

  // The reference runs in extended precision so that roundoff in the
  // differences stays far below the smallest gradients being checked.
  Model<long double> probe = model.cast<long double>();
  auto probe_tensors = probe.tensors();
  auto loss_at = [&]() {
    const auto logits = forward(probe, sample, opts.forward);
    return cross_entropy<long double>(logits, label).loss;
  };

  FiniteDifferenceReport report;
  for (std::size_t flat : picks) {
    std::size_t k = 0, offset = flat;
    while (offset >= probe_tensors[k]->size()) offset -= probe_tensors[k++]->size();
    long double& w = probe_tensors[k]->values()[offset];
    const long double original = w;
    const long double h = epsilon;
    const auto at = [&](long double shift) {
      w = original + shift;
      return loss_at();
    };
    const long double plus = at(h);
    const long double minus = at(-h);
    w = original;
    const double numeric = static_cast<double>((plus - minus) / (2 * h));
    const double exact = analytic.tensors[k].values()[offset];
    const double denom = std::max({std::abs(exact), std::abs(numeric), opts.floor});
    report.max_relative_error = std::max(report.max_relative_error, std::abs(exact - numeric) / denom);
    ++report.checked;
  }
  return report;
}

Model<double> gradcheck_model(NeuronModel variant, std::uint64_t seed) {
  Architecture a;
  a.variant = variant;
  a.n_channels = 2;
  a.n_expand = 2;
  a.n_fuse = 4;
  a.n_harm = 4;
  a.n_u = 3;
  a.d = 2;
  a.n_h = 3;
  a.n_classes = 2;
  a.theta = 5.0;
  a.dt = 1.0;
  return Model<double>::initialize(a, NeuronConfig{}, seed);
}

Sample gradcheck_sample(std::uint64_t seed, std::size_t steps) {
  Sample s;
  s.steps = steps;
  s.channels = 2;
  s.values.resize(steps * s.channels);
  Rng rng(seed);
  for (float& v : s.values) v = static_cast<float>(rng.normal());
  return s;
}

#define L2MU_INSTANTIATE_GRAD(Real)                                                           \
  template struct GradientSet<Real>;                                                          \
  template RecordedForward<Real> forward_recorded<Real>(const Model<Real>&, const Sample&,    \
                                                        const ForwardOptions&);               \
  template GradientSet<Real> backward<Real>(const Tape<Real>&, std::span<const Real>);        \
  template void backward_accumulate<Real>(const Tape<Real>&, std::span<const Real>,           \
                                          GradientSet<Real>&);                                \
  template bool replay_matches<Real>(const Tape<Real>&);

L2MU_INSTANTIATE_GRAD(float)
L2MU_INSTANTIATE_GRAD(double)

}  // namespace l2mu
