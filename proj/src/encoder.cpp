#include "l2mu/encoder.hpp"

#include <stdexcept>

namespace l2mu {

template <typename Real>
void EncoderParams<Real>::validate() const {
  require(n_channels > 0 && n_expand > 0 && n_fuse > 0 && n_harm > 0,
          "encoder: all dimensions must be positive");
  require(w_expand.rows() == n_channels && w_expand.cols() == n_expand,
          "encoder: w_expand must be n_channels x n_expand");
  require(w_fuse.rows() == n_fuse && w_fuse.cols() == n_expand_total(),
          "encoder: w_fuse must be n_fuse x (n_channels * n_expand)");
  require(w_harm.rows() == n_harm && w_harm.cols() == n_fuse,
          "encoder: w_harm must be n_harm x n_fuse");
  expand.validate(model);
  fuse.validate(model);
  harm.validate(model);
}

template <typename Real>
EncoderState<Real> make_encoder_state(const EncoderParams<Real>& params) {
  EncoderState<Real> s;
  s.expand = PopulationState<Real>(params.n_expand_total(), params.model);
  s.fuse = PopulationState<Real>(params.n_fuse, params.model);
  s.harm = PopulationState<Real>(params.n_harm, params.model);
  return s;
}

template <typename Real>
void encoder_reset(EncoderState<Real>& state) {
  state.expand = reset_population(std::move(state.expand));
  state.fuse = reset_population(std::move(state.fuse));
  state.harm = reset_population(std::move(state.harm));
}

template <typename Real>
std::span<const Real> encoder_step(const EncoderParams<Real>& params, EncoderState<Real>& state,
                                   std::span<const Real> x, const SpikeFunction& fn) {
  if (x.size() != params.n_channels) {
    throw std::invalid_argument("encoder_step: expected " + std::to_string(params.n_channels) +
                                " channels, got " + std::to_string(x.size()));
  }
  auto& cur = state.current;

  cur.assign(params.n_expand_total(), Real{0});
  for (std::size_t c = 0; c < params.n_channels; ++c) {
    const auto w = params.w_expand.row(c);
    for (std::size_t k = 0; k < params.n_expand; ++k) cur[c * params.n_expand + k] = w[k] * x[c];
  }
  population_update<Real>(params.model, params.expand, state.expand, cur, fn);

  cur.assign(params.n_fuse, Real{0});
  matvec_accumulate<Real>(params.w_fuse, state.expand.spikes, cur, state.active);
  population_update<Real>(params.model, params.fuse, state.fuse, cur, fn);

  cur.assign(params.n_harm, Real{0});
  matvec_accumulate<Real>(params.w_harm, state.fuse.spikes, cur, state.active);
  population_update<Real>(params.model, params.harm, state.harm, cur, fn);

  return state.harm.spikes;
}

#define L2MU_INSTANTIATE_ENCODER(Real)                                                        \
  template struct EncoderParams<Real>;                                                        \
  template EncoderState<Real> make_encoder_state<Real>(const EncoderParams<Real>&);          \
  template void encoder_reset<Real>(EncoderState<Real>&);                                     \
  template std::span<const Real> encoder_step<Real>(const EncoderParams<Real>&,               \
                                                    EncoderState<Real>&, std::span<const Real>, \
                                                    const SpikeFunction&);

L2MU_INSTANTIATE_ENCODER(float)
L2MU_INSTANTIATE_ENCODER(double)
L2MU_INSTANTIATE_ENCODER(long double)

}  // namespace l2mu
