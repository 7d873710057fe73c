#include "l2mu/cell.hpp"

#include <stdexcept>

namespace l2mu {

template <typename Real>
void CellParams<Real>::set_state_space(const StateSpace& space) {
  require(space.d == static_cast<int>(d), "cell: state space order does not match d");
  ss = space;
  a_bar = Matrix<Real>(d, d);
  b_bar.assign(d, Real{0});
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) a_bar(i, j) = static_cast<Real>(space.A_bar[i * d + j]);
    b_bar[i] = static_cast<Real>(space.B_bar[i]);
  }
}

template <typename Real>
void CellParams<Real>::validate() const {
  require(n_x > 0 && n_u > 0 && n_h > 0 && d > 0, "cell: all dimensions must be positive");
  const std::size_t nm = n_m();
  require(e_x.rows() == n_u && e_x.cols() == n_x, "cell: e_x must be n_u x n_x");
  require(e_h.rows() == n_u && e_h.cols() == n_h, "cell: e_h must be n_u x n_h");
  require(e_m.rows() == n_u && e_m.cols() == nm, "cell: e_m must be n_u x n_m");
  require(w_x.rows() == n_h && w_x.cols() == n_x, "cell: W_x must be n_h x n_x");
  require(w_h.rows() == n_h && w_h.cols() == n_h, "cell: W_h must be n_h x n_h");
  require(w_m.rows() == n_h && w_m.cols() == nm, "cell: W_m must be n_h x n_m");
  require(ss.d == static_cast<int>(d), "cell: state space order does not match d");
  require(a_bar.rows() == d && a_bar.cols() == d && b_bar.size() == d,
          "cell: discretized matrices not set");
  u.validate(model);
  m.validate(model);
  h.validate(model);
}

template <typename Real>
CellState<Real> make_cell_state(const CellParams<Real>& params) {
  CellState<Real> s;
  s.u = PopulationState<Real>(params.n_u, params.model);
  s.m = PopulationState<Real>(params.n_m(), params.model);
  s.h = PopulationState<Real>(params.n_h, params.model);
  return s;
}

template <typename Real>
void cell_reset(CellState<Real>& state) {
  state.u = reset_population(std::move(state.u));
  state.m = reset_population(std::move(state.m));
  state.h = reset_population(std::move(state.h));
}

template <typename Real>
std::span<const Real> u_step(const CellParams<Real>& p, std::span<const Real> x_spk,
                             std::span<const Real> h_prev, std::span<const Real> m_prev,
                             PopulationState<Real>& u, std::vector<Real>& current,
                             std::vector<std::size_t>& active, const SpikeFunction& fn) {
  require(x_spk.size() == p.n_x, "u_step: x spikes must have width n_x");
  require(h_prev.size() == p.n_h, "u_step: h spikes must have width n_h");
  require(m_prev.size() == p.n_m(), "u_step: m spikes must have width n_m");
  current.assign(p.n_u, Real{0});
  matvec_accumulate<Real>(p.e_x, x_spk, current, active);
  matvec_accumulate<Real>(p.e_h, h_prev, current, active);
  matvec_accumulate<Real>(p.e_m, m_prev, current, active);
  population_update<Real>(p.model, p.u, u, current, fn);
  return u.spikes;
}

template <typename Real>
std::span<const Real> m_step(const CellParams<Real>& p, std::span<const Real> u_spk,
                             PopulationState<Real>& m, std::vector<Real>& current,
                             const SpikeFunction& fn) {
  require(u_spk.size() == p.n_u, "m_step: u spikes must have width n_u");
  require(m.size() == p.n_m(), "m_step: m state must have n_u * d neurons");
  const std::size_t d = p.d;
  current.assign(p.n_m(), Real{0});
  for (std::size_t c = 0; c < p.n_u; ++c) {
    const Real* prev = m.spikes.data() + c * d;
    const Real uc = u_spk[c];
    for (std::size_t i = 0; i < d; ++i) {
      const auto row = p.a_bar.row(i);
      Real acc{0};
      for (std::size_t j = 0; j < d; ++j) {
        if (prev[j] != Real{0}) acc += row[j] * prev[j];
      }
      if (uc != Real{0}) acc += p.b_bar[i] * uc;
      current[c * d + i] = acc;
    }
  }
  population_update<Real>(p.model, p.m, m, current, fn);
  return m.spikes;
}

template <typename Real>
std::span<const Real> h_step(const CellParams<Real>& p, std::span<const Real> x_spk,
                             std::span<const Real> h_prev, std::span<const Real> m_spk,
                             PopulationState<Real>& h, std::vector<Real>& current,
                             std::vector<std::size_t>& active, const SpikeFunction& fn) {
  require(x_spk.size() == p.n_x, "h_step: x spikes must have width n_x");
  require(h_prev.size() == p.n_h, "h_step: h spikes must have width n_h");
  require(m_spk.size() == p.n_m(), "h_step: m spikes must have width n_m");
  current.assign(p.n_h, Real{0});
  matvec_accumulate<Real>(p.w_x, x_spk, current, active);
  matvec_accumulate<Real>(p.w_h, h_prev, current, active);
  matvec_accumulate<Real>(p.w_m, m_spk, current, active);
  population_update<Real>(p.model, p.h, h, current, fn);
  return h.spikes;
}

template <typename Real>
std::span<const Real> cell_step(const CellParams<Real>& p, std::span<const Real> x_spk,
                                CellState<Real>& state, const SpikeFunction& fn) {
  // u reads the previous h and m spikes, which are still in place.
  u_step<Real>(p, x_spk, state.h.spikes, state.m.spikes, state.u, state.current, state.active, fn);
  m_step<Real>(p, state.u.spikes, state.m, state.current, fn);
  // h_step reads h_prev from the population it is about to update, so the
  // previous spikes are copied out first.
  state.h_prev.assign(state.h.spikes.begin(), state.h.spikes.end());
  h_step<Real>(p, x_spk, state.h_prev, state.m.spikes, state.h, state.current, state.active, fn);
  return state.h.spikes;
}

#define L2MU_INSTANTIATE_CELL(Real)                                                           \
  template struct CellParams<Real>;                                                           \
  template CellState<Real> make_cell_state<Real>(const CellParams<Real>&);                    \
  template void cell_reset<Real>(CellState<Real>&);                                           \
  template std::span<const Real> u_step<Real>(                                                \
      const CellParams<Real>&, std::span<const Real>, std::span<const Real>,                  \
      std::span<const Real>, PopulationState<Real>&, std::vector<Real>&,                      \
      std::vector<std::size_t>&, const SpikeFunction&);                                       \
  template std::span<const Real> m_step<Real>(const CellParams<Real>&, std::span<const Real>, \
                                              PopulationState<Real>&, std::vector<Real>&,     \
                                              const SpikeFunction&);                          \
  template std::span<const Real> h_step<Real>(                                                \
      const CellParams<Real>&, std::span<const Real>, std::span<const Real>,                  \
      std::span<const Real>, PopulationState<Real>&, std::vector<Real>&,                      \
      std::vector<std::size_t>&, const SpikeFunction&);                                       \
  template std::span<const Real> cell_step<Real>(const CellParams<Real>&,                     \
                                                 std::span<const Real>, CellState<Real>&,     \
                                                 const SpikeFunction&);

L2MU_INSTANTIATE_CELL(float)
L2MU_INSTANTIATE_CELL(double)
L2MU_INSTANTIATE_CELL(long double)

}  // namespace l2mu
