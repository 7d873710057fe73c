#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "l2mu/lmu_math.hpp"
#include "l2mu/neuron.hpp"
#include "l2mu/tensor.hpp"

namespace l2mu {

/// Spiking LMU cell: u, m and h populations exchanging spikes.
///
///   u_curr = e_x x_t + e_h h_{t-1} + e_m m_{t-1}
///   m_curr[c] = A_bar m_{t-1}[c] + B_bar u_t[c]     (per u channel c)
///   h_curr = W_x x_t + W_h h_{t-1} + W_m m_t
///
/// The m population is laid out channel-major: neuron c * d + i is memory
/// unit i of u channel c. A_bar and B_bar are fixed.
template <typename Real>
struct CellParams {
  NeuronModel model = NeuronModel::Leaky;
  std::size_t n_x = 0;
  std::size_t n_u = 0;
  std::size_t n_h = 0;
  std::size_t d = 0;
  Matrix<Real> e_x;  // n_u x n_x
  Matrix<Real> e_h;  // n_u x n_h
  Matrix<Real> e_m;  // n_u x n_m
  Matrix<Real> w_x;  // n_h x n_x
  Matrix<Real> w_h;  // n_h x n_h
  Matrix<Real> w_m;  // n_h x n_m
  StateSpace ss;
  Matrix<Real> a_bar;       // d x d, cast of ss.A_bar
  std::vector<Real> b_bar;  // d, cast of ss.B_bar
  PopulationParams u;
  PopulationParams m;
  PopulationParams h;

  std::size_t n_m() const { return n_u * d; }
  void set_state_space(const StateSpace& space);
  void validate() const;
};

template <typename Real>
struct CellState {
  PopulationState<Real> u;
  PopulationState<Real> m;
  PopulationState<Real> h;

  std::vector<Real> current;
  std::vector<Real> h_prev;
  std::vector<std::size_t> active;

  bool same_dynamics(const CellState& other) const {
    return u == other.u && m == other.m && h == other.h;
  }
};

template <typename Real>
CellState<Real> make_cell_state(const CellParams<Real>& params);

template <typename Real>
void cell_reset(CellState<Real>& state);

/// Steps the u population. `h_prev` and `m_prev` are the previous step's spikes.
template <typename Real>
std::span<const Real> u_step(const CellParams<Real>& p, std::span<const Real> x_spk,
                             std::span<const Real> h_prev, std::span<const Real> m_prev,
                             PopulationState<Real>& u, std::vector<Real>& current,
                             std::vector<std::size_t>& active, const SpikeFunction& fn = {});

/// Steps the m population; its own previous spikes are read from `m` before
/// the update.
template <typename Real>
std::span<const Real> m_step(const CellParams<Real>& p, std::span<const Real> u_spk,
                             PopulationState<Real>& m, std::vector<Real>& current,
                             const SpikeFunction& fn = {});

/// Steps the h population with the current step's m spikes.
template <typename Real>
std::span<const Real> h_step(const CellParams<Real>& p, std::span<const Real> x_spk,
                             std::span<const Real> h_prev, std::span<const Real> m_spk,
                             PopulationState<Real>& h, std::vector<Real>& current,
                             std::vector<std::size_t>& active, const SpikeFunction& fn = {});

/// u, then m (fresh u spikes), then h (fresh m spikes). Returns h spikes.
template <typename Real>
std::span<const Real> cell_step(const CellParams<Real>& p, std::span<const Real> x_spk,
                                CellState<Real>& state, const SpikeFunction& fn = {});

}  // namespace l2mu
