#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace l2mu {

/// Legendre state space of order d over a window of `theta` time units,
/// together with its forward-Euler discretization at step `dt`:
///
///   A_bar = (dt / theta) A + I,   B_bar = (dt / theta) B
///
/// All matrices are row-major doubles.
struct StateSpace {
  int d = 0;
  double theta = 0.0;
  double dt = 1.0;
  std::vector<double> A;      // d x d
  std::vector<double> B;      // d
  std::vector<double> A_bar;  // d x d
  std::vector<double> B_bar;  // d

  double a(int i, int j) const { return A[static_cast<std::size_t>(i * d + j)]; }
  double a_bar(int i, int j) const { return A_bar[static_cast<std::size_t>(i * d + j)]; }

  /// Spectral radius of A_bar via Gelfand's formula, ||A_bar^k||^(1/k).
  double spectral_radius_estimate(int iterations = 2000) const;
};

/// Closed-form integer entries of A and B.
long long legendre_a_entry(int i, int j);
long long legendre_b_entry(int i);

struct LegendreEval {
  double value;
  bool in_domain;  // false when x is outside [0, 1]
};

/// Shifted Legendre polynomial of degree `degree` on [0, 1], with the
/// domain flag. Degrees up to kLegendreClosedFormMaxDegree use the explicit
/// binomial sum with exact integer coefficients; higher degrees use the
/// three-term recurrence.
LegendreEval evaluate_shifted_legendre(int degree, double x);
double shifted_legendre(int degree, double x);

inline constexpr int kLegendreClosedFormMaxDegree = 12;

StateSpace build_state_space(int d, double theta, double dt = 1.0);

/// m_t = A_bar m_{t-1} + B_bar u_t, starting from m0. Returns m_1..m_T.
std::vector<std::vector<double>> simulate_memory(const StateSpace& ss, std::span<const double> u,
                                                 std::span<const double> m0);

/// sum_i P_i(theta_prime / theta) m_i
double delay_reconstruct(std::span<const double> m, double theta_prime, double theta);

/// Root-mean-square error normalized by the standard deviation of `target`.
double nrmse(std::span<const double> estimate, std::span<const double> target);

/// A sum of sinusoids, evaluated in units of samples.
struct BandLimitedSignal {
  std::vector<double> amplitudes;
  std::vector<double> cycles_per_window;
  std::vector<double> phases;
  double window = 40.0;  // samples per window

  double operator()(double t) const;
};

/// Delay-reconstruction experiment on the continuous memory.
///
/// The window holds `window_samples` samples; the continuous system is
/// integrated with forward Euler at `substeps` steps per sample, the input
/// evaluated at each substep. The memory is read out at every sample with
/// theta' = theta and compared with u(t - theta). The first `transient_windows`
/// windows are discarded.
struct DelayExperiment {
  int d = 12;
  int window_samples = 40;
  int substeps = 100;
  int windows = 6;
  int transient_windows = 1;
};

/// `harmonics` sinusoids with amplitudes in [0.5, 1], frequencies in
/// [0.1, max_cycles] cycles per window and uniform phases.
BandLimitedSignal random_band_limited_signal(std::uint64_t seed, int harmonics = 3,
                                             double max_cycles = 0.9, double window = 40.0);

double delay_reconstruction_nrmse(const DelayExperiment& cfg, const BandLimitedSignal& signal);

}  // namespace l2mu
