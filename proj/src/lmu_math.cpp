#include "l2mu/lmu_math.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "l2mu/random.hpp"

namespace l2mu {

namespace {

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long result = 1;
  // Exact: result * (n - k + i) is always divisible by i at this point.
  for (int i = 1; i <= k; ++i) result = result * (n - k + i) / i;
  return result;
}

double legendre_closed_form(int degree, double x) {
  // sum_k C(n, k)^2 x^k (x - 1)^(n - k). On [0, 1] the terms stay small, unlike
  // the power-basis sum whose cancellation costs eight digits at n = 12.
  double sum = 0.0;
  for (int k = 0; k <= degree; ++k) {
    const long long c = binomial(degree, k);
    sum += static_cast<double>(c * c) * std::pow(x, k) * std::pow(x - 1.0, degree - k);
  }
  return sum;
}

double legendre_recurrence(int degree, double x) {
  // Standard Legendre recurrence in z = 2x - 1.
  const double z = 2.0 * x - 1.0;
  double prev = 1.0;
  if (degree == 0) return prev;
  double cur = z;
  for (int n = 1; n < degree; ++n) {
    const double next = ((2.0 * n + 1.0) * z * cur - n * prev) / (n + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

}  // namespace

long long legendre_a_entry(int i, int j) {
  const long long scale = 2LL * i + 1;
  if (i < j) return -scale;
  return ((i - j + 1) % 2 == 0) ? scale : -scale;
}

long long legendre_b_entry(int i) {
  const long long scale = 2LL * i + 1;
  return (i % 2 == 0) ? scale : -scale;
}

LegendreEval evaluate_shifted_legendre(int degree, double x) {
  if (degree < 0) throw std::invalid_argument("shifted_legendre: negative degree");
  const bool in_domain = x >= 0.0 && x <= 1.0;
  const double value = degree <= kLegendreClosedFormMaxDegree ? legendre_closed_form(degree, x)
                                                              : legendre_recurrence(degree, x);
  return {value, in_domain};
}

double shifted_legendre(int degree, double x) { return evaluate_shifted_legendre(degree, x).value; }

StateSpace build_state_space(int d, double theta, double dt) {
  if (d < 1) throw std::invalid_argument("build_state_space: d must be >= 1");
  if (!(theta > 0.0)) throw std::invalid_argument("build_state_space: theta must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("build_state_space: dt must be > 0");
  if (dt > theta) throw std::invalid_argument("build_state_space: dt must not exceed theta");

  StateSpace ss;
  ss.d = d;
  ss.theta = theta;
  ss.dt = dt;
  const auto n = static_cast<std::size_t>(d);
  ss.A.resize(n * n);
  ss.A_bar.resize(n * n);
  ss.B.resize(n);
  ss.B_bar.resize(n);
  const double scale = dt / theta;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const auto k = static_cast<std::size_t>(i * d + j);
      ss.A[k] = static_cast<double>(legendre_a_entry(i, j));
      ss.A_bar[k] = scale * ss.A[k] + (i == j ? 1.0 : 0.0);
    }
    ss.B[static_cast<std::size_t>(i)] = static_cast<double>(legendre_b_entry(i));
    ss.B_bar[static_cast<std::size_t>(i)] = scale * ss.B[static_cast<std::size_t>(i)];
  }
  return ss;
}

double StateSpace::spectral_radius_estimate(int iterations) const {
  const auto n = static_cast<std::size_t>(d);
  std::vector<double> power(n * n, 0.0), next(n * n);
  for (std::size_t i = 0; i < n; ++i) power[i * n + i] = 1.0;
  double log_norm = 0.0;
  for (int k = 0; k < iterations; ++k) {
    double frob = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t l = 0; l < n; ++l) acc += A_bar[i * n + l] * power[l * n + j];
        next[i * n + j] = acc;
        frob += acc * acc;
      }
    }
    frob = std::sqrt(frob);
    if (frob == 0.0) return 0.0;
    for (double& v : next) v /= frob;
    log_norm += std::log(frob);
    power.swap(next);
  }
  return std::exp(log_norm / iterations);
}

std::vector<std::vector<double>> simulate_memory(const StateSpace& ss, std::span<const double> u,
                                                 std::span<const double> m0) {
  const auto d = static_cast<std::size_t>(ss.d);
  if (m0.size() != d) throw std::invalid_argument("simulate_memory: m0 has wrong dimension");
  if (u.empty()) throw std::invalid_argument("simulate_memory: empty input");

  std::vector<std::vector<double>> out;
  out.reserve(u.size());
  std::vector<double> m(m0.begin(), m0.end());
  std::vector<double> next(d);
  for (double ut : u) {
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += ss.A_bar[i * d + j] * m[j];
      next[i] = acc + ss.B_bar[i] * ut;
    }
    m.swap(next);
    out.push_back(m);
  }
  return out;
}

double delay_reconstruct(std::span<const double> m, double theta_prime, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("delay_reconstruct: theta must be > 0");
  if (theta_prime < 0.0 || theta_prime > theta) {
    throw std::invalid_argument("delay_reconstruct: theta_prime outside [0, theta]");
  }
  const double r = theta_prime / theta;
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) sum += shifted_legendre(static_cast<int>(i), r) * m[i];
  return sum;
}

double nrmse(std::span<const double> estimate, std::span<const double> target) {
  if (estimate.size() != target.size() || target.empty()) {
    throw std::invalid_argument("nrmse: sizes differ or are empty");
  }
  double mean = 0.0;
  for (double v : target) mean += v;
  mean /= static_cast<double>(target.size());
  double var = 0.0, se = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    var += (target[i] - mean) * (target[i] - mean);
    se += (estimate[i] - target[i]) * (estimate[i] - target[i]);
  }
  if (var == 0.0) throw std::invalid_argument("nrmse: target has zero variance");
  return std::sqrt(se / var);
}

double BandLimitedSignal::operator()(double t) const {
  double s = 0.0;
  for (std::size_t k = 0; k < amplitudes.size(); ++k) {
    s += amplitudes[k] * std::sin(2.0 * std::numbers::pi * cycles_per_window[k] * t / window + phases[k]);
  }
  return s;
}

BandLimitedSignal random_band_limited_signal(std::uint64_t seed, int harmonics, double max_cycles,
                                             double window) {
  if (harmonics < 1 || !(max_cycles >= 0.1) || !(window > 0.0)) {
    throw std::invalid_argument("random_band_limited_signal: bad parameters");
  }
  Rng rng(seed);
  BandLimitedSignal s;
  s.window = window;
  for (int k = 0; k < harmonics; ++k) {
    s.amplitudes.push_back(rng.uniform(0.5, 1.0));
    s.cycles_per_window.push_back(rng.uniform(0.1, max_cycles));
    s.phases.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
  }
  return s;
}

double delay_reconstruction_nrmse(const DelayExperiment& cfg, const BandLimitedSignal& signal) {
  if (cfg.substeps < 1 || cfg.window_samples < 1 || cfg.windows <= cfg.transient_windows ||
      cfg.transient_windows < 1) {
    throw std::invalid_argument("delay_reconstruction_nrmse: bad experiment shape");
  }
  // Time is measured in samples; theta is one window.
  const double theta = cfg.window_samples;
  const StateSpace ss = build_state_space(cfg.d, theta, 1.0 / cfg.substeps);

  const int samples = cfg.window_samples * cfg.windows;
  std::vector<double> u(static_cast<std::size_t>(samples * cfg.substeps));
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = signal(static_cast<double>(k) / cfg.substeps);

  const auto trajectory = simulate_memory(ss, u, std::vector<double>(static_cast<std::size_t>(cfg.d), 0.0));

  std::vector<double> estimate, target;
  const int first = cfg.window_samples * cfg.transient_windows;
  for (int t = first + 1; t <= samples; ++t) {
    const auto& m = trajectory[static_cast<std::size_t>(t * cfg.substeps - 1)];
    estimate.push_back(delay_reconstruct(m, theta, theta));
    target.push_back(signal(static_cast<double>(t) - theta));
  }
  return nrmse(estimate, target);
}

}  // namespace l2mu
