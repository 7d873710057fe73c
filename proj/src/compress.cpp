#include "l2mu/compress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace l2mu {

std::size_t PruneMask::total() const {
  std::size_t n = 0;
  for (const auto& k : keep) n += k.size();
  return n;
}

std::size_t PruneMask::kept() const {
  std::size_t n = 0;
  for (const auto& k : keep) n += static_cast<std::size_t>(std::count(k.begin(), k.end(), 1));
  return n;
}

void PruneMask::check_matches(const Model<float>& model) const {
  const auto tensors = model.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    require(keep[k].size() == tensors[k]->size(),
            "mask: shape mismatch for " + std::string(kTensorNames[k]));
  }
}

std::size_t pruned_count(std::size_t n, double sparsity) {
  require(sparsity >= 0.0 && sparsity < 1.0, "prune: sparsity must be in [0, 1)");
  return static_cast<std::size_t>(std::floor(sparsity * static_cast<double>(n)));
}

template <typename Real>
std::vector<std::vector<std::uint8_t>> global_magnitude_prune(
    const std::vector<std::span<const Real>>& groups, double sparsity) {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  const std::size_t drop = pruned_count(n, sparsity);

  std::vector<Real> magnitude;
  magnitude.reserve(n);
  for (const auto& g : groups) {
    for (Real v : g) magnitude.push_back(std::abs(v));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Smallest first; later index first among ties.
  const auto before = [&](std::size_t a, std::size_t b) {
    if (magnitude[a] != magnitude[b]) return magnitude[a] < magnitude[b];
    return a > b;
  };
  if (drop < n) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(drop), order.end(), before);
  }

  std::vector<std::uint8_t> flat(n, 1);
  for (std::size_t i = 0; i < drop; ++i) flat[order[i]] = 0;

  std::vector<std::vector<std::uint8_t>> out;
  out.reserve(groups.size());
  std::size_t offset = 0;
  for (const auto& g : groups) {
    out.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                     flat.begin() + static_cast<std::ptrdiff_t>(offset + g.size()));
    offset += g.size();
  }
  return out;
}

template std::vector<std::vector<std::uint8_t>> global_magnitude_prune<float>(
    const std::vector<std::span<const float>>&, double);
template std::vector<std::vector<std::uint8_t>> global_magnitude_prune<double>(
    const std::vector<std::span<const double>>&, double);

PruneMask global_magnitude_prune(const Model<float>& model, double sparsity) {
  std::vector<std::span<const float>> groups;
  for (const auto* t : model.tensors()) groups.push_back(t->values());
  auto keep = global_magnitude_prune<float>(groups, sparsity);
  PruneMask mask;
  mask.target_sparsity = sparsity;
  for (std::size_t k = 0; k < kTensorCount; ++k) mask.keep[k] = std::move(keep[k]);
  return mask;
}

void apply_mask(Model<float>& model, const PruneMask& mask) {
  mask.check_matches(model);
  auto tensors = model.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    auto w = tensors[k]->values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (mask.keep[k][i] == 0) w[i] = 0.0f;
    }
  }
}

Metrics fine_tune(Model<float>& model, const PruneMask& mask, const TrainConfig& config,
                  const DatasetSplits& splits) {
  mask.check_matches(model);
  apply_mask(model, mask);
  TrainHooks hooks;
  hooks.after_step = [&](Model<float>& m) { apply_mask(m, mask); };
  hooks.after_epoch = [&](std::size_t epoch, const Model<float>& m) {
    const auto tensors = m.tensors();
    for (std::size_t k = 0; k < kTensorCount; ++k) {
      const auto w = tensors[k]->values();
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (mask.keep[k][i] == 0 && w[i] != 0.0f) {
          throw std::logic_error("fine_tune: pruned weight revived in " +
                                 std::string(kTensorNames[k]) + " at epoch " +
                                 std::to_string(epoch));
        }
      }
    }
  };
  return train_existing(model, config, splits, hooks);
}

ParamCount count_nonzero_params(const Model<float>& model, const PruneMask* mask) {
  if (mask != nullptr) mask->check_matches(model);
  ParamCount out;
  const auto tensors = model.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    const auto w = tensors[k]->values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] != 0.0f && (mask == nullptr || mask->keep[k][i] != 0)) ++out.count;
    }
  }
  out.footprint_bytes = out.count * sizeof(float);
  return out;
}

double reduction_percent(std::size_t before, std::size_t after) {
  require(before > 0, "reduction_percent: empty baseline");
  return 100.0 * (1.0 - static_cast<double>(after) / static_cast<double>(before));
}

namespace {

template <typename Real>
std::vector<std::uint64_t> column_nonzeros(const Matrix<Real>& w) {
  std::vector<std::uint64_t> nnz(w.cols(), 0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const auto row = w.row(i);
    for (std::size_t j = 0; j < w.cols(); ++j) nnz[j] += row[j] != Real{0};
  }
  return nnz;
}

template <typename Real>
std::uint64_t nonzeros(const Matrix<Real>& w) {
  std::uint64_t n = 0;
  for (Real v : w.values()) n += v != Real{0};
  return n;
}

template <typename Real>
std::uint64_t events(const std::vector<std::uint64_t>& fan_out, std::span<const Real> spikes) {
  std::uint64_t n = 0;
  for (std::size_t j = 0; j < spikes.size(); ++j) {
    if (spikes[j] != Real{0}) n += fan_out[j];
  }
  return n;
}

}  // namespace

template <typename Real>
std::uint64_t event_operations(const Matrix<Real>& w, std::span<const Real> spikes) {
  require(spikes.size() == w.cols(), "event_operations: shape mismatch");
  return events<Real>(column_nonzeros(w), spikes);
}

template <typename Real>
SynopCount count_effective_synops(const Tape<Real>& tape) {
  require(tape.model != nullptr, "synops: tape has no model");
  const Model<Real>& model = *tape.model;
  const auto& cell = model.cell;
  const std::size_t d = cell.d;

  const auto fuse_fan = column_nonzeros(model.encoder.w_fuse);
  const auto harm_fan = column_nonzeros(model.encoder.w_harm);
  auto x_fan = column_nonzeros(cell.e_x);
  const auto w_x_fan = column_nonzeros(cell.w_x);
  auto h_fan = column_nonzeros(cell.e_h);
  const auto w_h_fan = column_nonzeros(cell.w_h);
  auto m_prev_fan = column_nonzeros(cell.e_m);
  const auto m_fan = column_nonzeros(cell.w_m);
  for (std::size_t j = 0; j < x_fan.size(); ++j) x_fan[j] += w_x_fan[j];
  for (std::size_t j = 0; j < h_fan.size(); ++j) h_fan[j] += w_h_fan[j];
  const auto a_fan = column_nonzeros(cell.a_bar);
  for (std::size_t j = 0; j < m_prev_fan.size(); ++j) m_prev_fan[j] += a_fan[j % d];
  std::uint64_t b_nnz = 0;
  for (Real v : cell.b_bar) b_nnz += v != Real{0};
  const std::vector<std::uint64_t> u_fan(cell.n_u, b_nnz);

  const std::uint64_t dense_per_step = nonzeros(model.encoder.w_expand) + nonzeros(model.w_out);

  SynopCount out;
  for (std::size_t t = 0; t < tape.steps.size(); ++t) {
    const auto& rec = tape.steps[t];
    out.dense += dense_per_step;
    std::uint64_t n = 0;
    n += events<Real>(fuse_fan, rec[Population::Expand].spikes);
    n += events<Real>(harm_fan, rec[Population::Fuse].spikes);
    n += events<Real>(x_fan, rec[Population::Harm].spikes);
    n += events<Real>(u_fan, rec[Population::U].spikes);
    n += events<Real>(m_fan, rec[Population::M].spikes);
    if (t > 0) {
      const auto& prev = tape.steps[t - 1];
      n += events<Real>(h_fan, prev[Population::H].spikes);
      n += events<Real>(m_prev_fan, prev[Population::M].spikes);
    }
    out.spike_driven += n;
  }
  return out;
}

template <typename Real>
SynopCount count_effective_synops(const Model<Real>& model, const Sample& sample) {
  const auto rec = forward_recorded(model, sample);
  return count_effective_synops(rec.tape);
}

template std::uint64_t event_operations<float>(const Matrix<float>&, std::span<const float>);
template std::uint64_t event_operations<double>(const Matrix<double>&, std::span<const double>);
template SynopCount count_effective_synops<float>(const Tape<float>&);
template SynopCount count_effective_synops<double>(const Tape<double>&);
template SynopCount count_effective_synops<float>(const Model<float>&, const Sample&);
template SynopCount count_effective_synops<double>(const Model<double>&, const Sample&);

}  // namespace l2mu
