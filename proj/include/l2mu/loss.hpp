#pragma once

#include <span>
#include <vector>

namespace l2mu {

template <typename Real>
struct LossResult {
  Real loss;
  std::vector<Real> gradient;  // d loss / d logits = softmax - one_hot
};

/// Softmax cross-entropy in log-sum-exp form.
template <typename Real>
LossResult<Real> cross_entropy(std::span<const Real> logits, int label);

}  // namespace l2mu
