#pragma once

#include "seqcls/types.hpp"

#include <cmath>
#include <utility>

namespace seqcls {

// Multi-label binary cross entropy, averaged over the non-ignored labels of
// one video. A negative label is ignored when its predicted confidence is
// already below the threshold tau (tau = 0 disables the rule). An empty
// non-ignored set yields loss 0 with zero gradient.
inline std::pair<double, Vec> bce_loss(const Vec& confidences, const Vec& targets,
                                       double tau) {
  if (confidences.size() != targets.size())
    throw ShapeError("bce_loss: confidences " + std::to_string(confidences.size()) +
                     " vs targets " + std::to_string(targets.size()));
  const Index k = confidences.size();
  Vec grad = Vec::Zero(k);
  double total = 0.0;
  Index counted = 0;
  for (Index i = 0; i < k; ++i) {
    const double p = confidences[i];
    const bool positive = targets[i] > 0.5;
    if (!positive && p < tau) continue;
    ++counted;
    if (positive) {
      total -= std::log(p);
      grad[i] = -1.0 / p;
    } else {
      total -= std::log1p(-p);
      grad[i] = 1.0 / (1.0 - p);
    }
  }
  if (counted == 0) return {0.0, std::move(grad)};
  const double inv = 1.0 / static_cast<double>(counted);
  return {total * inv, grad * inv};
}

/// Batch version: mean over videos of the per-video mean loss. Returns the
/// scalar loss and d(loss)/d(confidences) as a [B x K] matrix.
inline std::pair<double, Mat> bce_loss_batch(const Mat& confidences,
                                             const Mat& targets, double tau) {
  if (confidences.rows() != targets.rows() || confidences.cols() != targets.cols())
    throw ShapeError("bce_loss_batch: shape mismatch " + shape_str(confidences) +
                     " vs " + shape_str(targets));
  const Index batch = confidences.rows();
  Mat grad(batch, confidences.cols());
  double total = 0.0;
  for (Index b = 0; b < batch; ++b) {
    auto [loss, g] = bce_loss(confidences.row(b).transpose(),
                              targets.row(b).transpose(), tau);
    total += loss;
    grad.row(b) = g.transpose() / static_cast<double>(batch);
  }
  return {total / static_cast<double>(batch), std::move(grad)};
}

}  // namespace seqcls
