#pragma once

#include "seqcls/types.hpp"

#include <cmath>

namespace seqcls {

// Zero-mean / unit-variance normalization across the feature axis followed by
// a learned scale and shift. The variance is floored by kLayerNormEps so a
// constant input normalizes to zero instead of dividing by zero.
inline constexpr double kLayerNormEps = 1e-6;

struct LayerNormCache {
  Vec normalized;  // (x - mu) / s
  double inv_std = 0.0;
};

inline Vec layer_norm(const Vec& x, const Vec& gain, const Vec& bias,
                      LayerNormCache* cache = nullptr) {
  if (x.size() < 2 || gain.size() != x.size() || bias.size() != x.size())
    throw ShapeError("layer_norm: need len>=2 and matching gain/bias, got x=" +
                     std::to_string(x.size()) + " gain=" + std::to_string(gain.size()) +
                     " bias=" + std::to_string(bias.size()));
  const double mu = x.mean();
  const Vec centered = x.array() - mu;
  const double var = centered.squaredNorm() / static_cast<double>(x.size());
  const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
  Vec normalized = centered * inv_std;
  Vec y = normalized.cwiseProduct(gain) + bias;
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = inv_std;
    return y;
  }
  return y;
}

/// Backward pass; accumulates dgain/dbias and returns dx.
inline Vec layer_norm_backward(const Vec& dy, const Vec& gain,
                               const LayerNormCache& cache, Vec& dgain, Vec& dbias) {
  const auto n = static_cast<double>(dy.size());
  dgain += dy.cwiseProduct(cache.normalized);
  dbias += dy;
  const Vec dnorm = dy.cwiseProduct(gain);
  const double mean_dnorm = dnorm.mean();
  const double mean_dnorm_norm = dnorm.cwiseProduct(cache.normalized).sum() / n;
  return cache.inv_std *
         (dnorm.array() - mean_dnorm - cache.normalized.array() * mean_dnorm_norm);
}

// Batched variant for recurrent cells: rows are batch entries and the columns
// of each [blk*width, (blk+1)*width) block are normalized independently with
// that block's slice of gain/bias. Used to normalize pre-activation gate
// blocks with per-gate statistics.
struct BlockNormCache {
  Mat normalized;  // [B x cols]
  Mat inv_std;     // [B x blocks]
};

inline Mat block_layer_norm(const Mat& x, const RowVec& gain, const RowVec& bias,
                            Index blocks, BlockNormCache& cache) {
  const Index width = x.cols() / blocks;
  if (width * blocks != x.cols() || gain.size() != x.cols() || bias.size() != x.cols())
    throw ShapeError("block_layer_norm: cols " + std::to_string(x.cols()) +
                     " not divisible into " + std::to_string(blocks) + " blocks");
  cache.normalized.resize(x.rows(), x.cols());
  cache.inv_std.resize(x.rows(), blocks);
  Mat y(x.rows(), x.cols());
  const double n = static_cast<double>(width);
  for (Index r = 0; r < x.rows(); ++r) {
    for (Index b = 0; b < blocks; ++b) {
      auto seg = x.row(r).segment(b * width, width);
      const double mu = seg.mean();
      Eigen::RowVectorXd centered = seg.array() - mu;
      const double var = centered.squaredNorm() / n;
      const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
      cache.inv_std(r, b) = inv_std;
      cache.normalized.row(r).segment(b * width, width) = centered * inv_std;
      y.row(r).segment(b * width, width) =
          (centered.array() * inv_std * gain.segment(b * width, width).array()) +
          bias.segment(b * width, width).array();
    }
  }
  return y;
}

inline Mat block_layer_norm_backward(const Mat& dy, const RowVec& gain,
                                     const BlockNormCache& cache, Index blocks,
                                     Mat& dgain, Mat& dbias) {
  const Index width = dy.cols() / blocks;
  Mat dx(dy.rows(), dy.cols());
  const double n = static_cast<double>(width);
  for (Index r = 0; r < dy.rows(); ++r) {
    for (Index b = 0; b < blocks; ++b) {
      auto dseg = dy.row(r).segment(b * width, width);
      auto norm = cache.normalized.row(r).segment(b * width, width);
      dgain.row(0).segment(b * width, width) += dseg.cwiseProduct(norm);
      dbias.row(0).segment(b * width, width) += dseg;
      Eigen::RowVectorXd dnorm =
          dseg.cwiseProduct(gain.segment(b * width, width));
      const double mean_dnorm = dnorm.mean();
      const double mean_dnorm_norm = dnorm.cwiseProduct(norm).sum() / n;
      dx.row(r).segment(b * width, width) =
          cache.inv_std(r, b) *
          (dnorm.array() - mean_dnorm - norm.array() * mean_dnorm_norm);
    }
  }
  return dx;
}

}  // namespace seqcls
