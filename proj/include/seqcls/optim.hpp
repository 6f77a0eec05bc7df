#pragma once

#include "seqcls/params.hpp"

#include <cmath>

namespace seqcls {

enum class OptimizerKind { kAdam, kSgd };

inline OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("unknown optimizer '" + s + "'");
}

inline std::string to_string(OptimizerKind k) {
  return k == OptimizerKind::kAdam ? "adam" : "sgd";
}

struct AdamState {
  ParamStore m;  // first moment
  ParamStore v;  // second moment

  static AdamState like(const ParamStore& params) {
    return {params.zeros_like(), params.zeros_like()};
  }
};

/// Standard bias-corrected Adam update, t is the 1-based step counter.
inline void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state,
                      double lr, double beta1, double beta2, double eps,
                      std::uint64_t t) {
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (const auto& name : params.names()) {
    Mat& theta = params.at(name);
    const Mat& g = grads.at(name);
    Mat& m = state.m.at(name);
    Mat& v = state.v.at(name);
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    theta.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  }
}

inline void sgd_step(ParamStore& params, const ParamStore& grads, double lr) {
  for (const auto& name : params.names()) params.at(name) -= lr * grads.at(name);
}

/// Scales gradients so their global L2 norm is at most `max_norm`
/// (max_norm <= 0 disables clipping). Returns the pre-clip norm.
inline double clip_global_norm(ParamStore& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& name : grads.names()) sq += grads.at(name).squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& name : grads.names()) grads.at(name) *= scale;
  }
  return norm;
}

}  // namespace seqcls
