#pragma once

#include "seqcls/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace seqcls {

/// Per-video top-k (label, confidence) pairs, confidence descending with ties
/// broken by ascending label id.
struct PredictionList {
  std::string video_id;
  std::vector<std::pair<std::uint32_t, double>> pairs;
};

/// Pooled scoring input: one prediction list and one positive label set per
/// video. M is the total positive count across all videos.
struct GapInput {
  std::vector<PredictionList> predictions;
  std::vector<LabelSet> positives;

  std::size_t total_positives() const {
    std::size_t m = 0;
    for (const auto& p : positives) m += p.size();
    return m;
  }
};

/// The k highest-confidence labels (ties -> lower label id), sorted the same
/// way. k >= vocabulary returns all labels fully sorted.
std::vector<std::pair<std::uint32_t, double>> topk_sparsify(const Vec& confidences,
                                                            int k);

/// Global Average Precision over the pooled predictions of all videos,
/// truncated to the top k per video. Pooled ordering is confidence
/// descending, then video ordinal ascending, then label id ascending.
/// Undefined (throws) when there are no positives.
double gap(const GapInput& input, int k = 20);

/// Literal re-implementation used as an independent oracle: materializes the
/// pooled list and walks it position by position, recounting true positives
/// from scratch at every position. Agrees with gap() to 1e-12.
double gap_oracle(const GapInput& input, int k = 20);

}  // namespace seqcls
