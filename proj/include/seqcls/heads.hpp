#pragma once

#include "seqcls/params.hpp"
#include "seqcls/types.hpp"

namespace seqcls {

// One-vs-all classifier heads over a shared video descriptor. Confidences are
// independent per label and lie strictly in (0,1).

struct HeadCache {
  Mat conf;     // [B x K]
  Mat gates;    // [B x K*E] softmax over each label's E gate logits (moe)
  Mat experts;  // [B x K*E] per-expert sigmoid probabilities (moe)
};

/// confidences[b,k] = sigmoid(desc[b] . W[:,k] + b[k])
Mat classify_lr(const Mat& descriptors, const Mat& W, const Mat& b);

/// dW/db/ddesc for the logistic-regression head.
Mat classify_lr_backward(const Mat& dconf, const Mat& descriptors, const Mat& W,
                         const Mat& conf, Mat& dW, Mat& db);

/// Per label k: softmax over that label's E gate logits mixes E independent
/// logistic experts. Columns are label-major: index k*E + e. With E=1 this
/// reduces exactly to classify_lr on the expert parameters.
Mat classify_moe(const Mat& descriptors, const Mat& gate_W, const Mat& gate_b,
                 const Mat& expert_W, const Mat& expert_b, int experts,
                 HeadCache& cache);

Mat classify_moe_backward(const Mat& dconf, const Mat& descriptors,
                          const Mat& gate_W, const Mat& expert_W, int experts,
                          const HeadCache& cache, Mat& dgate_W, Mat& dgate_b,
                          Mat& dexpert_W, Mat& dexpert_b);

/// Per-dimension arithmetic mean over the true length; visual then audio.
Vec mean_pool_baseline(const FrameSequence& seq);

}  // namespace seqcls
