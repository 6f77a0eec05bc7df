#include "seqcls/heads.hpp"

#include "seqcls/ops.hpp"

namespace seqcls {

Mat classify_lr(const Mat& descriptors, const Mat& W, const Mat& b) {
  if (descriptors.cols() != W.rows())
    throw ShapeError("classify_lr: descriptor " + shape_str(descriptors) +
                     " vs W " + shape_str(W));
  Mat logits = descriptors * W;
  logits.rowwise() += b.row(0);
  return ops::sigmoid(logits);
}

Mat classify_lr_backward(const Mat& dconf, const Mat& descriptors, const Mat& W,
                         const Mat& conf, Mat& dW, Mat& db) {
  const Mat dlogits = ops::sigmoid_backward(dconf, conf);
  dW.noalias() += descriptors.transpose() * dlogits;
  db.row(0) += dlogits.colwise().sum();
  return dlogits * W.transpose();
}

Mat classify_moe(const Mat& descriptors, const Mat& gate_W, const Mat& gate_b,
                 const Mat& expert_W, const Mat& expert_b, int experts,
                 HeadCache& cache) {
  const Index batch = descriptors.rows();
  const Index cols = gate_W.cols();
  const Index vocab = cols / experts;
  Mat gate_logits = descriptors * gate_W;
  gate_logits.rowwise() += gate_b.row(0);
  Mat expert_logits = descriptors * expert_W;
  expert_logits.rowwise() += expert_b.row(0);

  cache.experts = ops::sigmoid(expert_logits);
  cache.gates.resize(batch, cols);
  cache.conf.resize(batch, vocab);
  for (Index r = 0; r < batch; ++r) {
    for (Index k = 0; k < vocab; ++k) {
      auto logits = gate_logits.row(r).segment(k * experts, experts);
      const double m = logits.maxCoeff();
      Eigen::RowVectorXd w = (logits.array() - m).exp();
      w /= w.sum();
      cache.gates.row(r).segment(k * experts, experts) = w;
      cache.conf(r, k) =
          w.dot(cache.experts.row(r).segment(k * experts, experts));
    }
  }
  return cache.conf;
}

Mat classify_moe_backward(const Mat& dconf, const Mat& descriptors,
                          const Mat& gate_W, const Mat& expert_W, int experts,
                          const HeadCache& cache, Mat& dgate_W, Mat& dgate_b,
                          Mat& dexpert_W, Mat& dexpert_b) {
  const Index batch = descriptors.rows();
  const Index vocab = cache.conf.cols();
  Mat dgate_logits(batch, vocab * experts);
  Mat dexpert_logits(batch, vocab * experts);
  for (Index r = 0; r < batch; ++r) {
    for (Index k = 0; k < vocab; ++k) {
      const double dy = dconf(r, k);
      const double y = cache.conf(r, k);
      for (Index e = 0; e < experts; ++e) {
        const Index c = k * experts + e;
        const double w = cache.gates(r, c);
        const double pe = cache.experts(r, c);
        dgate_logits(r, c) = dy * w * (pe - y);
        dexpert_logits(r, c) = dy * w * pe * (1.0 - pe);
      }
    }
  }
  dgate_W.noalias() += descriptors.transpose() * dgate_logits;
  dgate_b.row(0) += dgate_logits.colwise().sum();
  dexpert_W.noalias() += descriptors.transpose() * dexpert_logits;
  dexpert_b.row(0) += dexpert_logits.colwise().sum();
  return dgate_logits * gate_W.transpose() + dexpert_logits * expert_W.transpose();
}

Vec mean_pool_baseline(const FrameSequence& seq) {
  if (seq.frames() < 1) throw ShapeError("mean_pool_baseline: empty sequence");
  Vec pooled(seq.visual_dim() + seq.audio_dim());
  pooled.head(seq.visual_dim()) = seq.visual.colwise().mean().transpose();
  if (seq.audio_dim() > 0)
    pooled.tail(seq.audio_dim()) = seq.audio.colwise().mean().transpose();
  return pooled;
}

}  // namespace seqcls
