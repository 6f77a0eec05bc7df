#pragma once

#include "seqcls/encoder.hpp"
#include "seqcls/heads.hpp"
#include "seqcls/params.hpp"

namespace seqcls {

struct ModelForward {
  EncoderTrace encoder;
  Mat descriptors;  // [B x D]
  Mat confidences;  // [B x K]
  HeadCache head;
};

/// Encoder plus one-vs-all head over a shared parameter store.
class Model {
 public:
  Model(const ModelSpec& spec, const ParamStore& params)
      : spec_(spec), params_(&params), encoder_(spec, params) {}

  const ModelSpec& spec() const { return spec_; }

  ModelForward forward(const BatchInput& input) const;

  /// Accumulates d(loss)/d(theta) into `grads` given d(loss)/d(confidences).
  void backward(const BatchInput& input, const ModelForward& fwd,
                const Mat& dconfidences, ParamStore& grads) const;

  /// Per-video confidences for one cropped sequence.
  Vec predict(const FrameSequence& cropped, Index mask_len) const;

 private:
  ModelSpec spec_;
  const ParamStore* params_;
  Encoder encoder_;
};

}  // namespace seqcls
