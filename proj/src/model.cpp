#include "seqcls/model.hpp"

namespace seqcls {

ModelForward Model::forward(const BatchInput& input) const {
  ModelForward fwd;
  fwd.descriptors = encoder_.forward(input, fwd.encoder);
  if (spec_.head == HeadKind::kLr) {
    fwd.confidences = classify_lr(fwd.descriptors, params_->at("head.lr.W"),
                                  params_->at("head.lr.b"));
    fwd.head.conf = fwd.confidences;
  } else {
    fwd.confidences = classify_moe(
        fwd.descriptors, params_->at("head.moe.gate.W"), params_->at("head.moe.gate.b"),
        params_->at("head.moe.expert.W"), params_->at("head.moe.expert.b"),
        spec_.experts, fwd.head);
  }
  return fwd;
}

void Model::backward(const BatchInput& input, const ModelForward& fwd,
                     const Mat& dconfidences, ParamStore& grads) const {
  Mat ddesc;
  if (spec_.head == HeadKind::kLr) {
    ddesc = classify_lr_backward(dconfidences, fwd.descriptors,
                                 params_->at("head.lr.W"), fwd.head.conf,
                                 grads.at("head.lr.W"), grads.at("head.lr.b"));
  } else {
    ddesc = classify_moe_backward(
        dconfidences, fwd.descriptors, params_->at("head.moe.gate.W"),
        params_->at("head.moe.expert.W"), spec_.experts, fwd.head,
        grads.at("head.moe.gate.W"), grads.at("head.moe.gate.b"),
        grads.at("head.moe.expert.W"), grads.at("head.moe.expert.b"));
  }
  encoder_.backward(input, fwd.encoder, ddesc, grads);
}

Vec Model::predict(const FrameSequence& cropped, Index mask_len) const {
  BatchInput input = make_batch_input({&cropped}, {mask_len}, spec_.audio_dim);
  return forward(input).confidences.row(0).transpose();
}

}  // namespace seqcls
