#include "seqcls/encoder.hpp"

namespace seqcls {

BatchInput make_batch_input(const std::vector<const FrameSequence*>& seqs,
                            const std::vector<Index>& mask, Index audio_dim) {
  if (seqs.empty()) throw ShapeError("make_batch_input: empty batch");
  if (mask.size() != seqs.size())
    throw ShapeError("make_batch_input: mask size mismatch");
  BatchInput input;
  const Index steps = seqs[0]->frames();
  const Index dv = seqs[0]->visual_dim();
  input.visual_dim = dv;
  input.audio_dim = audio_dim;
  const auto batch = static_cast<Index>(seqs.size());
  input.frames.assign(steps, Mat(batch, dv + audio_dim));
  input.mask = mask;
  for (Index b = 0; b < batch; ++b) {
    const FrameSequence& s = *seqs[b];
    if (s.frames() != steps || s.visual_dim() != dv)
      throw ShapeError("make_batch_input: sequence " + std::to_string(b) +
                       " has inconsistent shape");
    if (audio_dim > 0 && s.audio_dim() != audio_dim)
      throw ShapeError("make_batch_input: audio dim mismatch for sequence " +
                       std::to_string(b));
    if (mask[b] < 1 || mask[b] > steps)
      throw ShapeError("make_batch_input: mask_len must be in [1, steps]");
    for (Index t = 0; t < steps; ++t) {
      input.frames[t].row(b).head(dv) = s.visual.row(t);
      if (audio_dim > 0) input.frames[t].row(b).tail(audio_dim) = s.audio.row(t);
    }
  }
  return input;
}

std::array<Index, 3> attention_indices(Index mask_len) {
  if (mask_len < 1) throw ShapeError("attention indices need mask_len >= 1");
  const auto ceil_div = [](Index a, Index b) { return (a + b - 1) / b; };
  return {ceil_div(mask_len, 3) - 1, ceil_div(2 * mask_len, 3) - 1, mask_len - 1};
}

Vec attention_pool(const Mat& outputs, Index mask_len) {
  if (mask_len > outputs.rows())
    throw ShapeError("attention_pool: mask_len exceeds output rows");
  const auto idx = attention_indices(mask_len);
  return ((outputs.row(idx[0]) + outputs.row(idx[1]) + outputs.row(idx[2])) / 3.0)
      .transpose();
}

Encoder::Encoder(const ModelSpec& spec, const ParamStore& params)
    : spec_(spec), params_(&params) {
  spec_.validate();
}

namespace {

// Builds the reversed view used by the backward direction: step j of the
// result is frame mask-1-j; steps at or beyond the mask are zero.
std::vector<Mat> reverse_within_mask(const std::vector<Mat>& xs,
                                     const std::vector<Index>& mask) {
  const auto steps = static_cast<Index>(xs.size());
  const Index batch = xs[0].rows();
  std::vector<Mat> rev(steps, Mat::Zero(batch, xs[0].cols()));
  for (Index b = 0; b < batch; ++b)
    for (Index j = 0; j < mask[b]; ++j) rev[j].row(b) = xs[mask[b] - 1 - j].row(b);
  return rev;
}

void zero_masked_rows(std::vector<Mat>& xs, const std::vector<Index>& mask) {
  for (Index b = 0; b < static_cast<Index>(mask.size()); ++b)
    for (Index t = mask[b]; t < static_cast<Index>(xs.size()); ++t)
      xs[t].row(b).setZero();
}

}  // namespace

Mat Encoder::forward(const BatchInput& input, EncoderTrace& trace) const {
  const Index steps = input.steps();
  const Index batch = input.batch();
  if (steps < 1) throw ShapeError("encode: need at least one step");
  for (Index m : input.mask)
    if (m < 1) throw ShapeError("encode: mask_len must be >= 1");

  if (spec_.encoder == EncoderKind::kMeanPool) {
    trace.layers.clear();
    trace.descriptors = Mat::Zero(batch, spec_.input_dim());
    for (Index b = 0; b < batch; ++b) {
      for (Index t = 0; t < input.mask[b]; ++t)
        trace.descriptors.row(b) += input.frames[t].row(b);
      trace.descriptors.row(b) /= static_cast<double>(input.mask[b]);
    }
    return trace.descriptors;
  }

  trace.layers.assign(spec_.layers, {});
  const std::vector<Mat>* cur = &input.frames;
  for (int l = 0; l < spec_.layers; ++l) {
    LayerTrace& lt = trace.layers[l];
    lt.inputs = *cur;
    const std::string base = "enc.l" + std::to_string(l);
    const Index width = spec_.layer_width(l);
    lt.outputs.assign(steps, Mat::Zero(batch, width));

    if (spec_.encoder == EncoderKind::kLateFusion && l == 0) {
      // Modality branches: one cell per stream, concatenated per step.
      std::vector<Mat> vis(steps), aud(steps);
      for (Index t = 0; t < steps; ++t) {
        vis[t] = lt.inputs[t].leftCols(spec_.visual_dim);
        aud[t] = lt.inputs[t].rightCols(spec_.audio_dim);
      }
      lt.fw = lstm_forward(vis, cell_params(*params_, base + ".vis"));
      lt.bw = lstm_forward(aud, cell_params(*params_, base + ".aud"));
      const Index hv = spec_.units[0];
      for (Index t = 0; t < steps; ++t) {
        lt.outputs[t].leftCols(hv) = lt.fw.h[t];
        lt.outputs[t].rightCols(hv) = lt.bw.h[t];
      }
    } else if (spec_.encoder == EncoderKind::kBiLstm) {
      lt.inputs_rev = reverse_within_mask(lt.inputs, input.mask);
      lt.fw = lstm_forward(lt.inputs, cell_params(*params_, base + ".fw"));
      lt.bw = lstm_forward(lt.inputs_rev, cell_params(*params_, base + ".bw"));
      const Index hf = spec_.units[l];
      const Index hb = spec_.backward_units(l);
      for (Index b = 0; b < batch; ++b) {
        const Index m = input.mask[b];
        for (Index t = 0; t < m; ++t) {
          lt.outputs[t].row(b).head(hf) = lt.fw.h[t].row(b);
          // Aligned: the backward state at step j saw frames m-1 .. m-1-j.
          lt.outputs[t].row(b).tail(hb) = lt.bw.h[m - 1 - t].row(b);
        }
      }
      cur = &lt.outputs;
      continue;
    } else {
      lt.fw = lstm_forward(lt.inputs, cell_params(*params_, base + ".fw"));
      for (Index t = 0; t < steps; ++t) lt.outputs[t] = lt.fw.h[t];
    }
    zero_masked_rows(lt.outputs, input.mask);
    cur = &lt.outputs;
  }

  // Pooling into the fixed-length descriptor.
  const LayerTrace& top = trace.layers.back();
  const Index d = spec_.descriptor_dim();
  trace.descriptors = Mat::Zero(batch, d);
  if (spec_.pooling == PoolingKind::kAttention3) {
    for (Index b = 0; b < batch; ++b) {
      const auto idx = attention_indices(input.mask[b]);
      trace.descriptors.row(b) = (top.outputs[idx[0]].row(b) +
                                  top.outputs[idx[1]].row(b) +
                                  top.outputs[idx[2]].row(b)) /
                                 3.0;
    }
  } else if (spec_.encoder == EncoderKind::kBiLstm) {
    // Concatenation of the final outputs of the two directions: the forward
    // state at mask-1 and the backward state aligned to frame 0.
    const Index hf = spec_.units[spec_.layers - 1];
    for (Index b = 0; b < batch; ++b) {
      const Index m = input.mask[b];
      trace.descriptors.row(b).head(hf) = top.fw.h[m - 1].row(b);
      trace.descriptors.row(b).tail(d - hf) = top.bw.h[m - 1].row(b);
    }
  } else {
    for (Index b = 0; b < batch; ++b)
      trace.descriptors.row(b) = top.outputs[input.mask[b] - 1].row(b);
  }
  return trace.descriptors;
}

void Encoder::backward(const BatchInput& input, const EncoderTrace& trace,
                       const Mat& ddescriptors, ParamStore& grads) const {
  const Index steps = input.steps();
  const Index batch = input.batch();
  if (spec_.encoder == EncoderKind::kMeanPool) return;  // no encoder parameters

  // Scatter the descriptor gradient into the top layer's aligned outputs. For
  // the bilstm "last" pooling the backward half maps to aligned frame 0.
  const Index top_width = spec_.layer_width(spec_.layers - 1);
  std::vector<Mat> dout(steps, Mat::Zero(batch, top_width));
  if (spec_.pooling == PoolingKind::kAttention3) {
    for (Index b = 0; b < batch; ++b) {
      const auto idx = attention_indices(input.mask[b]);
      for (Index j : idx) dout[j].row(b) += ddescriptors.row(b) / 3.0;
    }
  } else if (spec_.encoder == EncoderKind::kBiLstm) {
    const Index hf = spec_.units[spec_.layers - 1];
    for (Index b = 0; b < batch; ++b) {
      const Index m = input.mask[b];
      dout[m - 1].row(b).head(hf) += ddescriptors.row(b).head(hf);
      dout[0].row(b).tail(top_width - hf) += ddescriptors.row(b).tail(top_width - hf);
    }
  } else {
    for (Index b = 0; b < batch; ++b)
      dout[input.mask[b] - 1].row(b) += ddescriptors.row(b);
  }

  for (int l = spec_.layers - 1; l >= 0; --l) {
    const LayerTrace& lt = trace.layers[l];
    const std::string base = "enc.l" + std::to_string(l);
    zero_masked_rows(dout, input.mask);  // outputs beyond the mask are zeroed

    std::vector<Mat> din;
    if (spec_.encoder == EncoderKind::kLateFusion && l == 0) {
      const Index hv = spec_.units[0];
      std::vector<Mat> dvis(steps), daud(steps);
      for (Index t = 0; t < steps; ++t) {
        dvis[t] = dout[t].leftCols(hv);
        daud[t] = dout[t].rightCols(hv);
      }
      std::vector<Mat> vis(steps), aud(steps);
      for (Index t = 0; t < steps; ++t) {
        vis[t] = lt.inputs[t].leftCols(spec_.visual_dim);
        aud[t] = lt.inputs[t].rightCols(spec_.audio_dim);
      }
      auto gv = cell_grads(grads, base + ".vis");
      auto ga = cell_grads(grads, base + ".aud");
      lstm_backward(vis, lt.fw, dvis, cell_params(*params_, base + ".vis"), gv);
      lstm_backward(aud, lt.bw, daud, cell_params(*params_, base + ".aud"), ga);
      return;  // frame features have no parameters below them
    }

    if (spec_.encoder == EncoderKind::kBiLstm) {
      const Index hf = spec_.units[l];
      const Index hb = spec_.backward_units(l);
      std::vector<Mat> dfw(steps, Mat::Zero(batch, hf));
      std::vector<Mat> dbw(steps, Mat::Zero(batch, hb));
      for (Index b = 0; b < batch; ++b) {
        const Index m = input.mask[b];
        for (Index t = 0; t < m; ++t) {
          dfw[t].row(b) = dout[t].row(b).head(hf);
          dbw[m - 1 - t].row(b) = dout[t].row(b).tail(hb);
        }
      }
      auto gf = cell_grads(grads, base + ".fw");
      auto gb = cell_grads(grads, base + ".bw");
      std::vector<Mat> din_fw =
          lstm_backward(lt.inputs, lt.fw, dfw, cell_params(*params_, base + ".fw"), gf);
      std::vector<Mat> din_bw = lstm_backward(lt.inputs_rev, lt.bw, dbw,
                                              cell_params(*params_, base + ".bw"), gb);
      if (l == 0) return;
      din.assign(steps, Mat::Zero(batch, lt.inputs[0].cols()));
      for (Index b = 0; b < batch; ++b) {
        const Index m = input.mask[b];
        for (Index t = 0; t < steps; ++t) din[t].row(b) = din_fw[t].row(b);
        for (Index j = 0; j < m; ++j) din[m - 1 - j].row(b) += din_bw[j].row(b);
      }
    } else {
      auto g = cell_grads(grads, base + ".fw");
      din = lstm_backward(lt.inputs, lt.fw, dout, cell_params(*params_, base + ".fw"), g);
      if (l == 0) return;
    }
    dout = std::move(din);
  }
}

Mat Encoder::sequence_outputs(const EncoderTrace& trace, Index b) {
  const LayerTrace& top = trace.layers.back();
  const auto steps = static_cast<Index>(top.outputs.size());
  Mat out(steps, top.outputs[0].cols());
  for (Index t = 0; t < steps; ++t) out.row(t) = top.outputs[t].row(b);
  return out;
}

std::pair<Mat, Vec> encode_sequence(const ModelSpec& spec, const ParamStore& params,
                                    const FrameSequence& seq, Index mask_len) {
  if (mask_len < 1) throw ShapeError("encode_sequence: mask_len must be >= 1");
  Encoder enc(spec, params);
  BatchInput input = make_batch_input({&seq}, {mask_len}, spec.audio_dim);
  EncoderTrace trace;
  Mat desc = enc.forward(input, trace);
  Mat outputs;
  if (spec.encoder == EncoderKind::kMeanPool) {
    outputs = Mat::Zero(seq.frames(), spec.input_dim());
    for (Index t = 0; t < mask_len; ++t) outputs.row(t) = input.frames[t].row(0);
  } else {
    outputs = Encoder::sequence_outputs(trace, 0);
  }
  return {std::move(outputs), desc.row(0).transpose()};
}

}  // namespace seqcls
