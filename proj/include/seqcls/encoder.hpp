#pragma once

#include "seqcls/lstm.hpp"
#include "seqcls/params.hpp"
#include "seqcls/types.hpp"

#include <array>
#include <vector>

namespace seqcls {

// Step-major batch of cropped sequences. All sequences are padded to the same
// step count; `mask[b]` is the number of valid leading steps of sequence b.
// Padded frames repeat the last valid frame, so layer outputs are masked to
// zero beyond the valid range and the descriptor never depends on padding.
struct BatchInput {
  std::vector<Mat> frames;  // [steps][B x (Dv+Da)] visual columns first
  std::vector<Index> mask;  // valid step count per sequence, all >= 1
  Index visual_dim = 0;
  Index audio_dim = 0;

  Index steps() const { return static_cast<Index>(frames.size()); }
  Index batch() const { return frames.empty() ? 0 : frames[0].rows(); }
};

/// Packs cropped sequences (all with the same frame count) into a BatchInput.
/// When `audio_dim` of the spec is 0 the audio columns are dropped.
BatchInput make_batch_input(const std::vector<const FrameSequence*>& seqs,
                            const std::vector<Index>& mask, Index audio_dim);

struct LayerTrace {
  std::vector<Mat> inputs;      // natural-order inputs fed to this layer
  std::vector<Mat> inputs_rev;  // per-sequence reversed inputs (2nd direction)
  LstmTrace fw, bw;             // bw doubles as the audio branch in late fusion
  std::vector<Mat> outputs;     // aligned, masked, concatenated directions
};

struct EncoderTrace {
  std::vector<LayerTrace> layers;
  Mat outputs_descriptor_grad;  // scratch used by pooling backward
  Mat descriptors;              // [B x D]
};

class Encoder {
 public:
  Encoder(const ModelSpec& spec, const ParamStore& params);

  /// Runs the stack and pooling; `trace` keeps everything backward needs.
  /// The returned matrix is the descriptors [B x D].
  Mat forward(const BatchInput& input, EncoderTrace& trace) const;

  /// Accumulates parameter gradients for d(loss)/d(descriptors).
  void backward(const BatchInput& input, const EncoderTrace& trace,
                const Mat& ddescriptors, ParamStore& grads) const;

  /// Aligned, masked outputs of the top layer, one [steps x width] matrix per
  /// sequence; rows at or beyond mask_len are zero.
  static Mat sequence_outputs(const EncoderTrace& trace, Index b);

  const ModelSpec& spec() const { return spec_; }

 private:
  ModelSpec spec_;
  const ParamStore* params_;
};

/// The three attention indices for a valid length L: ceil(L/3)-1,
/// ceil(2L/3)-1 and L-1 (0-based; duplicates allowed for L < 3).
std::array<Index, 3> attention_indices(Index mask_len);

/// Mean of the three attended output rows. `outputs` is [steps x D].
Vec attention_pool(const Mat& outputs, Index mask_len);

/// Single-sequence convenience wrapper: encodes one cropped sequence and
/// returns (aligned outputs [steps x D], descriptor).
std::pair<Mat, Vec> encode_sequence(const ModelSpec& spec, const ParamStore& params,
                                    const FrameSequence& seq, Index mask_len);

}  // namespace seqcls
