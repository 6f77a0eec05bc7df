#pragma once

#include "seqcls/rng.hpp"
#include "seqcls/types.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace seqcls {

enum class EncoderKind { kLstm, kLnLstm, kBiLstm, kLateFusion, kMeanPool };
enum class PoolingKind { kLast, kAttention3 };
enum class HeadKind { kLr, kMoe };

std::string to_string(EncoderKind k);
std::string to_string(PoolingKind k);
std::string to_string(HeadKind k);
EncoderKind encoder_kind_from_string(const std::string& s);
PoolingKind pooling_kind_from_string(const std::string& s);
HeadKind head_kind_from_string(const std::string& s);

/// Architecture descriptor. `units` are forward-direction widths per layer;
/// `units_bw` applies to the backward direction of a bilstm (empty = same as
/// forward). audio_dim = 0 selects the visual-only input mode.
struct ModelSpec {
  EncoderKind encoder = EncoderKind::kLstm;
  int layers = 1;
  std::vector<int> units;
  std::vector<int> units_bw;
  PoolingKind pooling = PoolingKind::kLast;
  HeadKind head = HeadKind::kLr;
  int experts = 1;
  int vocab = 1;
  int visual_dim = 1;
  int audio_dim = 0;

  int input_dim() const { return visual_dim + audio_dim; }
  int backward_units(int layer) const {
    return units_bw.empty() ? units[layer] : units_bw[layer];
  }
  /// Output width of encoder layer `layer` (concatenated directions).
  int layer_width(int layer) const;
  /// Width of the video descriptor consumed by the classifier head.
  int descriptor_dim() const;

  void validate() const;
  bool operator==(const ModelSpec& o) const;
};

struct SegmentInit {
  enum Kind { kUniformFanIn, kZeros, kOnes } kind = kUniformFanIn;
  int fan_in = 1;
  bool forget_bias_one = false;  // overwrite the forget-gate block with 1.0
  int gate_width = 0;            // block width when forget_bias_one is set
};

struct SegmentDef {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  SegmentInit init;
};

/// Named parameter segments in a deterministic canonical order.
class ParamStore {
 public:
  void add(const std::string& name, Mat value);
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  Mat& at(const std::string& name);
  const Mat& at(const std::string& name) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  Index coefficient_count() const;

  /// Store with identical segment names/shapes, all zero. Used for gradients
  /// and optimizer moments.
  ParamStore zeros_like() const;

  bool all_finite() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Mat> values_;
};

/// The exact segment list (names, shapes, init rules) a spec requires.
std::vector<SegmentDef> required_segments(const ModelSpec& spec);

/// Freshly initialized parameters; weights are uniform in
/// [-1/sqrt(fan_in), +1/sqrt(fan_in)], forget-gate biases start at 1.0,
/// layer-norm gains at 1 and shifts at 0.
ParamStore init_params(const ModelSpec& spec, Rng& rng);

/// Model spec plus a flat parameter store with named segments.
struct Checkpoint {
  ModelSpec spec;
  ParamStore params;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
};

/// Binary container: a JSON header (spec, step, seed, segment table) followed
/// by the raw little-endian 64-bit segments in table order. Loading and
/// re-saving reproduces the file byte for byte.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace seqcls
