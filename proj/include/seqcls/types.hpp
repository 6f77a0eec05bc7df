#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqcls {

// All numerics are 64-bit; feature rows are contiguous (row-major) so a frame
// maps to a memory span.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Index = Eigen::Index;

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

/// Sparse ascending label indices over a vocabulary of size K.
struct LabelSet {
  std::vector<std::uint32_t> indices;

  bool contains(std::uint32_t label) const {
    return std::binary_search(indices.begin(), indices.end(), label);
  }
  std::size_t size() const { return indices.size(); }

  // Enforces strict ascending order and the vocabulary bound.
  void validate(std::uint32_t vocab) const {
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] >= vocab)
        throw FormatError("label " + std::to_string(indices[i]) +
                          " out of vocabulary range " + std::to_string(vocab));
      if (i > 0 && indices[i] <= indices[i - 1])
        throw FormatError("label indices not strictly ascending");
    }
  }

  bool operator==(const LabelSet& o) const { return indices == o.indices; }
};

/// One video: true length T with per-frame visual and audio feature rows.
struct FrameSequence {
  std::string id;
  Mat visual;  // [T x Dv]
  Mat audio;   // [T x Da], Da may be 0 for visual-only corpora

  Index frames() const { return visual.rows(); }
  Index visual_dim() const { return visual.cols(); }
  Index audio_dim() const { return audio.cols(); }
};

}  // namespace seqcls
