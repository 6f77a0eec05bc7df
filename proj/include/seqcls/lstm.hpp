#pragma once

#include "seqcls/layer_norm.hpp"
#include "seqcls/params.hpp"
#include "seqcls/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace seqcls {

// Basic LSTM cell (no clipping, projection or peep-holes), gate order i|f|g|o
// along the 4H pre-activation axis:
//   i,f,o = sigmoid(affine), g = tanh(affine)
//   c' = f (*) c_prev + i (*) g,  h = o (*) tanh(c')
// The layer-normalized variant normalizes the input-to-hidden and
// hidden-to-hidden affine terms separately (per-gate statistics and
// gain/bias) before they are summed with the bias.

struct CellParamRefs {
  const Mat* Wx = nullptr;  // [in x 4H]
  const Mat* Wh = nullptr;  // [H x 4H]
  const Mat* b = nullptr;   // [1 x 4H]
  const Mat* lnx_gain = nullptr;
  const Mat* lnx_bias = nullptr;
  const Mat* lnh_gain = nullptr;
  const Mat* lnh_bias = nullptr;

  bool layer_norm() const { return lnx_gain != nullptr; }
  Index units() const { return Wh->rows(); }
  Index input_dim() const { return Wx->rows(); }
};

struct CellGradRefs {
  Mat* Wx = nullptr;
  Mat* Wh = nullptr;
  Mat* b = nullptr;
  Mat* lnx_gain = nullptr;
  Mat* lnx_bias = nullptr;
  Mat* lnh_gain = nullptr;
  Mat* lnh_bias = nullptr;
};

CellParamRefs cell_params(const ParamStore& store, const std::string& prefix);
CellGradRefs cell_grads(ParamStore& store, const std::string& prefix);

struct LstmStepCache {
  Mat i, f, g, o;  // gate activations [B x H]
  Mat c, tanh_c;   // cell state and its tanh [B x H]
  BlockNormCache lnx, lnh;
};

struct LstmTrace {
  std::vector<Mat> h;  // [steps][B x H]
  std::vector<LstmStepCache> steps;
  Index batch = 0;
  Index units = 0;
};

/// Runs the cell over xs[0..T); initial h and c are zero.
LstmTrace lstm_forward(const std::vector<Mat>& xs, const CellParamRefs& p);

/// Full backward-through-time sweep. dh_out[t] is the gradient injected into
/// h_t from outside the recurrence (empty matrix = zero). Parameter gradients
/// are accumulated into `g`; the return value is d(loss)/d(xs[t]).
std::vector<Mat> lstm_backward(const std::vector<Mat>& xs, const LstmTrace& trace,
                               const std::vector<Mat>& dh_out,
                               const CellParamRefs& p, CellGradRefs& g);

/// Single-step convenience used by tests and by the one-frame degenerate case.
std::pair<Vec, Vec> lstm_cell_step(const Vec& x, const Vec& h_prev,
                                   const Vec& c_prev, const CellParamRefs& p);

}  // namespace seqcls
