#include "seqcls/lstm.hpp"

#include "seqcls/ops.hpp"

namespace seqcls {

CellParamRefs cell_params(const ParamStore& store, const std::string& prefix) {
  CellParamRefs p;
  p.Wx = &store.at(prefix + ".Wx");
  p.Wh = &store.at(prefix + ".Wh");
  p.b = &store.at(prefix + ".b");
  if (store.has(prefix + ".lnx.gain")) {
    p.lnx_gain = &store.at(prefix + ".lnx.gain");
    p.lnx_bias = &store.at(prefix + ".lnx.bias");
    p.lnh_gain = &store.at(prefix + ".lnh.gain");
    p.lnh_bias = &store.at(prefix + ".lnh.bias");
  }
  return p;
}

CellGradRefs cell_grads(ParamStore& store, const std::string& prefix) {
  CellGradRefs g;
  g.Wx = &store.at(prefix + ".Wx");
  g.Wh = &store.at(prefix + ".Wh");
  g.b = &store.at(prefix + ".b");
  if (store.has(prefix + ".lnx.gain")) {
    g.lnx_gain = &store.at(prefix + ".lnx.gain");
    g.lnx_bias = &store.at(prefix + ".lnx.bias");
    g.lnh_gain = &store.at(prefix + ".lnh.gain");
    g.lnh_bias = &store.at(prefix + ".lnh.bias");
  }
  return g;
}

namespace {

// One batched step. h_prev/c_prev are [B x H]; emits h into trace.h[t].
void step_forward(const Mat& x, const Mat& h_prev, const Mat& c_prev,
                  const CellParamRefs& p, LstmStepCache& cache, Mat& h_out) {
  const Index hdim = p.units();
  Mat pre;
  if (p.layer_norm()) {
    const Mat ax = x * (*p.Wx);
    const Mat ah = h_prev * (*p.Wh);
    pre = block_layer_norm(ax, p.lnx_gain->row(0), p.lnx_bias->row(0), 4, cache.lnx) +
          block_layer_norm(ah, p.lnh_gain->row(0), p.lnh_bias->row(0), 4, cache.lnh);
  } else {
    pre.noalias() = x * (*p.Wx);
    pre.noalias() += h_prev * (*p.Wh);
  }
  pre.rowwise() += p.b->row(0);

  cache.i = ops::sigmoid(pre.leftCols(hdim));
  cache.f = ops::sigmoid(pre.middleCols(hdim, hdim));
  cache.g = ops::tanh(pre.middleCols(2 * hdim, hdim));
  cache.o = ops::sigmoid(pre.rightCols(hdim));
  cache.c = cache.f.cwiseProduct(c_prev) + cache.i.cwiseProduct(cache.g);
  cache.tanh_c = ops::tanh(cache.c);
  h_out = cache.o.cwiseProduct(cache.tanh_c);
}

}  // namespace

LstmTrace lstm_forward(const std::vector<Mat>& xs, const CellParamRefs& p) {
  LstmTrace trace;
  const auto steps = static_cast<Index>(xs.size());
  if (steps == 0) throw ShapeError("lstm_forward: empty step sequence");
  trace.batch = xs[0].rows();
  trace.units = p.units();
  trace.h.resize(steps);
  trace.steps.resize(steps);
  Mat h_prev = Mat::Zero(trace.batch, trace.units);
  Mat c_prev = Mat::Zero(trace.batch, trace.units);
  for (Index t = 0; t < steps; ++t) {
    if (xs[t].cols() != p.input_dim())
      throw ShapeError("lstm_forward: input " + shape_str(xs[t]) +
                       " does not match Wx " + shape_str(*p.Wx));
    step_forward(xs[t], h_prev, c_prev, p, trace.steps[t], trace.h[t]);
    h_prev = trace.h[t];
    c_prev = trace.steps[t].c;
  }
  return trace;
}

std::vector<Mat> lstm_backward(const std::vector<Mat>& xs, const LstmTrace& trace,
                               const std::vector<Mat>& dh_out,
                               const CellParamRefs& p, CellGradRefs& g) {
  const auto steps = static_cast<Index>(xs.size());
  const Index hdim = trace.units;
  const Index batch = trace.batch;
  std::vector<Mat> dxs(steps);

  Mat dh = Mat::Zero(batch, hdim);  // gradient flowing through the recurrence
  Mat dc = Mat::Zero(batch, hdim);
  Mat dpre(batch, 4 * hdim);
  const Mat zero_state = Mat::Zero(batch, hdim);
  for (Index t = steps - 1; t >= 0; --t) {
    const auto& st = trace.steps[t];
    if (t < static_cast<Index>(dh_out.size()) && dh_out[t].size() > 0)
      dh += dh_out[t];

    const Mat dtanh_c = dh.cwiseProduct(st.o);
    dc += (dtanh_c.array() * (1.0 - st.tanh_c.array().square())).matrix();
    const Mat do_ = dh.cwiseProduct(st.tanh_c);
    const Mat di = dc.cwiseProduct(st.g);
    const Mat dg = dc.cwiseProduct(st.i);
    const Mat& c_prev_mat = t == 0 ? zero_state : trace.steps[t - 1].c;
    const Mat df = dc.cwiseProduct(c_prev_mat);

    dpre.leftCols(hdim) = (di.array() * st.i.array() * (1.0 - st.i.array())).matrix();
    dpre.middleCols(hdim, hdim) = (df.array() * st.f.array() * (1.0 - st.f.array())).matrix();
    dpre.middleCols(2 * hdim, hdim) = (dg.array() * (1.0 - st.g.array().square())).matrix();
    dpre.rightCols(hdim) = (do_.array() * st.o.array() * (1.0 - st.o.array())).matrix();

    g.b->row(0) += dpre.colwise().sum();
    const Mat& h_prev_mat = t == 0 ? zero_state : trace.h[t - 1];
    if (p.layer_norm()) {
      const Mat dax = block_layer_norm_backward(dpre, p.lnx_gain->row(0), trace.steps[t].lnx,
                                                4, *g.lnx_gain, *g.lnx_bias);
      const Mat dah = block_layer_norm_backward(dpre, p.lnh_gain->row(0), trace.steps[t].lnh,
                                                4, *g.lnh_gain, *g.lnh_bias);
      g.Wx->noalias() += xs[t].transpose() * dax;
      g.Wh->noalias() += h_prev_mat.transpose() * dah;
      dxs[t].noalias() = dax * p.Wx->transpose();
      dh.noalias() = dah * p.Wh->transpose();
    } else {
      g.Wx->noalias() += xs[t].transpose() * dpre;
      g.Wh->noalias() += h_prev_mat.transpose() * dpre;
      dxs[t].noalias() = dpre * p.Wx->transpose();
      dh.noalias() = dpre * p.Wh->transpose();
    }
    dc = dc.cwiseProduct(st.f);
  }
  return dxs;
}

std::pair<Vec, Vec> lstm_cell_step(const Vec& x, const Vec& h_prev,
                                   const Vec& c_prev, const CellParamRefs& p) {
  LstmStepCache cache;
  Mat h_out;
  step_forward(x.transpose(), h_prev.transpose(), c_prev.transpose(), p, cache, h_out);
  return {h_out.row(0).transpose(), cache.c.row(0).transpose()};
}

}  // namespace seqcls
