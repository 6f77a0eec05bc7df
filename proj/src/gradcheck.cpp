#include "seqcls/gradcheck.hpp"

#include "seqcls/loss.hpp"
#include "seqcls/model.hpp"

#include <algorithm>
#include <cmath>

namespace seqcls {

GradCheckReport check_gradients(const std::function<double(const ParamStore&)>& loss,
                                const ParamStore& params, const ParamStore& analytic,
                                int probe_count, double h, double tol, Rng& rng) {
  const double base = loss(params);
  if (loss(params) != base)
    throw std::runtime_error("check_gradients: closure is not deterministic");
  (void)base;

  // Flat coordinate space across all segments.
  std::vector<Index> offsets;
  Index total = 0;
  for (const auto& name : params.names()) {
    offsets.push_back(total);
    total += params.at(name).size();
  }

  const int probes = static_cast<int>(std::min<Index>(probe_count, total));
  std::vector<Index> coords;
  if (probes == total) {
    coords.resize(total);
    for (Index i = 0; i < total; ++i) coords[i] = i;
  } else {
    // Sample distinct coordinates.
    std::vector<Index> pool(total);
    for (Index i = 0; i < total; ++i) pool[i] = i;
    for (int i = 0; i < probes; ++i) {
      const auto j = static_cast<Index>(rng.below(total - i)) + i;
      std::swap(pool[i], pool[j]);
      coords.push_back(pool[i]);
    }
  }

  ParamStore work = params.zeros_like();
  for (const auto& name : params.names()) work.at(name) = params.at(name);

  GradCheckReport report;
  report.probes = probes;
  for (Index flat : coords) {
    // Locate (segment, coefficient).
    std::size_t seg = offsets.size() - 1;
    while (offsets[seg] > flat) --seg;
    const std::string& name = params.names()[seg];
    const Index idx = flat - offsets[seg];

    double* cell = work.at(name).data() + idx;
    const double saved = *cell;
    *cell = saved + h;
    const double up = loss(work);
    *cell = saved - h;
    const double down = loss(work);
    *cell = saved;

    const double numeric = (up - down) / (2.0 * h);
    const double analytic_v = *(analytic.at(name).data() + idx);
    const double err = std::abs(analytic_v - numeric) /
                       std::max(1.0, std::abs(analytic_v) + std::abs(numeric));
    if (err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_segment = name;
      report.worst_index = idx;
    }
  }
  report.pass = report.max_rel_error < tol;
  return report;
}

namespace {

struct Problem {
  ModelSpec spec;
  std::vector<FrameSequence> seqs;
  std::vector<Index> mask;
  Mat targets;
};

Problem make_problem(const ModelSpec& spec, Rng& rng) {
  Problem p;
  p.spec = spec;
  const Index steps = 5;
  const Index batch = 2;
  p.mask = {steps, 3};
  for (Index b = 0; b < batch; ++b) {
    FrameSequence s;
    s.id = "probe" + std::to_string(b);
    s.visual.resize(steps, spec.visual_dim);
    s.audio.resize(steps, spec.audio_dim);
    for (Index t = 0; t < steps; ++t) {
      for (Index d = 0; d < spec.visual_dim; ++d) s.visual(t, d) = rng.normal();
      for (Index d = 0; d < spec.audio_dim; ++d) s.audio(t, d) = rng.normal();
    }
    p.seqs.push_back(std::move(s));
  }
  p.targets.resize(batch, spec.vocab);
  for (Index b = 0; b < batch; ++b)
    for (Index k = 0; k < spec.vocab; ++k)
      p.targets(b, k) = rng.uniform() < 0.35 ? 1.0 : 0.0;
  return p;
}

double problem_loss(const Problem& p, const ParamStore& params) {
  Model model(p.spec, params);
  std::vector<const FrameSequence*> ptrs;
  for (const auto& s : p.seqs) ptrs.push_back(&s);
  BatchInput input = make_batch_input(ptrs, p.mask, p.spec.audio_dim);
  ModelForward fwd = model.forward(input);
  return bce_loss_batch(fwd.confidences, p.targets, 0.0).first;
}

ParamStore problem_grads(const Problem& p, const ParamStore& params) {
  Model model(p.spec, params);
  std::vector<const FrameSequence*> ptrs;
  for (const auto& s : p.seqs) ptrs.push_back(&s);
  BatchInput input = make_batch_input(ptrs, p.mask, p.spec.audio_dim);
  ModelForward fwd = model.forward(input);
  auto [loss, dconf] = bce_loss_batch(fwd.confidences, p.targets, 0.0);
  (void)loss;
  ParamStore grads = params.zeros_like();
  model.backward(input, fwd, dconf, grads);
  return grads;
}

ModelSpec preset_spec(const std::string& name) {
  ModelSpec s;
  s.vocab = 7;
  s.visual_dim = 5;
  s.audio_dim = 3;
  s.layers = 2;
  s.units = {4, 4};
  s.pooling = PoolingKind::kLast;
  if (name == "lstm_lr") {
    s.encoder = EncoderKind::kLstm;
    s.head = HeadKind::kLr;
  } else if (name == "lstm_moe") {
    s.encoder = EncoderKind::kLstm;
    s.head = HeadKind::kMoe;
    s.experts = 2;
  } else if (name == "ln_lstm_lr") {
    s.encoder = EncoderKind::kLnLstm;
    s.head = HeadKind::kLr;
  } else if (name == "bilstm_moe") {
    s.encoder = EncoderKind::kBiLstm;
    s.units = {3, 3};
    s.units_bw = {3, 2};
    s.head = HeadKind::kMoe;
    s.experts = 2;
  } else if (name == "bilstm_moe_attention") {
    s.encoder = EncoderKind::kBiLstm;
    s.units = {3, 3};
    s.units_bw = {3, 2};
    s.head = HeadKind::kMoe;
    s.experts = 2;
    s.pooling = PoolingKind::kAttention3;
  } else if (name == "late_fusion_lr") {
    s.encoder = EncoderKind::kLateFusion;
    s.units = {4, 4};
    s.head = HeadKind::kLr;
  } else {
    throw ConfigError("unknown architecture preset '" + name + "'");
  }
  return s;
}

}  // namespace

std::vector<ArchitectureCheck> run_architecture_gradchecks(std::uint64_t seed,
                                                           int probe_count,
                                                           double h, double tol) {
  const std::vector<std::string> presets = {
      "lstm_lr",     "lstm_moe",             "ln_lstm_lr",
      "bilstm_moe",  "bilstm_moe_attention", "late_fusion_lr"};
  std::vector<ArchitectureCheck> out;
  for (std::size_t i = 0; i < presets.size(); ++i) {
    Rng rng(splitmix64(seed + i));
    const ModelSpec spec = preset_spec(presets[i]);
    Problem p = make_problem(spec, rng);
    Rng init_rng = rng.fork(1);
    ParamStore params = init_params(spec, init_rng);
    ParamStore analytic = problem_grads(p, params);
    auto loss = [&p](const ParamStore& theta) { return problem_loss(p, theta); };
    Rng probe_rng = rng.fork(2);
    out.push_back({presets[i], check_gradients(loss, params, analytic, probe_count,
                                               h, tol, probe_rng)});
  }
  return out;
}

}  // namespace seqcls
