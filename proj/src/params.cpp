#include "seqcls/params.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

namespace seqcls {

using ordered_json = nlohmann::ordered_json;

std::string to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::kLstm: return "lstm";
    case EncoderKind::kLnLstm: return "ln_lstm";
    case EncoderKind::kBiLstm: return "bilstm";
    case EncoderKind::kLateFusion: return "late_fusion";
    case EncoderKind::kMeanPool: return "mean_pool";
  }
  return "?";
}

std::string to_string(PoolingKind k) {
  return k == PoolingKind::kLast ? "last" : "attention3";
}

std::string to_string(HeadKind k) { return k == HeadKind::kLr ? "lr" : "moe"; }

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "lstm") return EncoderKind::kLstm;
  if (s == "ln_lstm") return EncoderKind::kLnLstm;
  if (s == "bilstm") return EncoderKind::kBiLstm;
  if (s == "late_fusion") return EncoderKind::kLateFusion;
  if (s == "mean_pool") return EncoderKind::kMeanPool;
  throw ConfigError("unknown encoder kind '" + s + "'");
}

PoolingKind pooling_kind_from_string(const std::string& s) {
  if (s == "last") return PoolingKind::kLast;
  if (s == "attention3") return PoolingKind::kAttention3;
  throw ConfigError("unknown pooling kind '" + s + "'");
}

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "lr") return HeadKind::kLr;
  if (s == "moe") return HeadKind::kMoe;
  throw ConfigError("unknown head kind '" + s + "'");
}

int ModelSpec::layer_width(int layer) const {
  switch (encoder) {
    case EncoderKind::kBiLstm:
      return units[layer] + backward_units(layer);
    case EncoderKind::kLateFusion:
      // Layer 0 is the pair of modality branches, each `units[0]` wide.
      return layer == 0 ? 2 * units[0] : units[layer];
    default:
      return units[layer];
  }
}

int ModelSpec::descriptor_dim() const {
  if (encoder == EncoderKind::kMeanPool) return input_dim();
  return layer_width(layers - 1);
}

void ModelSpec::validate() const {
  if (layers < 1) throw ConfigError("model: layers must be >= 1");
  if (vocab < 1 || visual_dim < 1 || audio_dim < 0)
    throw ConfigError("model: vocab and visual_dim must be >= 1, audio_dim >= 0");
  if (head == HeadKind::kMoe && experts < 1)
    throw ConfigError("model: experts must be >= 1 for a moe head");
  if (encoder == EncoderKind::kMeanPool) return;
  if (static_cast<int>(units.size()) != layers)
    throw ConfigError("model: units must list one width per layer");
  for (int u : units)
    if (u < 1) throw ConfigError("model: layer widths must be >= 1");
  if (!units_bw.empty()) {
    if (encoder != EncoderKind::kBiLstm)
      throw ConfigError("model: units_bw only applies to bilstm");
    if (static_cast<int>(units_bw.size()) != layers)
      throw ConfigError("model: units_bw must list one width per layer");
    for (int u : units_bw)
      if (u < 1) throw ConfigError("model: layer widths must be >= 1");
  }
  if (encoder == EncoderKind::kLnLstm)
    for (int u : units)
      if (u < 2) throw ConfigError("model: ln_lstm needs >= 2 units per layer");
  if (encoder == EncoderKind::kLateFusion) {
    if (layers < 2)
      throw ConfigError("model: late_fusion needs at least 2 layers");
    if (audio_dim < 1)
      throw ConfigError("model: late_fusion needs an audio stream");
  }
}

bool ModelSpec::operator==(const ModelSpec& o) const {
  return encoder == o.encoder && layers == o.layers && units == o.units &&
         units_bw == o.units_bw && pooling == o.pooling && head == o.head &&
         experts == o.experts && vocab == o.vocab &&
         visual_dim == o.visual_dim && audio_dim == o.audio_dim;
}

void ParamStore::add(const std::string& name, Mat value) {
  if (index_.count(name))
    throw ConfigError("duplicate parameter segment '" + name + "'");
  index_[name] = names_.size();
  names_.push_back(name);
  values_.push_back(std::move(value));
}

Mat& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end())
    throw ConfigError("missing parameter segment '" + name + "'");
  return values_[it->second];
}

const Mat& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw ConfigError("missing parameter segment '" + name + "'");
  return values_[it->second];
}

Index ParamStore::coefficient_count() const {
  Index n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

ParamStore ParamStore::zeros_like() const {
  ParamStore out;
  for (std::size_t i = 0; i < names_.size(); ++i)
    out.add(names_[i], Mat::Zero(values_[i].rows(), values_[i].cols()));
  return out;
}

bool ParamStore::all_finite() const {
  for (const auto& v : values_)
    if (!v.allFinite()) return false;
  return true;
}

namespace {

void add_cell_segments(std::vector<SegmentDef>& out, const std::string& prefix,
                       int in_dim, int units, bool layer_norm) {
  const int gates = 4 * units;
  out.push_back({prefix + ".Wx", in_dim, gates, {SegmentInit::kUniformFanIn, in_dim}});
  out.push_back({prefix + ".Wh", units, gates, {SegmentInit::kUniformFanIn, units}});
  out.push_back({prefix + ".b", 1, gates,
                 {SegmentInit::kUniformFanIn, in_dim + units, true, units}});
  if (layer_norm) {
    out.push_back({prefix + ".lnx.gain", 1, gates, {SegmentInit::kOnes}});
    out.push_back({prefix + ".lnx.bias", 1, gates, {SegmentInit::kZeros}});
    out.push_back({prefix + ".lnh.gain", 1, gates, {SegmentInit::kOnes}});
    out.push_back({prefix + ".lnh.bias", 1, gates, {SegmentInit::kZeros}});
  }
}

}  // namespace

std::vector<SegmentDef> required_segments(const ModelSpec& spec) {
  spec.validate();
  std::vector<SegmentDef> out;
  const bool ln = spec.encoder == EncoderKind::kLnLstm;
  if (spec.encoder != EncoderKind::kMeanPool) {
    for (int l = 0; l < spec.layers; ++l) {
      const std::string base = "enc.l" + std::to_string(l);
      const int in_dim = l == 0 ? spec.input_dim() : spec.layer_width(l - 1);
      if (spec.encoder == EncoderKind::kLateFusion && l == 0) {
        add_cell_segments(out, base + ".vis", spec.visual_dim, spec.units[0], false);
        add_cell_segments(out, base + ".aud", spec.audio_dim, spec.units[0], false);
      } else if (spec.encoder == EncoderKind::kBiLstm) {
        add_cell_segments(out, base + ".fw", in_dim, spec.units[l], false);
        add_cell_segments(out, base + ".bw", in_dim, spec.backward_units(l), false);
      } else {
        add_cell_segments(out, base + ".fw", in_dim, spec.units[l], ln);
      }
    }
  }
  const int d = spec.descriptor_dim();
  if (spec.head == HeadKind::kLr) {
    out.push_back({"head.lr.W", d, spec.vocab, {SegmentInit::kUniformFanIn, d}});
    out.push_back({"head.lr.b", 1, spec.vocab, {SegmentInit::kUniformFanIn, d}});
  } else {
    const Index cols = static_cast<Index>(spec.vocab) * spec.experts;
    out.push_back({"head.moe.gate.W", d, cols, {SegmentInit::kUniformFanIn, d}});
    out.push_back({"head.moe.gate.b", 1, cols, {SegmentInit::kUniformFanIn, d}});
    out.push_back({"head.moe.expert.W", d, cols, {SegmentInit::kUniformFanIn, d}});
    out.push_back({"head.moe.expert.b", 1, cols, {SegmentInit::kUniformFanIn, d}});
  }
  return out;
}

ParamStore init_params(const ModelSpec& spec, Rng& rng) {
  ParamStore store;
  for (const auto& def : required_segments(spec)) {
    Mat m(def.rows, def.cols);
    switch (def.init.kind) {
      case SegmentInit::kZeros:
        m.setZero();
        break;
      case SegmentInit::kOnes:
        m.setOnes();
        break;
      case SegmentInit::kUniformFanIn: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(def.init.fan_in));
        for (Index r = 0; r < m.rows(); ++r)
          for (Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
        break;
      }
    }
    if (def.init.forget_bias_one) {
      const int h = def.init.gate_width;
      m.block(0, h, 1, h).setConstant(1.0);  // gate order is i|f|g|o
    }
    store.add(def.name, std::move(m));
  }
  return store;
}

namespace {

ordered_json spec_to_json(const ModelSpec& spec) {
  ordered_json j;
  j["kind"] = to_string(spec.encoder);
  j["layers"] = spec.layers;
  j["units"] = spec.units;
  if (!spec.units_bw.empty()) j["units_bw"] = spec.units_bw;
  j["pooling"] = to_string(spec.pooling);
  j["head"] = to_string(spec.head);
  j["experts"] = spec.experts;
  j["vocab"] = spec.vocab;
  j["visual_dim"] = spec.visual_dim;
  j["audio_dim"] = spec.audio_dim;
  return j;
}

ModelSpec spec_from_json(const ordered_json& j) {
  ModelSpec spec;
  spec.encoder = encoder_kind_from_string(j.at("kind").get<std::string>());
  spec.layers = j.at("layers").get<int>();
  spec.units = j.at("units").get<std::vector<int>>();
  if (j.contains("units_bw")) spec.units_bw = j.at("units_bw").get<std::vector<int>>();
  spec.pooling = pooling_kind_from_string(j.at("pooling").get<std::string>());
  spec.head = head_kind_from_string(j.at("head").get<std::string>());
  spec.experts = j.at("experts").get<int>();
  spec.vocab = j.at("vocab").get<int>();
  spec.visual_dim = j.at("visual_dim").get<int>();
  spec.audio_dim = j.at("audio_dim").get<int>();
  return spec;
}

constexpr char kCheckpointMagic[8] = {'S', 'E', 'Q', 'C', 'K', 'P', 'T', '1'};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  ckpt.spec.validate();
  ordered_json header;
  header["model"] = spec_to_json(ckpt.spec);
  header["step"] = ckpt.step;
  header["seed"] = ckpt.seed;
  ordered_json segs = ordered_json::array();
  for (const auto& name : ckpt.params.names()) {
    const Mat& m = ckpt.params.at(name);
    segs.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  }
  header["segments"] = std::move(segs);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& name : ckpt.params.names()) {
    const Mat& m = ckpt.params.at(name);  // row-major, doubles are LE on all targets here
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
  }
  if (!out) throw FormatError("short write to '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw FormatError("'" + path + "' is not a checkpoint (bad magic)");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in) throw FormatError("truncated checkpoint header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw FormatError("truncated checkpoint header");

  ordered_json header = ordered_json::parse(text, nullptr, false);
  if (header.is_discarded())
    throw FormatError("checkpoint header is not valid JSON");

  Checkpoint ckpt;
  ckpt.spec = spec_from_json(header.at("model"));
  ckpt.step = header.at("step").get<std::uint64_t>();
  ckpt.seed = header.at("seed").get<std::uint64_t>();
  for (const auto& seg : header.at("segments")) {
    const auto name = seg.at("name").get<std::string>();
    const auto rows = seg.at("rows").get<Index>();
    const auto cols = seg.at("cols").get<Index>();
    if (rows < 1 || cols < 1)
      throw FormatError("checkpoint segment '" + name + "' has empty shape");
    Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in)
      throw FormatError("checkpoint truncated inside segment '" + name + "'");
    ckpt.params.add(name, std::move(m));
  }

  // Every segment the spec dictates must be present with the exact shape.
  const auto defs = required_segments(ckpt.spec);
  if (defs.size() != ckpt.params.size())
    throw FormatError("checkpoint has " + std::to_string(ckpt.params.size()) +
                      " segments, spec requires " + std::to_string(defs.size()));
  for (const auto& def : defs) {
    if (!ckpt.params.has(def.name))
      throw FormatError("checkpoint is missing segment '" + def.name + "'");
    const Mat& m = ckpt.params.at(def.name);
    if (m.rows() != def.rows || m.cols() != def.cols)
      throw FormatError("checkpoint segment '" + def.name + "' has shape " +
                        shape_str(m) + ", spec requires " +
                        std::to_string(def.rows) + "x" + std::to_string(def.cols));
  }
  return ckpt;
}

}  // namespace seqcls
