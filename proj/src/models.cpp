#include "lnf/models.hpp"

#include <algorithm>
#include <sstream>

namespace lnf::models {

namespace {

int conv_out_len(int len, int k, int s, int p) {
  int out = (len + 2 * p - k) / s + 1;
  if (len + 2 * p - k < 0 || out < 1) {
    throw ConfigError("encoder reduces a spatial axis below 1");
  }
  return out;
}

// 1-D boundary encoder: conv(1->C, k9, s1, p4) + 3x conv(C->C, k9, s2, p4)
int enc1d_out_len(int len) {
  int l = conv_out_len(len, 9, 1, 4);
  for (int i = 0; i < 3; ++i) l = conv_out_len(l, 9, 2, 4);
  return l;
}

// 2-D field encoder: conv(1->C2, k3, p1) x4, strides (2,2,2,1), pool to 8x8
std::pair<int, int> enc2d_out_hw(int h, int w) {
  for (int i = 0; i < 3; ++i) {
    h = conv_out_len(h, 3, 2, 1);
    w = conv_out_len(w, 3, 2, 1);
  }
  h = conv_out_len(h, 3, 1, 1);
  w = conv_out_len(w, 3, 1, 1);
  return {h, w};
}

constexpr int kPool = 8;

}  // namespace

Preset parse_preset(const std::string& s) {
  if (s == "A" || s == "a") return Preset::A;
  if (s == "B" || s == "b") return Preset::B;
  if (s == "C" || s == "c") return Preset::C;
  if (s == "D" || s == "d") return Preset::D;
  if (s == "E" || s == "e") return Preset::E;
  if (s == "siso") return Preset::Siso;
  if (s == "miso") return Preset::Miso;
  if (s == "mimo") return Preset::Mimo;
  throw ConfigError("unknown preset: " + s);
}

std::string to_string(Preset p) {
  switch (p) {
    case Preset::A: return "A";
    case Preset::B: return "B";
    case Preset::C: return "C";
    case Preset::D: return "D";
    case Preset::E: return "E";
    case Preset::Siso: return "siso";
    case Preset::Miso: return "miso";
    case Preset::Mimo: return "mimo";
  }
  return "?";
}

Ablation parse_ablation(const std::string& s) {
  if (s == "full") return Ablation::Full;
  if (s == "only_nonlinear") return Ablation::OnlyNonlinear;
  if (s == "only_linear") return Ablation::OnlyLinear;
  if (s == "no_encoder") return Ablation::NoEncoder;
  if (s == "no_decoder") return Ablation::NoDecoder;
  if (s == "no_enc_dec") return Ablation::NoEncDec;
  if (s == "pure_nonlinear_mlp") return Ablation::PureNonlinearMlp;
  if (s == "pure_linear_mlp") return Ablation::PureLinearMlp;
  throw ConfigError("unknown ablation: " + s);
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::OnlyNonlinear: return "only_nonlinear";
    case Ablation::OnlyLinear: return "only_linear";
    case Ablation::NoEncoder: return "no_encoder";
    case Ablation::NoDecoder: return "no_decoder";
    case Ablation::NoEncDec: return "no_enc_dec";
    case Ablation::PureNonlinearMlp: return "pure_nonlinear_mlp";
    case Ablation::PureLinearMlp: return "pure_linear_mlp";
  }
  return "?";
}

Kind parse_kind(const std::string& s) {
  if (s == "lnfno") return Kind::LnfNo;
  if (s == "deeponet") return Kind::DeepOnet;
  throw ConfigError("unknown model kind: " + s);
}

std::string to_string(Kind k) { return k == Kind::LnfNo ? "lnfno" : "deeponet"; }

int64_t ComponentShape::numel() const {
  int64_t n = 1;
  for (int d : dims) n *= d;
  return n;
}

int64_t ModelSpec::input_numel() const {
  int64_t n = 0;
  for (const auto& c : inputs) n += c.numel();
  return n;
}

int64_t ModelSpec::output_numel() const {
  int64_t n = 0;
  for (const auto& c : outputs) n += c.numel();
  return n;
}

void ModelSpec::validate() const {
  if (inputs.empty() || outputs.empty()) {
    throw ConfigError("model spec needs input and output components");
  }
  if (enc1d_channels < 1 || enc2d_channels < 1 || branch_width < 1 ||
      dec_channels < 1 || don_basis < 1 || don_width < 1 || don_depth < 2) {
    throw ConfigError("model spec widths must be positive");
  }
  bool is_don = kind == Kind::DeepOnet;
  bool don_preset = preset == Preset::Siso || preset == Preset::Miso ||
                    preset == Preset::Mimo;
  if (is_don != don_preset) {
    throw ConfigError("preset does not match model kind");
  }
  if (is_don) {
    if (preset == Preset::Miso && inputs.size() != 2) {
      throw ConfigError("miso needs exactly two input components");
    }
    if (preset != Preset::Mimo && outputs.size() != 1) {
      throw ConfigError("siso/miso predict a single output field");
    }
    if (preset == Preset::Mimo) {
      for (const auto& o : outputs) {
        if (o.dims != outputs[0].dims) {
          throw ConfigError("mimo output fields must share a shape");
        }
      }
    }
    if (!mesh_coords.empty() &&
        static_cast<int64_t>(mesh_coords.size()) != outputs[0].numel()) {
      throw ConfigError("mesh coordinate count does not match output size");
    }
    return;
  }
  // LNF-NO decoder constraints only apply when the decoder exists
  bool dec = preset != Preset::C && ablation != Ablation::NoDecoder &&
             ablation != Ablation::NoEncDec &&
             ablation != Ablation::PureNonlinearMlp &&
             ablation != Ablation::PureLinearMlp;
  if (dec) {
    if (preset == Preset::A || preset == Preset::B) {
      if (outputs.size() != 1 || outputs[0].dims.size() != 2) {
        throw ConfigError("presets A/B decode a single 2-D output field");
      }
    } else if (preset == Preset::D) {
      if (outputs.size() < 2) {
        throw ConfigError("preset D expects multiple output fields");
      }
      for (const auto& o : outputs) {
        if (o.dims.size() != 2 || o.dims != outputs[0].dims) {
          throw ConfigError("preset D output fields must share one 2-D grid");
        }
      }
    } else if (preset == Preset::E) {
      if (outputs.size() != 1 || outputs[0].dims.size() != 3) {
        throw ConfigError("preset E decodes a single 3-D output field");
      }
    }
  }
  bool enc = preset != Preset::E && ablation != Ablation::NoEncoder &&
             ablation != Ablation::NoEncDec &&
             ablation != Ablation::PureNonlinearMlp &&
             ablation != Ablation::PureLinearMlp;
  if (enc) {
    for (const auto& c : inputs) {
      if (c.dims.size() > 2) {
        throw ConfigError("encoders handle rank-1 and rank-2 inputs only");
      }
      if (c.dims.size() == 2) {
        auto [h, w] = enc2d_out_hw(c.dims[0], c.dims[1]);
        if (h < kPool || w < kPool) {
          throw ConfigError("2-D input too small for the 8x8 pooled encoder");
        }
      }
    }
  }
}

ModelSpec spec_from_dataset(const nodf::NodfFile& ds, Kind kind, Preset preset,
                            Ablation ablation) {
  ModelSpec spec;
  spec.kind = kind;
  spec.preset = preset;
  spec.ablation = ablation;
  if (preset == Preset::D) spec.dec_channels = 64;
  auto semantic_dims = [&](const nodf::Component& c) {
    std::vector<int> dims;
    std::string hint = ds.meta("shape." + c.name);
    if (!hint.empty()) {
      std::stringstream ss(hint);
      std::string tok;
      while (std::getline(ss, tok, 'x')) dims.push_back(std::stoi(tok));
    } else {
      for (size_t i = 1; i < c.dims.size(); ++i) dims.push_back(int(c.dims[i]));
    }
    int64_t n = 1;
    for (int d : dims) n *= d;
    int64_t stored = 1;
    for (size_t i = 1; i < c.dims.size(); ++i) stored *= c.dims[i];
    if (n != stored) throw ConfigError("shape hint disagrees with stored dims");
    return dims;
  };
  for (const auto& c : ds.components) {
    if (c.role == nodf::Role::Input) {
      spec.inputs.push_back({c.name, semantic_dims(c)});
    } else if (c.role == nodf::Role::Output) {
      spec.outputs.push_back({c.name, semantic_dims(c)});
    }
  }
  if (kind == Kind::DeepOnet) {
    if (const nodf::Component* mesh_nodes = ds.find("mesh_nodes")) {
      spec.mesh_coords.resize(mesh_nodes->dims[0]);
      for (size_t i = 0; i < spec.mesh_coords.size(); ++i) {
        spec.mesh_coords[i] = {mesh_nodes->f64[2 * i], mesh_nodes->f64[2 * i + 1]};
      }
    }
  }
  spec.validate();
  return spec;
}

bool Model::has_encoder() const {
  return spec_.kind == Kind::LnfNo && spec_.preset != Preset::E &&
         spec_.ablation != Ablation::NoEncoder &&
         spec_.ablation != Ablation::NoEncDec &&
         spec_.ablation != Ablation::PureNonlinearMlp &&
         spec_.ablation != Ablation::PureLinearMlp;
}

bool Model::has_decoder() const {
  return spec_.kind == Kind::LnfNo && spec_.preset != Preset::C &&
         spec_.ablation != Ablation::NoDecoder &&
         spec_.ablation != Ablation::NoEncDec &&
         spec_.ablation != Ablation::PureNonlinearMlp &&
         spec_.ablation != Ablation::PureLinearMlp;
}

Model::Model(ModelSpec spec, uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  std::vector<nn::LayerSpec> layers;
  auto linear_layer = [&](const std::string& prefix, int in, int out) {
    layers.push_back({prefix, {in, out}, in, out});
  };

  if (spec_.kind == Kind::LnfNo) {
    int64_t d = 0;
    if (has_encoder()) {
      for (size_t m = 0; m < spec_.inputs.size(); ++m) {
        const auto& dims = spec_.inputs[m].dims;
        std::string p = "enc" + std::to_string(m) + ".";
        if (dims.size() == 1) {
          int c = spec_.enc1d_channels;
          layers.push_back({p + "0", {c, 1, 9}, 9, c});
          for (int l = 1; l <= 3; ++l) {
            layers.push_back({p + std::to_string(l), {c, c, 9}, 9 * c, c});
          }
          d += int64_t(c) * enc1d_out_len(dims[0]);
        } else {
          int c = spec_.enc2d_channels;
          layers.push_back({p + "0", {c, 1, 3, 3}, 9, c});
          for (int l = 1; l <= 3; ++l) {
            layers.push_back({p + std::to_string(l), {c, c, 3, 3}, 9 * c, c});
          }
          d += int64_t(c) * kPool * kPool;
        }
      }
    } else {
      d = spec_.input_numel();
    }
    int din = static_cast<int>(d);
    int dout = static_cast<int>(spec_.output_numel());
    int w = spec_.branch_width;
    Ablation ab = spec_.ablation;
    bool use_bl = ab == Ablation::Full || ab == Ablation::OnlyLinear ||
                  ab == Ablation::NoEncoder || ab == Ablation::NoDecoder ||
                  ab == Ablation::NoEncDec;
    bool use_bn = ab == Ablation::Full || ab == Ablation::OnlyNonlinear ||
                  ab == Ablation::NoEncoder || ab == Ablation::NoDecoder ||
                  ab == Ablation::NoEncDec || ab == Ablation::PureNonlinearMlp;
    if (use_bl) {
      linear_layer("bl.0", din, w);
      linear_layer("bl.1", w, dout);
    }
    if (use_bn) {
      linear_layer("bn.0", din, w);
      linear_layer("bn.1", w, w);
      linear_layer("bn.2", w, dout);
    }
    if (ab == Ablation::PureLinearMlp) {
      // one direct affine map input -> output (the global linear baseline)
      linear_layer("pl.0", din, dout);
    }
    if (has_decoder()) {
      int dc = spec_.dec_channels;
      int cio = spec_.preset == Preset::D ? static_cast<int>(spec_.outputs.size()) : 1;
      if (spec_.preset == Preset::E) {
        layers.push_back({"dec.0", {dc, 1, 3, 3, 3}, 27, dc});
        layers.push_back({"dec.1", {dc, dc, 3, 3, 3}, 27 * dc, dc});
        layers.push_back({"dec.2", {1, dc, 3, 3, 3}, 27 * dc, 1});
      } else {
        layers.push_back({"dec.0", {dc, cio, 3, 3}, 9 * cio, dc});
        layers.push_back({"dec.1", {dc, dc, 3, 3}, 9 * dc, dc});
        layers.push_back({"dec.2", {cio, dc, 3, 3}, 9 * dc, cio});
      }
    }
    params_ = nn::init_params(layers, seed, /*with_alpha=*/true);
  } else {
    int w = spec_.don_width;
    int p = spec_.don_basis;
    auto mlp = [&](const std::string& prefix, int in, int out) {
      linear_layer(prefix + ".0", in, w);
      for (int l = 1; l < spec_.don_depth - 1; ++l) {
        linear_layer(prefix + "." + std::to_string(l), w, w);
      }
      linear_layer(prefix + "." + std::to_string(spec_.don_depth - 1), w, out);
    };
    if (spec_.preset == Preset::Miso) {
      mlp("branch0", static_cast<int>(spec_.inputs[0].numel()), p);
      mlp("branch1", static_cast<int>(spec_.inputs[1].numel()), p);
    } else {
      mlp("branch0", static_cast<int>(spec_.input_numel()), p);
    }
    int n_heads = spec_.preset == Preset::Mimo
                      ? static_cast<int>(spec_.outputs.size())
                      : 1;
    int coord_dim = spec_.mesh_coords.empty()
                        ? static_cast<int>(spec_.outputs[0].dims.size())
                        : 2;
    mlp("trunk", coord_dim, n_heads * p);
    params_ = nn::init_params(layers, seed, /*with_alpha=*/false);
    params_.add("beta", Tensor::zeros({n_heads}), nn::DecayClass::Excluded);

    // fixed query coordinates, normalized per axis
    int64_t q = spec_.outputs[0].numel();
    Tensor coords = Tensor::zeros({static_cast<int>(q), coord_dim});
    auto cd = coords.data();
    if (!spec_.mesh_coords.empty()) {
      for (int64_t i = 0; i < q; ++i) {
        cd[i * 2] = spec_.mesh_coords[i][0];
        cd[i * 2 + 1] = spec_.mesh_coords[i][1];
      }
    } else {
      const auto& dims = spec_.outputs[0].dims;
      for (int64_t i = 0; i < q; ++i) {
        int64_t rem = i;
        for (int a = coord_dim - 1; a >= 0; --a) {
          int idx = static_cast<int>(rem % dims[a]);
          rem /= dims[a];
          cd[i * coord_dim + a] = dims[a] > 1 ? double(idx) / (dims[a] - 1) : 0.0;
        }
      }
    }
    trunk_coords_ = coords;
  }
}

Tensor Model::branch_mlp(const std::string& prefix, const Tensor& z,
                         int n_layers) const {
  Tensor h = z;
  for (int l = 0; l < n_layers; ++l) {
    std::string name = prefix + "." + std::to_string(l);
    h = linear(h, params_.at(name + ".w"), params_.at(name + ".b"));
    if (l + 1 < n_layers) h = activation(h, Act::Tanh);
  }
  return h;
}

Tensor Model::encode_sample(int comp, const Tensor& row) const {
  const auto& dims = spec_.inputs[comp].dims;
  std::string p = "enc" + std::to_string(comp) + ".";
  if (dims.size() == 1) {
    Tensor x = reshape(row, {1, dims[0]});
    x = activation(conv_nd(x, params_.at(p + "0.w"), params_.at(p + "0.b"), 1, 4, 1),
                   Act::Tanh);
    for (int l = 1; l <= 3; ++l) {
      std::string n = p + std::to_string(l);
      x = activation(conv_nd(x, params_.at(n + ".w"), params_.at(n + ".b"), 2, 4, 1),
                     Act::Tanh);
    }
    return reshape(x, {1, static_cast<int>(x.size())});
  }
  Tensor x = reshape(row, {1, dims[0], dims[1]});
  for (int l = 0; l <= 3; ++l) {
    std::string n = p + std::to_string(l);
    int stride = l < 3 ? 2 : 1;
    x = activation(conv_nd(x, params_.at(n + ".w"), params_.at(n + ".b"), stride, 1, 2),
                   Act::Tanh);
  }
  x = adaptive_avg_pool2d(x, kPool, kPool);
  return reshape(x, {1, static_cast<int>(x.size())});
}

Tensor Model::decode_sample(const Tensor& row) const {
  Tensor x;
  if (spec_.preset == Preset::E) {
    const auto& d = spec_.outputs[0].dims;
    x = reshape(row, {1, d[0], d[1], d[2]});
    x = activation(conv_nd(x, params_.at("dec.0.w"), params_.at("dec.0.b"), 1, 1, 3),
                   Act::Tanh);
    x = activation(conv_nd(x, params_.at("dec.1.w"), params_.at("dec.1.b"), 1, 1, 3),
                   Act::Tanh);
    x = conv_nd(x, params_.at("dec.2.w"), params_.at("dec.2.b"), 1, 1, 3);
  } else {
    int cio = spec_.preset == Preset::D ? static_cast<int>(spec_.outputs.size()) : 1;
    const auto& d = spec_.outputs[0].dims;
    x = reshape(row, {cio, d[0], d[1]});
    x = activation(conv_nd(x, params_.at("dec.0.w"), params_.at("dec.0.b"), 1, 1, 2),
                   Act::Tanh);
    x = activation(conv_nd(x, params_.at("dec.1.w"), params_.at("dec.1.b"), 1, 1, 2),
                   Act::Tanh);
    x = conv_nd(x, params_.at("dec.2.w"), params_.at("dec.2.b"), 1, 1, 2);
  }
  return reshape(x, {1, static_cast<int>(x.size())});
}

Tensor Model::forward_lnfno(const std::vector<Tensor>& components, int batch) const {
  // latent code: per-sample encodings stacked into [batch, d]
  Tensor z;
  if (has_encoder()) {
    std::vector<Tensor> rows;
    rows.reserve(batch);
    for (int b = 0; b < batch; ++b) {
      std::vector<Tensor> parts;
      parts.reserve(components.size());
      for (size_t m = 0; m < components.size(); ++m) {
        parts.push_back(
            encode_sample(static_cast<int>(m), slice(components[m], 0, b, b + 1)));
      }
      rows.push_back(parts.size() == 1 ? parts[0] : concat(parts, 1));
    }
    z = rows.size() == 1 ? rows[0] : concat(rows, 0);
  } else {
    std::vector<Tensor> parts(components.begin(), components.end());
    z = parts.size() == 1 ? parts[0] : concat(parts, 1);
  }

  const Tensor& alpha = params_.at("alpha");
  Tensor u;
  switch (spec_.ablation) {
    case Ablation::OnlyLinear:
      u = branch_mlp("bl", z, 2);
      break;
    case Ablation::OnlyNonlinear:
    case Ablation::PureNonlinearMlp:
      u = branch_mlp("bn", z, 3);
      break;
    case Ablation::PureLinearMlp:
      u = linear(z, params_.at("pl.0.w"), params_.at("pl.0.b"));
      break;
    default: {
      // B_L is affine (two linear layers, no activation in between)
      Tensor bl = linear(z, params_.at("bl.0.w"), params_.at("bl.0.b"));
      bl = linear(bl, params_.at("bl.1.w"), params_.at("bl.1.b"));
      Tensor bn = branch_mlp("bn", z, 3);
      u = mul(bl, bn);
      break;
    }
  }
  u = mul(u, alpha);

  if (!has_decoder()) return u;
  std::vector<Tensor> rows;
  rows.reserve(batch);
  for (int b = 0; b < batch; ++b) rows.push_back(decode_sample(slice(u, 0, b, b + 1)));
  return rows.size() == 1 ? rows[0] : concat(rows, 0);
}

Tensor Model::forward_deeponet(const std::vector<Tensor>& components,
                               int /*batch*/) const {
  int depth = spec_.don_depth;
  Tensor emb;
  if (spec_.preset == Preset::Miso) {
    Tensor b0 = branch_mlp("branch0", components[0], depth);
    Tensor b1 = branch_mlp("branch1", components[1], depth);
    emb = mul(b0, b1);
  } else {
    std::vector<Tensor> parts(components.begin(), components.end());
    Tensor x = parts.size() == 1 ? parts[0] : concat(parts, 1);
    emb = branch_mlp("branch0", x, depth);
  }
  Tensor trunk = branch_mlp("trunk", trunk_coords_, depth);
  const Tensor& beta = params_.at("beta");
  int p = spec_.don_basis;
  if (spec_.preset == Preset::Mimo) {
    std::vector<Tensor> fields;
    for (size_t c = 0; c < spec_.outputs.size(); ++c) {
      Tensor head = slice(trunk, 1, static_cast<int>(c) * p,
                          static_cast<int>(c + 1) * p);
      Tensor pred = matmul_nt(emb, head);
      Tensor beta_c = reshape(slice(beta, 0, static_cast<int>(c),
                                    static_cast<int>(c) + 1), {1});
      fields.push_back(add(pred, beta_c));
    }
    return concat(fields, 1);
  }
  return add(matmul_nt(emb, trunk), reshape(beta, {1}));
}

Tensor Model::forward_named(
    const std::vector<std::pair<std::string, Tensor>>& components, int batch) const {
  if (components.size() != spec_.inputs.size()) {
    throw DimensionError("forward_named: component count mismatch");
  }
  std::vector<Tensor> ordered(spec_.inputs.size());
  for (size_t m = 0; m < spec_.inputs.size(); ++m) {
    bool found = false;
    for (const auto& [name, tensor] : components) {
      if (name == spec_.inputs[m].name) {
        ordered[m] = tensor;
        found = true;
        break;
      }
    }
    if (!found) {
      throw DimensionError("forward_named: missing component " + spec_.inputs[m].name);
    }
  }
  return forward(ordered, batch);
}

Tensor Model::forward(const std::vector<Tensor>& components, int batch) const {
  if (components.size() != spec_.inputs.size()) {
    throw DimensionError("forward: component count mismatch");
  }
  for (size_t m = 0; m < components.size(); ++m) {
    if (components[m].rank() != 2 || components[m].shape()[0] != batch ||
        components[m].shape()[1] != spec_.inputs[m].numel()) {
      throw DimensionError("forward: component " + spec_.inputs[m].name +
                           " has wrong shape");
    }
  }
  return spec_.kind == Kind::LnfNo ? forward_lnfno(components, batch)
                                   : forward_deeponet(components, batch);
}

}  // namespace lnf::models
