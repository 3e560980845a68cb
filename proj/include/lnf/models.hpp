#pragma once

#include <array>
#include <string>
#include <vector>

#include "lnf/nn.hpp"
#include "lnf/nodf.hpp"
#include "lnf/tensor.hpp"

namespace lnf::models {

enum class Kind { LnfNo, DeepOnet };

// LNF-NO presets: A regular-grid SISO (1-D boundary encoder, 2-D decoder),
// B regular-grid MISO (adds the 2-D source encoder), C node-based SISO
// (no decoder), D regular-grid MIMO (3 encoders, 3-channel decoder),
// E 3-D SISO (no encoder, 3-D decoder).
// DeepONet presets: siso, miso (two branches fused by elementwise product),
// mimo (trunk with three heads).
enum class Preset { A, B, C, D, E, Siso, Miso, Mimo };

enum class Ablation {
  Full,
  OnlyNonlinear,
  OnlyLinear,
  NoEncoder,
  NoDecoder,
  NoEncDec,
  PureNonlinearMlp,
  PureLinearMlp,
};

Preset parse_preset(const std::string& s);
Ablation parse_ablation(const std::string& s);
std::string to_string(Preset p);
std::string to_string(Ablation a);
std::string to_string(Kind k);
Kind parse_kind(const std::string& s);

struct ComponentShape {
  std::string name;
  std::vector<int> dims;  // per-sample semantic shape
  int64_t numel() const;
};

struct ModelSpec {
  Kind kind = Kind::LnfNo;
  Preset preset = Preset::A;
  Ablation ablation = Ablation::Full;
  std::vector<ComponentShape> inputs;
  std::vector<ComponentShape> outputs;

  // hidden widths (Appendix-style defaults; scaled down for desk runs)
  int enc1d_channels = 64;
  int enc2d_channels = 32;
  int branch_width = 256;
  int dec_channels = 32;  // preset D uses 64 unless overridden
  int don_basis = 1024;
  int don_width = 256;
  int don_depth = 5;  // linear layers per net

  // trunk query coordinates for node-based outputs (DeepONet on meshes)
  std::vector<std::array<double, 2>> mesh_coords;

  void validate() const;  // throws ConfigError on inconsistent dims
  int64_t input_numel() const;
  int64_t output_numel() const;
};

// Derives input/output component shapes from a dataset file, using the
// "shape.<name>" metadata entries written by the generator (stored dims as
// fallback). Width fields keep their defaults.
ModelSpec spec_from_dataset(const nodf::NodfFile& ds, Kind kind, Preset preset,
                            Ablation ablation);

class Model {
 public:
  Model(ModelSpec spec, uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  int64_t param_count() const { return params_.total_size(); }

  // components[m] is [batch, flat input dims]; returns [batch, flat output].
  Tensor forward(const std::vector<Tensor>& components, int batch) const;

  // Components bound by name instead of position: the pairs are reordered to
  // the spec's component order before the forward pass, so permuting the
  // caller's (name, tensor, encoder) triples cannot change the result.
  Tensor forward_named(const std::vector<std::pair<std::string, Tensor>>& components,
                       int batch) const;

 private:
  Tensor forward_lnfno(const std::vector<Tensor>& components, int batch) const;
  Tensor forward_deeponet(const std::vector<Tensor>& components, int batch) const;
  Tensor encode_sample(int comp, const Tensor& row) const;
  Tensor decode_sample(const Tensor& row) const;
  Tensor branch_mlp(const std::string& prefix, const Tensor& z, int n_layers) const;

  bool has_encoder() const;
  bool has_decoder() const;

  ModelSpec spec_;
  nn::ParamSet params_;
  Tensor trunk_coords_;  // deeponet query points [Q, coord_dim]
};

}  // namespace lnf::models
