#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lnf/rng.hpp"
#include "lnf/tensor.hpp"

namespace lnf::nn {

enum class DecayClass { Decayed, Excluded };

struct Param {
  std::string name;
  Tensor tensor;
  DecayClass decay;
};

// Named trainable parameters in insertion order. Bias tensors and the fusion
// scale alpha are always tagged Excluded; every parameter has exactly one
// class.
class ParamSet {
 public:
  Tensor& add(const std::string& name, Tensor t, DecayClass decay);
  bool contains(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  DecayClass decay_of(const std::string& name) const;

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  size_t count() const { return params_.size(); }
  int64_t total_size() const;
  void zero_grad();

 private:
  int find(const std::string& name) const;
  std::vector<Param> params_;
};

// (decayed names, excluded names); union is all names, intersection empty.
std::pair<std::vector<std::string>, std::vector<std::string>> partition_decay(
    const ParamSet& params);

// One linear or convolution layer to initialize: weights drawn
// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero.
struct LayerSpec {
  std::string prefix;              // parameter names become prefix+".w"/".b"
  std::vector<int> weight_shape;   // [in,out] or [C_out,C_in,K...]
  int fan_in = 0;
  int bias_len = 0;                // 0 = layer without bias
};

// Builds a ParamSet from layer descriptors using one deterministic stream per
// layer derived from `seed`. When with_alpha is set, appends the scalar
// fusion scale "alpha" = 1.0, decay-excluded.
ParamSet init_params(const std::vector<LayerSpec>& layers, uint64_t seed,
                     bool with_alpha = false);

// Appends one layer into an existing set (same scheme as init_params).
void init_layer(ParamSet& ps, const LayerSpec& layer, Rng& rng);

struct AdamWState {
  int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<std::vector<double>> m;  // parallel to ParamSet order
  std::vector<std::vector<double>> v;

  static AdamWState for_params(const ParamSet& params);
};

// Decoupled weight decay (decayed class only), then the bias-corrected Adam
// update. Reads gradients from the parameter tensors; a parameter without a
// materialized gradient is a contract error.
void adamw_step(ParamSet& params, AdamWState& state, double lr, double wd);

}  // namespace lnf::nn
