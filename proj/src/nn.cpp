#include "lnf/nn.hpp"

#include <cmath>

namespace lnf::nn {

Tensor& ParamSet::add(const std::string& name, Tensor t, DecayClass decay) {
  if (contains(name)) throw ConfigError("duplicate parameter name: " + name);
  t.set_requires_grad(true);
  params_.push_back(Param{name, std::move(t), decay});
  return params_.back().tensor;
}

int ParamSet::find(const std::string& name) const {
  for (size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

bool ParamSet::contains(const std::string& name) const { return find(name) >= 0; }

Tensor& ParamSet::at(const std::string& name) {
  int i = find(name);
  if (i < 0) throw ConfigError("unknown parameter: " + name);
  return params_[i].tensor;
}

const Tensor& ParamSet::at(const std::string& name) const {
  int i = find(name);
  if (i < 0) throw ConfigError("unknown parameter: " + name);
  return params_[i].tensor;
}

DecayClass ParamSet::decay_of(const std::string& name) const {
  int i = find(name);
  if (i < 0) throw ConfigError("unknown parameter: " + name);
  return params_[i].decay;
}

int64_t ParamSet::total_size() const {
  int64_t acc = 0;
  for (const auto& p : params_) acc += p.tensor.size();
  return acc;
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

std::pair<std::vector<std::string>, std::vector<std::string>> partition_decay(
    const ParamSet& params) {
  std::vector<std::string> decayed, excluded;
  for (const auto& p : params.params()) {
    (p.decay == DecayClass::Decayed ? decayed : excluded).push_back(p.name);
  }
  return {decayed, excluded};
}

void init_layer(ParamSet& ps, const LayerSpec& layer, Rng& rng) {
  if (layer.fan_in <= 0) throw ConfigError("layer fan-in must be positive");
  double bound = 1.0 / std::sqrt(static_cast<double>(layer.fan_in));
  Tensor w = Tensor::zeros(layer.weight_shape);
  for (double& x : w.data()) x = rng.uniform(-bound, bound);
  ps.add(layer.prefix + ".w", std::move(w), DecayClass::Decayed);
  if (layer.bias_len > 0) {
    ps.add(layer.prefix + ".b", Tensor::zeros({layer.bias_len}),
           DecayClass::Excluded);
  }
}

ParamSet init_params(const std::vector<LayerSpec>& layers, uint64_t seed,
                     bool with_alpha) {
  ParamSet ps;
  for (size_t i = 0; i < layers.size(); ++i) {
    Rng rng(seed, 0x1a1e5000ull + i);
    init_layer(ps, layers[i], rng);
  }
  if (with_alpha) {
    ps.add("alpha", Tensor::scalar(1.0), DecayClass::Excluded);
  }
  return ps;
}

AdamWState AdamWState::for_params(const ParamSet& params) {
  AdamWState st;
  st.m.reserve(params.count());
  st.v.reserve(params.count());
  for (const auto& p : params.params()) {
    st.m.emplace_back(p.tensor.size(), 0.0);
    st.v.emplace_back(p.tensor.size(), 0.0);
  }
  return st;
}

void adamw_step(ParamSet& params, AdamWState& state, double lr, double wd) {
  if (lr <= 0 && lr != 0.0) throw ContractError("learning rate must be >= 0");
  if (state.m.size() != params.count() || state.v.size() != params.count()) {
    throw ContractError("optimizer state does not match parameter set");
  }
  state.t += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t pi = 0; pi < params.count(); ++pi) {
    Param& p = params.params()[pi];
    if (!p.tensor.has_grad()) {
      throw ContractError("missing gradient for parameter " + p.name);
    }
    auto theta = p.tensor.data();
    auto g = p.tensor.grad();
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    if (p.decay == DecayClass::Decayed && wd != 0.0) {
      double keep = 1.0 - lr * wd;
      for (size_t i = 0; i < theta.size(); ++i) theta[i] *= keep;
    }
    for (size_t i = 0; i < theta.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      theta[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace lnf::nn
