#include "lnf/train.hpp"

#include <chrono>
#include <cmath>

#include "lnf/rng.hpp"

namespace lnf::train {

namespace {

constexpr uint64_t kSplitStream = 0x5011dull;
constexpr uint64_t kShuffleStream = 0x500ff1e00000ull;

void fisher_yates(std::vector<int>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

Dataset Dataset::from_nodf(const nodf::NodfFile& file) {
  Dataset ds;
  ds.n_samples = file.n_samples();
  for (const auto& c : file.components) {
    if (c.role == nodf::Role::Aux) continue;
    if (c.dtype != nodf::Dtype::F64) {
      throw ContractError("dataset component " + c.name + " is not f64");
    }
    Comp comp;
    comp.name = c.name;
    comp.numel = 1;
    for (size_t d = 1; d < c.dims.size(); ++d) comp.numel *= c.dims[d];
    comp.data = c.f64;
    (c.role == nodf::Role::Input ? ds.inputs : ds.outputs).push_back(std::move(comp));
  }
  if (ds.inputs.empty() || ds.outputs.empty()) {
    throw ContractError("dataset has no input/output components");
  }
  return ds;
}

SplitIdx split_dataset(int64_t n_samples, uint64_t seed) {
  if (n_samples < 10) throw ContractError("split needs at least 10 samples");
  std::vector<int> idx(n_samples);
  for (int64_t i = 0; i < n_samples; ++i) idx[i] = static_cast<int>(i);
  Rng rng(seed, kSplitStream);
  fisher_yates(idx, rng);
  int64_t n_train = n_samples * 9 / 10;
  SplitIdx split;
  split.train.assign(idx.begin(), idx.begin() + n_train);
  split.test.assign(idx.begin() + n_train, idx.end());
  return split;
}

namespace {

Normalizer::Stat fit_stat(const Dataset::Comp& comp, const std::vector<int>& idx) {
  double mean = 0.0;
  int64_t count = int64_t(idx.size()) * comp.numel;
  for (int i : idx) {
    for (double x : comp.sample(i)) mean += x;
  }
  mean /= count;
  double var = 0.0;
  for (int i : idx) {
    for (double x : comp.sample(i)) var += (x - mean) * (x - mean);
  }
  var /= count;
  Normalizer::Stat s;
  s.mu = mean;
  s.sigma = std::sqrt(var);
  if (s.sigma < 1e-12) s.sigma = 1.0;
  return s;
}

}  // namespace

Normalizer fit_normalizer(const Dataset& ds, const std::vector<int>& train_idx) {
  if (train_idx.empty()) throw ContractError("normalizer needs training samples");
  Normalizer norm;
  for (const auto& c : ds.inputs) norm.inputs.push_back(fit_stat(c, train_idx));
  for (const auto& c : ds.outputs) norm.outputs.push_back(fit_stat(c, train_idx));
  norm.fitted = true;
  return norm;
}

void normalize_inplace(std::span<double> x, const Normalizer::Stat& s) {
  for (double& v : x) v = (v - s.mu) / s.sigma;
}

void denormalize_inplace(std::span<double> x, const Normalizer::Stat& s) {
  for (double& v : x) v = v * s.sigma + s.mu;
}

Tensor loss_multifield(const Tensor& pred, const Tensor& target,
                       const std::vector<int64_t>& field_lens, double eps) {
  if (pred.shape() != target.shape() || pred.rank() != 2) {
    throw DimensionError("loss: pred/target must share a [batch, out] shape");
  }
  int batch = pred.shape()[0];
  int64_t total = 0;
  for (int64_t l : field_lens) total += l;
  if (total != pred.shape()[1]) throw DimensionError("loss: field lengths mismatch");

  Tensor acc;
  for (int b = 0; b < batch; ++b) {
    Tensor prow = slice(pred, 0, b, b + 1);
    Tensor trow = slice(target, 0, b, b + 1);
    int64_t off = 0;
    for (int64_t len : field_lens) {
      Tensor pf = slice(prow, 1, static_cast<int>(off), static_cast<int>(off + len));
      Tensor tf = slice(trow, 1, static_cast<int>(off), static_cast<int>(off + len));
      Tensor diff = sub(pf, tf);
      Tensor norm = sqrt_elem(sum(mul(diff, diff)));
      double ynorm = 0.0;
      for (double y : tf.data()) ynorm += y * y;
      ynorm = std::sqrt(ynorm);
      Tensor term = mul(norm, Tensor::scalar(1.0 / (ynorm + eps)));
      acc = acc.defined() ? add(acc, term) : term;
      off += len;
    }
  }
  return mul(acc, Tensor::scalar(1.0 / (double(batch) * field_lens.size())));
}

namespace {

// Gathers normalized inputs / raw targets for a batch of sample indices.
struct BatchBuilder {
  const Dataset& ds;
  const Normalizer& norm;

  std::vector<Tensor> inputs(const std::vector<int>& idx) const {
    std::vector<Tensor> out;
    out.reserve(ds.inputs.size());
    for (size_t m = 0; m < ds.inputs.size(); ++m) {
      const auto& comp = ds.inputs[m];
      Tensor t = Tensor::zeros({static_cast<int>(idx.size()),
                                static_cast<int>(comp.numel)});
      auto td = t.data();
      for (size_t r = 0; r < idx.size(); ++r) {
        auto s = comp.sample(idx[r]);
        std::copy(s.begin(), s.end(), td.begin() + r * comp.numel);
      }
      normalize_inplace(td, norm.inputs[m]);
      out.push_back(std::move(t));
    }
    return out;
  }

  Tensor targets(const std::vector<int>& idx) const {
    int64_t total = 0;
    for (const auto& c : ds.outputs) total += c.numel;
    Tensor t = Tensor::zeros({static_cast<int>(idx.size()), static_cast<int>(total)});
    auto td = t.data();
    for (size_t r = 0; r < idx.size(); ++r) {
      int64_t off = 0;
      for (const auto& c : ds.outputs) {
        auto s = c.sample(idx[r]);
        std::copy(s.begin(), s.end(), td.begin() + r * total + off);
        off += c.numel;
      }
    }
    return t;
  }
};

// Denormalizes a [batch, total_out] prediction field-by-field, in-graph.
Tensor denormalize_pred(const Tensor& pred, const Dataset& ds,
                        const Normalizer& norm) {
  std::vector<Tensor> parts;
  int64_t off = 0;
  for (size_t c = 0; c < ds.outputs.size(); ++c) {
    int64_t len = ds.outputs[c].numel;
    Tensor f = slice(pred, 1, static_cast<int>(off), static_cast<int>(off + len));
    f = add(mul(f, Tensor::scalar(norm.outputs[c].sigma)),
            Tensor::scalar(norm.outputs[c].mu));
    parts.push_back(std::move(f));
    off += len;
  }
  return parts.size() == 1 ? parts[0] : concat(parts, 1);
}

std::vector<int64_t> field_lengths(const Dataset& ds) {
  std::vector<int64_t> lens;
  for (const auto& c : ds.outputs) lens.push_back(c.numel);
  return lens;
}

}  // namespace

Metrics train_loop(models::Model& model, const Dataset& ds, const SplitIdx& split,
                   const Normalizer& norm, const TrainConfig& cfg,
                   nn::AdamWState* opt_state) {
  if (!norm.fitted) throw ContractError("train_loop: normalizer not fitted");
  if (split.train.empty()) throw ContractError("train_loop: empty training split");
  auto t0 = std::chrono::steady_clock::now();

  BatchBuilder builder{ds, norm};
  std::vector<int64_t> lens = field_lengths(ds);
  nn::AdamWState local_state = nn::AdamWState::for_params(model.params());
  nn::AdamWState& state = opt_state ? *opt_state : local_state;

  Metrics metrics;
  std::vector<int> order = split.train;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(cfg.seed, kShuffleStream + static_cast<uint64_t>(epoch));
    fisher_yates(order, shuffle_rng);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      size_t stop = std::min(order.size(), start + cfg.batch);
      std::vector<int> idx(order.begin() + start, order.begin() + stop);
      std::vector<Tensor> inputs = builder.inputs(idx);
      Tensor target = builder.targets(idx);

      Tape tape;
      double batch_loss;
      {
        TapeScope scope(tape);
        Tensor pred = model.forward(inputs, static_cast<int>(idx.size()));
        Tensor pred_phys = denormalize_pred(pred, ds, norm);
        Tensor loss = loss_multifield(pred_phys, target, lens, cfg.eps_loss);
        batch_loss = loss.item();
        if (!std::isfinite(batch_loss)) {
          throw SolverError("training aborted: non-finite loss at epoch " +
                            std::to_string(epoch));
        }
        model.params().zero_grad();
        backward(loss);
      }
      nn::adamw_step(model.params(), state, cfg.lr, cfg.wd);
      epoch_loss += batch_loss * static_cast<double>(idx.size());
    }
    metrics.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }

  EvalResult ev = evaluate(model, ds, split.test, norm, cfg.eps_loss,
                           std::max(1, cfg.batch));
  metrics.test_rel_l2 = ev.mean_rel_l2;
  metrics.per_field = ev.per_field;
  metrics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return metrics;
}

EvalResult evaluate(const models::Model& model, const Dataset& ds,
                    const std::vector<int>& idx, const Normalizer& norm,
                    double eps, int batch) {
  if (!norm.fitted) throw ContractError("evaluate: normalizer not fitted");
  BatchBuilder builder{ds, norm};
  size_t n_fields = ds.outputs.size();
  std::vector<double> field_acc(n_fields, 0.0);
  for (size_t start = 0; start < idx.size(); start += batch) {
    size_t stop = std::min(idx.size(), start + batch);
    std::vector<int> chunk(idx.begin() + start, idx.begin() + stop);
    std::vector<Tensor> inputs = builder.inputs(chunk);
    Tensor pred = model.forward(inputs, static_cast<int>(chunk.size()));
    Tensor pred_phys = denormalize_pred(pred, ds, norm);
    auto pd = pred_phys.data();
    int64_t total = pred_phys.shape()[1];
    for (size_t r = 0; r < chunk.size(); ++r) {
      int64_t off = 0;
      for (size_t c = 0; c < n_fields; ++c) {
        auto y = ds.outputs[c].sample(chunk[r]);
        double num = 0.0, den = 0.0;
        for (int64_t i = 0; i < ds.outputs[c].numel; ++i) {
          double d = pd[r * total + off + i] - y[i];
          num += d * d;
          den += y[i] * y[i];
        }
        field_acc[c] += std::sqrt(num) / (std::sqrt(den) + eps);
        off += ds.outputs[c].numel;
      }
    }
  }
  EvalResult res;
  res.per_field.resize(n_fields);
  double mean = 0.0;
  for (size_t c = 0; c < n_fields; ++c) {
    res.per_field[c] = field_acc[c] / static_cast<double>(idx.size());
    mean += res.per_field[c];
  }
  res.mean_rel_l2 = mean / static_cast<double>(n_fields);
  return res;
}

// --- checkpoints ------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const models::Model& model,
                     const nn::AdamWState* opt_state, const Normalizer& norm,
                     const Dataset& ds, const nodf::Metadata& extra_meta) {
  nodf::NodfFile file;
  const models::ModelSpec& spec = model.spec();
  file.metadata = {
      {"checkpoint", "1"},
      {"model", models::to_string(spec.kind)},
      {"preset", models::to_string(spec.preset)},
      {"ablation", models::to_string(spec.ablation)},
      {"enc1d_channels", std::to_string(spec.enc1d_channels)},
      {"enc2d_channels", std::to_string(spec.enc2d_channels)},
      {"branch_width", std::to_string(spec.branch_width)},
      {"dec_channels", std::to_string(spec.dec_channels)},
      {"don_basis", std::to_string(spec.don_basis)},
      {"don_width", std::to_string(spec.don_width)},
      {"don_depth", std::to_string(spec.don_depth)},
  };
  if (opt_state) {
    file.metadata.emplace_back("adam_t", std::to_string(opt_state->t));
  }
  for (const auto& [k, v] : extra_meta) file.metadata.emplace_back(k, v);

  auto dims_of = [](const Tensor& t) {
    std::vector<uint32_t> d;
    for (int x : t.shape()) d.push_back(static_cast<uint32_t>(x));
    return d;
  };
  for (const auto& p : model.params().params()) {
    file.components.push_back(nodf::Component::make_f64(
        "param/" + p.name, nodf::Role::Aux, dims_of(p.tensor),
        {p.tensor.data().begin(), p.tensor.data().end()}));
  }
  if (opt_state) {
    const auto& ps = model.params().params();
    for (size_t i = 0; i < ps.size(); ++i) {
      file.components.push_back(nodf::Component::make_f64(
          "adam/m/" + ps[i].name, nodf::Role::Aux, dims_of(ps[i].tensor),
          opt_state->m[i]));
      file.components.push_back(nodf::Component::make_f64(
          "adam/v/" + ps[i].name, nodf::Role::Aux, dims_of(ps[i].tensor),
          opt_state->v[i]));
    }
  }
  for (size_t c = 0; c < ds.inputs.size(); ++c) {
    file.components.push_back(nodf::Component::make_f64(
        "norm/in/" + ds.inputs[c].name, nodf::Role::Aux, {2},
        {norm.inputs[c].mu, norm.inputs[c].sigma}));
  }
  for (size_t c = 0; c < ds.outputs.size(); ++c) {
    file.components.push_back(nodf::Component::make_f64(
        "norm/out/" + ds.outputs[c].name, nodf::Role::Aux, {2},
        {norm.outputs[c].mu, norm.outputs[c].sigma}));
  }
  nodf::write_nodf(file, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const nodf::NodfFile& dataset) {
  Checkpoint ck;
  ck.raw = nodf::read_nodf(path);
  if (ck.raw.meta("checkpoint") != "1") {
    throw FormatError("not a checkpoint file: " + path.string());
  }
  ck.metadata = ck.raw.metadata;
  models::Kind kind = models::parse_kind(ck.raw.meta("model"));
  models::Preset preset = models::parse_preset(ck.raw.meta("preset"));
  models::Ablation ablation = models::parse_ablation(ck.raw.meta("ablation", "full"));
  ck.spec = models::spec_from_dataset(dataset, kind, preset, ablation);
  ck.spec.enc1d_channels = std::stoi(ck.raw.meta("enc1d_channels", "64"));
  ck.spec.enc2d_channels = std::stoi(ck.raw.meta("enc2d_channels", "32"));
  ck.spec.branch_width = std::stoi(ck.raw.meta("branch_width", "256"));
  ck.spec.dec_channels = std::stoi(ck.raw.meta("dec_channels", "32"));
  ck.spec.don_basis = std::stoi(ck.raw.meta("don_basis", "1024"));
  ck.spec.don_width = std::stoi(ck.raw.meta("don_width", "256"));
  ck.spec.don_depth = std::stoi(ck.raw.meta("don_depth", "5"));
  ck.init_seed = std::stoull(ck.raw.meta("seed", "0"));

  Dataset ds = Dataset::from_nodf(dataset);
  ck.norm.fitted = true;
  for (const auto& c : ds.inputs) {
    const auto& comp = ck.raw.at("norm/in/" + c.name);
    ck.norm.inputs.push_back({comp.f64[0], comp.f64[1]});
  }
  for (const auto& c : ds.outputs) {
    const auto& comp = ck.raw.at("norm/out/" + c.name);
    ck.norm.outputs.push_back({comp.f64[0], comp.f64[1]});
  }
  return ck;
}

void restore_params(models::Model& model, const Checkpoint& ck) {
  for (auto& p : model.params().params()) {
    const nodf::Component& c = ck.raw.at("param/" + p.name);
    if (c.n_elements() != static_cast<uint64_t>(p.tensor.size())) {
      throw FormatError("checkpoint parameter " + p.name + " has wrong size");
    }
    std::copy(c.f64.begin(), c.f64.end(), p.tensor.data().begin());
  }
}

}  // namespace lnf::train
