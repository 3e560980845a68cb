#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lnf/models.hpp"
#include "lnf/nodf.hpp"

namespace lnf::train {

// Flat in-memory view of a dataset file: per component, [n_samples, numel]
// row-major doubles.
struct Dataset {
  struct Comp {
    std::string name;
    int64_t numel = 0;
    std::vector<double> data;
    std::span<const double> sample(int64_t i) const {
      return {data.data() + i * numel, static_cast<size_t>(numel)};
    }
  };
  int64_t n_samples = 0;
  std::vector<Comp> inputs;
  std::vector<Comp> outputs;

  static Dataset from_nodf(const nodf::NodfFile& file);
};

struct SplitIdx {
  std::vector<int> train;
  std::vector<int> test;
};

// Deterministic shuffle by seed, first 90% train. Needs >= 10 samples.
SplitIdx split_dataset(int64_t n_samples, uint64_t seed);

// Global scalar statistics per component, fitted strictly on the training
// split. sigma falls back to 1 when below 1e-12.
struct Normalizer {
  struct Stat {
    double mu = 0.0;
    double sigma = 1.0;
  };
  std::vector<Stat> inputs;
  std::vector<Stat> outputs;
  bool fitted = false;
};

Normalizer fit_normalizer(const Dataset& ds, const std::vector<int>& train_idx);
void normalize_inplace(std::span<double> x, const Normalizer::Stat& s);
void denormalize_inplace(std::span<double> x, const Normalizer::Stat& s);

// Averaged relative l2 across output fields and batch rows, differentiable
// through pred. Both tensors are [batch, total_out] on the physical scale.
Tensor loss_multifield(const Tensor& pred, const Tensor& target,
                       const std::vector<int64_t>& field_lens, double eps);

struct TrainConfig {
  int epochs = 500;
  double lr = 1e-3;
  int batch = 20;
  double wd = 1e-4;
  double eps_loss = 1e-12;
  uint64_t seed = 0;
};

struct Metrics {
  std::vector<double> epoch_loss;
  double test_rel_l2 = 0.0;
  std::vector<double> per_field;
  double wall_seconds = 0.0;
};

struct EvalResult {
  double mean_rel_l2 = 0.0;
  std::vector<double> per_field;
};

// Appendix-B protocol: seeded shuffle per epoch, minibatch forward on
// normalized inputs, physical-scale Eq.-style loss, AdamW with the decay
// exclusions, constant learning rate. Returns per-epoch mean train loss and
// the final physical-scale test metrics.
Metrics train_loop(models::Model& model, const Dataset& ds, const SplitIdx& split,
                   const Normalizer& norm, const TrainConfig& cfg,
                   nn::AdamWState* opt_state = nullptr);

EvalResult evaluate(const models::Model& model, const Dataset& ds,
                    const std::vector<int>& idx, const Normalizer& norm,
                    double eps = 1e-12, int batch = 32);

// Checkpoint: parameters (+ optimizer moments) and the fitted normalizer in
// the NODF aux-blob section, with the model/run configuration echoed as
// metadata. Loading reconstructs the model against the dataset's shapes.
void save_checkpoint(const std::filesystem::path& path, const models::Model& model,
                     const nn::AdamWState* opt_state, const Normalizer& norm,
                     const Dataset& ds, const nodf::Metadata& extra_meta);

struct Checkpoint {
  models::ModelSpec spec;
  uint64_t init_seed = 0;
  Normalizer norm;
  nodf::Metadata metadata;
  nodf::NodfFile raw;
};

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const nodf::NodfFile& dataset);
void restore_params(models::Model& model, const Checkpoint& ck);

}  // namespace lnf::train
