#pragma once

#include <string>
#include <vector>

#include "lnf/nodf.hpp"

namespace lnf::datagen {

// Benchmark generation request. Zero/empty fields are filled with the
// benchmark's published defaults by resolve_defaults().
struct BenchmarkSpec {
  std::string id;  // laplace | burgers | darcy_smooth | pb_square | pb_source
                   // | pb_fem | pb_3d | ns | pnp
  int n_samples = 0;     // default 2000
  uint64_t seed = 0;
  double k = -1.0;       // PB nonlinearity strength
  int res = 0;           // primary grid resolution
  int res_fine = 0;      // fine solve resolution (burgers, darcy_smooth)
  double nu = 0.0;
  double t_final = 0.0;
  double dt = 0.0;
  int n_t = 0;
  std::string mesh_path;  // pb_fem only

  void resolve_defaults();
  static const std::vector<std::string>& known_ids();
};

// Draws inputs, runs the governing solver (or synthesizes analytically for
// the MAD benchmarks), and assembles a NODF file with provenance metadata.
// Samples whose solve fails are discarded and regenerated from a fresh
// stream; a discard rate above 20% aborts.
nodf::NodfFile generate(const BenchmarkSpec& spec);

struct VerifyReport {
  bool pass = false;
  int n_checked = 0;
  double max_residual = 0.0;
  std::vector<int> failing;
  std::string detail;
};

// Re-evaluates the governing discrete residual (or conservation laws /
// regeneration for benchmarks without a cheap residual) on n_check samples.
VerifyReport verify_dataset(const nodf::NodfFile& file, int n_check);

}  // namespace lnf::datagen
