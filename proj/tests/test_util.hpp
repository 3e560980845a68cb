#pragma once

#include <functional>
#include <vector>

#include "lnf/rng.hpp"
#include "lnf/tensor.hpp"

namespace lnf::testutil {

inline double rel_err(double got, double want) {
  double scale = std::max(std::abs(got), std::abs(want));
  return scale > 0 ? std::abs(got - want) / std::max(scale, 1e-10) : 0.0;
}

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0, bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

// Central finite-difference check of d(sum(w .* f(inputs)))/d(inputs).
// Probes `probes` random entries per differentiable input and returns the
// worst relative error. The weight field keeps the full Jacobian in play.
inline double grad_check(
    const std::function<Tensor(const std::vector<Tensor>&)>& f,
    std::vector<Tensor> inputs, Rng& rng, int probes = 8, double step = 1e-6) {
  Tensor probe_out = f(inputs);
  Tensor weights = random_tensor(probe_out.shape(), rng, 0.25, 1.25);

  auto loss_value = [&]() {
    Tensor out = f(inputs);
    return sum(mul(out, weights)).item();
  };

  Tape tape;
  {
    TapeScope scope(tape);
    Tensor loss = sum(mul(f(inputs), weights));
    backward(loss);
  }

  double worst = 0.0;
  for (auto& x : inputs) {
    if (!x.requires_grad()) continue;
    auto grad = x.grad();
    auto data = x.data();
    for (int p = 0; p < probes; ++p) {
      int64_t j = static_cast<int64_t>(rng.below(static_cast<uint64_t>(x.size())));
      double saved = data[j];
      data[j] = saved + step;
      double up = loss_value();
      data[j] = saved - step;
      double down = loss_value();
      data[j] = saved;
      double fd = (up - down) / (2.0 * step);
      worst = std::max(worst, rel_err(grad[j], fd));
    }
  }
  return worst;
}

}  // namespace lnf::testutil
