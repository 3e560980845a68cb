#include <doctest.h>

#include <cmath>

#include "lnf/nn.hpp"
#include "test_util.hpp"

using namespace lnf;

namespace {

nn::ParamSet small_set(uint64_t seed) {
  std::vector<nn::LayerSpec> layers = {
      {"lin", {100, 50}, 100, 50},
      {"conv", {8, 4, 9}, 36, 8},
  };
  return nn::init_params(layers, seed, /*with_alpha=*/true);
}

}  // namespace

TEST_CASE("init: determinism, bounds, bias zero, alpha") {
  nn::ParamSet a = small_set(42);
  nn::ParamSet b = small_set(42);
  for (size_t i = 0; i < a.count(); ++i) {
    CHECK(a.params()[i].name == b.params()[i].name);
    auto da = a.params()[i].tensor.data();
    auto db = b.params()[i].tensor.data();
    CHECK(std::equal(da.begin(), da.end(), db.begin()));
  }
  nn::ParamSet c = small_set(43);
  bool any_diff = false;
  for (size_t i = 0; i < a.count() && !any_diff; ++i) {
    auto da = a.params()[i].tensor.data();
    auto dc = c.params()[i].tensor.data();
    any_diff = !std::equal(da.begin(), da.end(), dc.begin());
  }
  CHECK(any_diff);

  // linear 100->50: |w| < 1/sqrt(100) = 0.1, bias exactly zero
  for (double w : a.at("lin.w").data()) CHECK(std::abs(w) < 0.1);
  for (double bias : a.at("lin.b").data()) CHECK(bias == 0.0);

  CHECK(a.at("alpha").item() == 1.0);
  CHECK(a.decay_of("alpha") == nn::DecayClass::Excluded);
  CHECK(a.decay_of("lin.b") == nn::DecayClass::Excluded);
  CHECK(a.decay_of("lin.w") == nn::DecayClass::Decayed);

  CHECK_THROWS_AS(nn::init_params({{"bad", {0, 4}, 0, 4}}, 0), ConfigError);
}

TEST_CASE("partition_decay") {
  nn::ParamSet ps = small_set(1);
  auto [decayed, excluded] = nn::partition_decay(ps);
  CHECK(decayed.size() + excluded.size() == ps.count());
  for (const auto& n : excluded) {
    CHECK((n == "alpha" || n.ends_with(".b")));
  }

  nn::ParamSet weights_only;
  weights_only.add("w1", Tensor::zeros({3}), nn::DecayClass::Decayed);
  weights_only.add("w2", Tensor::zeros({3}), nn::DecayClass::Decayed);
  auto [d2, e2] = nn::partition_decay(weights_only);
  CHECK(e2.empty());
  CHECK(d2.size() == 2);
}

TEST_CASE("adamw: bias-corrected first step matches the hand formula") {
  nn::ParamSet ps;
  ps.add("w", Tensor::full({3}, 1.0), nn::DecayClass::Decayed);
  nn::AdamWState st = nn::AdamWState::for_params(ps);
  double g[] = {0.3, -0.7, 0.01};
  std::copy(g, g + 3, ps.at("w").grad().begin());
  double lr = 1e-2;
  nn::adamw_step(ps, st, lr, 0.0);
  // t=1: mhat = g, vhat = g^2 -> theta - lr * g / (|g| + eps)
  for (int i = 0; i < 3; ++i) {
    double want = 1.0 - lr * g[i] / (std::abs(g[i]) + st.eps);
    CHECK(ps.at("w").data()[i] == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("adamw: decay exclusion and pure-decay step") {
  nn::ParamSet ps;
  ps.add("w", Tensor::full({2}, 2.0), nn::DecayClass::Decayed);
  ps.add("b", Tensor::full({2}, 2.0), nn::DecayClass::Excluded);
  nn::AdamWState st = nn::AdamWState::for_params(ps);
  ps.at("w").grad();  // zero grads
  ps.at("b").grad();
  nn::adamw_step(ps, st, 0.01, 0.1);
  // excluded with zero grad: unchanged
  CHECK(ps.at("b").data()[0] == 2.0);
  // decayed with zero grad: multiplied by (1 - lr*wd) = 1 - 1e-3
  CHECK(ps.at("w").data()[0] == doctest::Approx(2.0 * (1.0 - 1e-3)).epsilon(1e-15));
}

TEST_CASE("adamw: lr = 0 leaves parameters unchanged") {
  nn::ParamSet ps = small_set(5);
  std::vector<double> before(ps.at("lin.w").data().begin(),
                             ps.at("lin.w").data().end());
  for (auto& p : ps.params()) {
    auto gr = p.tensor.grad();
    for (size_t i = 0; i < gr.size(); ++i) gr[i] = 0.37 * double(i % 7);
  }
  nn::AdamWState st = nn::AdamWState::for_params(ps);
  nn::adamw_step(ps, st, 0.0, 0.1);
  auto after = ps.at("lin.w").data();
  CHECK(std::equal(before.begin(), before.end(), after.begin()));
}

TEST_CASE("adamw: excluded parameters see identical trajectories for any wd") {
  auto run = [](double wd) {
    nn::ParamSet ps;
    ps.add("b", Tensor::full({4}, 0.5), nn::DecayClass::Excluded);
    nn::AdamWState st = nn::AdamWState::for_params(ps);
    Rng rng(77, 0);
    for (int step = 0; step < 5; ++step) {
      auto gr = ps.at("b").grad();
      for (double& g : gr) g = rng.uniform(-1, 1);
      nn::adamw_step(ps, st, 1e-3, wd);
    }
    return std::vector<double>(ps.at("b").data().begin(), ps.at("b").data().end());
  };
  CHECK(run(0.0) == run(0.1));
}

TEST_CASE("adamw: missing gradient is a contract error") {
  nn::ParamSet ps;
  ps.add("w", Tensor::full({2}, 1.0), nn::DecayClass::Decayed);
  nn::AdamWState st = nn::AdamWState::for_params(ps);
  CHECK_THROWS_AS(nn::adamw_step(ps, st, 1e-3, 0.0), ContractError);
}
