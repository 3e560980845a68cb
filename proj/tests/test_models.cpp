#include <doctest.h>

#include <cmath>

#include "lnf/models.hpp"
#include "test_util.hpp"

using namespace lnf;
using models::Ablation;
using models::Kind;
using models::Model;
using models::ModelSpec;
using models::Preset;

namespace {

ModelSpec lnf_spec(Preset preset, Ablation ablation,
                   std::vector<models::ComponentShape> inputs,
                   std::vector<models::ComponentShape> outputs) {
  ModelSpec s;
  s.kind = Kind::LnfNo;
  s.preset = preset;
  s.ablation = ablation;
  s.inputs = std::move(inputs);
  s.outputs = std::move(outputs);
  if (preset == Preset::D) s.dec_channels = 64;
  return s;
}

ModelSpec don_spec(Preset preset, std::vector<models::ComponentShape> inputs,
                   std::vector<models::ComponentShape> outputs) {
  ModelSpec s;
  s.kind = Kind::DeepOnet;
  s.preset = preset;
  s.inputs = std::move(inputs);
  s.outputs = std::move(outputs);
  return s;
}

// closed-form layer-table counts (independent of the builder)
int64_t lin(int64_t in, int64_t out) { return in * out + out; }
int64_t conv1d(int64_t cin, int64_t cout, int64_t k) { return cout * cin * k + cout; }
int64_t enc1d_count() { return conv1d(1, 64, 9) + 3 * conv1d(64, 64, 9); }

}  // namespace

TEST_CASE("preset A parameter count matches the published Laplace total") {
  // N_b = 200 -> conv lengths 200,100,50,25 -> d = 64*25 = 1600; D = 51^2
  Model m(lnf_spec(Preset::A, Ablation::Full, {{"g", {200}}}, {{"u", {51, 51}}}), 0);
  int64_t d = 1600, D = 2601;
  int64_t want = enc1d_count() + (lin(d, 256) + lin(256, D)) +
                 (lin(d, 256) + lin(256, 256) + lin(256, D)) +
                 (conv1d(1, 32, 9) + conv1d(32, 32, 9) + 32 * 9 + 1) + 1;
  // decoder convs are 3x3 2-D: rewrite the last bracket explicitly
  int64_t dec = (32 * 1 * 9 + 32) + (32 * 32 * 9 + 32) + (1 * 32 * 9 + 1);
  want = enc1d_count() + (lin(d, 256) + lin(256, D)) +
         (lin(d, 256) + lin(256, 256) + lin(256, D)) + dec + 1;
  CHECK(m.param_count() == want);
  CHECK(m.param_count() == 2'343'700);
}

TEST_CASE("ablation family parameter counts at PB dims match the published table") {
  auto count = [](Ablation ab) {
    Model m(lnf_spec(Preset::A, ab, {{"g", {400}}}, {{"u", {101, 101}}}), 0);
    return m.param_count();
  };
  CHECK(count(Ablation::Full) == 7'069'300);
  CHECK(count(Ablation::OnlyNonlinear) == 3'628'187);
  CHECK(count(Ablation::OnlyLinear) == 3'562'395);
  CHECK(count(Ablation::NoEncoder) == 5'524'276);
  CHECK(count(Ablation::NoDecoder) == 7'059'443);
  CHECK(count(Ablation::NoEncDec) == 5'514'419);
  CHECK(count(Ablation::PureNonlinearMlp) == 2'790'106);
  CHECK(count(Ablation::PureLinearMlp) == 4'090'602);
}

TEST_CASE("preset B/D/E parameter counts match the published totals") {
  Model b(lnf_spec(Preset::B, Ablation::Full, {{"g", {400}}, {"f", {101, 101}}},
                   {{"u", {101, 101}}}),
          0);
  CHECK(b.param_count() == 8'145'940);

  Model d(lnf_spec(Preset::D, Ablation::Full,
                   {{"g_phi", {512}}, {"g_cp", {512}}, {"g_cm", {512}}},
                   {{"phi", {129, 129}}, {"c_plus", {129, 129}}, {"c_minus", {129, 129}}}),
          0);
  CHECK(d.param_count() == 32'392'906);

  Model e(lnf_spec(Preset::E, Ablation::Full, {{"g", {6146}}}, {{"u", {33, 33, 33}}}), 0);
  CHECK(e.param_count() == 21'714'116);
}

TEST_CASE("deeponet parameter counts match the published totals") {
  Model laplace(don_spec(Preset::Siso, {{"g", {200}}}, {{"u", {51, 51}}}), 0);
  CHECK(laplace.param_count() == 973'313);

  Model burgers(don_spec(Preset::Siso, {{"u0", {64}}}, {{"u", {64, 100}}}), 0);
  CHECK(burgers.param_count() == 938'497);

  Model pb_src(don_spec(Preset::Miso, {{"g", {400}}, {"f", {101, 101}}},
                        {{"u", {101, 101}}}),
               0);
  CHECK(pb_src.param_count() == 4'096'769);

  Model pnp(don_spec(Preset::Mimo,
                     {{"g_phi", {512}}, {"g_cp", {512}}, {"g_cm", {512}}},
                     {{"phi", {129, 129}}, {"c_plus", {129, 129}}, {"c_minus", {129, 129}}}),
            0);
  CHECK(pnp.param_count() == 1'841'667);
}

TEST_CASE("build determinism and structural checks") {
  ModelSpec s = lnf_spec(Preset::A, Ablation::Full, {{"g", {40}}}, {{"u", {9, 9}}});
  s.enc1d_channels = 8;
  s.branch_width = 16;
  s.dec_channels = 4;
  Model m1(s, 7), m2(s, 7), m3(s, 8);
  bool same = true, differ = false;
  for (size_t i = 0; i < m1.params().count(); ++i) {
    auto a = m1.params().params()[i].tensor.data();
    auto b = m2.params().params()[i].tensor.data();
    auto c = m3.params().params()[i].tensor.data();
    same = same && std::equal(a.begin(), a.end(), b.begin());
    differ = differ || !std::equal(a.begin(), a.end(), c.begin());
  }
  CHECK(same);
  CHECK(differ);

  // pure linear variant has no nonlinear activation anywhere: only one
  // affine layer plus alpha
  Model pl(lnf_spec(Preset::A, Ablation::PureLinearMlp, {{"g", {40}}}, {{"u", {9, 9}}}), 0);
  CHECK(pl.params().count() == 3);  // pl.0.w, pl.0.b, alpha
  CHECK(pl.params().contains("pl.0.w"));
  CHECK(pl.params().contains("alpha"));
}

TEST_CASE("zeroing the linear branch annihilates the output") {
  ModelSpec s = lnf_spec(Preset::A, Ablation::NoDecoder, {{"g", {24}}}, {{"u", {7, 7}}});
  s.enc1d_channels = 4;
  s.branch_width = 8;
  Model m(s, 3);
  for (const char* name : {"bl.0.w", "bl.0.b", "bl.1.w", "bl.1.b"}) {
    auto d = m.params().at(name).data();
    std::fill(d.begin(), d.end(), 0.0);
  }
  Rng rng(1, 0);
  Tensor g = testutil::random_tensor({2, 24}, rng);
  Tensor out = m.forward({g}, 2);
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("doubling alpha doubles the pre-decoder output exactly") {
  ModelSpec s = lnf_spec(Preset::A, Ablation::NoDecoder, {{"g", {24}}}, {{"u", {7, 7}}});
  s.enc1d_channels = 4;
  s.branch_width = 8;
  Model m(s, 3);
  Rng rng(2, 0);
  Tensor g = testutil::random_tensor({1, 24}, rng);
  Tensor once = m.forward({g}, 1);
  m.params().at("alpha").data()[0] = 2.0;
  Tensor twice = m.forward({g}, 1);
  for (int64_t i = 0; i < once.size(); ++i) {
    CHECK(twice.data()[i] == 2.0 * once.data()[i]);
  }
}

TEST_CASE("theorem-1 reduction: forcing B_L to one recovers the plain network") {
  ModelSpec s = lnf_spec(Preset::A, Ablation::NoEncDec, {{"g", {30}}}, {{"u", {8, 8}}});
  s.branch_width = 16;
  Model full(s, 11);
  // B_L(z) == 1: zero both affine layers, bias of the second layer = 1
  for (const char* name : {"bl.0.w", "bl.0.b", "bl.1.w"}) {
    auto d = full.params().at(name).data();
    std::fill(d.begin(), d.end(), 0.0);
  }
  {
    auto d = full.params().at("bl.1.b").data();
    std::fill(d.begin(), d.end(), 1.0);
  }
  full.params().at("alpha").data()[0] = 1.0;

  ModelSpec sn = lnf_spec(Preset::A, Ablation::PureNonlinearMlp, {{"g", {30}}}, {{"u", {8, 8}}});
  sn.branch_width = 16;
  Model bare(sn, 12);
  for (const char* name : {"bn.0.w", "bn.0.b", "bn.1.w", "bn.1.b", "bn.2.w", "bn.2.b"}) {
    auto src = full.params().at(name).data();
    auto dst = bare.params().at(name).data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  bare.params().at("alpha").data()[0] = 1.0;

  Rng rng(3, 0);
  Tensor g = testutil::random_tensor({3, 30}, rng);
  Tensor a = full.forward({g}, 3);
  Tensor b = bare.forward({g}, 3);
  double max_diff = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(a.data()[i] - b.data()[i]));
  }
  CHECK(max_diff == 0.0);
}

TEST_CASE("permuting (component, encoder) pairs leaves the output bit-identical") {
  ModelSpec s = lnf_spec(Preset::B, Ablation::NoDecoder, {{"g", {20}}, {"f", {65, 65}}},
                         {{"u", {9, 9}}});
  s.enc1d_channels = 4;
  s.enc2d_channels = 4;
  s.branch_width = 8;
  Model m(s, 6);
  Rng rng(8, 0);
  Tensor g = testutil::random_tensor({2, 20}, rng);
  Tensor f = testutil::random_tensor({2, 65 * 65}, rng);
  Tensor fwd = m.forward_named({{"g", g}, {"f", f}}, 2);
  Tensor swapped = m.forward_named({{"f", f}, {"g", g}}, 2);
  for (int64_t i = 0; i < fwd.size(); ++i) {
    CHECK(fwd.data()[i] == swapped.data()[i]);
  }
  CHECK_THROWS_AS(m.forward_named({{"g", g}, {"x", f}}, 2), DimensionError);
}

TEST_CASE("batch independence: batched forward equals stacked per-sample runs") {
  ModelSpec s = lnf_spec(Preset::B, Ablation::Full, {{"g", {20}}, {"f", {65, 65}}},
                         {{"u", {9, 9}}});
  s.enc1d_channels = 4;
  s.enc2d_channels = 4;
  s.branch_width = 8;
  s.dec_channels = 4;
  Model m(s, 5);
  Rng rng(4, 0);
  Tensor g = testutil::random_tensor({3, 20}, rng);
  Tensor f = testutil::random_tensor({3, 65 * 65}, rng);
  Tensor batched = m.forward({g, f}, 3);
  for (int b = 0; b < 3; ++b) {
    Tensor gb = slice(g, 0, b, b + 1);
    Tensor fb = slice(f, 0, b, b + 1);
    Tensor single = m.forward({gb, fb}, 1);
    for (int64_t i = 0; i < single.size(); ++i) {
      CHECK(single.data()[i] == batched.data()[b * single.size() + i]);
    }
  }
}

TEST_CASE("deeponet: zero branch output gives the constant beta prediction") {
  ModelSpec s = don_spec(Preset::Siso, {{"g", {12}}}, {{"u", {6, 6}}});
  s.don_basis = 8;
  s.don_width = 8;
  Model m(s, 9);
  // zero the last branch layer so b(u) == 0, then prediction == beta
  for (const char* name : {"branch0.4.w", "branch0.4.b"}) {
    auto d = m.params().at(name).data();
    std::fill(d.begin(), d.end(), 0.0);
  }
  m.params().at("beta").data()[0] = 0.73;
  Rng rng(5, 0);
  Tensor g = testutil::random_tensor({2, 12}, rng);
  Tensor out = m.forward({g}, 2);
  for (double v : out.data()) CHECK(v == 0.73);
}

TEST_CASE("deeponet: prediction is linear in the branch embedding") {
  ModelSpec s = don_spec(Preset::Siso, {{"g", {12}}}, {{"u", {6, 6}}});
  s.don_basis = 8;
  s.don_width = 8;
  Model m(s, 10);
  m.params().at("beta").data()[0] = 0.0;
  Rng rng(6, 0);
  Tensor g = testutil::random_tensor({1, 12}, rng);
  Tensor base = m.forward({g}, 1);
  // scale the last branch layer by 3: embedding scales by 3, so does the output
  for (const char* name : {"branch0.4.w", "branch0.4.b"}) {
    auto d = m.params().at(name).data();
    for (double& v : d) v *= 3.0;
  }
  Tensor scaled = m.forward({g}, 1);
  for (int64_t i = 0; i < base.size(); ++i) {
    CHECK(scaled.data()[i] == doctest::Approx(3.0 * base.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("model forwards differentiate correctly (tiny instances)") {
  Rng rng(7, 0);
  {
    ModelSpec s = lnf_spec(Preset::A, Ablation::Full, {{"g", {16}}}, {{"u", {6, 6}}});
    s.enc1d_channels = 3;
    s.branch_width = 6;
    s.dec_channels = 3;
    Model m(s, 21);
    Tensor g = testutil::random_tensor({2, 16}, rng);
    std::vector<Tensor> params;
    for (auto& p : m.params().params()) params.push_back(p.tensor);
    auto f = [&](const std::vector<Tensor>&) { return m.forward({g}, 2); };
    CHECK(testutil::grad_check(f, params, rng, 3) < 1e-5);
  }
  {
    ModelSpec s = don_spec(Preset::Mimo, {{"a", {10}}, {"b", {10}}},
                           {{"u1", {4, 4}}, {"u2", {4, 4}}});
    s.don_basis = 6;
    s.don_width = 6;
    s.don_depth = 3;
    Model m(s, 22);
    Tensor a = testutil::random_tensor({2, 10}, rng);
    Tensor b = testutil::random_tensor({2, 10}, rng);
    std::vector<Tensor> params;
    for (auto& p : m.params().params()) params.push_back(p.tensor);
    auto f = [&](const std::vector<Tensor>&) { return m.forward({a, b}, 2); };
    CHECK(testutil::grad_check(f, params, rng, 3) < 1e-5);
  }
}

TEST_CASE("spec validation rejects inconsistent dims") {
  CHECK_THROWS_AS(Model(lnf_spec(Preset::D, Ablation::Full, {{"g", {16}}},
                                 {{"a", {5, 5}}, {"b", {6, 6}}}),
                        0),
                  ConfigError);
  CHECK_THROWS_AS(Model(lnf_spec(Preset::E, Ablation::Full, {{"g", {16}}},
                                 {{"u", {5, 5}}}),
                        0),
                  ConfigError);
  CHECK_THROWS_AS(Model(lnf_spec(Preset::B, Ablation::Full, {{"f", {6, 6}}},
                                 {{"u", {5, 5}}}),
                        0),
                  ConfigError);  // 2-D input too small for the 8x8 pool
  ModelSpec bad_don = don_spec(Preset::Miso, {{"g", {6}}}, {{"u", {4, 4}}});
  CHECK_THROWS_AS(Model(bad_don, 0), ConfigError);
}
