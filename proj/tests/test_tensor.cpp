#include <doctest.h>

#include <cmath>

#include "lnf/tensor.hpp"
#include "test_util.hpp"

using namespace lnf;
using testutil::grad_check;
using testutil::random_tensor;

TEST_CASE("make_tensor basics") {
  Tensor z = Tensor::zeros({2, 2});
  CHECK(z.size() == 4);
  for (double v : z.data()) CHECK(v == 0.0);

  double buf[] = {1, 2, 3};
  Tensor t = Tensor::from_data({3}, buf);
  CHECK(t.data()[0] == 1.0);
  CHECK(t.data()[2] == 3.0);

  CHECK_THROWS_AS(Tensor::from_data({2}, buf), DimensionError);
  CHECK_THROWS_AS(Tensor::zeros({0, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor::zeros({}), DimensionError);
}

TEST_CASE("matmul forward") {
  double eye[] = {1, 0, 0, 1};
  double m[] = {1, 2, 3, 4};
  Tensor out = matmul(Tensor::from_data({2, 2}, eye), Tensor::from_data({2, 2}, m));
  for (int i = 0; i < 4; ++i) CHECK(out.data()[i] == m[i]);

  double a[] = {1, 2};
  double b[] = {3, 4};
  Tensor c = matmul(Tensor::from_data({1, 2}, a), Tensor::from_data({2, 1}, b));
  CHECK(c.item() == 11.0);

  CHECK_THROWS_AS(
      matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
}

TEST_CASE("matmul gradient vs finite differences") {
  Rng rng(3, 1);
  auto f = [](const std::vector<Tensor>& in) { return matmul(in[0], in[1]); };
  std::vector<Tensor> inputs{random_tensor({4, 3}, rng, -1, 1, true),
                             random_tensor({3, 5}, rng, -1, 1, true)};
  CHECK(grad_check(f, inputs, rng, 12) < 1e-6);
}

TEST_CASE("matmul_nt and linear gradients") {
  Rng rng(4, 1);
  auto f = [](const std::vector<Tensor>& in) { return matmul_nt(in[0], in[1]); };
  std::vector<Tensor> inputs{random_tensor({3, 4}, rng, -1, 1, true),
                             random_tensor({5, 4}, rng, -1, 1, true)};
  CHECK(grad_check(f, inputs, rng, 12) < 1e-5);

  auto g = [](const std::vector<Tensor>& in) { return linear(in[0], in[1], in[2]); };
  std::vector<Tensor> lin{random_tensor({4, 3}, rng, -1, 1, true),
                          random_tensor({3, 6}, rng, -1, 1, true),
                          random_tensor({6}, rng, -1, 1, true)};
  CHECK(grad_check(g, lin, rng, 12) < 1e-5);
}

TEST_CASE("conv_nd identity kernel and boundary sums") {
  double in[] = {1, 2, 3, 4};
  double k1[] = {1};
  Tensor out = conv_nd(Tensor::from_data({1, 4}, in), Tensor::from_data({1, 1, 1}, k1),
                       Tensor::zeros({1}), 1, 0, 1);
  for (int i = 0; i < 4; ++i) CHECK(out.data()[i] == in[i]);

  Tensor ones_in = Tensor::full({1, 8}, 1.0);
  Tensor ones_k = Tensor::full({1, 1, 3}, 1.0);
  Tensor s = conv_nd(ones_in, ones_k, Tensor::zeros({1}), 1, 1, 1);
  std::vector<double> want = {2, 3, 3, 3, 3, 3, 3, 2};
  for (int i = 0; i < 8; ++i) CHECK(s.data()[i] == want[i]);

  // stride 1, padding (k-1)/2, delta kernel is the identity map
  Rng rng(5, 2);
  Tensor x = random_tensor({1, 6, 7}, rng);
  Tensor delta = Tensor::zeros({1, 1, 3, 3});
  delta.data()[4] = 1.0;
  Tensor y = conv_nd(x, delta, Tensor::zeros({1}), 1, 1, 2);
  for (int64_t i = 0; i < x.size(); ++i) CHECK(y.data()[i] == x.data()[i]);

  CHECK_THROWS_AS(conv_nd(Tensor::zeros({1, 2}), Tensor::zeros({1, 1, 5}),
                          Tensor::zeros({1}), 1, 0, 1),
                  DimensionError);
}

TEST_CASE("conv_nd gradients (1-D, 2-D, 3-D, strided, padded)") {
  Rng rng(6, 3);
  auto conv2 = [](const std::vector<Tensor>& in) {
    return conv_nd(in[0], in[1], in[2], 2, 1, 2);
  };
  std::vector<Tensor> in2{random_tensor({2, 7, 6}, rng, -1, 1, true),
                          random_tensor({3, 2, 3, 3}, rng, -1, 1, true),
                          random_tensor({3}, rng, -1, 1, true)};
  CHECK(grad_check(conv2, in2, rng, 10) < 1e-5);

  auto conv1 = [](const std::vector<Tensor>& in) {
    return conv_nd(in[0], in[1], in[2], 2, 4, 1);
  };
  std::vector<Tensor> in1{random_tensor({2, 11}, rng, -1, 1, true),
                          random_tensor({2, 2, 9}, rng, -1, 1, true),
                          random_tensor({2}, rng, -1, 1, true)};
  CHECK(grad_check(conv1, in1, rng, 10) < 1e-5);

  auto conv3 = [](const std::vector<Tensor>& in) {
    return conv_nd(in[0], in[1], in[2], 1, 1, 3);
  };
  std::vector<Tensor> in3{random_tensor({1, 4, 5, 4}, rng, -1, 1, true),
                          random_tensor({2, 1, 3, 3, 3}, rng, -1, 1, true),
                          random_tensor({2}, rng, -1, 1, true)};
  CHECK(grad_check(conv3, in3, rng, 10) < 1e-5);
}

TEST_CASE("activations") {
  double xs[] = {0.0, 0.5, -1.0};
  Tensor x = Tensor::from_data({3}, xs);
  CHECK(activation(x, Act::Tanh).data()[0] == 0.0);
  Tensor r = activation(x, Act::Relu);
  CHECK(r.data()[1] == 0.5);
  CHECK(r.data()[2] == 0.0);

  // darcy map: 0.1 + softplus(raw) stays above 0.1
  Rng rng(9, 0);
  Tensor raw = random_tensor({64}, rng, -6, 6);
  Tensor sp = activation(raw, Act::Softplus);
  for (double v : sp.data()) CHECK(v + 0.1 > 0.1);

  CHECK_THROWS_AS(activation(x, static_cast<Act>(42)), ConfigError);
}

TEST_CASE("activation gradients vs finite differences") {
  Rng rng(10, 0);
  for (Act kind : {Act::Tanh, Act::Relu, Act::Softplus, Act::Sinh}) {
    auto f = [kind](const std::vector<Tensor>& in) {
      return activation(in[0], kind);
    };
    // keep relu probes away from the kink
    std::vector<Tensor> in{random_tensor({40}, rng, 0.1, 2.0, true)};
    CHECK(grad_check(f, in, rng, 10) < 1e-6);
  }
  // spec example: d/dx tanh at 0.5
  Tensor x = Tensor::scalar(0.5, true);
  Tape tape;
  {
    TapeScope scope(tape);
    backward(sum(activation(x, Act::Tanh)));
  }
  double got = x.grad()[0];
  double t = std::tanh(0.5);
  CHECK(std::abs(got - (1.0 - t * t)) < 1e-8);
}

TEST_CASE("ewise: identities, scalar broadcast, errors") {
  Rng rng(12, 0);
  Tensor a = random_tensor({5}, rng);
  Tensor ones = Tensor::full({5}, 1.0);
  Tensor prod = mul(a, ones);
  for (int i = 0; i < 5; ++i) CHECK(prod.data()[i] == a.data()[i]);

  double v[] = {1, 2};
  Tensor two = mul(Tensor::from_data({2}, v), Tensor::scalar(2.0));
  CHECK(two.data()[0] == 2.0);
  CHECK(two.data()[1] == 4.0);

  CHECK_THROWS_AS(add(Tensor::zeros({3}), Tensor::zeros({4})), DimensionError);
}

TEST_CASE("ewise gradients (including scalar reduction)") {
  Rng rng(13, 0);
  for (Ewise kind : {Ewise::Add, Ewise::Sub, Ewise::Mul}) {
    auto f = [kind](const std::vector<Tensor>& in) {
      return ewise(in[0], in[1], kind);
    };
    std::vector<Tensor> in{random_tensor({6}, rng, -1, 1, true),
                           random_tensor({6}, rng, -1, 1, true)};
    CHECK(grad_check(f, in, rng, 8) < 1e-6);
    std::vector<Tensor> sc{random_tensor({6}, rng, -1, 1, true),
                           random_tensor({1}, rng, -1, 1, true)};
    CHECK(grad_check(f, sc, rng, 8) < 1e-6);
  }
}

TEST_CASE("adaptive_avg_pool2d") {
  Tensor c = Tensor::full({2, 5, 7}, 3.25);
  Tensor pooled = adaptive_avg_pool2d(c, 2, 3);
  for (double v : pooled.data()) CHECK(v == 3.25);

  // row-index field, 4x4 -> 2x2: rows average to 0.5 and 2.5
  Tensor rowf = Tensor::zeros({1, 4, 4});
  for (int r = 0; r < 4; ++r) {
    for (int cc = 0; cc < 4; ++cc) rowf.data()[r * 4 + cc] = r;
  }
  Tensor p = adaptive_avg_pool2d(rowf, 2, 2);
  CHECK(p.data()[0] == 0.5);
  CHECK(p.data()[1] == 0.5);
  CHECK(p.data()[2] == 2.5);
  CHECK(p.data()[3] == 2.5);

  Rng rng(14, 0);
  Tensor x = random_tensor({2, 3, 4}, rng);
  Tensor same = adaptive_avg_pool2d(x, 3, 4);
  for (int64_t i = 0; i < x.size(); ++i) CHECK(same.data()[i] == x.data()[i]);

  CHECK_THROWS_AS(adaptive_avg_pool2d(x, 4, 4), DimensionError);

  auto f = [](const std::vector<Tensor>& in) {
    return adaptive_avg_pool2d(in[0], 3, 2);
  };
  std::vector<Tensor> in{random_tensor({2, 7, 5}, rng, -1, 1, true)};
  CHECK(grad_check(f, in, rng, 10) < 1e-6);
}

TEST_CASE("shape ops") {
  Rng rng(15, 0);
  Tensor x = random_tensor({4}, rng);
  Tensor r = reshape(reshape(x, {2, 2}), {4});
  for (int i = 0; i < 4; ++i) CHECK(r.data()[i] == x.data()[i]);
  CHECK_THROWS_AS(reshape(x, {3}), DimensionError);

  double a[] = {1, 2};
  double b[] = {3};
  Tensor cat = concat({Tensor::from_data({2}, a), Tensor::from_data({1}, b)}, 0);
  CHECK(cat.data()[0] == 1.0);
  CHECK(cat.data()[2] == 3.0);

  // slice + complement reconstructs the original
  Tensor big = random_tensor({3, 5}, rng);
  Tensor left = slice(big, 1, 0, 2);
  Tensor right = slice(big, 1, 2, 5);
  Tensor joined = concat({left, right}, 1);
  for (int64_t i = 0; i < big.size(); ++i) CHECK(joined.data()[i] == big.data()[i]);

  CHECK_THROWS_AS(slice(big, 1, 3, 3), DimensionError);
  CHECK_THROWS_AS(concat({Tensor::zeros({2, 2}), Tensor::zeros({3, 3})}, 0),
                  DimensionError);

  auto f = [](const std::vector<Tensor>& in) {
    Tensor l = slice(in[0], 1, 0, 2);
    Tensor rgt = slice(in[0], 1, 2, 5);
    return concat({reshape(rgt, {9}), reshape(l, {6})}, 0);
  };
  std::vector<Tensor> in{random_tensor({3, 5}, rng, -1, 1, true)};
  CHECK(grad_check(f, in, rng, 10) < 1e-6);
}

TEST_CASE("sum and sqrt gradients") {
  Rng rng(16, 0);
  auto f = [](const std::vector<Tensor>& in) { return sqrt_elem(in[0]); };
  std::vector<Tensor> in{random_tensor({12}, rng, 0.2, 2.0, true)};
  CHECK(grad_check(f, in, rng, 8) < 1e-6);
}

TEST_CASE("backward basics") {
  Tensor x = Tensor::full({5}, 2.0, true);
  Tape tape;
  {
    TapeScope scope(tape);
    backward(sum(x));
  }
  for (double g : x.grad()) CHECK(g == 1.0);

  double v[] = {1, 2};
  Tensor y = Tensor::from_data({2}, v, true);
  Tape tape2;
  {
    TapeScope scope(tape2);
    backward(sum(mul(y, y)));
  }
  CHECK(y.grad()[0] == 2.0);
  CHECK(y.grad()[1] == 4.0);
}

TEST_CASE("backward contract errors and accumulation") {
  Tensor x = Tensor::full({3}, 1.0, true);
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(mul(x, x));
    Tensor vec = mul(x, Tensor::scalar(2.0));
    CHECK_THROWS_AS(backward(vec), ContractError);  // non-scalar loss
  }
  backward(loss);
  CHECK(x.grad()[0] == 2.0);
  backward(loss);  // accumulate
  CHECK(x.grad()[0] == 4.0);
  x.zero_grad();
  backward(loss);
  CHECK(x.grad()[0] == 2.0);

  Tensor off_tape = sum(x);  // no active tape: not recorded
  CHECK_THROWS_AS(backward(off_tape), ContractError);
}

TEST_CASE("backward linearity") {
  Rng rng(17, 0);
  Tensor x = random_tensor({6}, rng, -1, 1, true);
  Tensor w1 = random_tensor({6}, rng);
  Tensor w2 = random_tensor({6}, rng);
  double alpha = 1.75, beta = -0.5;

  auto grad_of = [&](const std::function<Tensor()>& loss_fn) {
    x.zero_grad();
    Tape tape;
    TapeScope scope(tape);
    backward(loss_fn());
    return std::vector<double>(x.grad().begin(), x.grad().end());
  };

  auto ga = grad_of([&] { return sum(mul(x, w1)); });
  auto gb = grad_of([&] { return sum(mul(x, w2)); });
  auto gc = grad_of([&] {
    Tensor f = mul(sum(mul(x, w1)), Tensor::scalar(alpha));
    Tensor g = mul(sum(mul(x, w2)), Tensor::scalar(beta));
    return add(f, g);
  });
  for (int i = 0; i < 6; ++i) {
    CHECK(gc[i] == doctest::Approx(alpha * ga[i] + beta * gb[i]).epsilon(1e-14));
  }
}

TEST_CASE("tape determinism: identical forwards are bit-identical") {
  auto run = [] {
    Rng rng(123, 9);
    Tensor x = random_tensor({3, 4}, rng, -1, 1, true);
    Tensor w = random_tensor({4, 2}, rng, -1, 1, true);
    Tensor b = random_tensor({2}, rng, -1, 1, true);
    Tape tape;
    TapeScope scope(tape);
    Tensor out = activation(linear(x, w, b), Act::Tanh);
    return std::vector<double>(out.data().begin(), out.data().end());
  };
  CHECK(run() == run());
}
