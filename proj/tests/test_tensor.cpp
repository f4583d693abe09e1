#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "ravenforge/adam.hpp"
#include "ravenforge/checkpoint.hpp"
#include "ravenforge/init.hpp"
#include "ravenforge/nn.hpp"
#include "ravenforge/rng.hpp"
#include "ravenforge/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace rvf;
using rvf::testing::max_grad_rel_error;

namespace {

Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0,
                             bool grad = true) {
  auto t = Tensor<double>::zeros(std::move(shape));
  rng.fill_uniform<double>(t.value_mut(), -scale, scale);
  t.set_requires_grad(grad);
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("backward: sum gives all-ones gradient") {
  auto x = Tensor<double>::from_vec({4}, {1, 2, 3, 4}).set_requires_grad(true);
  backward(sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward: sum of squares at [1,2,3] gives [2,4,6]") {
  auto x = Tensor<double>::from_vec({3}, {1, 2, 3}).set_requires_grad(true);
  backward(sum(square(x)));
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[1] == doctest::Approx(4.0));
  CHECK(x.grad()[2] == doctest::Approx(6.0));
}

TEST_CASE("backward: repeated call without reset accumulates") {
  auto x = Tensor<double>::from_vec({2}, {1, 1}).set_requires_grad(true);
  auto loss = sum(x);
  backward(loss);
  backward(loss);
  CHECK(x.grad()[0] == 2.0);
}

TEST_CASE("backward: non-scalar loss is a contract error") {
  auto x = Tensor<double>::from_vec({2}, {1, 2}).set_requires_grad(true);
  CHECK_THROWS_AS(backward(x), ContractError);
}

TEST_CASE("conv2d: 1x1 identity kernel reproduces the input") {
  Rng rng(1);
  auto x = random_tensor({1, 1, 4, 4}, rng);
  auto w = Tensor<float>::from_vec({1, 1, 1, 1}, {1.0f});
  auto b = Tensor<float>::zeros({1});
  auto xf = Tensor<float>::zeros({1, 1, 4, 4});
  for (int i = 0; i < 16; ++i) xf.value_mut()[i] = static_cast<float>(x.value()[i]);
  auto y = conv2d(xf, w, b, 1, 0);
  REQUIRE(y.shape() == Shape{1, 1, 4, 4});
  for (int i = 0; i < 16; ++i) CHECK(y.value()[i] == xf.value()[i]);
}

TEST_CASE("conv2d: 80x80 input with 32 stride-2 3x3 kernels gives 32x40x40") {
  auto x = Tensor<float>::zeros({1, 1, 80, 80});
  Rng rng(2);
  auto w = he_uniform<float>({32, 1, 3, 3}, 9, rng);
  auto b = zeros_param<float>({32});
  auto y = conv2d(x, w, b, 2, 1);
  CHECK(y.shape() == Shape{1, 32, 40, 40});
}

TEST_CASE("conv2d: shape mismatch raises a descriptive error") {
  auto x = Tensor<float>::zeros({1, 2, 8, 8});
  auto w = Tensor<float>::zeros({4, 3, 3, 3});
  auto b = Tensor<float>::zeros({4});
  CHECK_THROWS_AS(conv2d(x, w, b, 1, 1), ShapeError);
}

TEST_CASE("conv2d: gradient matches central finite differences") {
  Rng rng(3);
  auto x = random_tensor({2, 2, 5, 5}, rng);
  auto w = random_tensor({3, 2, 3, 3}, rng, 0.5);
  auto b = random_tensor({3}, rng, 0.1);
  auto loss_fn = [&] { return sum(square(conv2d(x, w, b, 2, 1))); };
  CHECK(max_grad_rel_error({x, w, b}, loss_fn) < 1e-6);
}

TEST_CASE("conv_transpose2d: 1x1 identity kernel at stride 1 is identity") {
  Rng rng(4);
  auto x = random_tensor({1, 1, 4, 4}, rng);
  auto w = Tensor<double>::from_vec({1, 1, 1, 1}, {1.0});
  auto b = Tensor<double>::zeros({1});
  auto y = conv_transpose2d(x, w, b, 1, 0, 0);
  REQUIRE(y.shape() == x.shape());
  for (int i = 0; i < 16; ++i)
    CHECK(y.value()[i] == doctest::Approx(x.value()[i]));
}

TEST_CASE("conv_transpose2d: inverts the encoder layer shape 40->80") {
  auto x = Tensor<float>::zeros({1, 32, 40, 40});
  Rng rng(5);
  auto w = he_uniform<float>({32, 1, 3, 3}, 32 * 9, rng);
  auto b = zeros_param<float>({1});
  auto y = conv_transpose2d(x, w, b, 2, 1, 1);
  CHECK(y.shape() == Shape{1, 1, 80, 80});
}

TEST_CASE("conv/conv_transpose adjoint identity with shared weight") {
  Rng rng(6);
  auto x = random_tensor({1, 2, 8, 8}, rng, 1.0, false);
  auto w = random_tensor({3, 2, 3, 3}, rng, 1.0, false);
  auto zero_b_out = Tensor<double>::zeros({3});
  auto zero_b_in = Tensor<double>::zeros({2});
  auto y = random_tensor({1, 3, 4, 4}, rng, 1.0, false);

  auto cx = conv2d(x, w, zero_b_out, 2, 1);
  auto cty = conv_transpose2d(y, w, zero_b_in, 2, 1, 1);
  const double lhs = dot(cx.value(), y.value());
  const double rhs = dot(x.value(), cty.value());
  CHECK(std::fabs(lhs - rhs) / std::max(std::fabs(lhs), 1e-12) < 1e-5);
}

TEST_CASE("conv_transpose2d: gradient matches finite differences") {
  Rng rng(7);
  auto x = random_tensor({2, 3, 4, 4}, rng);
  auto w = random_tensor({3, 2, 3, 3}, rng, 0.5);
  auto b = random_tensor({2}, rng, 0.1);
  auto loss_fn = [&] {
    return sum(square(conv_transpose2d(x, w, b, 2, 1, 1)));
  };
  CHECK(max_grad_rel_error({x, w, b}, loss_fn) < 1e-5);
}

TEST_CASE("batch_norm2d: constant zero input stays zero") {
  auto x = Tensor<float>::zeros({4, 2, 3, 3});
  auto gamma = ones_param<float>({2});
  auto beta = zeros_param<float>({2});
  BatchNormStats<float> stats(2);
  auto y = batch_norm2d(x, gamma, beta, stats, Mode::kTrain, 0.1, 1e-5);
  for (float v : y.value()) CHECK(v == 0.0f);
}

TEST_CASE("batch_norm2d: train mode normalizes to mean 0 variance 1") {
  Rng rng(8);
  auto x = random_tensor({8, 3, 5, 5}, rng, 2.0, false);
  auto xf = Tensor<float>::zeros({8, 3, 5, 5});
  for (int64_t i = 0; i < x.size(); ++i)
    xf.value_mut()[i] = static_cast<float>(x.value()[i]);
  auto gamma = ones_param<float>({3});
  auto beta = zeros_param<float>({3});
  BatchNormStats<float> stats(3);
  auto y = batch_norm2d(xf, gamma, beta, stats, Mode::kTrain, 0.1, 1e-5);
  const size_t per_ch = 8 * 5 * 5;
  for (int ch = 0; ch < 3; ++ch) {
    double m = 0, v = 0;
    for (int s = 0; s < 8; ++s)
      for (int i = 0; i < 25; ++i)
        m += y.value()[(static_cast<size_t>(s) * 3 + ch) * 25 + i];
    m /= per_ch;
    for (int s = 0; s < 8; ++s)
      for (int i = 0; i < 25; ++i) {
        const double d = y.value()[(static_cast<size_t>(s) * 3 + ch) * 25 + i] - m;
        v += d * d;
      }
    v /= per_ch;
    CHECK(std::fabs(m) < 1e-4);
    CHECK(std::fabs(v - 1.0) < 1e-4);
  }
}

TEST_CASE("batch_norm2d: batch of one in train mode is rejected") {
  auto x = Tensor<float>::zeros({1, 2, 3, 3});
  auto gamma = ones_param<float>({2});
  auto beta = zeros_param<float>({2});
  BatchNormStats<float> stats(2);
  CHECK_THROWS_AS(batch_norm2d(x, gamma, beta, stats, Mode::kTrain, 0.1, 1e-5),
                  ValueError);
}

TEST_CASE("batch_norm2d: gradient matches finite differences") {
  Rng rng(9);
  auto x = random_tensor({3, 2, 3, 3}, rng);
  auto gamma = random_tensor({2}, rng, 0.5);
  auto beta = random_tensor({2}, rng, 0.5);
  // Weighted reduction: a plain sum of squares is almost invariant to x
  // after normalization, which starves the finite-difference signal.
  auto weights = random_tensor({3, 2, 3, 3}, rng, 1.0, false);
  auto loss_fn = [&] {
    BatchNormStats<double> stats(2);
    auto y = batch_norm2d(x, gamma, beta, stats, Mode::kTrain, 0.1, 1e-5);
    return sum(square(mul(y, weights)));
  };
  CHECK(max_grad_rel_error({x, gamma, beta}, loss_fn) < 1e-5);
}

TEST_CASE("dense: gradient matches finite differences") {
  Rng rng(10);
  auto x = random_tensor({4, 6}, rng);
  auto w = random_tensor({3, 6}, rng, 0.5);
  auto b = random_tensor({3}, rng, 0.1);
  auto loss_fn = [&] { return sum(square(dense(x, w, b))); };
  CHECK(max_grad_rel_error({x, w, b}, loss_fn) < 1e-5);
}

TEST_CASE("activations: gradients match finite differences") {
  Rng rng(11);
  // Keep relu inputs away from the kink so central differences are valid.
  auto x = Tensor<double>::zeros({3, 7});
  for (auto& v : x.value_mut()) {
    double u = rng.uniform(-2.0, 2.0);
    if (std::fabs(u) < 0.05) u += 0.2;
    v = u;
  }
  x.set_requires_grad(true);

  CHECK(max_grad_rel_error({x}, [&] { return sum(square(relu(x))); }) < 1e-5);
  CHECK(max_grad_rel_error({x}, [&] { return sum(square(sigmoid(x))); }) < 1e-5);
  CHECK(max_grad_rel_error({x}, [&] {
          return sum(square(softmax(x, 1)));
        }) < 1e-5);
  CHECK(max_grad_rel_error({x}, [&] { return sum(square(exp(scale(x, 0.3)))); }) <
        1e-5);
}

TEST_CASE("softmax: uniform input gives exactly 1/8 everywhere") {
  auto x = Tensor<float>::zeros({8});
  auto y = softmax(x, 0);
  for (float v : y.value()) CHECK(v == 0.125f);
}

TEST_CASE("softmax: rows sum to one; sigmoid stays inside (0,1)") {
  Rng rng(12);
  auto x = Tensor<float>::zeros({16, 8});
  rng.fill_uniform<float>(x.value_mut(), -10.0, 10.0);
  auto sm = softmax(x, 1);
  for (int r = 0; r < 16; ++r) {
    double s = 0;
    for (int c = 0; c < 8; ++c) s += sm.value()[r * 8 + c];
    CHECK(std::fabs(s - 1.0) < 1e-6);
  }
  auto sg = sigmoid(x);
  for (float v : sg.value()) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
}

TEST_CASE("dropout: eval mode returns the input bit-identically") {
  Rng rng(13);
  auto x = Tensor<float>::zeros({64});
  rng.fill_uniform<float>(x.value_mut(), -1.0, 1.0);
  auto y = dropout(x, 0.5, Mode::kEval, rng);
  CHECK(y.same_node(x));
}

TEST_CASE("dropout: p >= 1 is rejected") {
  Rng rng(14);
  auto x = Tensor<float>::zeros({4});
  CHECK_THROWS_AS(dropout(x, 1.0, Mode::kTrain, rng), ValueError);
}

TEST_CASE("dropout: train-mode mean over 1e5 trials recovers the input") {
  Rng rng(15);
  auto x = Tensor<float>::full({8}, 1.0f);
  std::vector<double> acc(8, 0.0);
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    auto y = dropout(x, 0.5, Mode::kTrain, rng);
    for (int i = 0; i < 8; ++i) acc[i] += y.value()[i];
  }
  for (int i = 0; i < 8; ++i)
    CHECK(std::fabs(acc[i] / trials - 1.0) < 0.01);
}

TEST_CASE("dropout: gradient matches finite differences with fixed mask") {
  Rng rng(16);
  auto x = random_tensor({4, 5}, rng);
  auto loss_fn = [&] {
    Rng mask_rng(99);
    return sum(square(dropout(x, 0.3, Mode::kTrain, mask_rng)));
  };
  CHECK(max_grad_rel_error({x}, loss_fn) < 1e-5);
}

TEST_CASE("softmax_cross_entropy: gradient matches finite differences") {
  Rng rng(17);
  auto logits = random_tensor({5, 8}, rng, 2.0);
  std::vector<int> targets{0, 3, 7, 2, 5};
  auto loss_fn = [&] { return softmax_cross_entropy(logits, targets); };
  CHECK(max_grad_rel_error({logits}, loss_fn) < 1e-5);
}

TEST_CASE("structural ops: gradients match finite differences") {
  Rng rng(18);
  auto x = random_tensor({6, 4}, rng);
  auto y = random_tensor({6, 3}, rng);
  auto loss_fn = [&] {
    auto g = gather_rows(x, {0, 2, 2, 5, 1, 3});
    auto c = concat_cols(g, y);
    auto s = row_block_sum(c, 2);
    return sum(square(reshape(s, {21})));
  };
  CHECK(max_grad_rel_error({x, y}, loss_fn) < 1e-5);
}

TEST_CASE("adam: zero gradients from a fresh state leave params unchanged") {
  auto p = Tensor<float>::from_vec({3}, {1.0f, -2.0f, 0.5f});
  p.set_requires_grad(true);
  Adam<float> opt({p}, 0.0003);
  p.grad_mut();  // allocate, stays zero
  opt.step();
  CHECK(p.value()[0] == 1.0f);
  CHECK(p.value()[1] == -2.0f);
  CHECK(p.value()[2] == 0.5f);
  CHECK(opt.step_count() == 1);
}

TEST_CASE("adam: first step with unit gradient moves by -lr/(1+eps)") {
  auto p = Tensor<double>::from_vec({1}, {0.0});
  p.set_requires_grad(true);
  Adam<double> opt({p}, 0.0003, 0.9, 0.999, 1e-8);
  p.grad_mut()[0] = 1.0;
  opt.step();
  // Bias correction gives mhat = vhat = 1 exactly on step one.
  CHECK(p.value()[0] == doctest::Approx(-0.0003 / (1.0 + 1e-8)).epsilon(1e-9));
}

TEST_CASE("adam: 100 steps on (w-3)^2 track the scalar recurrence exactly") {
  auto w = Tensor<double>::from_vec({1}, {0.0});
  w.set_requires_grad(true);
  Adam<double> opt({w}, 0.1);

  // Independent scalar ADAM recurrence as the descent oracle.
  double wr = 0.0, m = 0.0, v = 0.0;
  bool crossed = false;
  double prev = 0.0;
  for (int t = 1; t <= 100; ++t) {
    opt.zero_grad();
    auto loss = sum(square(add_scalar(w, -3.0)));
    backward(loss);
    opt.step();

    const double g = 2.0 * (wr - 3.0);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    wr -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);

    CHECK(w.value()[0] == doctest::Approx(wr).epsilon(1e-12));
    // Monotone approach until the first crossing of the optimum.
    if (!crossed && wr < 3.0) CHECK(wr >= prev);
    if (wr >= 3.0) crossed = true;
    prev = wr;
  }
  CHECK(std::fabs(w.value()[0] - 3.0) < std::fabs(0.0 - 3.0));
  CHECK(w.value()[0] > 2.5);
}

TEST_CASE("determinism: same seed and op sequence is bit-identical") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    auto x = Tensor<float>::zeros({4, 2, 8, 8});
    rng.fill_uniform<float>(x.value_mut(), 0.0, 1.0);
    auto w = he_uniform<float>({8, 2, 3, 3}, 2 * 9, rng);
    auto b = zeros_param<float>({8});
    auto gamma = ones_param<float>({8});
    auto beta = zeros_param<float>({8});
    BatchNormStats<float> stats(8);
    auto y = relu(batch_norm2d(conv2d(x, w, b, 2, 1), gamma, beta, stats,
                               Mode::kTrain, 0.1, 1e-5));
    auto loss = mean(square(y));
    backward(loss);
    std::vector<float> out(y.value().begin(), y.value().end());
    out.insert(out.end(), w.grad().begin(), w.grad().end());
    return out;
  };
  auto a = run(42), b = run(42), c = run(43);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("numeric guard: non-finite layer output raises") {
  auto x = Tensor<float>::full({1, 1, 2, 2}, 1e30f);
  auto w = Tensor<float>::full({1, 1, 1, 1}, 1e30f);
  auto b = Tensor<float>::zeros({1});
  CHECK_THROWS_AS(conv2d(x, w, b, 1, 0), NumericError);
}

TEST_CASE("checkpoint: RVF1 round-trip is bit-exact and CRC-protected") {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "rvf_test.rvf";

  Rng rng(19);
  StateDict state;
  auto t1 = Tensor<float>::zeros({3, 4});
  rng.fill_uniform<float>(t1.value_mut(), -5.0, 5.0);
  auto t2 = Tensor<float>::zeros({2, 3, 3, 3});
  rng.fill_uniform<float>(t2.value_mut(), -5.0, 5.0);
  state["layer1.w"] = to_entry(t1);
  state["layer2.w"] = to_entry(t2);
  save_rvf(path.string(), state);

  auto loaded = load_rvf(path.string());
  REQUIRE(loaded.size() == 2);
  CHECK(loaded["layer1.w"].shape == Shape{3, 4});
  CHECK(loaded["layer1.w"].data ==
        std::vector<float>(t1.value().begin(), t1.value().end()));
  CHECK(loaded["layer2.w"].data ==
        std::vector<float>(t2.value().begin(), t2.value().end()));

  // Re-saving the loaded dict reproduces the file byte for byte.
  const auto path2 = fs::temp_directory_path() / "rvf_test2.rvf";
  save_rvf(path2.string(), loaded);
  CHECK(crc32_of_file(path.string()) == crc32_of_file(path2.string()));

  // Corruption is detected.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(10);
    char junk = 0x7f;
    f.write(&junk, 1);
  }
  CHECK_THROWS_AS(load_rvf(path.string()), IoError);
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("no-grad guard suppresses graph construction") {
  auto x = Tensor<float>::from_vec({2}, {1, 2}).set_requires_grad(true);
  NoGradGuard guard;
  auto y = sum(square(x));
  CHECK_FALSE(y.requires_grad());
}
