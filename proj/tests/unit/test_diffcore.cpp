#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "mrgr/diffcore/checkpoint.hpp"
#include "mrgr/diffcore/grad_check.hpp"
#include "mrgr/diffcore/kernels.hpp"
#include "mrgr/diffcore/mlp.hpp"
#include "mrgr/diffcore/ops.hpp"
#include "mrgr/diffcore/optimizer.hpp"

using namespace mrgr;
using namespace mrgr::diff;

namespace {

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, bool grad, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(r * c);
  for (double& x : v) x = d(rng);
  return Tensor::from(r, c, std::move(v), grad);
}

// Weighted sum with fixed random coefficients turns any output into a
// scalar whose gradient exercises every output element.
Tensor probe(const Tensor& out, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w = random_tensor(rng, out.rows(), out.cols(), false);
  return sum(mul(out, w));
}

double check_op(const std::function<Tensor(std::span<const Tensor>)>& op,
                std::vector<Tensor> inputs) {
  auto loss = [&] { return probe(op(inputs), 99); };
  return grad_check(loss, inputs, {.step = 1e-5}).max_relative_error;
}

}  // namespace

TEST_CASE("mlp_forward on hand-set parameters") {
  SUBCASE("zero parameters give zero output") {
    MlpSpec spec{{3, 3}, Activation::tanh, OutputActivation::none};
    std::vector<Tensor> p{Tensor::zeros(3, 3, true), Tensor::zeros(1, 3, true)};
    Tensor y = mlp_forward(spec, p, Tensor::row({0.3, -2.0, 5.0}));
    for (double v : y.data()) CHECK(v == 0.0);
  }
  SUBCASE("affine 1->1") {
    MlpSpec spec{{1, 1}, Activation::tanh, OutputActivation::none};
    std::vector<Tensor> p{Tensor::from(1, 1, {2.0}), Tensor::from(1, 1, {1.0})};
    CHECK(mlp_forward(spec, p, Tensor::scalar(3.0)).item() == 7.0);
  }
  SUBCASE("symmetric softmax head") {
    MlpSpec spec{{2, 2}, Activation::tanh, OutputActivation::softmax};
    std::vector<Tensor> p{Tensor::zeros(2, 2), Tensor::zeros(1, 2)};
    Tensor y = mlp_forward(spec, p, Tensor::row({1.0, -1.0}));
    CHECK(y.at(0, 0) == doctest::Approx(0.5));
    CHECK(y.at(0, 1) == doctest::Approx(0.5));
  }
  SUBCASE("shape mismatch names the layer") {
    Rng rng(1);
    Mlp net({{4, 5, 2}, Activation::relu, OutputActivation::none}, rng, "net");
    try {
      net.forward(Tensor::row({1.0, 2.0, 3.0}));
      FAIL("expected a shape error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
    }
  }
}

TEST_CASE("backward basics") {
  Tensor x = Tensor::scalar(3.0, true);
  Gradients g = backward(square(x));
  CHECK(g.get(x)[0] == doctest::Approx(6.0));

  Tensor c = Tensor::scalar(5.0);
  Tensor unused = Tensor::scalar(1.0, true);
  Gradients g0 = backward(add_scalar(c, 1.0));
  CHECK(g0.get(unused)[0] == 0.0);

  // unreachable parameter gets zero even when the loss has a graph
  Gradients g1 = backward(square(x));
  CHECK(g1.get(unused)[0] == 0.0);

  CHECK_THROWS_AS(backward(Tensor::row({1.0, 2.0}, true)), std::invalid_argument);
}

TEST_CASE("random 3-layer MLP gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    for (auto act : {Activation::tanh, Activation::relu}) {
      Mlp net({{5, 7, 6, 3}, act, OutputActivation::none}, rng, "mlp");
      // nonzero biases keep relu pre-activations off the kink
      for (std::size_t l = 1; l < net.params().size(); l += 2) {
        for (double& b : net.params()[l].mutable_data()) b = uniform01(rng) - 0.5;
      }
      Tensor x = random_tensor(rng, 4, 5, false);
      auto loss = [&] { return probe(net.forward(x), seed); };
      auto report = grad_check(loss, net.params(), {.step = 1e-5});
      INFO(report.worst_tensor, " ", report.worst_index, " a=", report.worst_analytic,
           " n=", report.worst_numeric);
      CHECK(report.max_relative_error < 1e-4);
      CHECK(report.coordinates_checked == net.parameter_count());
    }
  }
}

TEST_CASE("grad_check behaviour") {
  Rng rng(3);
  SUBCASE("quadratic is exact up to roundoff") {
    Tensor p = random_tensor(rng, 3, 4, true, 0.5, 2.0);
    Tensor c = random_tensor(rng, 3, 4, false, 0.5, 2.0);
    std::vector<Tensor> params{p};
    auto loss = [&] { return sum(mul(c, square(p))); };
    CHECK(grad_check(loss, params, {.step = 1e-5}).max_relative_error < 1e-8);
  }
  SUBCASE("tanh MLP") {
    Mlp net({{3, 8, 1}, Activation::tanh, OutputActivation::none}, rng, "m");
    Tensor x = random_tensor(rng, 6, 3, false);
    auto loss = [&] { return mean(square(net.forward(x))); };
    CHECK(grad_check(loss, net.params(), {.step = 1e-5}).max_relative_error < 1e-4);
  }
  SUBCASE("corrupted gradient is flagged") {
    Mlp net({{3, 8, 1}, Activation::tanh, OutputActivation::none}, rng, "m");
    Tensor x = random_tensor(rng, 6, 3, false);
    auto loss = [&] { return mean(square(net.forward(x))); };
    Gradients g = backward(loss());
    auto& raw = g.raw().at(net.params()[0].id());
    raw[2] = raw[2] * 1.5 + 0.1;
    auto report = grad_check(loss, net.params(), g, {.step = 1e-5});
    CHECK(report.max_relative_error > 1e-2);
    CHECK(report.worst_tensor == "m.w0");
    CHECK(report.worst_index == 2);
  }
  SUBCASE("subsampling covers the requested count") {
    Mlp net({{20, 30, 1}, Activation::tanh, OutputActivation::none}, rng, "big");
    Tensor x = random_tensor(rng, 2, 20, false);
    auto loss = [&] { return sum(net.forward(x)); };
    auto report = grad_check(loss, net.params(), {.step = 1e-5, .max_coordinates = 256});
    CHECK(report.coordinates_checked == 256);
    CHECK(report.max_relative_error < 1e-4);
  }
  SUBCASE("non-finite loss fails") {
    Tensor p = Tensor::scalar(-1.0, true);
    std::vector<Tensor> params{p};
    auto loss = [&] { return log(p); };
    CHECK_THROWS_AS(grad_check(loss, params), std::runtime_error);
  }
}

TEST_CASE("every op kind has correct gradients on random inputs") {
  for (std::uint64_t seed = 10; seed < 13; ++seed) {
    Rng rng(seed);
    auto A = [&] { return random_tensor(rng, 3, 4, true); };
    auto P = [&] { return random_tensor(rng, 3, 4, true, 0.2, 2.0); };
    auto R = [&] { return random_tensor(rng, 1, 4, true); };
    auto S = [&] { return random_tensor(rng, 1, 1, true, 0.5, 1.5); };
    using In = std::span<const Tensor>;
    CHECK(check_op([](In t) { return add(t[0], t[1]); }, {A(), A()}) < 1e-6);
    CHECK(check_op([](In t) { return add(t[0], t[1]); }, {A(), R()}) < 1e-6);
    CHECK(check_op([](In t) { return sub(t[0], t[1]); }, {A(), S()}) < 1e-6);
    CHECK(check_op([](In t) { return mul(t[0], t[1]); }, {A(), R()}) < 1e-6);
    CHECK(check_op([](In t) { return div(t[0], t[1]); }, {A(), P()}) < 1e-6);
    CHECK(check_op([](In t) { return div(t[0], t[1]); }, {A(), S()}) < 1e-6);
    CHECK(check_op([](In t) { return scale(add_scalar(neg(t[0]), 0.3), 2.5); }, {A()}) < 1e-6);
    CHECK(check_op([&](In t) { return matmul(t[0], t[1]); },
                   {A(), random_tensor(rng, 4, 2, true)}) < 1e-6);
    CHECK(check_op([](In t) { return transpose(t[0]); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return tanh(t[0]); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return relu(t[0]); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return sigmoid(t[0]); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return exp(t[0]); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return log(t[0]); }, {P()}) < 1e-6);
    CHECK(check_op([](In t) { return square(t[0]); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return clamp(t[0], -0.5, 0.5); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return softmax_rows(t[0]); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return sum(t[0]); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return mean(t[0]); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return sum_rows(t[0]); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return sum_cols(t[0]); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return concat_cols(t); },
                   {A(), random_tensor(rng, 3, 2, true)}) < 1e-6);
    CHECK(check_op([](In t) { return concat_rows(t); }, {A(), R()}) < 1e-6);
    CHECK(check_op([](In t) { return slice_rows(t[0], 1, 3); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return slice_cols(t[0], 1, 3); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return repeat_rows(t[0], 3); }, {R()}) < 1e-6);
    const std::vector<std::size_t> idx{3, 0, 2};
    CHECK(check_op([&](In t) { return pick(t[0], idx); }, {A()}) < 1e-6);
    CHECK(check_op([](In t) { return entropy(softmax_rows(t[0])); }, {R()}) < 1e-6);
    CHECK(check_op([](In t) { return entropy_rows(softmax_rows(t[0])); }, {A()}) < 1e-6);
    CHECK(check_op([&](In t) { return mul(t[0], t[1]); },
                   {A(), random_tensor(rng, 3, 1, true)}) < 1e-6);
    CHECK(check_op([&](In t) { return div(t[0], t[1]); },
                   {A(), random_tensor(rng, 3, 1, true, 0.5, 2.0)}) < 1e-6);
    CHECK(check_op([](In t) { return reshape(t[0], 6, 2); }, {A()}) < 1e-6);
    CHECK(check_op([&](In t) { return sum_row_blocks(t[0], 2); },
                   {random_tensor(rng, 6, 3, true)}) < 1e-6);
    const std::vector<std::size_t> segs{1, 3, 1};
    CHECK(check_op([&](In t) { return segment_sum(t[0], segs, 4); }, {A()}) < 1e-6);
    const std::vector<std::size_t> rows{2, 0, 2, 1};
    CHECK(check_op([&](In t) { return gather_rows(t[0], rows); }, {A()}) < 1e-6);
  }
}

TEST_CASE("no-grad guard suppresses recording") {
  Tensor w = Tensor::from(2, 2, {1, 2, 3, 4}, true);
  Tensor x = Tensor::row({1, 1});
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    Tensor y = tanh(add(matmul(x, w), x));
    CHECK_FALSE(y.requires_grad());
    CHECK(y.node()->parents.empty());
  }
  CHECK(grad_enabled());
  Tensor y = sum(matmul(x, w));
  CHECK(y.requires_grad());
  CHECK(backward(y).get(w) == std::vector<double>{1, 1, 1, 1});
}

TEST_CASE("shape helpers") {
  Tensor a = Tensor::from(4, 2, {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor b = sum_row_blocks(a, 2);
  CHECK(b.shape() == Shape{2, 2});
  CHECK(std::vector<double>(b.data().begin(), b.data().end()) == std::vector<double>{4, 6, 12, 14});
  CHECK_THROWS_AS(sum_row_blocks(a, 3), std::invalid_argument);
  CHECK(reshape(a, 2, 4).at(1, 0) == 5.0);
  const std::vector<std::size_t> seg{2, 0, 2, 2};
  Tensor ss = segment_sum(a, seg, 3);
  CHECK(std::vector<double>(ss.data().begin(), ss.data().end()) == std::vector<double>{3, 4, 0, 0, 13, 16});
  CHECK_THROWS_AS(reshape(a, 3, 3), std::invalid_argument);
  Tensor col = Tensor::from(4, 1, {1, 10, 100, 1000});
  CHECK(mul(a, col).at(2, 1) == 600.0);
  Tensor h = entropy_rows(Tensor::from(2, 2, {0.5, 0.5, 1.0, 0.0}));
  CHECK(h.at(0, 0) == doctest::Approx(std::log(2.0)));
  CHECK(h.at(1, 0) == 0.0);
}

TEST_CASE("relu subgradient at the kink is zero") {
  Tensor x = Tensor::row({0.0, 1.0, -1.0}, true);
  Gradients g = backward(sum(relu(x)));
  CHECK(g.get(x) == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("softmax rows are distributions") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor y = softmax_rows(random_tensor(rng, 4, 6, false, -30.0, 30.0));
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 6; ++c) {
        CHECK(y.at(r, c) >= 0.0);
        s += y.at(r, c);
      }
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("identical seeds give bit-identical values and gradients") {
  auto run = [] {
    Rng rng(77);
    Mlp net({{4, 9, 3}, Activation::tanh, OutputActivation::softmax}, rng, "n");
    Tensor x = random_tensor(rng, 5, 4, false);
    Tensor out = net.forward(x);
    Gradients g = backward(probe(out, 1));
    std::vector<double> all(out.data().begin(), out.data().end());
    for (const auto& p : net.params()) {
      auto gp = g.get(p);
      all.insert(all.end(), gp.begin(), gp.end());
    }
    return all;
  };
  CHECK(run() == run());
}

TEST_CASE("optimizer steps") {
  SUBCASE("sgd definition") {
    Tensor p = Tensor::scalar(1.0, true).set_name("p");
    Optimizer opt({OptimizerKind::sgd, 0.1}, {p});
    Gradients g = backward(scale(p, 2.0));
    opt.step(g);
    CHECK(p.item() == doctest::Approx(0.8).epsilon(1e-15));
  }
  SUBCASE("zero gradient leaves params unchanged") {
    for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
      Tensor p = Tensor::row({1.0, -2.0}, true);
      Tensor q = Tensor::scalar(3.0, true);
      Optimizer opt({kind, 0.1}, {p, q});
      opt.step(backward(square(q)));  // p unreachable: zero gradient
      CHECK(p.data()[0] == 1.0);
      CHECK(p.data()[1] == -2.0);
    }
  }
  SUBCASE("adam first step") {
    Tensor p = Tensor::scalar(1.0, true);
    Optimizer opt({OptimizerKind::adam, 1e-3}, {p});
    opt.step(backward(p));  // g = 1
    // m_hat = v_hat = 1 at t = 1, so the step is lr / (1 + eps)
    CHECK(1.0 - p.item() == doctest::Approx(1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
  }
  SUBCASE("non-finite gradient names the tensor") {
    Tensor p = Tensor::scalar(0.0, true).set_name("weights.alpha");
    Optimizer opt({OptimizerKind::sgd, 0.1}, {p});
    try {
      opt.step(backward(log(p)));
      FAIL("expected failure");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("weights.alpha") != std::string::npos);
    }
    CHECK(p.item() == 0.0);
  }
}

TEST_CASE("parallel gemm matches the serial reference bit for bit") {
  Rng rng(11);
  for (auto [m, k, n] : {std::tuple{1, 7, 5}, {64, 33, 70}, {130, 64, 40}}) {
    for (bool ta : {false, true}) {
      for (bool tb : {false, true}) {
        Tensor a = random_tensor(rng, m, k, false);
        Tensor b = random_tensor(rng, k, n, false);
        std::vector<double> c1(m * n), c2(m * n);
        kernels::gemm_serial(a.data(), b.data(), c1, m, k, n, ta && m == k, tb && k == n);
        kernels::gemm_parallel(a.data(), b.data(), c2, m, k, n, ta && m == k, tb && k == n);
        CHECK(c1 == c2);
      }
    }
  }
}

TEST_CASE("checkpoint container") {
  const auto dir = std::filesystem::temp_directory_path() / "mrgr_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "a.mrgr";

  std::vector<double> vals{0.5, -1.25, 3.0, 1e-3};
  round_to_f32(vals);
  CheckpointFile f;
  f.meta["iteration"] = 7;
  f.add("w", {2, 2}, vals);
  f.add("b", {1, 1}, {2.0});
  write_checkpoint(path, f);

  CheckpointFile g = read_checkpoint(path);
  CHECK(g.meta["iteration"] == 7);
  CHECK(g.find("w").values == vals);
  CHECK(g.find("w").shape == Shape{2, 2});
  CHECK(g.find("b").values[0] == 2.0);

  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(bytes.substr(0, 6) == std::string("MRGR1\0", 6));
    std::ofstream out(dir / "trunc.mrgr", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 3));
    std::ofstream bad(dir / "bad.mrgr", std::ios::binary);
    bytes[0] = 'X';
    bad.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(read_checkpoint(dir / "trunc.mrgr"), std::runtime_error);
  CHECK_THROWS_AS(read_checkpoint(dir / "bad.mrgr"), std::runtime_error);
  std::filesystem::remove_all(dir);
}
