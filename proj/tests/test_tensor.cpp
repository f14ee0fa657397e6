#include <doctest.h>

#include <cmath>

#include "posekit/errors.hpp"
#include "posekit/tensor.hpp"
#include "posekit/rng.hpp"

using namespace posekit;

TEST_CASE("matmul identity and hand arithmetic") {
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  const Tensor x({2, 2}, {3, -1, 2, 5});
  CHECK(matmul(eye, x) == x);

  const Tensor a({2, 2}, {1, 2, 3, 4});
  const Tensor b({2, 1}, {1, 1});
  const Tensor c = matmul(a, b);
  CHECK(c.shape() == std::vector<int>{2, 1});
  CHECK(c[0] == 3.0);
  CHECK(c[1] == 7.0);
}

TEST_CASE("matmul rejects shape mismatches") {
  CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeMismatch);
}

TEST_CASE("matmul gradient check") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor a = Tensor::uniform({5, 4}, 100 + seed);
    const Tensor b = Tensor::uniform({4, 3}, 200 + seed);
    const Tensor probe = Tensor::bounded_uniform({5, 3}, 300 + seed, 0.3, 1.0);

    Tensor d_a(a.shape()), d_b(b.shape());
    matmul_backward(a, b, probe, d_a, d_b);

    const double err_a = finite_diff_check(
        [&](const Tensor& t) { return dot(matmul(t, b), probe); }, a, d_a);
    const double err_b = finite_diff_check(
        [&](const Tensor& t) { return dot(matmul(a, t), probe); }, b, d_b);
    CHECK(err_a < 1e-5);
    CHECK(err_b < 1e-5);
  }
}

TEST_CASE("layer_norm symmetric example") {
  const Tensor x({3}, {1, 2, 3});
  const Tensor y = layer_norm(x);
  CHECK(y[0] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(y[1] == doctest::Approx(0.0));
  CHECK(y[2] == doctest::Approx(1.2247).epsilon(1e-4));
}

TEST_CASE("layer_norm of a constant vector is zero") {
  const Tensor y = layer_norm(Tensor({3}, {5, 5, 5}));
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == 0.0);
}

TEST_CASE("layer_norm output statistics") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor x = Tensor::uniform({7}, 400 + seed, 3.0);
    const Tensor y = layer_norm(x);
    double mean = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) mean += y[i];
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) var += (y[i] - mean) * (y[i] - mean);
    var /= static_cast<double>(y.size());
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var > 1.0 - 1e-3);
    CHECK(var <= 1.0 + 1e-12);
  }
}

TEST_CASE("layer_norm gradient check") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor x = Tensor::uniform({4, 6}, 500 + seed, 2.0);
    const Tensor probe = Tensor::bounded_uniform({4, 6}, 600 + seed, 0.3, 1.0);
    Tensor d_x(x.shape());
    layer_norm_backward(x, probe, d_x);
    const double err = finite_diff_check(
        [&](const Tensor& t) { return dot(layer_norm(t), probe); }, x, d_x);
    CHECK(err < 1e-5);
  }
}

TEST_CASE("mlp with zero weights broadcasts the output bias") {
  MlpParams p(3, 5, 2, 7);
  p.zero_output_layer();
  p.b2.value = Tensor({2}, {0.5, -1.5});
  const Tensor y = mlp_forward(Tensor::uniform({4, 3}, 1), p);
  for (int r = 0; r < 4; ++r) {
    CHECK(y[static_cast<std::size_t>(r) * 2] == 0.5);
    CHECK(y[static_cast<std::size_t>(r) * 2 + 1] == -1.5);
  }
}

TEST_CASE("gelu matches the erf reference") {
  // reference values computed from gelu(x) = x/2 (1 + erf(x/sqrt(2)))
  const double ref1 = 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)));
  CHECK(gelu(1.0) == doctest::Approx(ref1).epsilon(1e-12));
  CHECK(gelu(1.0) == doctest::Approx(0.8413).epsilon(1e-3));
  CHECK(gelu(0.0) == 0.0);
  CHECK(gelu(-10.0) == doctest::Approx(0.0).epsilon(1e-9));

  // 1x1 identity-like net applies plain gelu
  MlpParams p(1, 1, 1, 0);
  p.w1.value = Tensor({1, 1}, {1.0});
  p.b1.value = Tensor({1}, {0.0});
  p.w2.value = Tensor({1, 1}, {1.0});
  p.b2.value = Tensor({1}, {0.0});
  const Tensor y = mlp_forward(Tensor({1, 1}, {1.0}), p);
  CHECK(y[0] == doctest::Approx(ref1).epsilon(1e-12));
}

TEST_CASE("mlp gradient check for input and every parameter") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    MlpParams p(4, 6, 3, 700 + seed);
    p.w2.value = Tensor::uniform({6, 3}, 800 + seed, 0.5);
    p.b2.value = Tensor::uniform({3}, 900 + seed, 0.5);
    const Tensor x = Tensor::uniform({5, 4}, 1000 + seed);
    const Tensor probe = Tensor::bounded_uniform({5, 3}, 1100 + seed, 0.3, 1.0);

    Tensor d_x(x.shape());
    for (Parameter* par : p.parameters()) par->zero_grad();
    mlp_backward(x, p, probe, d_x);

    const double err_x = finite_diff_check(
        [&](const Tensor& t) { return dot(mlp_forward(t, p), probe); }, x, d_x);
    CHECK(err_x < 1e-5);

    for (Parameter* par : p.parameters()) {
      const Tensor analytic = par->grad;
      const Tensor orig = par->value;
      const double err = finite_diff_check(
          [&](const Tensor& t) {
            par->value = t;
            const double out = dot(mlp_forward(x, p), probe);
            par->value = orig;
            return out;
          },
          orig, analytic);
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("attention with a single key returns v exactly") {
  const Tensor q = Tensor::uniform({1, 4}, 1);
  const Tensor k = Tensor::uniform({1, 4}, 2);
  const Tensor v = Tensor::uniform({1, 4}, 3);
  const Tensor out = attention(q, k, v);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(out[i] == v[i]);
}

TEST_CASE("attention with identical keys averages the values") {
  Tensor k({3, 2});
  for (int r = 0; r < 3; ++r) {
    k[static_cast<std::size_t>(r) * 2] = 0.7;
    k[static_cast<std::size_t>(r) * 2 + 1] = -0.3;
  }
  const Tensor q = Tensor::uniform({2, 2}, 4);
  const Tensor v({3, 2}, {1, 2, 3, 4, 5, 6});
  const Tensor out = attention(q, k, v);
  for (int r = 0; r < 2; ++r) {
    CHECK(out[static_cast<std::size_t>(r) * 2] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(out[static_cast<std::size_t>(r) * 2 + 1] == doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax rows sum to one") {
  const Tensor logits = Tensor::uniform({6, 9}, 5, 4.0);
  const Tensor sm = softmax_rows(logits);
  for (int r = 0; r < 6; ++r) {
    double s = 0.0;
    for (int c = 0; c < 9; ++c) s += sm[static_cast<std::size_t>(r) * 9 + c];
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("attention gradient check") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor q = Tensor::uniform({4, 8}, 1200 + seed);
    const Tensor k = Tensor::uniform({4, 8}, 1300 + seed);
    const Tensor v = Tensor::uniform({4, 8}, 1400 + seed);
    const Tensor probe = Tensor::bounded_uniform({4, 8}, 1500 + seed, 0.3, 1.0);

    Tensor d_q(q.shape()), d_k(k.shape()), d_v(v.shape());
    attention_backward(q, k, v, probe, d_q, d_k, d_v);

    CHECK(finite_diff_check([&](const Tensor& t) { return dot(attention(t, k, v), probe); }, q,
                            d_q) < 1e-5);
    CHECK(finite_diff_check([&](const Tensor& t) { return dot(attention(q, t, v), probe); }, k,
                            d_k) < 1e-5);
    CHECK(finite_diff_check([&](const Tensor& t) { return dot(attention(q, k, t), probe); }, v,
                            d_v) < 1e-5);
  }
}

TEST_CASE("sgd_step basics") {
  Parameter p(Tensor({1}, {1.0}));
  sgd_step({&p}, 0.1);
  CHECK(p.value[0] == 1.0);  // zero grad leaves the value alone

  p.grad = Tensor({1}, {1.0});
  sgd_step({&p}, 0.1);
  CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(p.grad[0] == 0.0);  // grads are zeroed
}

TEST_CASE("sgd converges on a quadratic") {
  Parameter w(Tensor({1}, {0.0}));
  for (int step = 0; step < 100; ++step) {
    w.grad[0] = 2.0 * (w.value[0] - 3.0);
    sgd_step({&w}, 0.1);
  }
  CHECK(std::abs(w.value[0] - 3.0) < 1e-6);
}

TEST_CASE("finite_diff_check on textbook functions") {
  const Tensor x = Tensor::uniform({7}, 6, 2.0);
  CHECK(finite_diff_check([](const Tensor& t) { return sum(t); }, x,
                          Tensor::full({7}, 1.0)) < 1e-10);

  Tensor grad = x;
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= 2.0;
  CHECK(finite_diff_check([](const Tensor& t) { return dot(t, t); }, x, grad) < 1e-8);
}

TEST_CASE("tensor ops reject non-finite results") {
  const Tensor big = Tensor::full({2, 2}, 1e308);
  CHECK_THROWS_AS(matmul(big, big), NonFiniteValue);
}

TEST_CASE("tensor dump/parse round trip is bit exact") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor t = Tensor::gaussian({3, 5, 2}, 2000 + static_cast<std::uint64_t>(trial), 10.0);
    const Tensor back = parse_tensor(dump_tensor(t));
    CHECK(back == t);
  }
}

TEST_CASE("reshape checks element count") {
  CHECK_THROWS_AS(Tensor({2, 3}).reshaped({4, 2}), ShapeMismatch);
  CHECK(Tensor({2, 3}).reshaped({3, 2}).shape() == std::vector<int>{3, 2});
}
