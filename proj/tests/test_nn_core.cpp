#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "citescope/nn_core.hpp"
#include "citescope/rng.hpp"
#include "oracles.hpp"

using namespace citescope;
using nn::Matrix;
using nn::Vector;

namespace {

Matrix random_matrix(rnd::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rnd::uniform_real(rng, -1.0, 1.0);
  return m;
}

}  // namespace

TEST_CASE("glorot initialization respects the fan-based limit and zero biases") {
  rnd::Rng rng = rnd::make_rng(3, 1);
  const nn::ConvLayer conv = nn::make_conv_layer(64, 5, 100, rng);
  const double limit = std::sqrt(6.0 / (5 * 100 + 64));
  CHECK(conv.weights.maxCoeff() <= limit);
  CHECK(conv.weights.minCoeff() >= -limit);
  CHECK(conv.weights.maxCoeff() > 0.5 * limit);  // actually spreads out
  CHECK(conv.bias.isZero());
  const nn::DenseLayer dense = nn::make_dense_layer(4, 64, rng);
  CHECK(dense.bias.isZero());
  CHECK(dense.weights.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / (64 + 4)));
}

TEST_CASE("im2col lays out windows word-by-word") {
  Matrix input(2, 4);  // dim 2, 4 positions
  input << 1, 2, 3, 4,
           5, 6, 7, 8;
  const Matrix cols = nn::im2col(input, 2);
  REQUIRE(cols.rows() == 4);  // window * dim
  REQUIRE(cols.cols() == 3);
  // Column t is [input(:, t); input(:, t+1)] flattened word-by-word.
  CHECK(cols(0, 0) == 1);
  CHECK(cols(1, 0) == 5);
  CHECK(cols(2, 0) == 2);
  CHECK(cols(3, 0) == 6);
  CHECK(cols(0, 2) == 3);
  CHECK(cols(3, 2) == 8);
}

TEST_CASE("conv/pool/dense forward match the brute-force oracles") {
  rnd::Rng rng = rnd::make_rng(3, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 2 + static_cast<int>(rnd::uniform_index(rng, 6));
    const int window = 1 + static_cast<int>(rnd::uniform_index(rng, 3));
    const int positions = 1 + static_cast<int>(rnd::uniform_index(rng, 5));
    const int filters = 1 + static_cast<int>(rnd::uniform_index(rng, 6));

    nn::ConvLayer conv;
    conv.window = window;
    conv.weights = random_matrix(rng, filters, window * dim);
    conv.bias = random_matrix(rng, filters, 1).col(0);
    const Matrix input = random_matrix(rng, dim, positions + window - 1);

    const Matrix activations = nn::conv_forward(conv, input);
    CHECK((activations - testing::naive_conv(conv.weights, conv.bias, window, input))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);

    const Vector pooled = nn::max_pool(activations);
    CHECK((pooled - testing::naive_max_pool(activations)).cwiseAbs().maxCoeff() <= 1e-12);

    nn::DenseLayer dense;
    dense.weights = random_matrix(rng, 3, filters);
    dense.bias = random_matrix(rng, 3, 1).col(0);
    const Vector logits = nn::dense_forward(dense, pooled);
    CHECK((logits - testing::naive_dense(dense.weights, dense.bias, pooled))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }
}

TEST_CASE("conv_forward rejects inputs narrower than the window") {
  nn::ConvLayer conv;
  conv.window = 3;
  conv.weights = Matrix::Zero(2, 6);
  conv.bias = Vector::Zero(2);
  CHECK_THROWS(nn::conv_forward(conv, Matrix::Zero(2, 2)));
}

TEST_CASE("max_pool breaks ties toward the first position") {
  Matrix activations(1, 3);
  activations << 2.0, 2.0, 1.0;
  nn::PoolCache cache;
  nn::max_pool(activations, &cache);
  CHECK(cache.argmax[0] == 0);

  // Gradient flows only to the winning position.
  Vector upstream(1);
  upstream << 1.0;
  const Matrix back = nn::max_pool_backward(cache, upstream);
  CHECK(back(0, 0) == 1.0);
  CHECK(back(0, 1) == 0.0);
}

TEST_CASE("softmax handles the documented cases") {
  Vector two(2);
  two << 0.0, 0.0;
  const Vector p = nn::softmax(two);
  CHECK(p(0) == doctest::Approx(0.5).epsilon(1e-12));

  Vector spread(2);
  spread << 1000.0, 999.0;  // must not overflow
  const Vector q = nn::softmax(spread);
  CHECK(std::isfinite(q(0)));
  CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-12));

  const auto r = nn::softmax_xent(two, 0);
  CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(r.d_logits(0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(r.d_logits(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS(nn::softmax_xent(two, 2));
  CHECK_THROWS(nn::softmax_xent(two, -1));
}

TEST_CASE("softmax cross-entropy matches the long-double oracle") {
  rnd::Rng rng = rnd::make_rng(3, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rnd::uniform_index(rng, 6));
    Vector z(n);
    for (int i = 0; i < n; ++i) z(i) = rnd::uniform_real(rng, -30.0, 30.0);
    const int gold = static_cast<int>(rnd::uniform_index(rng, n));
    const auto r = nn::softmax_xent(z, gold);
    CHECK(r.loss == doctest::Approx(testing::naive_softmax_xent_loss(z, gold)).epsilon(1e-11));
  }
}

TEST_CASE("layer gradients pass central-difference checking") {
  rnd::Rng rng = rnd::make_rng(3, 4);
  const int dim = 4, window = 2, positions = 5, filters = 3, classes = 3;
  nn::ConvLayer conv = nn::make_conv_layer(filters, window, dim, rng);
  nn::DenseLayer dense = nn::make_dense_layer(classes, filters, rng);
  const Matrix input = random_matrix(rng, dim, positions + window - 1);
  const int gold = 1;

  const auto loss_at = [&](const nn::ConvLayer& c, const nn::DenseLayer& d) {
    const Matrix a = nn::conv_forward(c, input);
    const Vector pooled = nn::max_pool(a);
    return nn::softmax_xent(nn::dense_forward(d, pooled), gold).loss;
  };

  // Analytic gradients through the layer backward functions.
  nn::ConvCache conv_cache;
  nn::PoolCache pool_cache;
  const Matrix a = nn::conv_forward(conv, input, &conv_cache);
  const Vector pooled = nn::max_pool(a, &pool_cache);
  const auto sm = nn::softmax_xent(nn::dense_forward(dense, pooled), gold);
  const auto dense_grads = nn::dense_backward(dense, pooled, sm.d_logits);
  const Matrix d_activations = nn::max_pool_backward(pool_cache, dense_grads.d_input);
  const auto conv_grads =
      nn::conv_backward(conv, conv_cache, static_cast<int>(input.cols()), d_activations);

  // Pack every parameter into one vector for the checker.
  const auto pack = [&](const nn::ConvLayer& c, const nn::DenseLayer& d) {
    Vector theta(c.weights.size() + c.bias.size() + d.weights.size() + d.bias.size());
    Eigen::Index at = 0;
    theta.segment(at, c.weights.size()) = Eigen::Map<const Vector>(c.weights.data(), c.weights.size());
    at += c.weights.size();
    theta.segment(at, c.bias.size()) = c.bias;
    at += c.bias.size();
    theta.segment(at, d.weights.size()) = Eigen::Map<const Vector>(d.weights.data(), d.weights.size());
    at += d.weights.size();
    theta.segment(at, d.bias.size()) = d.bias;
    return theta;
  };
  Vector analytic(conv.weights.size() + conv.bias.size() + dense.weights.size() + dense.bias.size());
  {
    Eigen::Index at = 0;
    analytic.segment(at, conv.weights.size()) =
        Eigen::Map<const Vector>(conv_grads.d_weights.data(), conv_grads.d_weights.size());
    at += conv.weights.size();
    analytic.segment(at, conv.bias.size()) = conv_grads.d_bias;
    at += conv.bias.size();
    analytic.segment(at, dense.weights.size()) =
        Eigen::Map<const Vector>(dense_grads.d_weights.data(), dense_grads.d_weights.size());
    at += dense.weights.size();
    analytic.segment(at, dense.bias.size()) = dense_grads.d_bias;
  }
  const auto unpack_loss = [&](const Vector& theta) {
    nn::ConvLayer c = conv;
    nn::DenseLayer d = dense;
    Eigen::Index at = 0;
    Eigen::Map<Vector>(c.weights.data(), c.weights.size()) = theta.segment(at, c.weights.size());
    at += c.weights.size();
    c.bias = theta.segment(at, c.bias.size());
    at += c.bias.size();
    Eigen::Map<Vector>(d.weights.data(), d.weights.size()) = theta.segment(at, d.weights.size());
    at += d.weights.size();
    d.bias = theta.segment(at, d.bias.size());
    return loss_at(c, d);
  };

  const auto report = nn::grad_check(unpack_loss, pack(conv, dense), analytic, 1e-5);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("rmsprop reproduces the scalar hand example") {
  Vector param(1), acc(1), grad(1);
  param << 1.0;
  acc << 0.0;
  grad << 1.0;
  nn::rmsprop_step(param, acc, grad, {});
  CHECK(acc(0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(1.0 - param(0) == doctest::Approx(0.001 / (std::sqrt(0.1) + 1e-8)).epsilon(1e-12));
  CHECK(1.0 - param(0) == doctest::Approx(0.0031623).epsilon(1e-4));
}

TEST_CASE("rmsprop accumulator decays toward the squared gradient") {
  Matrix param = Matrix::Zero(2, 2);
  Matrix acc = Matrix::Zero(2, 2);
  Matrix grad = Matrix::Constant(2, 2, 2.0);
  for (int i = 0; i < 200; ++i) nn::rmsprop_step(param, acc, grad, {});
  CHECK(acc(0, 0) == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("named tensors round-trip through JSON files") {
  rnd::Rng rng = rnd::make_rng(3, 5);
  nn::TensorMap tensors;
  tensors["a.weights"] = random_matrix(rng, 3, 4);
  tensors["b.bias"] = random_matrix(rng, 5, 1);
  const auto path = std::filesystem::temp_directory_path() / "tensors.json";
  nn::save_tensors(path, tensors);
  const nn::TensorMap loaded = nn::load_tensors(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.at("a.weights") == tensors.at("a.weights"));
  CHECK(loaded.at("b.bias") == tensors.at("b.bias"));
}

TEST_CASE("grad_check flags a wrong analytic gradient") {
  const auto quadratic = [](const Vector& theta) { return 0.5 * theta.squaredNorm(); };
  Vector theta(3);
  theta << 1.0, -2.0, 0.5;
  Vector right = theta;
  CHECK(nn::grad_check(quadratic, theta, right).max_rel_error < 1e-8);
  Vector wrong = theta * 2.0;
  CHECK(nn::grad_check(quadratic, theta, wrong).max_rel_error > 0.3);
}
