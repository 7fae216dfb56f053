#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "citescope/rng.hpp"

namespace citescope::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Initialization

// Uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)); entries
// drawn in storage (column-major) order.
Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out,
                      rnd::Rng& rng);

// ---------------------------------------------------------------------------
// 1-D convolution over columns of a dim x w input

struct ConvLayer {
  Matrix weights;  // filters x (window * dim)
  Vector bias;     // filters
  int window = 0;

  Eigen::Index filters() const { return weights.rows(); }
};

ConvLayer make_conv_layer(int filters, int window, int dim, rnd::Rng& rng);

// Window t flattened word-by-word: entry (j*dim + d) of column t is
// input(d, t+j). Result is (window*dim) x (w - window + 1).
Matrix im2col(const Matrix& input, int window);

struct ConvCache {
  Matrix cols;  // im2col of the input
  Matrix pre;   // pre-activation, filters x T
};

// relu(W * im2col(x) + b); x is dim x w with w >= window.
Matrix conv_forward(const ConvLayer& layer, const Matrix& input, ConvCache* cache = nullptr);

struct ConvGrads {
  Matrix d_weights;
  Vector d_bias;
  Matrix d_input;  // dim x w
};

// Upstream is d(loss)/d(activations), filters x T.
ConvGrads conv_backward(const ConvLayer& layer, const ConvCache& cache, int input_width,
                        const Matrix& upstream);

// ---------------------------------------------------------------------------
// Row-wise max pooling

struct PoolCache {
  std::vector<Eigen::Index> argmax;  // first column attaining each row max
  Eigen::Index cols = 0;
};

Vector max_pool(const Matrix& activations, PoolCache* cache = nullptr);

// Routes each row's upstream gradient to the argmax column; all other
// positions get zero, so column sums of the result equal the upstream.
Matrix max_pool_backward(const PoolCache& cache, const Vector& upstream);

// ---------------------------------------------------------------------------
// Dense head

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
};

DenseLayer make_dense_layer(int out_dim, int in_dim, rnd::Rng& rng);

Vector dense_forward(const DenseLayer& layer, const Vector& input);

struct DenseGrads {
  Matrix d_weights;
  Vector d_bias;
  Vector d_input;
};

DenseGrads dense_backward(const DenseLayer& layer, const Vector& input, const Vector& upstream);

// ---------------------------------------------------------------------------
// Softmax + categorical cross-entropy

// Max-subtracted softmax; probabilities sum to 1 for any finite logits.
Vector softmax(const Vector& logits);

struct SoftmaxXentResult {
  double loss = 0.0;
  Vector probs;
  Vector d_logits;  // probs - onehot(gold)
};

// Loss computed via log-sum-exp; gold must lie in [0, logits.size()).
SoftmaxXentResult softmax_xent(const Vector& logits, int gold);

// ---------------------------------------------------------------------------
// RMSProp

struct RmsPropConfig {
  double lr = 0.001;
  double rho = 0.9;
  double eps = 1e-8;
};

// acc <- rho*acc + (1-rho)*grad^2; param <- param - lr * grad / (sqrt(acc) + eps)
void rmsprop_step(Matrix& param, Matrix& acc, const Matrix& grad, const RmsPropConfig& cfg);
void rmsprop_step(Vector& param, Vector& acc, const Vector& grad, const RmsPropConfig& cfg);

// ---------------------------------------------------------------------------
// Gradient checking

struct GradCheckReport {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
};

// Central differences on every coordinate of theta:
//   rel = |analytic - numeric| / max(|analytic| + |numeric|, 1e-8).
// Throws if loss(theta) is not finite.
GradCheckReport grad_check(const std::function<double(const Vector&)>& loss, const Vector& theta,
                           const Vector& analytic_grad, double epsilon = 1e-5);

// ---------------------------------------------------------------------------
// Named-tensor container (JSON; column-major value order)

using TensorMap = std::map<std::string, Matrix>;

std::string tensors_to_json(const TensorMap& tensors);
TensorMap tensors_from_json(const std::string& text);
void save_tensors(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap load_tensors(const std::filesystem::path& path);

}  // namespace citescope::nn
