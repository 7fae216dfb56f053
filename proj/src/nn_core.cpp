#include "citescope/nn_core.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "citescope/io.hpp"

namespace citescope::nn {

// ---------------------------------------------------------------------------
// Initialization

Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out,
                      rnd::Rng& rng) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("glorot_uniform: empty shape");
  if (fan_in <= 0.0 || fan_out <= 0.0) {
    throw std::invalid_argument("glorot_uniform: fans must be positive");
  }
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix m(rows, cols);
  double* data = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) data[i] = rnd::uniform_real(rng, -limit, limit);
  return m;
}

ConvLayer make_conv_layer(int filters, int window, int dim, rnd::Rng& rng) {
  if (filters < 1 || window < 1 || dim < 1) {
    throw std::invalid_argument("make_conv_layer: filters, window, dim must be positive");
  }
  ConvLayer layer;
  const Eigen::Index in = static_cast<Eigen::Index>(window) * dim;
  layer.weights = glorot_uniform(filters, in, static_cast<double>(in),
                                 static_cast<double>(filters), rng);
  layer.bias = Vector::Zero(filters);
  layer.window = window;
  return layer;
}

DenseLayer make_dense_layer(int out_dim, int in_dim, rnd::Rng& rng) {
  if (out_dim < 1 || in_dim < 1) {
    throw std::invalid_argument("make_dense_layer: dimensions must be positive");
  }
  DenseLayer layer;
  layer.weights = glorot_uniform(out_dim, in_dim, static_cast<double>(in_dim),
                                 static_cast<double>(out_dim), rng);
  layer.bias = Vector::Zero(out_dim);
  return layer;
}

// ---------------------------------------------------------------------------
// Convolution

Matrix im2col(const Matrix& input, int window) {
  if (window < 1) throw std::invalid_argument("im2col: window must be positive");
  const Eigen::Index dim = input.rows();
  const Eigen::Index w = input.cols();
  if (w < window) throw std::invalid_argument("im2col: input narrower than window");
  const Eigen::Index T = w - window + 1;
  Matrix cols(static_cast<Eigen::Index>(window) * dim, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int j = 0; j < window; ++j) {
      cols.block(static_cast<Eigen::Index>(j) * dim, t, dim, 1) = input.col(t + j);
    }
  }
  return cols;
}

Matrix conv_forward(const ConvLayer& layer, const Matrix& input, ConvCache* cache) {
  if (layer.window < 1) throw std::invalid_argument("conv_forward: window must be positive");
  if (layer.weights.cols() != static_cast<Eigen::Index>(layer.window) * input.rows()) {
    throw std::invalid_argument("conv_forward: weight shape does not match window * dim");
  }
  const Matrix cols = im2col(input, layer.window);
  Matrix pre = layer.weights * cols;
  pre.colwise() += layer.bias;
  Matrix act = pre.cwiseMax(0.0);
  if (cache != nullptr) {
    cache->cols = cols;
    cache->pre = std::move(pre);
  }
  return act;
}

ConvGrads conv_backward(const ConvLayer& layer, const ConvCache& cache, int input_width,
                        const Matrix& upstream) {
  if (upstream.rows() != cache.pre.rows() || upstream.cols() != cache.pre.cols()) {
    throw std::invalid_argument("conv_backward: upstream shape mismatch");
  }
  const Eigen::Index dim = layer.weights.cols() / layer.window;
  const Eigen::Index T = cache.pre.cols();
  if (static_cast<Eigen::Index>(input_width) != T + layer.window - 1) {
    throw std::invalid_argument("conv_backward: input width inconsistent with cache");
  }

  // relu gate: gradients flow only where the pre-activation was positive.
  const Matrix d_pre = (cache.pre.array() > 0.0).select(upstream, Matrix::Zero(upstream.rows(), upstream.cols()));

  ConvGrads grads;
  grads.d_weights = d_pre * cache.cols.transpose();
  grads.d_bias = d_pre.rowwise().sum();
  const Matrix d_cols = layer.weights.transpose() * d_pre;
  grads.d_input = Matrix::Zero(dim, input_width);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int j = 0; j < layer.window; ++j) {
      grads.d_input.col(t + j) += d_cols.block(static_cast<Eigen::Index>(j) * dim, t, dim, 1);
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Pooling

Vector max_pool(const Matrix& activations, PoolCache* cache) {
  if (activations.cols() < 1) throw std::invalid_argument("max_pool: needs at least one column");
  const Eigen::Index rows = activations.rows();
  Vector pooled(rows);
  std::vector<Eigen::Index> argmax(static_cast<std::size_t>(rows), 0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::Index best = 0;
    double best_val = activations(r, 0);
    for (Eigen::Index c = 1; c < activations.cols(); ++c) {
      if (activations(r, c) > best_val) {  // strict: ties keep the first column
        best_val = activations(r, c);
        best = c;
      }
    }
    pooled[r] = best_val;
    argmax[static_cast<std::size_t>(r)] = best;
  }
  if (cache != nullptr) {
    cache->argmax = std::move(argmax);
    cache->cols = activations.cols();
  }
  return pooled;
}

Matrix max_pool_backward(const PoolCache& cache, const Vector& upstream) {
  if (static_cast<std::size_t>(upstream.size()) != cache.argmax.size()) {
    throw std::invalid_argument("max_pool_backward: upstream size mismatch");
  }
  Matrix d(upstream.size(), cache.cols);
  d.setZero();
  for (Eigen::Index r = 0; r < upstream.size(); ++r) {
    d(r, cache.argmax[static_cast<std::size_t>(r)]) = upstream[r];
  }
  return d;
}

// ---------------------------------------------------------------------------
// Dense

Vector dense_forward(const DenseLayer& layer, const Vector& input) {
  if (layer.weights.cols() != input.size()) {
    throw std::invalid_argument("dense_forward: input size mismatch");
  }
  return layer.weights * input + layer.bias;
}

DenseGrads dense_backward(const DenseLayer& layer, const Vector& input, const Vector& upstream) {
  if (upstream.size() != layer.weights.rows()) {
    throw std::invalid_argument("dense_backward: upstream size mismatch");
  }
  if (input.size() != layer.weights.cols()) {
    throw std::invalid_argument("dense_backward: input size mismatch");
  }
  DenseGrads grads;
  grads.d_weights = upstream * input.transpose();
  grads.d_bias = upstream;
  grads.d_input = layer.weights.transpose() * upstream;
  return grads;
}

// ---------------------------------------------------------------------------
// Softmax / cross-entropy

Vector softmax(const Vector& logits) {
  if (logits.size() < 1) throw std::invalid_argument("softmax: empty logits");
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp();
  return e / e.sum();
}

SoftmaxXentResult softmax_xent(const Vector& logits, int gold) {
  if (gold < 0 || gold >= logits.size()) {
    throw std::out_of_range("softmax_xent: gold label out of range");
  }
  const double m = logits.maxCoeff();
  const Eigen::ArrayXd shifted = logits.array() - m;
  const double lse = std::log(shifted.exp().sum());
  SoftmaxXentResult r;
  r.loss = lse - shifted[gold];
  r.probs = (shifted - lse).exp().matrix();
  r.d_logits = r.probs;
  r.d_logits[gold] -= 1.0;
  return r;
}

// ---------------------------------------------------------------------------
// RMSProp

void rmsprop_step(Matrix& param, Matrix& acc, const Matrix& grad, const RmsPropConfig& cfg) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() || param.rows() != acc.rows() ||
      param.cols() != acc.cols()) {
    throw std::invalid_argument("rmsprop_step: shape mismatch");
  }
  acc = cfg.rho * acc + (1.0 - cfg.rho) * grad.cwiseAbs2();
  param.array() -= cfg.lr * grad.array() / (acc.array().sqrt() + cfg.eps);
}

void rmsprop_step(Vector& param, Vector& acc, const Vector& grad, const RmsPropConfig& cfg) {
  if (param.size() != grad.size() || param.size() != acc.size()) {
    throw std::invalid_argument("rmsprop_step: shape mismatch");
  }
  acc = cfg.rho * acc + (1.0 - cfg.rho) * grad.cwiseAbs2();
  param.array() -= cfg.lr * grad.array() / (acc.array().sqrt() + cfg.eps);
}

// ---------------------------------------------------------------------------
// Gradient checking

GradCheckReport grad_check(const std::function<double(const Vector&)>& loss, const Vector& theta,
                           const Vector& analytic_grad, double epsilon) {
  if (theta.size() != analytic_grad.size()) {
    throw std::invalid_argument("grad_check: gradient size mismatch");
  }
  if (epsilon <= 0.0) throw std::invalid_argument("grad_check: epsilon must be positive");
  if (!std::isfinite(loss(theta))) throw std::runtime_error("grad_check: loss is not finite");

  GradCheckReport report;
  Vector probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + epsilon;
    const double up = loss(probe);
    probe[i] = original - epsilon;
    const double down = loss(probe);
    probe[i] = original;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = analytic_grad[i];
    const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-8);
    const double rel = std::abs(analytic - numeric) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Named-tensor container

namespace {
constexpr const char* kTensorFormat = "citescope.tensors";
constexpr int kTensorVersion = 1;
}  // namespace

std::string tensors_to_json(const TensorMap& tensors) {
  nlohmann::ordered_json root;
  root["format"] = kTensorFormat;
  root["version"] = kTensorVersion;
  nlohmann::ordered_json entries = nlohmann::ordered_json::object();
  for (const auto& [name, m] : tensors) {
    nlohmann::ordered_json entry;
    entry["rows"] = m.rows();
    entry["cols"] = m.cols();
    std::vector<double> values(m.data(), m.data() + m.size());
    entry["values"] = values;
    entries[name] = std::move(entry);
  }
  root["tensors"] = std::move(entries);
  return root.dump();
}

TensorMap tensors_from_json(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("malformed tensor file: ") + e.what());
  }
  if (root.value("format", "") != kTensorFormat) {
    throw std::runtime_error("not a tensor container (bad format tag)");
  }
  if (root.value("version", 0) != kTensorVersion) {
    throw std::runtime_error("unsupported tensor container version");
  }
  TensorMap out;
  for (const auto& [name, entry] : root.at("tensors").items()) {
    const Eigen::Index rows = entry.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = entry.at("cols").get<Eigen::Index>();
    const std::vector<double> values = entry.at("values").get<std::vector<double>>();
    if (rows < 0 || cols < 0 ||
        values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
      throw std::runtime_error("tensor \"" + name + "\" has inconsistent shape");
    }
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data());
    out.emplace(name, std::move(m));
  }
  return out;
}

void save_tensors(const std::filesystem::path& path, const TensorMap& tensors) {
  io::write_file_atomic(path, tensors_to_json(tensors));
}

TensorMap load_tensors(const std::filesystem::path& path) {
  return tensors_from_json(io::read_file(path));
}

}  // namespace citescope::nn
