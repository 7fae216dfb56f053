#include "citescope/models.hpp"

#include <algorithm>
#include <stdexcept>

#include "citescope/checksum.hpp"
#include "citescope/io.hpp"

namespace citescope::models {

namespace {

constexpr std::uint64_t kStreamInit = 301;
constexpr std::uint64_t kStreamShuffle = 302;

// ---------------------------------------------------------------------------
// Batched tower: stacks every example's im2col blocks side by side so one
// matrix product covers the whole minibatch.

struct TowerBatchCache {
  Matrix cols;                       // (window*dim) x (B*T)
  Matrix pre;                        // F x (B*T)
  std::vector<Eigen::Index> argmax;  // b*F + f -> winning t in [0, T)
  Eigen::Index T = 0;
  Eigen::Index B = 0;
};

double relu(double v) { return v > 0.0 ? v : 0.0; }

// xs must all be dim x w; returns pooled F x B.
Matrix tower_pooled_batch(const nn::ConvLayer& conv, const std::vector<const Matrix*>& xs,
                          TowerBatchCache* cache) {
  const Eigen::Index B = static_cast<Eigen::Index>(xs.size());
  if (B == 0) throw std::invalid_argument("tower batch: empty batch");
  const Eigen::Index dim = xs[0]->rows();
  const Eigen::Index w = xs[0]->cols();
  if (conv.weights.cols() != static_cast<Eigen::Index>(conv.window) * dim) {
    throw std::invalid_argument("tower batch: weight shape does not match window * dim");
  }
  if (w < conv.window) throw std::invalid_argument("tower batch: input narrower than window");
  const Eigen::Index T = w - conv.window + 1;
  const Eigen::Index F = conv.filters();

  Matrix cols(conv.weights.cols(), B * T);
  for (Eigen::Index b = 0; b < B; ++b) {
    const Matrix& x = *xs[b];
    if (x.rows() != dim || x.cols() != w) {
      throw std::invalid_argument("tower batch: inconsistent input shapes");
    }
    for (Eigen::Index t = 0; t < T; ++t) {
      for (int j = 0; j < conv.window; ++j) {
        cols.block(static_cast<Eigen::Index>(j) * dim, b * T + t, dim, 1) = x.col(t + j);
      }
    }
  }

  Matrix pre = conv.weights * cols;
  pre.colwise() += conv.bias;

  Matrix pooled(F, B);
  std::vector<Eigen::Index> argmax(static_cast<std::size_t>(F * B), 0);
  for (Eigen::Index b = 0; b < B; ++b) {
    for (Eigen::Index f = 0; f < F; ++f) {
      Eigen::Index best = 0;
      double best_val = relu(pre(f, b * T));
      for (Eigen::Index t = 1; t < T; ++t) {
        const double v = relu(pre(f, b * T + t));
        if (v > best_val) {  // strict: first column wins ties
          best_val = v;
          best = t;
        }
      }
      pooled(f, b) = best_val;
      argmax[static_cast<std::size_t>(b * F + f)] = best;
    }
  }
  if (cache != nullptr) {
    cache->cols = std::move(cols);
    cache->pre = std::move(pre);
    cache->argmax = std::move(argmax);
    cache->T = T;
    cache->B = B;
  }
  return pooled;
}

struct TowerGrads {
  Matrix d_w;
  Vector d_b;
};

// d_pooled is F x B. The pooled value at (f, b) came from one relu unit, so
// its gradient lands on a single column of the im2col block (and only when
// that unit's pre-activation was positive).
TowerGrads tower_backward_batch(const nn::ConvLayer& conv, const TowerBatchCache& cache,
                                const Matrix& d_pooled) {
  const Eigen::Index F = conv.filters();
  if (d_pooled.rows() != F || d_pooled.cols() != cache.B) {
    throw std::invalid_argument("tower backward: d_pooled shape mismatch");
  }
  TowerGrads grads;
  grads.d_w = Matrix::Zero(F, conv.weights.cols());
  grads.d_b = Vector::Zero(F);
  for (Eigen::Index b = 0; b < cache.B; ++b) {
    for (Eigen::Index f = 0; f < F; ++f) {
      const double g = d_pooled(f, b);
      if (g == 0.0) continue;
      const Eigen::Index col = b * cache.T + cache.argmax[static_cast<std::size_t>(b * F + f)];
      if (cache.pre(f, col) <= 0.0) continue;  // relu gate
      grads.d_w.row(f) += g * cache.cols.col(col).transpose();
      grads.d_b[f] += g;
    }
  }
  return grads;
}

struct HeadBatchGrads {
  double loss_sum = 0.0;
  Matrix d_w;
  Vector d_b;
  Matrix d_pooled;  // in x B
};

// Softmax cross-entropy head over a pooled batch; gradients are of the batch
// MEAN loss (each column's d_logits is divided by B).
HeadBatchGrads head_backward_batch(const nn::DenseLayer& head, const Matrix& pooled,
                                   const std::vector<int>& labels) {
  const Eigen::Index B = pooled.cols();
  if (static_cast<std::size_t>(B) != labels.size()) {
    throw std::invalid_argument("head batch: label count mismatch");
  }
  if (head.weights.cols() != pooled.rows()) {
    throw std::invalid_argument("head batch: pooled size mismatch");
  }
  Matrix logits = head.weights * pooled;
  logits.colwise() += head.bias;

  HeadBatchGrads out;
  Matrix d_logits(head.weights.rows(), B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const nn::SoftmaxXentResult r = nn::softmax_xent(logits.col(b), labels[b]);
    out.loss_sum += r.loss;
    d_logits.col(b) = r.d_logits / static_cast<double>(B);
  }
  out.d_w = d_logits * pooled.transpose();
  out.d_b = d_logits.rowwise().sum();
  out.d_pooled = head.weights.transpose() * d_logits;
  return out;
}

double head_loss_sum(const nn::DenseLayer& head, const Matrix& pooled,
                     const std::vector<int>& labels) {
  Matrix logits = head.weights * pooled;
  logits.colwise() += head.bias;
  double sum = 0.0;
  for (Eigen::Index b = 0; b < pooled.cols(); ++b) {
    sum += nn::softmax_xent(logits.col(b), labels[b]).loss;
  }
  return sum;
}

// Batch gather helpers -------------------------------------------------------

void check_batch(std::size_t data_size, const std::vector<std::size_t>& batch) {
  if (batch.empty()) throw std::invalid_argument("batch must be non-empty");
  for (const std::size_t i : batch) {
    if (i >= data_size) throw std::out_of_range("batch index out of range");
  }
}

void gather_function(const std::vector<FunctionExample>& data,
                     const std::vector<std::size_t>& batch, int classes,
                     std::vector<const Matrix*>& xs, std::vector<int>& labels) {
  check_batch(data.size(), batch);
  xs.reserve(batch.size());
  labels.reserve(batch.size());
  for (const std::size_t i : batch) {
    const FunctionExample& ex = data[i];
    if (ex.label < 0 || ex.label >= classes) {
      throw std::out_of_range("function label out of range");
    }
    xs.push_back(&ex.x);
    labels.push_back(ex.label);
  }
}

void gather_pairs(const std::vector<PairExample>& data, const std::vector<std::size_t>& batch,
                  int classes, std::vector<const Matrix*>& citing,
                  std::vector<const Matrix*>& fragment, std::vector<int>& labels) {
  check_batch(data.size(), batch);
  citing.reserve(batch.size());
  fragment.reserve(batch.size());
  labels.reserve(batch.size());
  for (const std::size_t i : batch) {
    const PairExample& ex = data[i];
    if (ex.label < 0 || ex.label >= classes) {
      throw std::out_of_range("pair label out of range");
    }
    citing.push_back(&ex.citing);
    fragment.push_back(&ex.fragment);
    labels.push_back(ex.label);
  }
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

void check_width(const char* what, const std::vector<const Matrix*>& xs, int width) {
  for (const Matrix* x : xs) {
    if (x->cols() != width) {
      throw std::invalid_argument(std::string(what) + ": input width does not match model");
    }
  }
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order,
                                                   int batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace

// ---------------------------------------------------------------------------
// Construction

CnnModel make_cnn(int filters, int window, int dim, int input_width, int classes,
                  std::uint64_t seed) {
  if (input_width < window) throw std::invalid_argument("make_cnn: input_width < window");
  if (classes < 2) throw std::invalid_argument("make_cnn: needs at least two classes");
  rnd::Rng rng = rnd::make_rng(seed, kStreamInit);
  CnnModel m;
  m.conv = nn::make_conv_layer(filters, window, dim, rng);
  m.head = nn::make_dense_layer(classes, filters, rng);
  m.input_width = input_width;
  return m;
}

DcnnModel make_dcnn(int filters, int window, int dim, int width_citing, int width_fragment,
                    std::uint64_t seed) {
  if (width_citing < window || width_fragment < window) {
    throw std::invalid_argument("make_dcnn: input width < window");
  }
  rnd::Rng rng = rnd::make_rng(seed, kStreamInit);
  DcnnModel m;
  m.conv_citing = nn::make_conv_layer(filters, window, dim, rng);
  m.conv_fragment = nn::make_conv_layer(filters, window, dim, rng);
  m.head = nn::make_dense_layer(2, 2 * filters, rng);
  m.width_citing = width_citing;
  m.width_fragment = width_fragment;
  return m;
}

MtlModel make_mtl(int filters, int window, int dim, int width_citing, int width_fragment,
                  std::uint64_t seed) {
  if (width_citing < window || width_fragment < window) {
    throw std::invalid_argument("make_mtl: input width < window");
  }
  rnd::Rng rng = rnd::make_rng(seed, kStreamInit);
  MtlModel m;
  m.conv_shared = nn::make_conv_layer(filters, window, dim, rng);
  m.conv_fragment = nn::make_conv_layer(filters, window, dim, rng);
  m.head_function = nn::make_dense_layer(4, filters, rng);
  m.head_provenance = nn::make_dense_layer(2, 2 * filters, rng);
  m.width_citing = width_citing;
  m.width_fragment = width_fragment;
  return m;
}

ConvState make_state(const nn::ConvLayer& layer) {
  return ConvState{Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
                   Vector::Zero(layer.bias.size())};
}

DenseState make_state(const nn::DenseLayer& layer) {
  return DenseState{Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
                    Vector::Zero(layer.bias.size())};
}

CnnOptState make_opt_state(const CnnModel& m) {
  return CnnOptState{make_state(m.conv), make_state(m.head)};
}
DcnnOptState make_opt_state(const DcnnModel& m) {
  return DcnnOptState{make_state(m.conv_citing), make_state(m.conv_fragment),
                      make_state(m.head)};
}
MtlOptState make_opt_state(const MtlModel& m) {
  return MtlOptState{make_state(m.conv_shared), make_state(m.conv_fragment),
                     make_state(m.head_function), make_state(m.head_provenance)};
}

// ---------------------------------------------------------------------------
// Inference

namespace {

Vector tower_pooled_single(const nn::ConvLayer& conv, const Matrix& x) {
  const Matrix act = nn::conv_forward(conv, x);
  return nn::max_pool(act);
}

}  // namespace

Vector cnn_probs(const CnnModel& m, const Matrix& x) {
  if (x.cols() != m.input_width) throw std::invalid_argument("cnn_probs: width mismatch");
  return nn::softmax(nn::dense_forward(m.head, tower_pooled_single(m.conv, x)));
}

Vector dcnn_probs(const DcnnModel& m, const Matrix& citing, const Matrix& fragment) {
  if (citing.cols() != m.width_citing || fragment.cols() != m.width_fragment) {
    throw std::invalid_argument("dcnn_probs: width mismatch");
  }
  Vector pooled(m.head.weights.cols());
  pooled << tower_pooled_single(m.conv_citing, citing),
      tower_pooled_single(m.conv_fragment, fragment);
  return nn::softmax(nn::dense_forward(m.head, pooled));
}

Vector mtl_function_probs(const MtlModel& m, const Matrix& citing) {
  if (citing.cols() != m.width_citing) {
    throw std::invalid_argument("mtl_function_probs: width mismatch");
  }
  return nn::softmax(nn::dense_forward(m.head_function, tower_pooled_single(m.conv_shared, citing)));
}

Vector mtl_provenance_probs(const MtlModel& m, const Matrix& citing, const Matrix& fragment) {
  if (citing.cols() != m.width_citing || fragment.cols() != m.width_fragment) {
    throw std::invalid_argument("mtl_provenance_probs: width mismatch");
  }
  Vector pooled(m.head_provenance.weights.cols());
  pooled << tower_pooled_single(m.conv_shared, citing),
      tower_pooled_single(m.conv_fragment, fragment);
  return nn::softmax(nn::dense_forward(m.head_provenance, pooled));
}

int argmax_class(const Vector& probs) {
  if (probs.size() < 1) throw std::invalid_argument("argmax_class: empty vector");
  int best = 0;
  for (int i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;  // strict: lowest index wins ties
  }
  return best;
}

// ---------------------------------------------------------------------------
// Loss / gradients

double cnn_loss(const CnnModel& m, const std::vector<FunctionExample>& data,
                const std::vector<std::size_t>& batch) {
  std::vector<const Matrix*> xs;
  std::vector<int> labels;
  gather_function(data, batch, static_cast<int>(m.head.weights.rows()), xs, labels);
  check_width("cnn", xs, m.input_width);
  const Matrix pooled = tower_pooled_batch(m.conv, xs, nullptr);
  return head_loss_sum(m.head, pooled, labels) / static_cast<double>(batch.size());
}

CnnGradients cnn_gradients(const CnnModel& m, const std::vector<FunctionExample>& data,
                           const std::vector<std::size_t>& batch) {
  std::vector<const Matrix*> xs;
  std::vector<int> labels;
  gather_function(data, batch, static_cast<int>(m.head.weights.rows()), xs, labels);
  check_width("cnn", xs, m.input_width);

  TowerBatchCache cache;
  const Matrix pooled = tower_pooled_batch(m.conv, xs, &cache);
  HeadBatchGrads head = head_backward_batch(m.head, pooled, labels);
  TowerGrads tower = tower_backward_batch(m.conv, cache, head.d_pooled);

  CnnGradients g;
  g.loss = head.loss_sum / static_cast<double>(batch.size());
  g.d_conv_w = std::move(tower.d_w);
  g.d_conv_b = std::move(tower.d_b);
  g.d_head_w = std::move(head.d_w);
  g.d_head_b = std::move(head.d_b);
  return g;
}

double dcnn_loss(const DcnnModel& m, const std::vector<PairExample>& data,
                 const std::vector<std::size_t>& batch) {
  std::vector<const Matrix*> citing, fragment;
  std::vector<int> labels;
  gather_pairs(data, batch, 2, citing, fragment, labels);
  check_width("dcnn citing", citing, m.width_citing);
  check_width("dcnn fragment", fragment, m.width_fragment);
  const Matrix pooled = vstack(tower_pooled_batch(m.conv_citing, citing, nullptr),
                               tower_pooled_batch(m.conv_fragment, fragment, nullptr));
  return head_loss_sum(m.head, pooled, labels) / static_cast<double>(batch.size());
}

DcnnGradients dcnn_gradients(const DcnnModel& m, const std::vector<PairExample>& data,
                             const std::vector<std::size_t>& batch) {
  std::vector<const Matrix*> citing, fragment;
  std::vector<int> labels;
  gather_pairs(data, batch, 2, citing, fragment, labels);
  check_width("dcnn citing", citing, m.width_citing);
  check_width("dcnn fragment", fragment, m.width_fragment);

  TowerBatchCache cache_c, cache_f;
  const Matrix pooled_c = tower_pooled_batch(m.conv_citing, citing, &cache_c);
  const Matrix pooled_f = tower_pooled_batch(m.conv_fragment, fragment, &cache_f);
  HeadBatchGrads head = head_backward_batch(m.head, vstack(pooled_c, pooled_f), labels);

  const Eigen::Index F = m.conv_citing.filters();
  TowerGrads tower_c = tower_backward_batch(m.conv_citing, cache_c, head.d_pooled.topRows(F));
  TowerGrads tower_f =
      tower_backward_batch(m.conv_fragment, cache_f, head.d_pooled.bottomRows(F));

  DcnnGradients g;
  g.loss = head.loss_sum / static_cast<double>(batch.size());
  g.d_citing_w = std::move(tower_c.d_w);
  g.d_citing_b = std::move(tower_c.d_b);
  g.d_fragment_w = std::move(tower_f.d_w);
  g.d_fragment_b = std::move(tower_f.d_b);
  g.d_head_w = std::move(head.d_w);
  g.d_head_b = std::move(head.d_b);
  return g;
}

double mtl_function_loss(const MtlModel& m, const std::vector<FunctionExample>& data,
                         const std::vector<std::size_t>& batch) {
  std::vector<const Matrix*> xs;
  std::vector<int> labels;
  gather_function(data, batch, 4, xs, labels);
  check_width("mtl function", xs, m.width_citing);
  const Matrix pooled = tower_pooled_batch(m.conv_shared, xs, nullptr);
  return head_loss_sum(m.head_function, pooled, labels) / static_cast<double>(batch.size());
}

MtlFunctionGradients mtl_function_gradients(const MtlModel& m,
                                            const std::vector<FunctionExample>& data,
                                            const std::vector<std::size_t>& batch) {
  std::vector<const Matrix*> xs;
  std::vector<int> labels;
  gather_function(data, batch, 4, xs, labels);
  check_width("mtl function", xs, m.width_citing);

  TowerBatchCache cache;
  const Matrix pooled = tower_pooled_batch(m.conv_shared, xs, &cache);
  HeadBatchGrads head = head_backward_batch(m.head_function, pooled, labels);
  TowerGrads tower = tower_backward_batch(m.conv_shared, cache, head.d_pooled);

  MtlFunctionGradients g;
  g.loss = head.loss_sum / static_cast<double>(batch.size());
  g.d_shared_w = std::move(tower.d_w);
  g.d_shared_b = std::move(tower.d_b);
  g.d_head_w = std::move(head.d_w);
  g.d_head_b = std::move(head.d_b);
  return g;
}

double mtl_provenance_loss(const MtlModel& m, const std::vector<PairExample>& data,
                           const std::vector<std::size_t>& batch) {
  std::vector<const Matrix*> citing, fragment;
  std::vector<int> labels;
  gather_pairs(data, batch, 2, citing, fragment, labels);
  check_width("mtl citing", citing, m.width_citing);
  check_width("mtl fragment", fragment, m.width_fragment);
  const Matrix pooled = vstack(tower_pooled_batch(m.conv_shared, citing, nullptr),
                               tower_pooled_batch(m.conv_fragment, fragment, nullptr));
  return head_loss_sum(m.head_provenance, pooled, labels) / static_cast<double>(batch.size());
}

MtlProvenanceGradients mtl_provenance_gradients(const MtlModel& m,
                                                const std::vector<PairExample>& data,
                                                const std::vector<std::size_t>& batch) {
  std::vector<const Matrix*> citing, fragment;
  std::vector<int> labels;
  gather_pairs(data, batch, 2, citing, fragment, labels);
  check_width("mtl citing", citing, m.width_citing);
  check_width("mtl fragment", fragment, m.width_fragment);

  TowerBatchCache cache_c, cache_f;
  const Matrix pooled_c = tower_pooled_batch(m.conv_shared, citing, &cache_c);
  const Matrix pooled_f = tower_pooled_batch(m.conv_fragment, fragment, &cache_f);
  HeadBatchGrads head = head_backward_batch(m.head_provenance, vstack(pooled_c, pooled_f), labels);

  const Eigen::Index F = m.conv_shared.filters();
  TowerGrads tower_c = tower_backward_batch(m.conv_shared, cache_c, head.d_pooled.topRows(F));
  TowerGrads tower_f =
      tower_backward_batch(m.conv_fragment, cache_f, head.d_pooled.bottomRows(F));

  MtlProvenanceGradients g;
  g.loss = head.loss_sum / static_cast<double>(batch.size());
  g.d_shared_w = std::move(tower_c.d_w);
  g.d_shared_b = std::move(tower_c.d_b);
  g.d_fragment_w = std::move(tower_f.d_w);
  g.d_fragment_b = std::move(tower_f.d_b);
  g.d_head_w = std::move(head.d_w);
  g.d_head_b = std::move(head.d_b);
  return g;
}

// ---------------------------------------------------------------------------
// Optimizer steps

double cnn_step(CnnModel& m, CnnOptState& st, const std::vector<FunctionExample>& data,
                const std::vector<std::size_t>& batch, const nn::RmsPropConfig& opt) {
  const CnnGradients g = cnn_gradients(m, data, batch);
  nn::rmsprop_step(m.conv.weights, st.conv.w_acc, g.d_conv_w, opt);
  nn::rmsprop_step(m.conv.bias, st.conv.b_acc, g.d_conv_b, opt);
  nn::rmsprop_step(m.head.weights, st.head.w_acc, g.d_head_w, opt);
  nn::rmsprop_step(m.head.bias, st.head.b_acc, g.d_head_b, opt);
  return g.loss;
}

double dcnn_step(DcnnModel& m, DcnnOptState& st, const std::vector<PairExample>& data,
                 const std::vector<std::size_t>& batch, const nn::RmsPropConfig& opt) {
  const DcnnGradients g = dcnn_gradients(m, data, batch);
  nn::rmsprop_step(m.conv_citing.weights, st.citing.w_acc, g.d_citing_w, opt);
  nn::rmsprop_step(m.conv_citing.bias, st.citing.b_acc, g.d_citing_b, opt);
  nn::rmsprop_step(m.conv_fragment.weights, st.fragment.w_acc, g.d_fragment_w, opt);
  nn::rmsprop_step(m.conv_fragment.bias, st.fragment.b_acc, g.d_fragment_b, opt);
  nn::rmsprop_step(m.head.weights, st.head.w_acc, g.d_head_w, opt);
  nn::rmsprop_step(m.head.bias, st.head.b_acc, g.d_head_b, opt);
  return g.loss;
}

double mtl_function_step(MtlModel& m, MtlOptState& st, const std::vector<FunctionExample>& data,
                         const std::vector<std::size_t>& batch, const nn::RmsPropConfig& opt) {
  const MtlFunctionGradients g = mtl_function_gradients(m, data, batch);
  nn::rmsprop_step(m.conv_shared.weights, st.shared.w_acc, g.d_shared_w, opt);
  nn::rmsprop_step(m.conv_shared.bias, st.shared.b_acc, g.d_shared_b, opt);
  nn::rmsprop_step(m.head_function.weights, st.function_head.w_acc, g.d_head_w, opt);
  nn::rmsprop_step(m.head_function.bias, st.function_head.b_acc, g.d_head_b, opt);
  return g.loss;
}

double mtl_provenance_step(MtlModel& m, MtlOptState& st, const std::vector<PairExample>& data,
                           const std::vector<std::size_t>& batch, const nn::RmsPropConfig& opt) {
  const MtlProvenanceGradients g = mtl_provenance_gradients(m, data, batch);
  nn::rmsprop_step(m.conv_shared.weights, st.shared.w_acc, g.d_shared_w, opt);
  nn::rmsprop_step(m.conv_shared.bias, st.shared.b_acc, g.d_shared_b, opt);
  nn::rmsprop_step(m.conv_fragment.weights, st.fragment.w_acc, g.d_fragment_w, opt);
  nn::rmsprop_step(m.conv_fragment.bias, st.fragment.b_acc, g.d_fragment_b, opt);
  nn::rmsprop_step(m.head_provenance.weights, st.provenance_head.w_acc, g.d_head_w, opt);
  nn::rmsprop_step(m.head_provenance.bias, st.provenance_head.b_acc, g.d_head_b, opt);
  return g.loss;
}

// ---------------------------------------------------------------------------
// Training loops

TrainHistory train_cnn(CnnModel& m, const std::vector<FunctionExample>& data,
                       const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (data.empty()) throw std::invalid_argument("train_cnn: empty dataset");
  CnnOptState st = make_opt_state(m);
  rnd::Rng rng = rnd::make_rng(cfg.seed, kStreamShuffle);
  TrainHistory history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = rnd::shuffled_indices(data.size(), rng);
    double loss_total = 0.0;
    for (const auto& batch : make_batches(order, cfg.batch_size)) {
      loss_total += cnn_step(m, st, data, batch, cfg.opt) * static_cast<double>(batch.size());
    }
    history.epoch_mean_loss.push_back(loss_total / static_cast<double>(data.size()));
  }
  return history;
}

TrainHistory train_dcnn(DcnnModel& m, const std::vector<PairExample>& data,
                        const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (data.empty()) throw std::invalid_argument("train_dcnn: empty dataset");
  DcnnOptState st = make_opt_state(m);
  rnd::Rng rng = rnd::make_rng(cfg.seed, kStreamShuffle);
  TrainHistory history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = rnd::shuffled_indices(data.size(), rng);
    double loss_total = 0.0;
    for (const auto& batch : make_batches(order, cfg.batch_size)) {
      loss_total += dcnn_step(m, st, data, batch, cfg.opt) * static_cast<double>(batch.size());
    }
    history.epoch_mean_loss.push_back(loss_total / static_cast<double>(data.size()));
  }
  return history;
}

MtlTrainHistory train_mtl(MtlModel& m, const std::vector<FunctionExample>& function_data,
                          const std::vector<PairExample>& provenance_data,
                          const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (function_data.empty() || provenance_data.empty()) {
    throw std::invalid_argument("train_mtl: both datasets must be non-empty");
  }
  MtlOptState st = make_opt_state(m);
  rnd::Rng rng = rnd::make_rng(cfg.seed, kStreamShuffle);
  MtlTrainHistory history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> f_order = rnd::shuffled_indices(function_data.size(), rng);
    const std::vector<std::size_t> p_order = rnd::shuffled_indices(provenance_data.size(), rng);
    const auto f_batches = make_batches(f_order, cfg.batch_size);
    const auto p_batches = make_batches(p_order, cfg.batch_size);
    const std::size_t steps = std::max(f_batches.size(), p_batches.size());

    // One cycle = one function step then one provenance step; the shorter
    // batch stream is reused round-robin until the longer one is exhausted.
    double f_loss_sum = 0.0;
    double p_loss_sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      f_loss_sum += mtl_function_step(m, st, function_data, f_batches[s % f_batches.size()],
                                      cfg.opt);
      p_loss_sum += mtl_provenance_step(m, st, provenance_data, p_batches[s % p_batches.size()],
                                        cfg.opt);
    }
    const double steps_d = static_cast<double>(steps);
    history.epoch_mean_loss.push_back(0.5 * (f_loss_sum / steps_d + p_loss_sum / steps_d));
    history.steps_per_epoch = static_cast<int>(steps);
  }
  return history;
}

// ---------------------------------------------------------------------------
// Parameter flattening

namespace {

struct FlatWriter {
  Vector out;
  Eigen::Index at = 0;
  explicit FlatWriter(Eigen::Index n) : out(n) {}
  void put(const Matrix& m) {
    out.segment(at, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
    at += m.size();
  }
  void put(const Vector& v) {
    out.segment(at, v.size()) = v;
    at += v.size();
  }
};

struct FlatReader {
  const Vector& in;
  Eigen::Index at = 0;
  explicit FlatReader(const Vector& v) : in(v) {}
  void take(Matrix& m) {
    Eigen::Map<Vector>(m.data(), m.size()) = in.segment(at, m.size());
    at += m.size();
  }
  void take(Vector& v) {
    v = in.segment(at, v.size());
    at += v.size();
  }
};

Eigen::Index conv_size(const nn::ConvLayer& l) { return l.weights.size() + l.bias.size(); }
Eigen::Index dense_size(const nn::DenseLayer& l) { return l.weights.size() + l.bias.size(); }

}  // namespace

Vector pack_cnn(const CnnModel& m) {
  FlatWriter w(conv_size(m.conv) + dense_size(m.head));
  w.put(m.conv.weights);
  w.put(m.conv.bias);
  w.put(m.head.weights);
  w.put(m.head.bias);
  return w.out;
}

void unpack_cnn(const Vector& theta, CnnModel& m) {
  if (theta.size() != conv_size(m.conv) + dense_size(m.head)) {
    throw std::invalid_argument("unpack_cnn: size mismatch");
  }
  FlatReader r(theta);
  r.take(m.conv.weights);
  r.take(m.conv.bias);
  r.take(m.head.weights);
  r.take(m.head.bias);
}

Vector pack_cnn_grads(const CnnGradients& g) {
  FlatWriter w(g.d_conv_w.size() + g.d_conv_b.size() + g.d_head_w.size() + g.d_head_b.size());
  w.put(g.d_conv_w);
  w.put(g.d_conv_b);
  w.put(g.d_head_w);
  w.put(g.d_head_b);
  return w.out;
}

Vector pack_dcnn(const DcnnModel& m) {
  FlatWriter w(conv_size(m.conv_citing) + conv_size(m.conv_fragment) + dense_size(m.head));
  w.put(m.conv_citing.weights);
  w.put(m.conv_citing.bias);
  w.put(m.conv_fragment.weights);
  w.put(m.conv_fragment.bias);
  w.put(m.head.weights);
  w.put(m.head.bias);
  return w.out;
}

void unpack_dcnn(const Vector& theta, DcnnModel& m) {
  if (theta.size() !=
      conv_size(m.conv_citing) + conv_size(m.conv_fragment) + dense_size(m.head)) {
    throw std::invalid_argument("unpack_dcnn: size mismatch");
  }
  FlatReader r(theta);
  r.take(m.conv_citing.weights);
  r.take(m.conv_citing.bias);
  r.take(m.conv_fragment.weights);
  r.take(m.conv_fragment.bias);
  r.take(m.head.weights);
  r.take(m.head.bias);
}

Vector pack_dcnn_grads(const DcnnGradients& g) {
  FlatWriter w(g.d_citing_w.size() + g.d_citing_b.size() + g.d_fragment_w.size() +
               g.d_fragment_b.size() + g.d_head_w.size() + g.d_head_b.size());
  w.put(g.d_citing_w);
  w.put(g.d_citing_b);
  w.put(g.d_fragment_w);
  w.put(g.d_fragment_b);
  w.put(g.d_head_w);
  w.put(g.d_head_b);
  return w.out;
}

namespace {

Eigen::Index mtl_size(const MtlModel& m) {
  return conv_size(m.conv_shared) + conv_size(m.conv_fragment) + dense_size(m.head_function) +
         dense_size(m.head_provenance);
}

}  // namespace

Vector pack_mtl(const MtlModel& m) {
  FlatWriter w(mtl_size(m));
  w.put(m.conv_shared.weights);
  w.put(m.conv_shared.bias);
  w.put(m.conv_fragment.weights);
  w.put(m.conv_fragment.bias);
  w.put(m.head_function.weights);
  w.put(m.head_function.bias);
  w.put(m.head_provenance.weights);
  w.put(m.head_provenance.bias);
  return w.out;
}

void unpack_mtl(const Vector& theta, MtlModel& m) {
  if (theta.size() != mtl_size(m)) throw std::invalid_argument("unpack_mtl: size mismatch");
  FlatReader r(theta);
  r.take(m.conv_shared.weights);
  r.take(m.conv_shared.bias);
  r.take(m.conv_fragment.weights);
  r.take(m.conv_fragment.bias);
  r.take(m.head_function.weights);
  r.take(m.head_function.bias);
  r.take(m.head_provenance.weights);
  r.take(m.head_provenance.bias);
}

Vector pack_mtl_function_grads(const MtlFunctionGradients& g, const MtlModel& m) {
  FlatWriter w(mtl_size(m));
  w.put(g.d_shared_w);
  w.put(g.d_shared_b);
  w.put(Matrix(Matrix::Zero(m.conv_fragment.weights.rows(), m.conv_fragment.weights.cols())));
  w.put(Vector(Vector::Zero(m.conv_fragment.bias.size())));
  w.put(g.d_head_w);
  w.put(g.d_head_b);
  w.put(Matrix(Matrix::Zero(m.head_provenance.weights.rows(), m.head_provenance.weights.cols())));
  w.put(Vector(Vector::Zero(m.head_provenance.bias.size())));
  return w.out;
}

Vector pack_mtl_provenance_grads(const MtlProvenanceGradients& g, const MtlModel& m) {
  FlatWriter w(mtl_size(m));
  w.put(g.d_shared_w);
  w.put(g.d_shared_b);
  w.put(g.d_fragment_w);
  w.put(g.d_fragment_b);
  w.put(Matrix(Matrix::Zero(m.head_function.weights.rows(), m.head_function.weights.cols())));
  w.put(Vector(Vector::Zero(m.head_function.bias.size())));
  w.put(g.d_head_w);
  w.put(g.d_head_b);
  return w.out;
}

// ---------------------------------------------------------------------------
// Checksums

namespace {

std::string two_tensor_checksum(const Matrix& w, const Vector& b) {
  checksum::Sha256 h;
  h.update(w);
  h.update(b.data(), sizeof(double) * static_cast<std::size_t>(b.size()));
  return h.hex_digest();
}

}  // namespace

std::string checksum(const nn::ConvLayer& layer) {
  return two_tensor_checksum(layer.weights, layer.bias);
}
std::string checksum(const nn::DenseLayer& layer) {
  return two_tensor_checksum(layer.weights, layer.bias);
}
std::string checksum(const ConvState& st) { return two_tensor_checksum(st.w_acc, st.b_acc); }
std::string checksum(const DenseState& st) { return two_tensor_checksum(st.w_acc, st.b_acc); }

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kCheckpointFormat = "citescope.checkpoint";
constexpr int kCheckpointVersion = 1;

Matrix require_tensor(const nn::TensorMap& t, const std::string& name) {
  const auto it = t.find(name);
  if (it == t.end()) throw std::runtime_error("checkpoint is missing tensor \"" + name + "\"");
  return it->second;
}

Vector require_vector(const nn::TensorMap& t, const std::string& name) {
  const Matrix m = require_tensor(t, name);
  if (m.cols() != 1) throw std::runtime_error("tensor \"" + name + "\" is not a column vector");
  return m.col(0);
}

nn::ConvLayer conv_from(const nn::TensorMap& t, const std::string& prefix, int window) {
  nn::ConvLayer layer;
  layer.weights = require_tensor(t, prefix + ".weights");
  layer.bias = require_vector(t, prefix + ".bias");
  layer.window = window;
  if (layer.weights.rows() != layer.bias.size() || layer.weights.cols() % window != 0) {
    throw std::runtime_error("checkpoint tensor shapes are inconsistent for " + prefix);
  }
  return layer;
}

nn::DenseLayer dense_from(const nn::TensorMap& t, const std::string& prefix) {
  nn::DenseLayer layer;
  layer.weights = require_tensor(t, prefix + ".weights");
  layer.bias = require_vector(t, prefix + ".bias");
  if (layer.weights.rows() != layer.bias.size()) {
    throw std::runtime_error("checkpoint tensor shapes are inconsistent for " + prefix);
  }
  return layer;
}

void put_conv(nn::TensorMap& t, const std::string& prefix, const nn::ConvLayer& layer) {
  t[prefix + ".weights"] = layer.weights;
  t[prefix + ".bias"] = layer.bias;
}

void put_dense(nn::TensorMap& t, const std::string& prefix, const nn::DenseLayer& layer) {
  t[prefix + ".weights"] = layer.weights;
  t[prefix + ".bias"] = layer.bias;
}

}  // namespace

nn::TensorMap cnn_tensors(const CnnModel& m) {
  nn::TensorMap t;
  put_conv(t, "conv", m.conv);
  put_dense(t, "head", m.head);
  return t;
}

nn::TensorMap dcnn_tensors(const DcnnModel& m) {
  nn::TensorMap t;
  put_conv(t, "conv_citing", m.conv_citing);
  put_conv(t, "conv_fragment", m.conv_fragment);
  put_dense(t, "head", m.head);
  return t;
}

nn::TensorMap mtl_tensors(const MtlModel& m) {
  nn::TensorMap t;
  put_conv(t, "conv_shared", m.conv_shared);
  put_conv(t, "conv_fragment", m.conv_fragment);
  put_dense(t, "head_function", m.head_function);
  put_dense(t, "head_provenance", m.head_provenance);
  return t;
}

CnnModel cnn_from_tensors(const nn::TensorMap& t, int window, int input_width) {
  CnnModel m;
  m.conv = conv_from(t, "conv", window);
  m.head = dense_from(t, "head");
  m.input_width = input_width;
  return m;
}

DcnnModel dcnn_from_tensors(const nn::TensorMap& t, int window, int width_citing,
                            int width_fragment) {
  DcnnModel m;
  m.conv_citing = conv_from(t, "conv_citing", window);
  m.conv_fragment = conv_from(t, "conv_fragment", window);
  m.head = dense_from(t, "head");
  m.width_citing = width_citing;
  m.width_fragment = width_fragment;
  return m;
}

MtlModel mtl_from_tensors(const nn::TensorMap& t, int window, int width_citing,
                          int width_fragment) {
  MtlModel m;
  m.conv_shared = conv_from(t, "conv_shared", window);
  m.conv_fragment = conv_from(t, "conv_fragment", window);
  m.head_function = dense_from(t, "head_function");
  m.head_provenance = dense_from(t, "head_provenance");
  m.width_citing = width_citing;
  m.width_fragment = width_fragment;
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointDoc& doc) {
  nlohmann::ordered_json root;
  root["format"] = kCheckpointFormat;
  root["version"] = kCheckpointVersion;
  root["kind"] = doc.kind;
  root["meta"] = doc.meta;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::object();
  for (const auto& [name, m] : doc.tensors) {
    nlohmann::ordered_json entry;
    entry["rows"] = m.rows();
    entry["cols"] = m.cols();
    entry["values"] = std::vector<double>(m.data(), m.data() + m.size());
    tensors[name] = std::move(entry);
  }
  root["tensors"] = std::move(tensors);
  io::write_file_atomic(path, root.dump());
}

CheckpointDoc load_checkpoint(const std::filesystem::path& path) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("malformed checkpoint " + path.string() + ": " + e.what());
  }
  if (root.value("format", "") != kCheckpointFormat) {
    throw std::runtime_error(path.string() + " is not a model checkpoint");
  }
  if (root.value("version", 0) != kCheckpointVersion) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version");
  }
  CheckpointDoc doc;
  doc.kind = root.at("kind").get<std::string>();
  doc.meta = root.at("meta");
  for (const auto& [name, entry] : root.at("tensors").items()) {
    const Eigen::Index rows = entry.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = entry.at("cols").get<Eigen::Index>();
    const std::vector<double> values = entry.at("values").get<std::vector<double>>();
    if (rows < 0 || cols < 0 ||
        values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
      throw std::runtime_error(path.string() + ": tensor \"" + name + "\" has bad shape");
    }
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data());
    doc.tensors.emplace(name, std::move(m));
  }
  return doc;
}

}  // namespace citescope::models
