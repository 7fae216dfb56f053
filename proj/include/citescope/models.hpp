#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "citescope/nn_core.hpp"

namespace citescope::models {

using nn::Matrix;
using nn::Vector;

// ---------------------------------------------------------------------------
// Training inputs: pre-embedded sequences (embeddings are frozen, so examples
// carry their dim x w matrices directly).

struct FunctionExample {
  Matrix x;  // dim x w
  int label = 0;
};

struct PairExample {
  Matrix citing;    // dim x w_citing
  Matrix fragment;  // dim x w_fragment
  int label = 0;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 256;
  nn::RmsPropConfig opt{};
  std::uint64_t seed = 13;
};

// ---------------------------------------------------------------------------
// Architectures

// Single tower: conv -> relu -> max-pool -> dense -> softmax.
struct CnnModel {
  nn::ConvLayer conv;
  nn::DenseLayer head;  // classes x filters
  int input_width = 0;
};

// Two independent towers whose pooled vectors are concatenated
// (citing first) before a binary dense head.
struct DcnnModel {
  nn::ConvLayer conv_citing;
  nn::ConvLayer conv_fragment;
  nn::DenseLayer head;  // 2 x (2*filters)
  int width_citing = 0;
  int width_fragment = 0;
};

// Multi-task: the citing tower is shared between a 4-way function head and a
// binary provenance head; the fragment tower serves the provenance head only.
struct MtlModel {
  nn::ConvLayer conv_shared;
  nn::ConvLayer conv_fragment;
  nn::DenseLayer head_function;    // 4 x filters
  nn::DenseLayer head_provenance;  // 2 x (2*filters)
  int width_citing = 0;
  int width_fragment = 0;
};

CnnModel make_cnn(int filters, int window, int dim, int input_width, int classes,
                  std::uint64_t seed);
DcnnModel make_dcnn(int filters, int window, int dim, int width_citing, int width_fragment,
                    std::uint64_t seed);
MtlModel make_mtl(int filters, int window, int dim, int width_citing, int width_fragment,
                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Optimizer state: one squared-gradient accumulator per parameter tensor.

struct ConvState {
  Matrix w_acc;
  Vector b_acc;
};
struct DenseState {
  Matrix w_acc;
  Vector b_acc;
};

ConvState make_state(const nn::ConvLayer& layer);
DenseState make_state(const nn::DenseLayer& layer);

struct CnnOptState {
  ConvState conv;
  DenseState head;
};
struct DcnnOptState {
  ConvState citing;
  ConvState fragment;
  DenseState head;
};
struct MtlOptState {
  ConvState shared;
  ConvState fragment;
  DenseState function_head;
  DenseState provenance_head;
};

CnnOptState make_opt_state(const CnnModel& m);
DcnnOptState make_opt_state(const DcnnModel& m);
MtlOptState make_opt_state(const MtlModel& m);

// ---------------------------------------------------------------------------
// Inference

Vector cnn_probs(const CnnModel& m, const Matrix& x);
Vector dcnn_probs(const DcnnModel& m, const Matrix& citing, const Matrix& fragment);
Vector mtl_function_probs(const MtlModel& m, const Matrix& citing);
Vector mtl_provenance_probs(const MtlModel& m, const Matrix& citing, const Matrix& fragment);

// Lowest index wins exact ties.
int argmax_class(const Vector& probs);

// ---------------------------------------------------------------------------
// Batch loss and analytic gradients (no parameter mutation). Loss is the mean
// categorical cross-entropy over the batch; gradients are of that mean.

struct CnnGradients {
  double loss = 0.0;
  Matrix d_conv_w;
  Vector d_conv_b;
  Matrix d_head_w;
  Vector d_head_b;
};

struct DcnnGradients {
  double loss = 0.0;
  Matrix d_citing_w;
  Vector d_citing_b;
  Matrix d_fragment_w;
  Vector d_fragment_b;
  Matrix d_head_w;
  Vector d_head_b;
};

struct MtlFunctionGradients {
  double loss = 0.0;
  Matrix d_shared_w;
  Vector d_shared_b;
  Matrix d_head_w;
  Vector d_head_b;
};

struct MtlProvenanceGradients {
  double loss = 0.0;
  Matrix d_shared_w;
  Vector d_shared_b;
  Matrix d_fragment_w;
  Vector d_fragment_b;
  Matrix d_head_w;
  Vector d_head_b;
};

double cnn_loss(const CnnModel& m, const std::vector<FunctionExample>& data,
                const std::vector<std::size_t>& batch);
double dcnn_loss(const DcnnModel& m, const std::vector<PairExample>& data,
                 const std::vector<std::size_t>& batch);
double mtl_function_loss(const MtlModel& m, const std::vector<FunctionExample>& data,
                         const std::vector<std::size_t>& batch);
double mtl_provenance_loss(const MtlModel& m, const std::vector<PairExample>& data,
                           const std::vector<std::size_t>& batch);

CnnGradients cnn_gradients(const CnnModel& m, const std::vector<FunctionExample>& data,
                           const std::vector<std::size_t>& batch);
DcnnGradients dcnn_gradients(const DcnnModel& m, const std::vector<PairExample>& data,
                             const std::vector<std::size_t>& batch);
MtlFunctionGradients mtl_function_gradients(const MtlModel& m,
                                            const std::vector<FunctionExample>& data,
                                            const std::vector<std::size_t>& batch);
MtlProvenanceGradients mtl_provenance_gradients(const MtlModel& m,
                                                const std::vector<PairExample>& data,
                                                const std::vector<std::size_t>& batch);

// ---------------------------------------------------------------------------
// Single optimizer steps over one minibatch (indices into the dataset).
// Each returns the batch mean loss. Only the tensors belonging to the
// executed task are touched — parameters and accumulators alike: a function
// step moves the shared tower and function head, a provenance step moves the
// shared tower, fragment tower and provenance head, and nothing else.

double cnn_step(CnnModel& m, CnnOptState& st, const std::vector<FunctionExample>& data,
                const std::vector<std::size_t>& batch, const nn::RmsPropConfig& opt);
double dcnn_step(DcnnModel& m, DcnnOptState& st, const std::vector<PairExample>& data,
                 const std::vector<std::size_t>& batch, const nn::RmsPropConfig& opt);
double mtl_function_step(MtlModel& m, MtlOptState& st, const std::vector<FunctionExample>& data,
                         const std::vector<std::size_t>& batch, const nn::RmsPropConfig& opt);
double mtl_provenance_step(MtlModel& m, MtlOptState& st, const std::vector<PairExample>& data,
                           const std::vector<std::size_t>& batch, const nn::RmsPropConfig& opt);

// ---------------------------------------------------------------------------
// Full training loops (shuffled minibatches, one RMSProp step per batch)

struct TrainHistory {
  std::vector<double> epoch_mean_loss;
};

TrainHistory train_cnn(CnnModel& m, const std::vector<FunctionExample>& data,
                       const TrainConfig& cfg);
TrainHistory train_dcnn(DcnnModel& m, const std::vector<PairExample>& data,
                        const TrainConfig& cfg);

// Alternates function and provenance steps each cycle; the stream with fewer
// batches is reused round-robin until the longer one finishes. The reported
// epoch loss averages the two tasks' mean step losses.
struct MtlTrainHistory {
  std::vector<double> epoch_mean_loss;
  int steps_per_epoch = 0;  // cycles; each runs one step of both tasks
};

MtlTrainHistory train_mtl(MtlModel& m, const std::vector<FunctionExample>& function_data,
                          const std::vector<PairExample>& provenance_data,
                          const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Canonical parameter flattening (fixed tensor order, column-major within
// each tensor) for finite-difference checking of whole models.

Vector pack_cnn(const CnnModel& m);
void unpack_cnn(const Vector& theta, CnnModel& m);
Vector pack_cnn_grads(const CnnGradients& g);

Vector pack_dcnn(const DcnnModel& m);
void unpack_dcnn(const Vector& theta, DcnnModel& m);
Vector pack_dcnn_grads(const DcnnGradients& g);

Vector pack_mtl(const MtlModel& m);
void unpack_mtl(const Vector& theta, MtlModel& m);
// Tensors a task does not touch contribute zero blocks, placed to align with
// pack_mtl's layout.
Vector pack_mtl_function_grads(const MtlFunctionGradients& g, const MtlModel& m);
Vector pack_mtl_provenance_grads(const MtlProvenanceGradients& g, const MtlModel& m);

// ---------------------------------------------------------------------------
// Parameter checksums (SHA-256 over raw tensor bytes), for isolation checks.

std::string checksum(const nn::ConvLayer& layer);
std::string checksum(const nn::DenseLayer& layer);
std::string checksum(const ConvState& st);
std::string checksum(const DenseState& st);

// ---------------------------------------------------------------------------
// Checkpoints: kind tag + opaque metadata + named tensors in one JSON file.

struct CheckpointDoc {
  std::string kind;  // "cnn" | "dcnn" | "mtl" | "nb" | "tree"
  nlohmann::ordered_json meta;
  nn::TensorMap tensors;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointDoc& doc);
CheckpointDoc load_checkpoint(const std::filesystem::path& path);

nn::TensorMap cnn_tensors(const CnnModel& m);
nn::TensorMap dcnn_tensors(const DcnnModel& m);
nn::TensorMap mtl_tensors(const MtlModel& m);
CnnModel cnn_from_tensors(const nn::TensorMap& t, int window, int input_width);
DcnnModel dcnn_from_tensors(const nn::TensorMap& t, int window, int width_citing,
                            int width_fragment);
MtlModel mtl_from_tensors(const nn::TensorMap& t, int window, int width_citing,
                          int width_fragment);

}  // namespace citescope::models
