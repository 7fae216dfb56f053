#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace citescope::runner {

// Resolved invocation: one subcommand plus every knob it may need.
struct Options {
  std::string command;  // build-dataset | train | evaluate | compare | predict | gradcheck
  std::string task;     // function | provenance | mtl
  std::string model;    // cnn | dcnn | mtl | nb-baseline | tree-baseline
  std::string model_b;  // compare only

  std::filesystem::path corpus;       // function or provenance JSONL (per task)
  std::filesystem::path prov_corpus;  // provenance side when the run also needs the function side
  std::filesystem::path papers;
  std::filesystem::path annotations;
  std::filesystem::path embeddings;
  std::filesystem::path out_dir;
  std::filesystem::path checkpoint;  // predict
  std::filesystem::path input;       // predict

  int k = 5;
  int runs = 5;
  int epochs = 30;
  int batch_size = 256;
  int window = 5;
  int filters = 256;
  double lr = 0.001;
  std::uint64_t seed = 13;
  int negatives_per_paper = 3;
  double sentiment_cutoff = 0.6;
  int embedding_dim = 100;
  int threads = 1;
};

// Dispatches a validated invocation; throws std::runtime_error (or derived)
// with a user-facing message on failure.
void run(const Options& options);

// Model/task compatibility used by CLI validation. evaluate/train accept
// exact pairs (cnn|nb-baseline with function, dcnn|tree-baseline with
// provenance, mtl with mtl); compare additionally accepts mtl scored on a
// single task's side.
bool model_fits_task(const std::string& model, const std::string& task, bool comparing);

// Run seeds for repeated cross-validation: seed, seed+1, ..., seed+runs-1.
std::vector<std::uint64_t> run_seeds(std::uint64_t seed, int runs);

}  // namespace citescope::runner
