#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "citescope/corpus.hpp"

namespace citescope::eval {

// ---------------------------------------------------------------------------
// Support-weighted precision / recall / F1

struct ClassPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
};

struct PrfReport {
  std::vector<ClassPrf> per_class;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;  // equals accuracy by construction
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  long total = 0;
};

// Per-class metrics use 0 whenever a denominator is 0 (including F1 when
// precision + recall == 0); weighting is by gold support.
PrfReport weighted_prf(const std::vector<int>& gold, const std::vector<int>& pred,
                       int n_classes);

// ---------------------------------------------------------------------------
// Paired t-test (two-sided)

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p = 1.0;
};

// Throws on size mismatch or fewer than two pairs. All-equal differences give
// t = 0, p = 1; zero variance with nonzero mean difference is an error.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Two-sided p for Student's t via I_x(df/2, 1/2) with x = df / (df + t^2).
double student_t_two_sided_p(double t, int df);

// Continued-fraction evaluation (Lentz), accurate to ~1e-14 relative.
double regularized_incomplete_beta(double a, double b, double x);

// "**" when p < 0.001, "*" when p < 0.01, "" otherwise.
std::string significance_stars(double p);

// ---------------------------------------------------------------------------
// Repeated k-fold cross-validation

// Trains on the train indices and returns one predicted label per test index,
// in test order. The seed is unique per (run, fold) cell.
using TrainPredictFn = std::function<std::vector<int>(
    const std::vector<std::size_t>& train, const std::vector<std::size_t>& test,
    std::uint64_t seed)>;

struct RunScores {
  PrfReport pooled;             // metrics over the run's pooled fold predictions
  std::vector<double> fold_f1;  // weighted F1 of each fold separately
};

struct CvResult {
  std::vector<RunScores> runs;
  double mean_precision = 0.0, std_precision = 0.0;
  double mean_recall = 0.0, std_recall = 0.0;
  double mean_f1 = 0.0, std_f1 = 0.0;
  std::vector<double> fold_run_f1;  // run-major flattening, for paired tests
};

// Runs |run_seeds| repetitions over the given folds. Mean/std aggregate the
// per-run pooled metrics (sample std; 0 when there is a single run). With
// threads > 1 the (run, fold) cells execute concurrently; results are
// identical to the serial order. Cell failures rethrow with run/fold context.
CvResult cross_validate(const TrainPredictFn& fn, const std::vector<int>& gold, int n_classes,
                        const std::vector<corpus::Fold>& folds,
                        const std::vector<std::uint64_t>& run_seeds, int threads = 1);

// Deterministic training seed for one (run, fold) cell.
std::uint64_t cell_seed(std::uint64_t run_seed, std::size_t fold);

// ---------------------------------------------------------------------------
// Model comparison

struct ComparisonResult {
  std::string model_a;
  std::string model_b;
  TTestResult test;
  std::string stars;
  int winner = 0;  // 0 -> model_a, 1 -> model_b (higher mean fold F1)
};

// Pairs the two models' per-(run, fold) F1 lists (must be equally long and
// computed over the same folds/seeds).
ComparisonResult compare_models(const std::string& name_a, const CvResult& a,
                                const std::string& name_b, const CvResult& b);

// ---------------------------------------------------------------------------
// Report emission

struct EvalReport {
  std::string task;
  std::vector<std::string> models;
  std::vector<CvResult> results;  // aligned with models
  std::optional<ComparisonResult> comparison;
};

// Aligned plain-text table: rows precision/recall/F1 as "mean% ± std%", one
// column per model; the winner's F1 carries the significance stars.
std::string report_table(const EvalReport& report);

// Full numeric detail; stable key order and byte-stable for equal inputs.
nlohmann::ordered_json report_json(const EvalReport& report);

}  // namespace citescope::eval
