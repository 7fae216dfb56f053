#include "citescope/eval.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "citescope/rng.hpp"

namespace citescope::eval {

// ---------------------------------------------------------------------------
// Metrics

PrfReport weighted_prf(const std::vector<int>& gold, const std::vector<int>& pred,
                       int n_classes) {
  if (gold.empty()) throw std::invalid_argument("weighted_prf: empty input");
  if (gold.size() != pred.size()) throw std::invalid_argument("weighted_prf: length mismatch");
  if (n_classes < 2) throw std::invalid_argument("weighted_prf: needs at least two classes");

  std::vector<long> tp(static_cast<std::size_t>(n_classes), 0);
  std::vector<long> fp(static_cast<std::size_t>(n_classes), 0);
  std::vector<long> fn(static_cast<std::size_t>(n_classes), 0);
  long correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int g = gold[i];
    const int p = pred[i];
    if (g < 0 || g >= n_classes || p < 0 || p >= n_classes) {
      throw std::out_of_range("weighted_prf: label out of range");
    }
    if (g == p) {
      ++tp[static_cast<std::size_t>(g)];
      ++correct;
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(g)];
    }
  }

  PrfReport report;
  report.total = static_cast<long>(gold.size());
  report.per_class.resize(static_cast<std::size_t>(n_classes));
  const double n = static_cast<double>(gold.size());
  for (int c = 0; c < n_classes; ++c) {
    const std::size_t ci = static_cast<std::size_t>(c);
    ClassPrf& m = report.per_class[ci];
    m.support = tp[ci] + fn[ci];
    const long pred_count = tp[ci] + fp[ci];
    m.precision = pred_count > 0 ? static_cast<double>(tp[ci]) / static_cast<double>(pred_count)
                                 : 0.0;
    m.recall = m.support > 0 ? static_cast<double>(tp[ci]) / static_cast<double>(m.support) : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    const double w = static_cast<double>(m.support) / n;
    report.weighted_precision += w * m.precision;
    report.weighted_recall += w * m.recall;
    report.weighted_f1 += w * m.f1;
  }
  report.accuracy = static_cast<double>(correct) / n;
  return report;
}

// ---------------------------------------------------------------------------
// Student's t machinery

namespace {

// Continued fraction for the incomplete beta (Numerical-Recipes style modified
// Lentz iteration).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double eps = 1e-15;
  constexpr double fpmin = 1e-300;
  constexpr int max_iterations = 500;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw std::runtime_error("incomplete beta did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete beta: a, b must be positive");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  // The continued fraction converges fast for x < (a+1)/(a+b+2); use the
  // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int df) {
  if (df < 1) throw std::invalid_argument("student_t_two_sided_p: df must be >= 1");
  const double v = static_cast<double>(df);
  const double x = v / (v + t * t);
  return regularized_incomplete_beta(0.5 * v, 0.5, x);
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("paired_t_test: needs at least 2 pairs");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);

  TTestResult result;
  result.df = static_cast<int>(n) - 1;
  if (var == 0.0) {
    if (mean != 0.0) {
      throw std::runtime_error(
          "paired_t_test: zero variance with nonzero mean difference (t undefined)");
    }
    result.t = 0.0;
    result.p = 1.0;
    return result;
  }
  result.t = mean / std::sqrt(var / static_cast<double>(n));
  result.p = student_t_two_sided_p(result.t, result.df);
  return result;
}

std::string significance_stars(double p) {
  if (p < 0.001) return "**";
  if (p < 0.01) return "*";
  return "";
}

// ---------------------------------------------------------------------------
// Cross-validation

std::uint64_t cell_seed(std::uint64_t run_seed, std::size_t fold) {
  return rnd::splitmix64(rnd::splitmix64(run_seed) + static_cast<std::uint64_t>(fold));
}

namespace {

void validate_folds(const std::vector<corpus::Fold>& folds, std::size_t n) {
  if (folds.empty()) throw std::invalid_argument("cross_validate: no folds");
  for (const corpus::Fold& fold : folds) {
    if (fold.test.empty() || fold.train.empty()) {
      throw std::invalid_argument("cross_validate: fold with empty train or test side");
    }
    for (const std::size_t i : fold.train) {
      if (i >= n) throw std::out_of_range("cross_validate: train index out of range");
    }
    std::set<std::size_t> train_set(fold.train.begin(), fold.train.end());
    for (const std::size_t i : fold.test) {
      if (i >= n) throw std::out_of_range("cross_validate: test index out of range");
      if (train_set.count(i)) {
        throw std::invalid_argument("cross_validate: train and test overlap");
      }
    }
  }
}

struct CellOutcome {
  std::vector<int> predictions;
  std::string error;  // non-empty on failure
};

void aggregate_stat(const std::vector<double>& values, double& mean_out, double& std_out) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  if (values.size() > 1) {
    for (const double v : values) var += (v - mean) * (v - mean);
    var /= n - 1.0;
  }
  mean_out = mean;
  std_out = std::sqrt(var);
}

}  // namespace

CvResult cross_validate(const TrainPredictFn& fn, const std::vector<int>& gold, int n_classes,
                        const std::vector<corpus::Fold>& folds,
                        const std::vector<std::uint64_t>& run_seeds, int threads) {
  if (!fn) throw std::invalid_argument("cross_validate: missing train/predict function");
  if (run_seeds.empty()) throw std::invalid_argument("cross_validate: no run seeds");
  for (const int g : gold) {
    if (g < 0 || g >= n_classes) throw std::out_of_range("cross_validate: gold label range");
  }
  validate_folds(folds, gold.size());

  const std::size_t n_runs = run_seeds.size();
  const std::size_t n_folds = folds.size();
  const std::size_t n_cells = n_runs * n_folds;
  std::vector<CellOutcome> cells(n_cells);

  const auto run_cell = [&](std::size_t cell) {
    const std::size_t r = cell / n_folds;
    const std::size_t f = cell % n_folds;
    try {
      std::vector<int> preds = fn(folds[f].train, folds[f].test, cell_seed(run_seeds[r], f));
      if (preds.size() != folds[f].test.size()) {
        throw std::runtime_error("prediction count does not match test size");
      }
      for (const int p : preds) {
        if (p < 0 || p >= n_classes) throw std::runtime_error("predicted label out of range");
      }
      cells[cell].predictions = std::move(preds);
    } catch (const std::exception& e) {
      cells[cell].error = "run " + std::to_string(r) + " fold " + std::to_string(f) + ": " +
                          e.what();
    }
  };

  const int max_threads = std::min<int>(threads, static_cast<int>(n_cells));
  if (max_threads > 1) {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(max_threads));
    for (int w = 0; w < max_threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t cell = next.fetch_add(1); cell < n_cells; cell = next.fetch_add(1)) {
          run_cell(cell);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  } else {
    for (std::size_t cell = 0; cell < n_cells; ++cell) run_cell(cell);
  }

  for (const CellOutcome& cell : cells) {
    if (!cell.error.empty()) throw std::runtime_error("cross_validate: " + cell.error);
  }

  CvResult result;
  result.runs.reserve(n_runs);
  std::vector<double> precisions, recalls, f1s;
  for (std::size_t r = 0; r < n_runs; ++r) {
    RunScores run;
    std::vector<int> pooled_gold, pooled_pred;
    for (std::size_t f = 0; f < n_folds; ++f) {
      const CellOutcome& cell = cells[r * n_folds + f];
      std::vector<int> fold_gold;
      fold_gold.reserve(folds[f].test.size());
      for (const std::size_t i : folds[f].test) fold_gold.push_back(gold[i]);
      run.fold_f1.push_back(weighted_prf(fold_gold, cell.predictions, n_classes).weighted_f1);
      pooled_gold.insert(pooled_gold.end(), fold_gold.begin(), fold_gold.end());
      pooled_pred.insert(pooled_pred.end(), cell.predictions.begin(), cell.predictions.end());
    }
    run.pooled = weighted_prf(pooled_gold, pooled_pred, n_classes);
    precisions.push_back(run.pooled.weighted_precision);
    recalls.push_back(run.pooled.weighted_recall);
    f1s.push_back(run.pooled.weighted_f1);
    result.fold_run_f1.insert(result.fold_run_f1.end(), run.fold_f1.begin(), run.fold_f1.end());
    result.runs.push_back(std::move(run));
  }
  aggregate_stat(precisions, result.mean_precision, result.std_precision);
  aggregate_stat(recalls, result.mean_recall, result.std_recall);
  aggregate_stat(f1s, result.mean_f1, result.std_f1);
  return result;
}

// ---------------------------------------------------------------------------
// Comparison

ComparisonResult compare_models(const std::string& name_a, const CvResult& a,
                                const std::string& name_b, const CvResult& b) {
  if (a.fold_run_f1.size() != b.fold_run_f1.size()) {
    throw std::invalid_argument("compare_models: fold/run score lists differ in length");
  }
  ComparisonResult out;
  out.model_a = name_a;
  out.model_b = name_b;
  out.test = paired_t_test(a.fold_run_f1, b.fold_run_f1);
  out.stars = significance_stars(out.test.p);
  out.winner = a.mean_f1 >= b.mean_f1 ? 0 : 1;
  return out;
}

// ---------------------------------------------------------------------------
// Report emission

namespace {

std::string pct_pair(double mean, double std) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << mean * 100.0 << "% +/- " << std * 100.0 << "%";
  return s.str();
}

}  // namespace

std::string report_table(const EvalReport& report) {
  if (report.models.size() != report.results.size()) {
    throw std::invalid_argument("report_table: model/result count mismatch");
  }
  const std::array<const char*, 3> row_names = {"precision", "recall", "f1"};
  std::vector<std::vector<std::string>> cells(3);
  for (std::size_t m = 0; m < report.results.size(); ++m) {
    const CvResult& r = report.results[m];
    cells[0].push_back(pct_pair(r.mean_precision, r.std_precision));
    cells[1].push_back(pct_pair(r.mean_recall, r.std_recall));
    std::string f1 = pct_pair(r.mean_f1, r.std_f1);
    if (report.comparison && !report.comparison->stars.empty() &&
        static_cast<int>(m) == report.comparison->winner) {
      f1 += ' ' + report.comparison->stars;
    }
    cells[2].push_back(f1);
  }

  std::vector<std::size_t> widths;
  widths.push_back(9);  // "precision"
  for (std::size_t m = 0; m < report.models.size(); ++m) {
    std::size_t w = report.models[m].size();
    for (int row = 0; row < 3; ++row) w = std::max(w, cells[static_cast<std::size_t>(row)][m].size());
    widths.push_back(w);
  }

  std::ostringstream out;
  out << "task: " << report.task << '\n';
  const auto pad = [](const std::string& s, std::size_t w) {
    return s + std::string(w - s.size(), ' ');
  };
  out << pad("metric", widths[0]);
  for (std::size_t m = 0; m < report.models.size(); ++m) {
    out << "  " << pad(report.models[m], widths[m + 1]);
  }
  out << '\n';
  for (int row = 0; row < 3; ++row) {
    out << pad(row_names[static_cast<std::size_t>(row)], widths[0]);
    for (std::size_t m = 0; m < report.models.size(); ++m) {
      out << "  " << pad(cells[static_cast<std::size_t>(row)][m], widths[m + 1]);
    }
    out << '\n';
  }
  if (report.comparison) {
    const ComparisonResult& c = *report.comparison;
    out << "paired t-test " << c.model_a << " vs " << c.model_b << ": t = " << c.test.t
        << ", df = " << c.test.df << ", p = " << c.test.p;
    if (!c.stars.empty()) out << ' ' << c.stars;
    out << '\n';
  }
  return out.str();
}

namespace {

nlohmann::ordered_json cv_json(const CvResult& r) {
  nlohmann::ordered_json j;
  j["precision"] = {{"mean", r.mean_precision}, {"std", r.std_precision}};
  j["recall"] = {{"mean", r.mean_recall}, {"std", r.std_recall}};
  j["f1"] = {{"mean", r.mean_f1}, {"std", r.std_f1}};
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const RunScores& run : r.runs) {
    nlohmann::ordered_json rj;
    rj["precision"] = run.pooled.weighted_precision;
    rj["recall"] = run.pooled.weighted_recall;
    rj["f1"] = run.pooled.weighted_f1;
    rj["accuracy"] = run.pooled.accuracy;
    rj["fold_f1"] = run.fold_f1;
    nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
    for (const ClassPrf& c : run.pooled.per_class) {
      per_class.push_back({{"precision", c.precision},
                           {"recall", c.recall},
                           {"f1", c.f1},
                           {"support", c.support}});
    }
    rj["per_class"] = std::move(per_class);
    runs.push_back(std::move(rj));
  }
  j["runs"] = std::move(runs);
  return j;
}

}  // namespace

nlohmann::ordered_json report_json(const EvalReport& report) {
  if (report.models.size() != report.results.size()) {
    throw std::invalid_argument("report_json: model/result count mismatch");
  }
  nlohmann::ordered_json j;
  j["task"] = report.task;
  nlohmann::ordered_json results = nlohmann::ordered_json::array();
  for (std::size_t m = 0; m < report.models.size(); ++m) {
    nlohmann::ordered_json entry;
    entry["model"] = report.models[m];
    entry["metrics"] = cv_json(report.results[m]);
    results.push_back(std::move(entry));
  }
  j["results"] = std::move(results);
  if (report.comparison) {
    const ComparisonResult& c = *report.comparison;
    j["comparison"] = {{"model_a", c.model_a}, {"model_b", c.model_b},
                       {"t", c.test.t},        {"df", c.test.df},
                       {"p", c.test.p},        {"stars", c.stars},
                       {"winner", c.winner == 0 ? c.model_a : c.model_b}};
  }
  return j;
}

}  // namespace citescope::eval
