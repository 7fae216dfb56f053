#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "citescope/corpus.hpp"

namespace citescope::baselines {

// ---------------------------------------------------------------------------
// Shared text statistics

// Counts parenthesized or bracketed groups containing a 4-digit year
// 1900-2099, e.g. "(Smith, 2006)" or "[1998]"; nesting is not required to
// balance beyond the matched pair.
int count_citation_markers(const std::string& text);

// ---------------------------------------------------------------------------
// Citation-function features (multinomial Naive Bayes side)

// Ranks context unigrams by chi-squared association between token presence
// and the instance label; returns the top k words (ties broken
// lexicographically, ascending).
std::vector<std::string> select_unigrams(const std::vector<corpus::FunctionInstance>& instances,
                                         int k = 300);

struct FunctionFeatures {
  Eigen::VectorXd unigram_counts;  // aligned with the selected word list
  int citation_density = 0;        // marker count over the 3-sentence context
  int year_difference = 0;         // citing - cited, 0 when either unknown
  double citing_location = 0.0;    // words_before / total_words, 0 when unknown
  long citation_frequency = 0;     // mentions of the cited paper, 0 when unknown
  long same_author_citations = 0;  // 0 when unknown
  int self_reference = 0;          // 1 iff author sets intersect (both known)

  // Non-negative count encoding for the multinomial model: unigram counts,
  // then [density, max(0, year_difference), round(100 * location),
  // frequency, same_author_citations, self_reference].
  Eigen::VectorXd to_count_vector() const;
};

FunctionFeatures extract_function_features(const corpus::FunctionInstance& instance,
                                           const std::vector<std::string>& unigram_words);

// ---------------------------------------------------------------------------
// Multinomial Naive Bayes (Laplace-smoothed)

struct NaiveBayesModel {
  Eigen::VectorXd log_priors;     // classes
  Eigen::MatrixXd log_likelihood; // classes x features
  double alpha = 1.0;
};

// Throws on empty data, mismatched lengths, or a negative feature value.
NaiveBayesModel nb_fit(const std::vector<Eigen::VectorXd>& features,
                       const std::vector<int>& labels, int n_classes, double alpha = 1.0);

// Argmax of log prior + x . log likelihood; ties resolve to the lowest class.
int nb_predict(const NaiveBayesModel& model, const Eigen::VectorXd& features);

// ---------------------------------------------------------------------------
// Provenance similarity features (decision-tree side)

struct ProvenanceFeatures {
  double surface_overlap = 0.0;  // shared token types
  double number_overlap = 0.0;   // shared numeric token types
  double bigram_overlap = 0.0;   // shared adjacent-pair types
  double cosine = 0.0;           // over token count vectors; 0 if a side is empty

  Eigen::VectorXd to_vector() const;
};

ProvenanceFeatures extract_provenance_features(const std::array<std::string, 3>& citation_context,
                                               const std::string& fragment);

// ---------------------------------------------------------------------------
// CART decision tree (Gini impurity, midpoint thresholds)

struct TreeConfig {
  int max_depth = 10;
  int min_leaf = 2;
  int tie_break_class = 1;  // leaf majority ties resolve here
};

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  int prediction = -1;               // leaves only
  std::vector<long> class_counts;    // training distribution at the node
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int n_classes = 0;

  int predict(const Eigen::VectorXd& features) const;
  int depth() const;  // 0 for a lone leaf
};

TreeModel tree_fit(const std::vector<Eigen::VectorXd>& features, const std::vector<int>& labels,
                   int n_classes, const TreeConfig& cfg = {});

// Gini impurity of a class-count histogram: 1 - sum((c/n)^2); 0 when empty.
double gini_impurity(const std::vector<long>& counts);

}  // namespace citescope::baselines
