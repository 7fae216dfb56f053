#include "citescope/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <regex>
#include <set>
#include <stdexcept>

#include "citescope/text_pipeline.hpp"

namespace citescope::baselines {

namespace {

using text_pipeline::tokenize;

const std::regex& citation_marker_pattern() {
  // A (...) or [...] group containing a plausible publication year.
  static const std::regex re(R"([(\[][^()\[\]]*\b(19|20)\d{2}\b[^()\[\]]*[)\]])");
  return re;
}

std::vector<std::string> context_tokens(const std::array<std::string, 3>& context) {
  std::vector<std::string> tokens;
  for (const std::string& sentence : context) {
    std::vector<std::string> part = tokenize(sentence);
    tokens.insert(tokens.end(), std::make_move_iterator(part.begin()),
                  std::make_move_iterator(part.end()));
  }
  return tokens;
}

bool is_numeric_token(const std::string& token) {
  // The tokenizer only emits '.' between digits, so a numeric token is
  // digits with at most one interior dot.
  bool seen_dot = false;
  bool seen_digit = false;
  for (const char c : token) {
    if (c >= '0' && c <= '9') {
      seen_digit = true;
    } else if (c == '.') {
      if (seen_dot) return false;
      seen_dot = true;
    } else {
      return false;
    }
  }
  return seen_digit;
}

std::set<std::string> bigram_set(const std::vector<std::string>& tokens) {
  std::set<std::string> bigrams;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    bigrams.insert(tokens[i] + ' ' + tokens[i + 1]);
  }
  return bigrams;
}

template <typename T>
std::size_t intersection_size(const std::set<T>& a, const std::set<T>& b) {
  std::size_t n = 0;
  for (const T& v : a) n += b.count(v);
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Citation markers

int count_citation_markers(const std::string& text) {
  const std::regex& re = citation_marker_pattern();
  int count = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re);
       it != std::sregex_iterator(); ++it) {
    ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Chi-squared unigram selection

std::vector<std::string> select_unigrams(const std::vector<corpus::FunctionInstance>& instances,
                                         int k) {
  if (k < 1) throw std::invalid_argument("select_unigrams: k must be positive");
  if (instances.empty()) throw std::invalid_argument("select_unigrams: empty corpus");

  const int n_classes = corpus::kFunctionClassCount;
  std::vector<long> class_total(static_cast<std::size_t>(n_classes), 0);
  // word -> per-class count of instances whose context contains it
  std::map<std::string, std::vector<long>> present;
  for (const corpus::FunctionInstance& inst : instances) {
    const int c = static_cast<int>(inst.label);
    ++class_total[static_cast<std::size_t>(c)];
    std::set<std::string> types;
    for (std::string& t : context_tokens(inst.citation_context)) types.insert(std::move(t));
    for (const std::string& t : types) {
      auto [it, inserted] =
          present.try_emplace(t, std::vector<long>(static_cast<std::size_t>(n_classes), 0));
      ++it->second[static_cast<std::size_t>(c)];
    }
  }

  const double n = static_cast<double>(instances.size());
  std::vector<std::pair<double, std::string>> ranked;  // (-chi2, word) for ascending sort
  ranked.reserve(present.size());
  for (const auto& [word, with_word] : present) {
    long present_total = 0;
    for (const long c : with_word) present_total += c;
    const double row_present = static_cast<double>(present_total);
    const double row_absent = n - row_present;
    double chi2 = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      const double col = static_cast<double>(class_total[static_cast<std::size_t>(c)]);
      const double o_present = static_cast<double>(with_word[static_cast<std::size_t>(c)]);
      const double o_absent = col - o_present;
      const double e_present = row_present * col / n;
      const double e_absent = row_absent * col / n;
      if (e_present > 0.0) chi2 += (o_present - e_present) * (o_present - e_present) / e_present;
      if (e_absent > 0.0) chi2 += (o_absent - e_absent) * (o_absent - e_absent) / e_absent;
    }
    ranked.emplace_back(-chi2, word);
  }
  std::sort(ranked.begin(), ranked.end());

  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ranked.size() && out.size() < static_cast<std::size_t>(k); ++i) {
    out.push_back(ranked[i].second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Function features

FunctionFeatures extract_function_features(const corpus::FunctionInstance& instance,
                                           const std::vector<std::string>& unigram_words) {
  FunctionFeatures f;
  const std::vector<std::string> tokens = context_tokens(instance.citation_context);
  std::map<std::string, long> counts;
  for (const std::string& t : tokens) ++counts[t];
  f.unigram_counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(unigram_words.size()));
  for (std::size_t i = 0; i < unigram_words.size(); ++i) {
    const auto it = counts.find(unigram_words[i]);
    if (it != counts.end()) f.unigram_counts[static_cast<Eigen::Index>(i)] = static_cast<double>(it->second);
  }

  for (const std::string& sentence : instance.citation_context) {
    f.citation_density += count_citation_markers(sentence);
  }
  if (instance.citing_year && instance.cited_year) {
    f.year_difference = *instance.citing_year - *instance.cited_year;
  }
  if (instance.words_before_citing && instance.total_words_in_paper &&
      *instance.total_words_in_paper > 0) {
    f.citing_location = static_cast<double>(*instance.words_before_citing) /
                        static_cast<double>(*instance.total_words_in_paper);
  }
  if (instance.cited_paper_mention_count) f.citation_frequency = *instance.cited_paper_mention_count;
  if (instance.same_author_citation_count) {
    f.same_author_citations = *instance.same_author_citation_count;
  }
  if (instance.citing_authors && instance.cited_authors) {
    for (const std::string& a : *instance.citing_authors) {
      if (instance.cited_authors->count(a)) {
        f.self_reference = 1;
        break;
      }
    }
  }
  return f;
}

Eigen::VectorXd FunctionFeatures::to_count_vector() const {
  Eigen::VectorXd v(unigram_counts.size() + 6);
  v.head(unigram_counts.size()) = unigram_counts;
  Eigen::Index i = unigram_counts.size();
  v[i++] = static_cast<double>(citation_density);
  v[i++] = static_cast<double>(std::max(year_difference, 0));
  v[i++] = static_cast<double>(std::llround(100.0 * citing_location));
  v[i++] = static_cast<double>(citation_frequency);
  v[i++] = static_cast<double>(same_author_citations);
  v[i++] = static_cast<double>(self_reference);
  return v;
}

// ---------------------------------------------------------------------------
// Naive Bayes

NaiveBayesModel nb_fit(const std::vector<Eigen::VectorXd>& features,
                       const std::vector<int>& labels, int n_classes, double alpha) {
  if (features.empty()) throw std::invalid_argument("nb_fit: empty dataset");
  if (features.size() != labels.size()) throw std::invalid_argument("nb_fit: length mismatch");
  if (n_classes < 2) throw std::invalid_argument("nb_fit: needs at least two classes");
  if (alpha <= 0.0) throw std::invalid_argument("nb_fit: alpha must be positive");
  const Eigen::Index d = features[0].size();

  Eigen::VectorXd class_count = Eigen::VectorXd::Zero(n_classes);
  Eigen::MatrixXd totals = Eigen::MatrixXd::Zero(n_classes, d);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Eigen::VectorXd& x = features[i];
    if (x.size() != d) throw std::invalid_argument("nb_fit: inconsistent feature length");
    if (d > 0 && x.minCoeff() < 0.0) {
      throw std::invalid_argument("nb_fit: negative feature value");
    }
    const int c = labels[i];
    if (c < 0 || c >= n_classes) throw std::out_of_range("nb_fit: label out of range");
    class_count[c] += 1.0;
    totals.row(c) += x.transpose();
  }

  NaiveBayesModel model;
  model.alpha = alpha;
  model.log_priors = Eigen::VectorXd::Constant(n_classes, -std::numeric_limits<double>::infinity());
  model.log_likelihood = Eigen::MatrixXd::Zero(n_classes, d);
  const double n = static_cast<double>(features.size());
  for (int c = 0; c < n_classes; ++c) {
    if (class_count[c] > 0.0) model.log_priors[c] = std::log(class_count[c] / n);
    const double class_total = totals.row(c).sum();
    for (Eigen::Index j = 0; j < d; ++j) {
      model.log_likelihood(c, j) =
          std::log((totals(c, j) + alpha) / (class_total + alpha * static_cast<double>(d)));
    }
  }
  return model;
}

int nb_predict(const NaiveBayesModel& model, const Eigen::VectorXd& features) {
  if (features.size() != model.log_likelihood.cols()) {
    throw std::invalid_argument("nb_predict: feature length mismatch");
  }
  if (features.size() > 0 && features.minCoeff() < 0.0) {
    throw std::invalid_argument("nb_predict: negative feature value");
  }
  Eigen::VectorXd scores = model.log_priors;
  if (features.size() > 0) scores += model.log_likelihood * features;
  int best = 0;
  for (int c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;  // ties keep the lowest class
  }
  return best;
}

// ---------------------------------------------------------------------------
// Provenance features

ProvenanceFeatures extract_provenance_features(const std::array<std::string, 3>& citation_context,
                                               const std::string& fragment) {
  const std::vector<std::string> a = context_tokens(citation_context);
  const std::vector<std::string> b = tokenize(fragment);

  ProvenanceFeatures f;
  const std::set<std::string> types_a(a.begin(), a.end());
  const std::set<std::string> types_b(b.begin(), b.end());
  f.surface_overlap = static_cast<double>(intersection_size(types_a, types_b));

  std::set<std::string> numbers_a, numbers_b;
  for (const std::string& t : a) {
    if (is_numeric_token(t)) numbers_a.insert(t);
  }
  for (const std::string& t : b) {
    if (is_numeric_token(t)) numbers_b.insert(t);
  }
  f.number_overlap = static_cast<double>(intersection_size(numbers_a, numbers_b));

  f.bigram_overlap = static_cast<double>(intersection_size(bigram_set(a), bigram_set(b)));

  if (!a.empty() && !b.empty()) {
    std::map<std::string, long> ca, cb;
    for (const std::string& t : a) ++ca[t];
    for (const std::string& t : b) ++cb[t];
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [t, c] : ca) {
      na += static_cast<double>(c) * static_cast<double>(c);
      const auto it = cb.find(t);
      if (it != cb.end()) dot += static_cast<double>(c) * static_cast<double>(it->second);
    }
    for (const auto& [t, c] : cb) nb += static_cast<double>(c) * static_cast<double>(c);
    f.cosine = dot / (std::sqrt(na) * std::sqrt(nb));
  }
  return f;
}

Eigen::VectorXd ProvenanceFeatures::to_vector() const {
  Eigen::VectorXd v(4);
  v << surface_overlap, number_overlap, bigram_overlap, cosine;
  return v;
}

// ---------------------------------------------------------------------------
// Decision tree

double gini_impurity(const std::vector<long>& counts) {
  long n = 0;
  for (const long c : counts) n += c;
  if (n == 0) return 0.0;
  double sum_sq = 0.0;
  for (const long c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

namespace {

struct TreeBuilder {
  const std::vector<Eigen::VectorXd>& features;
  const std::vector<int>& labels;
  const TreeConfig& cfg;
  int n_classes;
  std::vector<TreeNode> nodes;

  std::vector<long> count_classes(const std::vector<std::size_t>& idx) const {
    std::vector<long> counts(static_cast<std::size_t>(n_classes), 0);
    for (const std::size_t i : idx) ++counts[static_cast<std::size_t>(labels[i])];
    return counts;
  }

  int leaf_prediction(const std::vector<long>& counts) const {
    long best_count = -1;
    int best = cfg.tie_break_class;
    bool tie = false;
    for (int c = 0; c < n_classes; ++c) {
      const long k = counts[static_cast<std::size_t>(c)];
      if (k > best_count) {
        best_count = k;
        best = c;
        tie = false;
      } else if (k == best_count) {
        tie = true;
      }
    }
    if (tie && counts[static_cast<std::size_t>(cfg.tie_break_class)] == best_count) {
      return cfg.tie_break_class;
    }
    return best;
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double weighted_gini = std::numeric_limits<double>::infinity();
  };

  Split best_split(const std::vector<std::size_t>& idx) const {
    Split best;
    const Eigen::Index d = features[idx[0]].size();
    for (Eigen::Index f = 0; f < d; ++f) {
      std::vector<double> values;
      values.reserve(idx.size());
      for (const std::size_t i : idx) values.push_back(features[i][f]);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t v = 0; v + 1 < values.size(); ++v) {
        const double thr = 0.5 * (values[v] + values[v + 1]);
        std::vector<long> left(static_cast<std::size_t>(n_classes), 0);
        std::vector<long> right(static_cast<std::size_t>(n_classes), 0);
        long n_left = 0, n_right = 0;
        for (const std::size_t i : idx) {
          if (features[i][f] <= thr) {
            ++left[static_cast<std::size_t>(labels[i])];
            ++n_left;
          } else {
            ++right[static_cast<std::size_t>(labels[i])];
            ++n_right;
          }
        }
        if (n_left < cfg.min_leaf || n_right < cfg.min_leaf) continue;
        const double n = static_cast<double>(n_left + n_right);
        const double weighted = (static_cast<double>(n_left) / n) * gini_impurity(left) +
                                (static_cast<double>(n_right) / n) * gini_impurity(right);
        if (weighted < best.weighted_gini) {  // strict: first (f, thr) wins ties
          best.feature = static_cast<int>(f);
          best.threshold = thr;
          best.weighted_gini = weighted;
        }
      }
    }
    return best;
  }

  int build(const std::vector<std::size_t>& idx, int depth) {
    std::vector<long> counts = count_classes(idx);
    const int node_index = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes.back().class_counts = counts;

    const double impurity = gini_impurity(counts);
    Split split;
    if (impurity > 0.0 && depth < cfg.max_depth &&
        static_cast<long>(idx.size()) >= 2L * cfg.min_leaf) {
      split = best_split(idx);
    }
    if (split.feature < 0 || split.weighted_gini >= impurity) {
      nodes[static_cast<std::size_t>(node_index)].prediction = leaf_prediction(counts);
      return node_index;
    }

    std::vector<std::size_t> left_idx, right_idx;
    for (const std::size_t i : idx) {
      (features[i][split.feature] <= split.threshold ? left_idx : right_idx).push_back(i);
    }
    const int left = build(left_idx, depth + 1);
    const int right = build(right_idx, depth + 1);
    TreeNode& node = nodes[static_cast<std::size_t>(node_index)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return node_index;
  }
};

}  // namespace

TreeModel tree_fit(const std::vector<Eigen::VectorXd>& features, const std::vector<int>& labels,
                   int n_classes, const TreeConfig& cfg) {
  if (features.empty()) throw std::invalid_argument("tree_fit: empty dataset");
  if (features.size() != labels.size()) throw std::invalid_argument("tree_fit: length mismatch");
  if (n_classes < 2) throw std::invalid_argument("tree_fit: needs at least two classes");
  if (cfg.max_depth < 0) throw std::invalid_argument("tree_fit: max_depth must be >= 0");
  if (cfg.min_leaf < 1) throw std::invalid_argument("tree_fit: min_leaf must be >= 1");
  if (cfg.tie_break_class < 0 || cfg.tie_break_class >= n_classes) {
    throw std::invalid_argument("tree_fit: tie_break_class out of range");
  }
  const Eigen::Index d = features[0].size();
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) throw std::invalid_argument("tree_fit: inconsistent features");
    if (labels[i] < 0 || labels[i] >= n_classes) throw std::out_of_range("tree_fit: bad label");
  }

  TreeBuilder builder{features, labels, cfg, n_classes, {}};
  std::vector<std::size_t> all(features.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  builder.build(all, 0);

  TreeModel model;
  model.nodes = std::move(builder.nodes);
  model.n_classes = n_classes;
  return model;
}

int TreeModel::predict(const Eigen::VectorXd& features) const {
  if (nodes.empty()) throw std::logic_error("predict on an empty tree");
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    if (node.feature >= features.size()) {
      throw std::invalid_argument("tree predict: feature vector too short");
    }
    at = features[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(at)].prediction;
}

int TreeModel::depth() const {
  if (nodes.empty()) return 0;
  // Iterative depth over the index-linked structure.
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    const auto [at, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    if (node.feature >= 0) {
      stack.emplace_back(node.left, d + 1);
      stack.emplace_back(node.right, d + 1);
    }
  }
  return deepest;
}

}  // namespace citescope::baselines
