#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "citescope/baselines.hpp"
#include "citescope/corpus.hpp"

using namespace citescope;
using baselines::extract_function_features;
using baselines::extract_provenance_features;
using corpus::FunctionInstance;
using corpus::FunctionLabel;

namespace {

FunctionInstance instance_with_context(FunctionLabel label, const std::string& citing,
                                       const std::string& prev = "",
                                       const std::string& next = "") {
  FunctionInstance ins;
  ins.id = "t";
  ins.citing_sentence = citing;
  ins.citation_context = {prev, citing, next};
  ins.label = label;
  return ins;
}

}  // namespace

TEST_CASE("citation markers require an enclosed four-digit year") {
  CHECK(baselines::count_citation_markers("(Mitkov, 1998)") == 1);
  CHECK(baselines::count_citation_markers("[1998]") == 1);
  CHECK(baselines::count_citation_markers("(Teufel et al., 2006)") == 1);
  CHECK(baselines::count_citation_markers("see, for example, Mitkov [1998]") == 1);
  CHECK(baselines::count_citation_markers("(p. 42)") == 0);
  CHECK(baselines::count_citation_markers("[12]") == 0);
  CHECK(baselines::count_citation_markers("as in (Smith, 2001) and [Jones 2010]") == 2);
  CHECK(baselines::count_citation_markers("the year 1998 alone") == 0);
  CHECK(baselines::count_citation_markers("room 21998 issues [219983]") == 0);
  CHECK(baselines::count_citation_markers("") == 0);
}

TEST_CASE("chi-squared ranking puts class-specific words above uniform ones") {
  std::vector<FunctionInstance> train = {
      instance_with_context(FunctionLabel::Weak, "onlyweak everywhere zeta"),
      instance_with_context(FunctionLabel::CoCo, "everywhere beta"),
      instance_with_context(FunctionLabel::Pos, "everywhere"),
      instance_with_context(FunctionLabel::Neut, "everywhere"),
  };
  const auto top1 = baselines::select_unigrams(train, 1);
  REQUIRE(top1.size() == 1);
  // "everywhere" is present in every class (association 0); the class-specific
  // words beat it, and among equally-associated words order is alphabetical.
  CHECK(top1[0] == "beta");
  const auto top3 = baselines::select_unigrams(train, 3);
  REQUIRE(top3.size() == 3);
  CHECK(top3[0] == "beta");
  CHECK(top3[1] == "onlyweak");
  CHECK(top3[2] == "zeta");

  const auto all = baselines::select_unigrams(train, 300);
  CHECK(all.size() == 4);  // small vocabulary: everything is kept
  CHECK(all == baselines::select_unigrams(train, 300));
}

TEST_CASE("function features follow the documented definitions") {
  FunctionInstance ins = instance_with_context(
      FunctionLabel::Neut, "see, for example, Mitkov [1998]");
  ins.citing_year = 2010;
  ins.cited_year = 2006;
  ins.citing_authors = std::set<std::string>{"a", "b"};
  ins.cited_authors = std::set<std::string>{"b", "c"};
  ins.words_before_citing = 250;
  ins.total_words_in_paper = 1000;
  ins.cited_paper_mention_count = 3;
  ins.same_author_citation_count = 2;

  const std::vector<std::string> words = {"example", "mitkov", "missing"};
  const auto f = extract_function_features(ins, words);
  CHECK(f.citation_density == 1);
  CHECK(f.year_difference == 4);
  CHECK(f.citing_location == doctest::Approx(0.25));
  CHECK(f.citation_frequency == 3);
  CHECK(f.same_author_citations == 2);
  CHECK(f.self_reference == 1);
  REQUIRE(f.unigram_counts.size() == 3);
  CHECK(f.unigram_counts[0] == 1.0);
  CHECK(f.unigram_counts[1] == 1.0);
  CHECK(f.unigram_counts[2] == 0.0);

  const Eigen::VectorXd v = f.to_count_vector();
  REQUIRE(v.size() == 9);
  CHECK(v[3] == 1.0);   // density
  CHECK(v[4] == 4.0);   // year difference
  CHECK(v[5] == 25.0);  // location scaled to [0,100]
  CHECK(v[6] == 3.0);
  CHECK(v[7] == 2.0);
  CHECK(v[8] == 1.0);
}

TEST_CASE("unknown metadata and boundary values collapse to zero") {
  FunctionInstance ins = instance_with_context(FunctionLabel::Weak, "plain text here");
  const auto f = extract_function_features(ins, {});
  CHECK(f.citation_density == 0);
  CHECK(f.year_difference == 0);
  CHECK(f.citing_location == 0.0);
  CHECK(f.citation_frequency == 0);
  CHECK(f.same_author_citations == 0);
  CHECK(f.self_reference == 0);

  FunctionInstance older = ins;
  older.citing_year = 2000;
  older.cited_year = 2005;  // cites into the future; count vector clamps
  older.words_before_citing = 0;
  older.total_words_in_paper = 100;
  const auto g = extract_function_features(older, {});
  CHECK(g.year_difference == -5);
  CHECK(g.to_count_vector()[1] == 0.0);
  CHECK(g.citing_location == 0.0);

  FunctionInstance disjoint = ins;
  disjoint.citing_authors = std::set<std::string>{"a"};
  disjoint.cited_authors = std::set<std::string>{"b"};
  CHECK(extract_function_features(disjoint, {}).self_reference == 0);
}

TEST_CASE("unigram counts span all three context sentences") {
  const FunctionInstance ins =
      instance_with_context(FunctionLabel::Pos, "bravo", "alpha alpha", "bravo charlie");
  const auto f = extract_function_features(ins, {"alpha", "bravo", "charlie"});
  CHECK(f.unigram_counts[0] == 2.0);
  CHECK(f.unigram_counts[1] == 2.0);
  CHECK(f.unigram_counts[2] == 1.0);
}

TEST_CASE("naive bayes reproduces the smoothed two-class hand example") {
  // Class A count totals (x:2, y:1), class B (x:0, y:2), alpha=1, equal
  // priors. Smoothed P(x|A) = 3/5, P(x|B) = 1/4, so doc (x:1, y:0) -> A.
  std::vector<Eigen::VectorXd> features(2, Eigen::VectorXd(2));
  features[0] << 2, 1;
  features[1] << 0, 2;
  const std::vector<int> labels = {0, 1};
  const auto model = baselines::nb_fit(features, labels, 2, 1.0);
  CHECK(model.log_priors[0] == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(model.log_likelihood(0, 0) == doctest::Approx(std::log(3.0 / 5.0)).epsilon(1e-12));
  CHECK(model.log_likelihood(0, 1) == doctest::Approx(std::log(2.0 / 5.0)).epsilon(1e-12));
  CHECK(model.log_likelihood(1, 0) == doctest::Approx(std::log(1.0 / 4.0)).epsilon(1e-12));
  CHECK(model.log_likelihood(1, 1) == doctest::Approx(std::log(3.0 / 4.0)).epsilon(1e-12));

  Eigen::VectorXd test(2);
  test << 1, 0;
  CHECK(baselines::nb_predict(model, test) == 0);
  test << 0, 1;
  CHECK(baselines::nb_predict(model, test) == 1);
}

TEST_CASE("naive bayes degenerate cases") {
  std::vector<Eigen::VectorXd> features(3, Eigen::VectorXd(1));
  features[0] << 1;
  features[1] << 2;
  features[2] << 3;

  // Only class 2 seen: absent classes carry -inf priors, so everything is 2.
  const auto single = baselines::nb_fit(features, {2, 2, 2}, 4, 1.0);
  Eigen::VectorXd x(1);
  x << 5;
  CHECK(baselines::nb_predict(single, x) == 2);

  // Zero-length features: prediction is the prior argmax.
  std::vector<Eigen::VectorXd> empties(3, Eigen::VectorXd(0));
  const auto priors_only = baselines::nb_fit(empties, {1, 1, 0}, 2, 1.0);
  CHECK(baselines::nb_predict(priors_only, Eigen::VectorXd(0)) == 1);

  // Exact tie resolves to the lowest class index.
  std::vector<Eigen::VectorXd> tied(2, Eigen::VectorXd(1));
  tied[0] << 1;
  tied[1] << 1;
  const auto tie_model = baselines::nb_fit(tied, {0, 1}, 2, 1.0);
  Eigen::VectorXd q(1);
  q << 7;
  CHECK(baselines::nb_predict(tie_model, q) == 0);
}

TEST_CASE("naive bayes rejects malformed input") {
  std::vector<Eigen::VectorXd> features(1, Eigen::VectorXd(1));
  features[0] << -1;
  CHECK_THROWS_AS(baselines::nb_fit(features, {0}, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(baselines::nb_fit({}, {}, 2, 1.0), std::invalid_argument);

  features[0] << 1;
  const auto model = baselines::nb_fit(features, {0}, 2, 1.0);
  Eigen::VectorXd negative(1);
  negative << -0.5;
  CHECK_THROWS_AS(baselines::nb_predict(model, negative), std::invalid_argument);
  CHECK_THROWS_AS(baselines::nb_predict(model, Eigen::VectorXd(3)), std::invalid_argument);
}

TEST_CASE("provenance similarity features reproduce the hand examples") {
  const auto same = extract_provenance_features({"", "exact same words", ""},
                                                "exact same words");
  CHECK(same.cosine == doctest::Approx(1.0).epsilon(1e-12));

  const auto ab = extract_provenance_features({"", "a b", ""}, "a c");
  CHECK(ab.surface_overlap == 1.0);
  CHECK(ab.bigram_overlap == 0.0);
  CHECK(ab.cosine == doctest::Approx(0.5).epsilon(1e-12));

  const auto numbers =
      extract_provenance_features({"", "reduction of 21.96", ""}, "achieved 21.96 improvement");
  CHECK(numbers.number_overlap == 1.0);
  CHECK(numbers.surface_overlap == 1.0);

  const auto empty_side = extract_provenance_features({"", "", ""}, "never matched");
  CHECK(empty_side.cosine == 0.0);
  CHECK(empty_side.surface_overlap == 0.0);

  const auto bigrams =
      extract_provenance_features({"x y z", "", ""}, "w x y");  // shares bigram (x, y)
  CHECK(bigrams.bigram_overlap == 1.0);
  CHECK(bigrams.surface_overlap == 2.0);

  // Context tokens come from all three sentences.
  const auto spread = extract_provenance_features({"alpha", "beta", "gamma"}, "alpha gamma");
  CHECK(spread.surface_overlap == 2.0);

  const Eigen::VectorXd v = ab.to_vector();
  REQUIRE(v.size() == 4);
  CHECK(v[0] == 1.0);
  CHECK(v[3] == doctest::Approx(0.5));
}

TEST_CASE("provenance overlap counts are symmetric under argument swap") {
  const auto forward = extract_provenance_features({"", "a b c 1.5", ""}, "c d 1.5 a");
  const auto backward = extract_provenance_features({"", "c d 1.5 a", ""}, "a b c 1.5");
  CHECK(forward.surface_overlap == backward.surface_overlap);
  CHECK(forward.number_overlap == backward.number_overlap);
  CHECK(forward.bigram_overlap == backward.bigram_overlap);
  CHECK(forward.cosine == doctest::Approx(backward.cosine).epsilon(1e-12));
}

TEST_CASE("gini impurity of class histograms") {
  CHECK(baselines::gini_impurity({2, 2}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(baselines::gini_impurity({4, 0}) == 0.0);
  CHECK(baselines::gini_impurity({}) == 0.0);
  CHECK(baselines::gini_impurity({1, 1, 1, 1}) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("tree fit finds the midpoint split on separable 1-d data") {
  std::vector<Eigen::VectorXd> features(4, Eigen::VectorXd(1));
  features[0] << 0.1;
  features[1] << 0.2;
  features[2] << 0.8;
  features[3] << 0.9;
  const std::vector<int> labels = {1, 1, 0, 0};  // low values NonProv, high Prov
  baselines::TreeConfig cfg;
  cfg.min_leaf = 1;
  const auto tree = baselines::tree_fit(features, labels, 2, cfg);
  CHECK(tree.depth() == 1);
  REQUIRE(!tree.nodes.empty());
  CHECK(tree.nodes[0].feature == 0);
  CHECK(tree.nodes[0].threshold == doctest::Approx(0.5).epsilon(1e-12));
  Eigen::VectorXd x(1);
  x << 0.3;
  CHECK(tree.predict(x) == 1);
  x << 0.7;
  CHECK(tree.predict(x) == 0);
}

TEST_CASE("tree degenerate and stopping behaviour") {
  std::vector<Eigen::VectorXd> features(3, Eigen::VectorXd(1));
  features[0] << 1;
  features[1] << 2;
  features[2] << 3;

  const auto pure = baselines::tree_fit(features, {0, 0, 0}, 2);
  CHECK(pure.depth() == 0);
  Eigen::VectorXd x(1);
  x << 9;
  CHECK(pure.predict(x) == 0);

  baselines::TreeConfig stump;
  stump.max_depth = 0;
  const auto leaf = baselines::tree_fit(features, {1, 1, 0}, 2, stump);
  CHECK(leaf.depth() == 0);
  CHECK(leaf.predict(x) == 1);  // global majority

  // Conflicting duplicate rows cannot be split; the tie goes to class 1.
  std::vector<Eigen::VectorXd> dup(4, Eigen::VectorXd(1));
  for (auto& f : dup) f << 5.0;
  const auto tied = baselines::tree_fit(dup, {0, 0, 1, 1}, 2);
  CHECK(tied.depth() == 0);
  CHECK(tied.predict(x) == 1);

  CHECK_THROWS_AS(baselines::tree_fit({}, {}, 2), std::invalid_argument);
}

TEST_CASE("min_leaf vetoes splits that isolate single samples") {
  std::vector<Eigen::VectorXd> features(4, Eigen::VectorXd(1));
  features[0] << 0.1;
  features[1] << 0.5;
  features[2] << 0.6;
  features[3] << 0.7;
  const std::vector<int> labels = {0, 1, 1, 1};
  baselines::TreeConfig cfg;
  cfg.min_leaf = 2;
  // The perfect 1-vs-3 split violates min_leaf, so the best allowed split is
  // 2-vs-2; the mixed left child cannot split further and its tie breaks to 1.
  const auto tree = baselines::tree_fit(features, labels, 2, cfg);
  CHECK(tree.depth() == 1);
  CHECK(tree.nodes[0].threshold == doctest::Approx(0.55).epsilon(1e-12));
  Eigen::VectorXd x(1);
  x << 0.2;
  CHECK(tree.predict(x) == 1);

  baselines::TreeConfig loose = cfg;
  loose.min_leaf = 1;
  const auto free_tree = baselines::tree_fit(features, labels, 2, loose);
  x << 0.2;
  CHECK(free_tree.predict(x) == 0);  // now the pure 1-vs-3 split is allowed
}

TEST_CASE("depth cap limits recursive splitting") {
  // Conjunctive 2-feature labels need depth 2 for purity.
  std::vector<Eigen::VectorXd> features(8, Eigen::VectorXd(2));
  const double xs[] = {0, 0, 1, 1, 0, 0, 1, 1};
  const double ys[] = {0, 1, 0, 1, 0, 1, 0, 1};
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) {
    features[i] << xs[i], ys[i];
    labels.push_back(xs[i] == 1 && ys[i] == 1 ? 1 : 0);
  }
  baselines::TreeConfig deep;
  deep.min_leaf = 1;
  const auto full = baselines::tree_fit(features, labels, 2, deep);
  CHECK(full.depth() == 2);
  for (int i = 0; i < 8; ++i) CHECK(full.predict(features[i]) == labels[i]);

  baselines::TreeConfig capped = deep;
  capped.max_depth = 1;
  CHECK(baselines::tree_fit(features, labels, 2, capped).depth() <= 1);
}

TEST_CASE("tree predict validates the feature vector length") {
  std::vector<Eigen::VectorXd> features(4, Eigen::VectorXd(2));
  features[0] << 0, 0;
  features[1] << 0, 1;
  features[2] << 1, 0;
  features[3] << 1, 1;
  baselines::TreeConfig cfg;
  cfg.min_leaf = 1;
  const auto tree = baselines::tree_fit(features, {0, 0, 1, 1}, 2, cfg);
  CHECK_THROWS_AS(tree.predict(Eigen::VectorXd(0)), std::invalid_argument);
}
