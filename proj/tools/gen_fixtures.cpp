// Regenerates the committed dataset fixtures: a 1432-instance function
// corpus (class counts 31/95/295/1011), 295 cited-paper sentence files, 608
// provenance annotations (first 18 papers carry 3, the rest 2), and a
// 100-dimensional embedding table covering every fixture token.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "citescope/corpus.hpp"
#include "citescope/io.hpp"
#include "citescope/rng.hpp"
#include "citescope/text_pipeline.hpp"

namespace {

using citescope::rnd::Rng;

constexpr std::uint64_t kSeed = 20240611;

const std::vector<std::string> kTopics = {
    "parsing",      "alignment",   "discourse",   "coreference", "summarization",
    "entailment",   "tagging",     "segmentation", "translation", "retrieval",
    "embeddings",   "attention",   "lexicons",    "treebanks",   "dialogue",
    "morphology",   "grammar",     "semantics",   "pragmatics",  "phonology"};

const std::vector<std::string> kMethods = {
    "a transition based parser", "a graph based decoder",   "conditional random fields",
    "a maximum entropy model",   "recurrent networks",      "a beam search procedure",
    "latent variable models",    "a rule based pipeline",   "distant supervision",
    "a structured perceptron",   "bilingual lexicon induction", "a span based chunker"};

const std::vector<std::string> kSurnames = {
    "Smith",   "Chen",  "Kumar",  "Garcia", "Novak", "Tanaka", "Okafor", "Meyer",
    "Rossi",   "Patel", "Larsen", "Dubois", "Silva", "Kovacs", "Haddad", "Yilmaz"};

const std::vector<std::string> kNeutTemplates = {
    "The corpus described in %M% was annotated for %T% by two graduate students.",
    "Following the setup of %M%, the %T% experiments report accuracy on the development set.",
    "An overview of %T% evaluation campaigns appears in %M%.",
    "The shared task on %T% introduced in %M% attracted twelve participating teams.",
    "Feature templates for %T% were first catalogued in %M%.",
    "The %T% annotation guidelines of %M% define seven relation categories.",
    "Results on the %T% benchmark of %M% are summarized in the appendix.",
    "A detailed error taxonomy for %T% systems is given in %M%."};

const std::vector<std::string> kWeakTemplates = {
    "The heuristic of %M% fails badly on long sentences in our %T% experiments.",
    "Unfortunately the model of %M% performs poorly when %T% labels are sparse.",
    "The approach in %M% suffers from severe error propagation during %T%.",
    "Coverage of the %M% lexicon is inadequate for open domain %T%."};

const std::vector<std::string> kCocoTemplates = {
    "Similar to %M%, we cast %T% as a sequence labeling problem.",
    "In contrast to %M%, our %T% model requires no hand written rules.",
    "Our results on %T% are comparable to the numbers reported by %M%.",
    "Contrast this with %M%, where %T% features were discarded entirely."};

const std::vector<std::string> kPosTemplates = {
    "We use the %T% toolkit of %M% to preprocess every document.",
    "We adopt the evaluation protocol of %M% for all %T% experiments.",
    "We follow %M% in restricting the %T% vocabulary to frequent types.",
    "We have used the annotated %T% corpus released by %M% as training data.",
    "I use the scoring script of %M% to evaluate %T% output."};

const std::vector<std::string> kPaperTemplates = {
    "This paper investigates %T% with %X%.",
    "We present a study of %T% based on %X%.",
    "Prior work treats %T% as a classification problem.",
    "The proposed method combines %X% with lexical features for %T%.",
    "Experiments cover three %T% datasets drawn from published proceedings.",
    "Our analysis shows that %T% accuracy improves with more context.",
    "We describe the annotation of a new %T% corpus.",
    "The earlier heuristic fails badly on rare %T% cases.",
    "Error analysis highlights recurring %T% failure modes.",
    "Similar to %X%, the pipeline ranks candidate structures.",
    "We adopt %X% for the %T% preprocessing stage.",
    "An excellent result is obtained for %T% overall."};

std::string pick(Rng& rng, const std::vector<std::string>& pool) {
  return pool[citescope::rnd::uniform_index(rng, pool.size())];
}

std::string citation_marker(Rng& rng) {
  const int year = 1994 + static_cast<int>(citescope::rnd::uniform_index(rng, 26));
  const std::string name = pick(rng, kSurnames);
  if (citescope::rnd::uniform_index(rng, 4) == 0) {
    return "(" + name + " and " + pick(rng, kSurnames) + ", " + std::to_string(year) + ")";
  }
  return "(" + name + ", " + std::to_string(year) + ")";
}

std::string expand(Rng& rng, std::string text) {
  const auto replace_all = [&text](const std::string& key, const std::string& value) {
    for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key)) {
      text.replace(pos, key.size(), value);
    }
  };
  replace_all("%T%", pick(rng, kTopics));
  replace_all("%M%", citation_marker(rng));
  replace_all("%X%", pick(rng, kMethods));
  return text;
}

std::set<std::string> author_set(Rng& rng) {
  std::set<std::string> authors;
  const std::size_t n = 1 + citescope::rnd::uniform_index(rng, 3);
  while (authors.size() < n) authors.insert(pick(rng, kSurnames));
  return authors;
}

std::string paper_id_of(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "P%03u", static_cast<unsigned>(i + 1));
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out_dir = argc > 1 ? argv[1] : "data/fixtures";
  std::filesystem::create_directories(out_dir / "papers");
  std::set<std::string> vocabulary;
  const auto collect = [&vocabulary](const std::string& text) {
    for (std::string& tok : citescope::text_pipeline::tokenize(text)) {
      vocabulary.insert(std::move(tok));
    }
  };

  // Cited papers: 295 files of 12 sentences each.
  constexpr std::size_t kPapers = 295;
  constexpr std::size_t kSentencesPerPaper = 12;
  Rng paper_rng = citescope::rnd::make_rng(kSeed, 1);
  std::vector<std::vector<std::string>> paper_sentences(kPapers);
  for (std::size_t p = 0; p < kPapers; ++p) {
    std::string body;
    for (std::size_t s = 0; s < kSentencesPerPaper; ++s) {
      std::string sentence = expand(paper_rng, kPaperTemplates[s % kPaperTemplates.size()]);
      if (s == 4) {
        sentence += " The score reached " +
                    std::to_string(60 + citescope::rnd::uniform_index(paper_rng, 35)) + "." +
                    std::to_string(10 + citescope::rnd::uniform_index(paper_rng, 90)) +
                    " on the test set.";
      }
      collect(sentence);
      body += sentence;
      body += '\n';
      paper_sentences[p].push_back(std::move(sentence));
    }
    citescope::io::write_file_atomic(out_dir / "papers" / (paper_id_of(p) + ".txt"), body);
  }

  // Function corpus: fixed class counts, deterministically shuffled order.
  Rng fn_rng = citescope::rnd::make_rng(kSeed, 2);
  std::vector<citescope::corpus::FunctionLabel> labels;
  const auto add_labels = [&labels](citescope::corpus::FunctionLabel label, int count) {
    labels.insert(labels.end(), static_cast<std::size_t>(count), label);
  };
  add_labels(citescope::corpus::FunctionLabel::Weak, 31);
  add_labels(citescope::corpus::FunctionLabel::CoCo, 95);
  add_labels(citescope::corpus::FunctionLabel::Pos, 295);
  add_labels(citescope::corpus::FunctionLabel::Neut, 1011);
  citescope::rnd::shuffle(labels, fn_rng);

  std::vector<citescope::corpus::FunctionInstance> instances;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::vector<std::string>* pool = nullptr;
    switch (labels[i]) {
      case citescope::corpus::FunctionLabel::Weak: pool = &kWeakTemplates; break;
      case citescope::corpus::FunctionLabel::CoCo: pool = &kCocoTemplates; break;
      case citescope::corpus::FunctionLabel::Pos: pool = &kPosTemplates; break;
      case citescope::corpus::FunctionLabel::Neut: pool = &kNeutTemplates; break;
    }
    citescope::corpus::FunctionInstance inst;
    char id[16];
    std::snprintf(id, sizeof id, "F%04u", static_cast<unsigned>(i + 1));
    inst.id = id;
    inst.citing_sentence = expand(fn_rng, pick(fn_rng, *pool));
    inst.citation_context = {expand(fn_rng, pick(fn_rng, kNeutTemplates)), inst.citing_sentence,
                             expand(fn_rng, pick(fn_rng, kNeutTemplates))};
    inst.label = labels[i];
    inst.citing_paper_id = "C" + std::to_string(1 + citescope::rnd::uniform_index(fn_rng, 400));
    inst.cited_paper_id = paper_id_of(citescope::rnd::uniform_index(fn_rng, kPapers));
    if (citescope::rnd::uniform_index(fn_rng, 10) != 0) {  // ~10% lack all metadata
      const int cited_year = 1994 + static_cast<int>(citescope::rnd::uniform_index(fn_rng, 20));
      inst.cited_year = cited_year;
      inst.citing_year = cited_year + static_cast<int>(citescope::rnd::uniform_index(fn_rng, 9));
      inst.citing_authors = author_set(fn_rng);
      inst.cited_authors = author_set(fn_rng);
      const long total = 2000 + static_cast<long>(citescope::rnd::uniform_index(fn_rng, 6000));
      inst.total_words_in_paper = total;
      inst.words_before_citing =
          static_cast<long>(citescope::rnd::uniform_index(fn_rng, static_cast<std::size_t>(total)));
      inst.cited_paper_mention_count =
          1 + static_cast<long>(citescope::rnd::uniform_index(fn_rng, 8));
      inst.same_author_citation_count =
          static_cast<long>(citescope::rnd::uniform_index(fn_rng, 4));
    }
    for (const std::string& s : inst.citation_context) collect(s);
    instances.push_back(std::move(inst));
  }
  citescope::corpus::save_function_corpus(out_dir / "function_corpus.jsonl", instances);

  // Provenance annotations: papers P001..P018 carry three, the rest two.
  Rng ann_rng = citescope::rnd::make_rng(kSeed, 3);
  const std::vector<std::vector<int>> spans = {{1, 2}, {4}, {6, 7}};
  std::string ann_body;
  std::size_t ann_count = 0;
  for (std::size_t p = 0; p < kPapers; ++p) {
    const std::size_t per_paper = p < 18 ? 3 : 2;
    for (std::size_t a = 0; a < per_paper; ++a) {
      nlohmann::ordered_json j;
      char id[16];
      std::snprintf(id, sizeof id, "A%04u", static_cast<unsigned>(++ann_count));
      j["id"] = id;
      j["citing_paper_id"] = "C" + std::to_string(1 + citescope::rnd::uniform_index(ann_rng, 400));
      j["cited_paper_id"] = paper_id_of(p);
      const std::string citing =
          expand(ann_rng, pick(ann_rng, kNeutTemplates));
      j["citing_sentence"] = citing;
      const std::string prev = expand(ann_rng, pick(ann_rng, kPaperTemplates));
      const std::string next = expand(ann_rng, pick(ann_rng, kPaperTemplates));
      j["context_prev"] = prev;
      j["context_next"] = next;
      j["fragment_sentence_indices"] = spans[a];
      collect(citing);
      collect(prev);
      collect(next);
      ann_body += j.dump();
      ann_body += '\n';
    }
  }
  citescope::io::write_file_atomic(out_dir / "provenance_annotations.jsonl", ann_body);

  // Embedding table covering every token seen above.
  constexpr int kDim = 100;
  std::ostringstream glove;
  glove.precision(5);
  glove << std::fixed;
  for (const std::string& word : vocabulary) {
    Rng word_rng = citescope::rnd::make_rng(citescope::rnd::fnv1a64(word), 777);
    glove << word;
    for (int d = 0; d < kDim; ++d) {
      glove << ' ' << citescope::rnd::uniform_real(word_rng, -0.5, 0.5);
    }
    glove << '\n';
  }
  citescope::io::write_file_atomic(out_dir / "glove_100d.txt", glove.str());

  std::cout << "fixtures written to " << out_dir.string() << ": " << instances.size()
            << " function instances, " << kPapers << " papers, " << ann_count
            << " annotations, vocabulary " << vocabulary.size() << "\n";
  return 0;
}
