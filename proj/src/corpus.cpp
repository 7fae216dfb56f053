#include "citescope/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "citescope/io.hpp"
#include "citescope/rng.hpp"

namespace citescope::corpus {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::uint64_t kStreamNegatives = 101;
constexpr std::uint64_t kStreamKfold = 102;
constexpr std::uint64_t kStreamGroupedKfold = 103;

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t lineno,
                            const std::string& msg) {
  throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + msg);
}

json parse_line(const std::filesystem::path& path, std::size_t lineno, const std::string& line) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) fail_line(path, lineno, "expected a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    fail_line(path, lineno, std::string("malformed JSON: ") + e.what());
  }
}

const json* find_present(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string require_string(const json& j, const char* key, const std::filesystem::path& path,
                           std::size_t lineno) {
  const json* v = find_present(j, key);
  if (v == nullptr) fail_line(path, lineno, std::string("missing required key \"") + key + "\"");
  if (!v->is_string()) fail_line(path, lineno, std::string("key \"") + key + "\" must be a string");
  return v->get<std::string>();
}

std::optional<int> optional_year(const json& j, const char* key,
                                 const std::filesystem::path& path, std::size_t lineno) {
  const json* v = find_present(j, key);
  if (v == nullptr) return std::nullopt;
  if (v->is_string() && v->get<std::string>() == "unknown") return std::nullopt;
  if (!v->is_number_integer()) {
    fail_line(path, lineno, std::string("key \"") + key + "\" must be an integer year");
  }
  return v->get<int>();
}

std::optional<long> optional_count(const json& j, const char* key,
                                   const std::filesystem::path& path, std::size_t lineno) {
  const json* v = find_present(j, key);
  if (v == nullptr) return std::nullopt;
  if (v->is_string() && v->get<std::string>() == "unknown") return std::nullopt;
  if (!v->is_number_integer()) {
    fail_line(path, lineno, std::string("key \"") + key + "\" must be an integer");
  }
  const long value = v->get<long>();
  if (value < 0) fail_line(path, lineno, std::string("key \"") + key + "\" must be non-negative");
  return value;
}

std::optional<std::set<std::string>> optional_authors(const json& j, const char* key,
                                                      const std::filesystem::path& path,
                                                      std::size_t lineno) {
  const json* v = find_present(j, key);
  if (v == nullptr) return std::nullopt;
  if (v->is_string() && v->get<std::string>() == "unknown") return std::nullopt;
  if (!v->is_array()) {
    fail_line(path, lineno, std::string("key \"") + key + "\" must be an array of names");
  }
  std::set<std::string> names;
  for (const json& item : *v) {
    if (!item.is_string()) {
      fail_line(path, lineno, std::string("key \"") + key + "\" must contain strings");
    }
    names.insert(item.get<std::string>());
  }
  return names;
}

std::string ascii_lower(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

bool contains_ci(const std::string& haystack_lower, const std::string& needle) {
  return haystack_lower.find(ascii_lower(needle)) != std::string::npos;
}

}  // namespace

// ---------------------------------------------------------------------------
// Labels

const char* to_string(FunctionLabel label) {
  switch (label) {
    case FunctionLabel::Weak: return "Weak";
    case FunctionLabel::CoCo: return "CoCo";
    case FunctionLabel::Pos: return "Pos";
    case FunctionLabel::Neut: return "Neut";
  }
  throw std::logic_error("invalid FunctionLabel");
}

const char* to_string(ProvenanceLabel label) {
  switch (label) {
    case ProvenanceLabel::Prov: return "Prov";
    case ProvenanceLabel::NonProv: return "NonProv";
  }
  throw std::logic_error("invalid ProvenanceLabel");
}

FunctionLabel function_label_from_string(const std::string& s) {
  if (s == "Weak") return FunctionLabel::Weak;
  if (s == "CoCo") return FunctionLabel::CoCo;
  if (s == "Pos") return FunctionLabel::Pos;
  if (s == "Neut") return FunctionLabel::Neut;
  throw std::runtime_error("unknown function label: \"" + s + "\"");
}

ProvenanceLabel provenance_label_from_string(const std::string& s) {
  if (s == "Prov") return ProvenanceLabel::Prov;
  if (s == "NonProv") return ProvenanceLabel::NonProv;
  throw std::runtime_error("unknown provenance label: \"" + s + "\"");
}

// ---------------------------------------------------------------------------
// PaperRecord

int PaperRecord::position_of(int sentence_index) const {
  const auto it = std::lower_bound(
      sentences.begin(), sentences.end(), sentence_index,
      [](const std::pair<int, std::string>& s, int idx) { return s.first < idx; });
  if (it == sentences.end() || it->first != sentence_index) return -1;
  return static_cast<int>(it - sentences.begin());
}

const std::string& PaperRecord::sentence_at(int sentence_index) const {
  const int pos = position_of(sentence_index);
  if (pos < 0) {
    throw std::runtime_error("paper " + paper_id + " has no sentence with index " +
                             std::to_string(sentence_index));
  }
  return sentences[static_cast<std::size_t>(pos)].second;
}

// ---------------------------------------------------------------------------
// Function corpus

std::vector<FunctionInstance> load_function_corpus(const std::filesystem::path& path) {
  const std::vector<std::string> lines = io::read_lines(path);
  std::vector<FunctionInstance> out;
  out.reserve(lines.size());
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    const json j = parse_line(path, lineno, lines[i]);

    FunctionInstance inst;
    inst.id = require_string(j, "id", path, lineno);
    if (!seen_ids.insert(inst.id).second) {
      fail_line(path, lineno, "duplicate instance id \"" + inst.id + "\"");
    }
    inst.citing_sentence = require_string(j, "citing_sentence", path, lineno);
    if (inst.citing_sentence.empty()) fail_line(path, lineno, "citing_sentence is empty");
    inst.citation_context = {require_string(j, "context_prev", path, lineno),
                             inst.citing_sentence,
                             require_string(j, "context_next", path, lineno)};
    try {
      inst.label = function_label_from_string(require_string(j, "label", path, lineno));
    } catch (const std::runtime_error& e) {
      fail_line(path, lineno, e.what());
    }
    inst.citing_paper_id = require_string(j, "citing_paper_id", path, lineno);
    inst.cited_paper_id = require_string(j, "cited_paper_id", path, lineno);

    inst.citing_year = optional_year(j, "citing_year", path, lineno);
    inst.cited_year = optional_year(j, "cited_year", path, lineno);
    inst.citing_authors = optional_authors(j, "citing_authors", path, lineno);
    inst.cited_authors = optional_authors(j, "cited_authors", path, lineno);
    inst.words_before_citing = optional_count(j, "words_before_citing", path, lineno);
    inst.total_words_in_paper = optional_count(j, "total_words_in_paper", path, lineno);
    inst.cited_paper_mention_count = optional_count(j, "cited_paper_mention_count", path, lineno);
    inst.same_author_citation_count =
        optional_count(j, "same_author_citation_count", path, lineno);

    if (inst.words_before_citing && inst.total_words_in_paper &&
        *inst.words_before_citing >= *inst.total_words_in_paper) {
      fail_line(path, lineno, "words_before_citing must be less than total_words_in_paper");
    }
    out.push_back(std::move(inst));
  }
  return out;
}

void save_function_corpus(const std::filesystem::path& path,
                          const std::vector<FunctionInstance>& instances) {
  std::string body;
  for (const FunctionInstance& inst : instances) {
    if (inst.citation_context[1] != inst.citing_sentence) {
      throw std::runtime_error("instance " + inst.id +
                               ": citation_context middle differs from citing_sentence");
    }
    ordered_json j;
    j["id"] = inst.id;
    j["citing_sentence"] = inst.citing_sentence;
    j["context_prev"] = inst.citation_context[0];
    j["context_next"] = inst.citation_context[2];
    j["label"] = to_string(inst.label);
    j["citing_paper_id"] = inst.citing_paper_id;
    j["cited_paper_id"] = inst.cited_paper_id;
    if (inst.citing_year) j["citing_year"] = *inst.citing_year;
    if (inst.cited_year) j["cited_year"] = *inst.cited_year;
    if (inst.citing_authors) j["citing_authors"] = *inst.citing_authors;
    if (inst.cited_authors) j["cited_authors"] = *inst.cited_authors;
    if (inst.words_before_citing) j["words_before_citing"] = *inst.words_before_citing;
    if (inst.total_words_in_paper) j["total_words_in_paper"] = *inst.total_words_in_paper;
    if (inst.cited_paper_mention_count) {
      j["cited_paper_mention_count"] = *inst.cited_paper_mention_count;
    }
    if (inst.same_author_citation_count) {
      j["same_author_citation_count"] = *inst.same_author_citation_count;
    }
    body += j.dump();
    body += '\n';
  }
  io::write_file_atomic(path, body);
}

// ---------------------------------------------------------------------------
// Provenance corpus (constructed dataset serialization)

std::vector<ProvenanceInstance> load_provenance_corpus(const std::filesystem::path& path) {
  const std::vector<std::string> lines = io::read_lines(path);
  std::vector<ProvenanceInstance> out;
  out.reserve(lines.size());
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    const json j = parse_line(path, lineno, lines[i]);

    ProvenanceInstance inst;
    inst.id = require_string(j, "id", path, lineno);
    if (!seen_ids.insert(inst.id).second) {
      fail_line(path, lineno, "duplicate instance id \"" + inst.id + "\"");
    }
    inst.citing_sentence = require_string(j, "citing_sentence", path, lineno);
    inst.citation_context = {require_string(j, "context_prev", path, lineno),
                             inst.citing_sentence,
                             require_string(j, "context_next", path, lineno)};
    inst.fragment = require_string(j, "fragment", path, lineno);
    if (inst.fragment.empty()) fail_line(path, lineno, "fragment is empty");
    try {
      inst.label = provenance_label_from_string(require_string(j, "label", path, lineno));
    } catch (const std::runtime_error& e) {
      fail_line(path, lineno, e.what());
    }
    inst.cited_paper_id = require_string(j, "cited_paper_id", path, lineno);
    out.push_back(std::move(inst));
  }
  return out;
}

void save_provenance_corpus(const std::filesystem::path& path,
                            const std::vector<ProvenanceInstance>& instances) {
  std::string body;
  for (const ProvenanceInstance& inst : instances) {
    ordered_json j;
    j["id"] = inst.id;
    j["citing_sentence"] = inst.citing_sentence;
    j["context_prev"] = inst.citation_context[0];
    j["context_next"] = inst.citation_context[2];
    j["fragment"] = inst.fragment;
    j["label"] = to_string(inst.label);
    j["cited_paper_id"] = inst.cited_paper_id;
    body += j.dump();
    body += '\n';
  }
  io::write_file_atomic(path, body);
}

// ---------------------------------------------------------------------------
// Papers

PaperRecord load_paper(const std::filesystem::path& path, const std::string& paper_id) {
  PaperRecord paper;
  paper.paper_id = paper_id;
  const std::vector<std::string> lines = io::read_lines(path);
  paper.sentences.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    paper.sentences.emplace_back(static_cast<int>(i), lines[i]);
  }
  return paper;
}

std::map<std::string, PaperRecord> load_papers_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) throw std::runtime_error("no .txt paper files in " + dir.string());
  std::sort(files.begin(), files.end());
  std::map<std::string, PaperRecord> papers;
  for (const std::filesystem::path& file : files) {
    const std::string id = file.stem().string();
    papers.emplace(id, load_paper(file, id));
  }
  return papers;
}

// ---------------------------------------------------------------------------
// Annotations

std::vector<ProvenanceAnnotation> load_provenance_annotations(const std::filesystem::path& path) {
  const std::vector<std::string> lines = io::read_lines(path);
  std::vector<ProvenanceAnnotation> out;
  out.reserve(lines.size());
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    const json j = parse_line(path, lineno, lines[i]);

    ProvenanceAnnotation ann;
    ann.id = require_string(j, "id", path, lineno);
    if (!seen_ids.insert(ann.id).second) {
      fail_line(path, lineno, "duplicate annotation id \"" + ann.id + "\"");
    }
    ann.citing_paper_id = require_string(j, "citing_paper_id", path, lineno);
    ann.cited_paper_id = require_string(j, "cited_paper_id", path, lineno);
    ann.citing_sentence = require_string(j, "citing_sentence", path, lineno);
    ann.context_prev = require_string(j, "context_prev", path, lineno);
    ann.context_next = require_string(j, "context_next", path, lineno);

    const json* spans = find_present(j, "fragment_sentence_indices");
    if (spans == nullptr || !spans->is_array() || spans->empty()) {
      fail_line(path, lineno, "fragment_sentence_indices must be a non-empty array");
    }
    for (const json& idx : *spans) {
      if (!idx.is_number_integer() || idx.get<int>() < 0) {
        fail_line(path, lineno, "fragment_sentence_indices must hold non-negative integers");
      }
      ann.fragment_sentence_indices.push_back(idx.get<int>());
    }
    out.push_back(std::move(ann));
  }
  return out;
}

ProvenanceInstance resolve_annotation(const ProvenanceAnnotation& ann,
                                      const std::map<std::string, PaperRecord>& papers) {
  const auto it = papers.find(ann.cited_paper_id);
  if (it == papers.end()) {
    throw std::runtime_error("annotation " + ann.id + " references unknown paper \"" +
                             ann.cited_paper_id + "\"");
  }
  const PaperRecord& paper = it->second;
  std::string fragment;
  for (std::size_t i = 0; i < ann.fragment_sentence_indices.size(); ++i) {
    const int idx = ann.fragment_sentence_indices[i];
    if (paper.position_of(idx) < 0) {
      throw std::runtime_error("annotation " + ann.id + " references missing sentence " +
                               std::to_string(idx) + " of paper \"" + paper.paper_id + "\"");
    }
    if (i > 0) fragment += ' ';
    fragment += paper.sentence_at(idx);
  }
  ProvenanceInstance inst;
  inst.id = ann.id;
  inst.citing_sentence = ann.citing_sentence;
  inst.citation_context = {ann.context_prev, ann.citing_sentence, ann.context_next};
  inst.fragment = fragment;
  inst.label = ProvenanceLabel::Prov;
  inst.cited_paper_id = ann.cited_paper_id;
  return inst;
}

// ---------------------------------------------------------------------------
// Negative sampling / dataset construction

std::vector<ProvenanceInstance> sample_negatives(const PaperRecord& paper,
                                                 const std::set<int>& annotated_indices,
                                                 int n,
                                                 std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_negatives: n must be at least 1");
  std::vector<std::size_t> pool;  // positions into paper.sentences
  for (std::size_t p = 0; p < paper.sentences.size(); ++p) {
    const auto& [idx, text] = paper.sentences[p];
    if (!annotated_indices.count(idx) && !text.empty()) pool.push_back(p);
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(n), pool.size());
  rnd::Rng rng = rnd::make_rng(seed, kStreamNegatives);
  const std::vector<std::size_t> picks = rnd::sample_without_replacement(pool.size(), k, rng);

  std::vector<ProvenanceInstance> out;
  out.reserve(k);
  for (const std::size_t pick : picks) {
    const auto& [idx, text] = paper.sentences[pool[pick]];
    ProvenanceInstance inst;
    inst.id = paper.paper_id + "#neg" + std::to_string(idx);
    inst.fragment = text;
    inst.label = ProvenanceLabel::NonProv;
    inst.cited_paper_id = paper.paper_id;
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<ProvenanceInstance> build_provenance_dataset(
    const std::map<std::string, PaperRecord>& papers,
    const std::vector<ProvenanceAnnotation>& annotations,
    int negatives_per_paper,
    std::uint64_t seed,
    ProvenanceDatasetStats* stats) {
  if (negatives_per_paper < 0) {
    throw std::invalid_argument("build_provenance_dataset: negatives_per_paper must be >= 0");
  }

  std::vector<ProvenanceInstance> out;
  std::map<std::string, std::vector<std::size_t>> positives_of;  // paper -> positions in `out`
  std::map<std::string, std::set<int>> annotated_of;
  for (const ProvenanceAnnotation& ann : annotations) {
    out.push_back(resolve_annotation(ann, papers));
    positives_of[ann.cited_paper_id].push_back(out.size() - 1);
    annotated_of[ann.cited_paper_id].insert(ann.fragment_sentence_indices.begin(),
                                            ann.fragment_sentence_indices.end());
  }
  const std::size_t n_pos = out.size();

  std::size_t n_neg = 0;
  if (negatives_per_paper > 0) {
    for (const auto& [paper_id, positive_positions] : positives_of) {
      const PaperRecord& paper = papers.at(paper_id);
      const std::uint64_t paper_seed = rnd::splitmix64(seed ^ rnd::fnv1a64(paper_id));
      std::vector<ProvenanceInstance> negs =
          sample_negatives(paper, annotated_of[paper_id], negatives_per_paper, paper_seed);
      // A sampled sentence has no citance of its own; borrow one of this
      // paper's annotated citation contexts, round-robin in corpus order.
      for (std::size_t j = 0; j < negs.size(); ++j) {
        const ProvenanceInstance& donor = out[positive_positions[j % positive_positions.size()]];
        negs[j].citing_sentence = donor.citing_sentence;
        negs[j].citation_context = donor.citation_context;
      }
      n_neg += negs.size();
      out.insert(out.end(), std::make_move_iterator(negs.begin()),
                 std::make_move_iterator(negs.end()));
    }
  }

  if (stats != nullptr) {
    stats->positives = n_pos;
    stats->negatives = n_neg;
    stats->papers = positives_of.size();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Candidate mining

CuePhraseTable default_cue_table() {
  CuePhraseTable table;
  table.coco_cues = {"Contrast", "Comparable", "Similar to"};
  table.pos_cues = {"We use",   "We have used", "We adopt", "We have adopted", "I use",
                    "I have used", "I adopt",   "I have adopted", "We follow", "I follow"};
  return table;
}

std::vector<CandidateSentence> select_candidates(const std::vector<ScoredSentence>& sentences,
                                                 const CuePhraseTable& cues,
                                                 double cutoff) {
  std::vector<CandidateSentence> out;
  for (const ScoredSentence& s : sentences) {
    if (s.score < -1.0 || s.score > 1.0) {
      throw std::invalid_argument("valence score out of [-1,1] for sentence " +
                                  std::to_string(s.sentence_index) + " of paper \"" + s.paper_id +
                                  "\"");
    }
    std::vector<std::string> reasons;
    if (std::abs(s.score) >= cutoff) reasons.emplace_back("valence");
    const std::string lower = ascii_lower(s.text);
    const auto any_cue = [&lower](const std::vector<std::string>& phrases) {
      return std::any_of(phrases.begin(), phrases.end(),
                         [&lower](const std::string& p) { return contains_ci(lower, p); });
    };
    if (any_cue(cues.coco_cues)) reasons.emplace_back("cue:CoCo");
    if (any_cue(cues.pos_cues)) reasons.emplace_back("cue:Pos");
    if (!reasons.empty()) out.push_back(CandidateSentence{s, std::move(reasons)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Context extraction

std::array<std::string, 3> extract_context(const PaperRecord& paper, int sentence_index) {
  const int pos = paper.position_of(sentence_index);
  if (pos < 0) {
    throw std::runtime_error("paper " + paper.paper_id + " has no sentence with index " +
                             std::to_string(sentence_index));
  }
  const std::size_t p = static_cast<std::size_t>(pos);
  std::array<std::string, 3> ctx;
  ctx[0] = pos > 0 ? paper.sentences[p - 1].second : std::string{};
  ctx[1] = paper.sentences[p].second;
  ctx[2] = p + 1 < paper.sentences.size() ? paper.sentences[p + 1].second : std::string{};
  return ctx;
}

// ---------------------------------------------------------------------------
// Cross-validation splits

namespace {

std::vector<Fold> folds_from_assignment(const std::vector<int>& fold_of, int k) {
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    for (int f = 0; f < k; ++f) {
      auto& fold = folds[static_cast<std::size_t>(f)];
      (fold_of[i] == f ? fold.test : fold.train).push_back(i);
    }
  }
  return folds;
}

}  // namespace

std::vector<Fold> kfold(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold: k must be at least 2");
  if (static_cast<std::size_t>(k) > n) {
    throw std::invalid_argument("kfold: k exceeds instance count");
  }
  rnd::Rng rng = rnd::make_rng(seed, kStreamKfold);
  const std::vector<std::size_t> order = rnd::shuffled_indices(n, rng);
  std::vector<int> fold_of(n, -1);
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t cursor = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) fold_of[order[cursor++]] = f;
  }
  return folds_from_assignment(fold_of, k);
}

std::vector<Fold> grouped_kfold(const std::vector<std::string>& group_of, int k,
                                std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("grouped_kfold: k must be at least 2");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < group_of.size(); ++i) members[group_of[i]].push_back(i);
  if (members.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("grouped_kfold: fewer distinct groups than folds");
  }

  std::vector<std::string> groups;
  groups.reserve(members.size());
  for (const auto& [g, _] : members) groups.push_back(g);
  rnd::Rng rng = rnd::make_rng(seed, kStreamGroupedKfold);
  rnd::shuffle(groups, rng);

  // Greedy balance: each group goes to the currently lightest fold.
  std::vector<std::size_t> load(static_cast<std::size_t>(k), 0);
  std::vector<int> fold_of(group_of.size(), -1);
  for (const std::string& g : groups) {
    int target = 0;
    for (int f = 1; f < k; ++f) {
      if (load[static_cast<std::size_t>(f)] < load[static_cast<std::size_t>(target)]) target = f;
    }
    for (const std::size_t i : members[g]) fold_of[i] = target;
    load[static_cast<std::size_t>(target)] += members[g].size();
  }
  return folds_from_assignment(fold_of, k);
}

}  // namespace citescope::corpus
