#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace citescope::corpus {

// ---------------------------------------------------------------------------
// Labels

enum class FunctionLabel { Weak = 0, CoCo = 1, Pos = 2, Neut = 3 };
inline constexpr int kFunctionClassCount = 4;

enum class ProvenanceLabel { Prov = 0, NonProv = 1 };
inline constexpr int kProvenanceClassCount = 2;

const char* to_string(FunctionLabel label);
const char* to_string(ProvenanceLabel label);
FunctionLabel function_label_from_string(const std::string& s);
ProvenanceLabel provenance_label_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Instances

// A citation with its three-sentence context and optional metadata.
// Optional fields are empty/nullopt when the source record said "unknown".
struct FunctionInstance {
  std::string id;
  std::string citing_sentence;
  std::array<std::string, 3> citation_context;  // {prev, citing, next}
  FunctionLabel label = FunctionLabel::Neut;
  std::string citing_paper_id;
  std::string cited_paper_id;

  std::optional<int> citing_year;
  std::optional<int> cited_year;
  std::optional<std::set<std::string>> citing_authors;
  std::optional<std::set<std::string>> cited_authors;
  std::optional<long> words_before_citing;
  std::optional<long> total_words_in_paper;
  std::optional<long> cited_paper_mention_count;
  std::optional<long> same_author_citation_count;

  bool operator==(const FunctionInstance&) const = default;
};

// A (citation context, cited-paper fragment) pair.
struct ProvenanceInstance {
  std::string id;
  std::string citing_sentence;
  std::array<std::string, 3> citation_context;  // {prev, citing, next}
  std::string fragment;
  ProvenanceLabel label = ProvenanceLabel::NonProv;
  std::string cited_paper_id;

  bool operator==(const ProvenanceInstance&) const = default;
};

// One cited paper: sentences keyed by 0-based line index, ascending.
struct PaperRecord {
  std::string paper_id;
  std::vector<std::pair<int, std::string>> sentences;

  // Position inside `sentences` of the given index, or -1 if absent.
  int position_of(int sentence_index) const;
  const std::string& sentence_at(int sentence_index) const;  // throws if absent
};

// ---------------------------------------------------------------------------
// Loaders / serialization (JSON Lines; errors carry 1-based line numbers)

std::vector<FunctionInstance> load_function_corpus(const std::filesystem::path& path);
void save_function_corpus(const std::filesystem::path& path,
                          const std::vector<FunctionInstance>& instances);

std::vector<ProvenanceInstance> load_provenance_corpus(const std::filesystem::path& path);
void save_provenance_corpus(const std::filesystem::path& path,
                            const std::vector<ProvenanceInstance>& instances);

// One sentence per line; the 0-based line number is the sentence index.
PaperRecord load_paper(const std::filesystem::path& path, const std::string& paper_id);

// Loads every *.txt in the directory; paper_id = filename stem.
std::map<std::string, PaperRecord> load_papers_dir(const std::filesystem::path& dir);

// A raw annotation: a citation plus the cited-paper sentences it points at.
struct ProvenanceAnnotation {
  std::string id;
  std::string citing_paper_id;
  std::string cited_paper_id;
  std::string citing_sentence;
  std::string context_prev;
  std::string context_next;
  std::vector<int> fragment_sentence_indices;
};

std::vector<ProvenanceAnnotation> load_provenance_annotations(const std::filesystem::path& path);

// Resolves an annotation against its cited paper: joins the referenced
// sentences (in the order given, single spaces) into a Prov instance.
ProvenanceInstance resolve_annotation(const ProvenanceAnnotation& ann,
                                      const std::map<std::string, PaperRecord>& papers);

// ---------------------------------------------------------------------------
// Dataset construction

// Draws up to n unannotated, non-empty sentences of `paper` uniformly without
// replacement (seeded; fewer when the pool is smaller) as NonProv instances.
// Citing fields are left empty: pairing with a citance is the caller's job.
std::vector<ProvenanceInstance> sample_negatives(const PaperRecord& paper,
                                                 const std::set<int>& annotated_indices,
                                                 int n,
                                                 std::uint64_t seed);

struct ProvenanceDatasetStats {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t papers = 0;
};

// Full corpus assembly: every annotation becomes a Prov instance; every
// annotated paper contributes up to negatives_per_paper sampled NonProv
// instances, each paired round-robin with one of that paper's citances.
std::vector<ProvenanceInstance> build_provenance_dataset(
    const std::map<std::string, PaperRecord>& papers,
    const std::vector<ProvenanceAnnotation>& annotations,
    int negatives_per_paper,
    std::uint64_t seed,
    ProvenanceDatasetStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Candidate mining

struct ScoredSentence {
  std::string paper_id;
  int sentence_index = 0;
  std::string text;
  double score = 0.0;  // valence in [-1, 1]
};

struct CandidateSentence {
  ScoredSentence sentence;
  std::vector<std::string> reasons;  // subset of {"valence","cue:CoCo","cue:Pos"}
};

struct CuePhraseTable {
  std::vector<std::string> coco_cues;
  std::vector<std::string> pos_cues;
};

// Comparison and usage cue phrases used for candidate mining.
CuePhraseTable default_cue_table();

// Keeps sentences with |score| >= cutoff or containing any cue phrase
// (case-insensitive substring). Throws if a score is outside [-1, 1].
std::vector<CandidateSentence> select_candidates(const std::vector<ScoredSentence>& sentences,
                                                 const CuePhraseTable& cues,
                                                 double cutoff = 0.6);

// Token-valence scorer backed by a built-in lexicon: mean valence of the
// matched tokens, 0 when none match, clamped to [-1, 1].
double lexicon_valence_score(const std::string& sentence);

// ---------------------------------------------------------------------------
// Context extraction

// {prev, sentence, next} by position in the paper's sentence list; sentences
// missing at the boundary become "".
std::array<std::string, 3> extract_context(const PaperRecord& paper, int sentence_index);

// ---------------------------------------------------------------------------
// Cross-validation splits

struct Fold {
  std::vector<std::size_t> train;  // ascending instance indices
  std::vector<std::size_t> test;
};

// Shuffled k-fold over n instances; fold sizes differ by at most one.
std::vector<Fold> kfold(std::size_t n, int k, std::uint64_t seed);

// k-fold where all instances sharing a group land in the same test fold.
// Groups are assigned in seeded shuffled order, each to the currently
// smallest fold, balancing instance counts. Throws if distinct groups < k.
std::vector<Fold> grouped_kfold(const std::vector<std::string>& group_of, int k,
                                std::uint64_t seed);

}  // namespace citescope::corpus
