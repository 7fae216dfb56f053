#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace citescope::text_pipeline {

// Lowercases and splits on any character that is not ASCII alphanumeric,
// except a '.' with a digit on both sides (so decimals like "21.96" survive).
std::vector<std::string> tokenize(std::string_view text);

// Token -> index table. Index 0 is reserved for padding; words get indices
// 1..size() in lexicographic order.
class Vocabulary {
 public:
  static Vocabulary build(const std::vector<std::vector<std::string>>& token_lists);
  static Vocabulary from_words(std::vector<std::string> sorted_unique_words);

  // 0 for unknown words (same slot as padding: both embed to the zero vector).
  int index_of(const std::string& word) const;
  const std::string& word_at(int index) const;  // throws on 0 or out of range
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  void save(const std::filesystem::path& path) const;  // one word per line
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> index_;
};

struct EncodedSequence {
  std::vector<int> indices;  // length w; 0-padded / right-truncated
};

// Encodes tokens against the vocabulary and right-pads (or truncates the
// right end) to exactly w entries. Throws if w < 1.
EncodedSequence encode_pad(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                           int w);

// Sequence width for a training split: the longest token list, capped at
// `cap`, and at least 1.
int padded_length(const std::vector<std::vector<std::string>>& token_lists, int cap = 100);

// Frozen word-vector table.
class EmbeddingTable {
 public:
  EmbeddingTable(int dim, std::map<std::string, Eigen::VectorXd> vectors);

  // Text format: one entry per line, "word v1 v2 ... vdim".
  static EmbeddingTable load(const std::filesystem::path& path, int expected_dim);

  int dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  const Eigen::VectorXd* find(const std::string& word) const;

 private:
  int dim_;
  std::map<std::string, Eigen::VectorXd> vectors_;
};

// dim x w matrix whose column j is the vector of the j-th token; padding and
// out-of-vocabulary words contribute zero columns.
Eigen::MatrixXd embed_sequence(const EncodedSequence& seq, const Vocabulary& vocab,
                               const EmbeddingTable& table);

}  // namespace citescope::text_pipeline
