#include "citescope/text_pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include "citescope/io.hpp"

namespace citescope::text_pipeline {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_alnum_ascii(char c) {
  return is_digit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

char to_lower_ascii(char c) {
  return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (is_alnum_ascii(c)) {
      cur.push_back(to_lower_ascii(c));
    } else if (c == '.' && i > 0 && i + 1 < text.size() && is_digit(text[i - 1]) &&
               is_digit(text[i + 1])) {
      cur.push_back('.');
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& token_lists) {
  std::set<std::string> unique;
  for (const auto& list : token_lists) unique.insert(list.begin(), list.end());
  return from_words(std::vector<std::string>(unique.begin(), unique.end()));
}

Vocabulary Vocabulary::from_words(std::vector<std::string> sorted_unique_words) {
  if (!std::is_sorted(sorted_unique_words.begin(), sorted_unique_words.end()) ||
      std::adjacent_find(sorted_unique_words.begin(), sorted_unique_words.end()) !=
          sorted_unique_words.end()) {
    throw std::invalid_argument("vocabulary words must be sorted and unique");
  }
  for (const std::string& w : sorted_unique_words) {
    if (w.empty()) throw std::invalid_argument("vocabulary words must be non-empty");
  }
  Vocabulary v;
  v.words_ = std::move(sorted_unique_words);
  for (std::size_t i = 0; i < v.words_.size(); ++i) {
    v.index_.emplace(v.words_[i], static_cast<int>(i) + 1);
  }
  return v;
}

int Vocabulary::index_of(const std::string& word) const {
  const auto it = index_.find(word);
  return it == index_.end() ? 0 : it->second;
}

const std::string& Vocabulary::word_at(int index) const {
  if (index < 1 || static_cast<std::size_t>(index) > words_.size()) {
    throw std::out_of_range("vocabulary index out of range: " + std::to_string(index));
  }
  return words_[static_cast<std::size_t>(index) - 1];
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::string body;
  for (const std::string& w : words_) {
    body += w;
    body += '\n';
  }
  io::write_file_atomic(path, body);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  return from_words(io::read_lines(path));
}

EncodedSequence encode_pad(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                           int w) {
  if (w < 1) throw std::invalid_argument("encode_pad: w must be at least 1");
  EncodedSequence seq;
  seq.indices.assign(static_cast<std::size_t>(w), 0);
  const std::size_t n = std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(w));
  for (std::size_t j = 0; j < n; ++j) seq.indices[j] = vocab.index_of(tokens[j]);
  return seq;
}

int padded_length(const std::vector<std::vector<std::string>>& token_lists, int cap) {
  if (cap < 1) throw std::invalid_argument("padded_length: cap must be at least 1");
  std::size_t longest = 0;
  for (const auto& list : token_lists) longest = std::max(longest, list.size());
  const int w = static_cast<int>(std::min<std::size_t>(longest, static_cast<std::size_t>(cap)));
  return std::max(w, 1);
}

EmbeddingTable::EmbeddingTable(int dim, std::map<std::string, Eigen::VectorXd> vectors)
    : dim_(dim), vectors_(std::move(vectors)) {
  if (dim_ < 1) throw std::invalid_argument("embedding dimension must be positive");
  for (const auto& [word, vec] : vectors_) {
    if (vec.size() != dim_) {
      throw std::invalid_argument("embedding for \"" + word + "\" has wrong dimension");
    }
  }
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, int expected_dim) {
  if (expected_dim < 1) throw std::invalid_argument("embedding dimension must be positive");
  const std::vector<std::string> lines = io::read_lines(path);
  std::map<std::string, Eigen::VectorXd> vectors;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    const std::size_t space = line.find(' ');
    if (space == std::string::npos || space == 0) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) +
                               ": expected \"word v1 ... vN\"");
    }
    const std::string word = line.substr(0, space);
    Eigen::VectorXd vec(expected_dim);
    const char* p = line.c_str() + space;
    int count = 0;
    while (true) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) break;
      if (count >= expected_dim) {
        ++count;  // flag the overflow and stop
        break;
      }
      vec[count++] = v;
      p = end;
    }
    if (count != expected_dim) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": expected " +
                               std::to_string(expected_dim) + " values for \"" + word + "\"");
    }
    vectors.insert_or_assign(word, std::move(vec));
  }
  return EmbeddingTable(expected_dim, std::move(vectors));
}

const Eigen::VectorXd* EmbeddingTable::find(const std::string& word) const {
  const auto it = vectors_.find(word);
  return it == vectors_.end() ? nullptr : &it->second;
}

Eigen::MatrixXd embed_sequence(const EncodedSequence& seq, const Vocabulary& vocab,
                               const EmbeddingTable& table) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(table.dim(), static_cast<Eigen::Index>(seq.indices.size()));
  for (std::size_t j = 0; j < seq.indices.size(); ++j) {
    const int idx = seq.indices[j];
    if (idx == 0) continue;  // padding / unknown
    const Eigen::VectorXd* vec = table.find(vocab.word_at(idx));
    if (vec != nullptr) x.col(static_cast<Eigen::Index>(j)) = *vec;
  }
  return x;
}

}  // namespace citescope::text_pipeline
