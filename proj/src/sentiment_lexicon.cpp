#include <algorithm>
#include <string>
#include <unordered_map>
#include <vector>

#include "citescope/corpus.hpp"

namespace citescope::corpus {

namespace {

// Hand-curated token valences in [-1, 1]. Scores for a sentence are the mean
// over matched tokens, so a single strong word is enough to pass a 0.6 cutoff
// only if nothing mild dilutes it.
const std::unordered_map<std::string, double>& valence_table() {
  static const std::unordered_map<std::string, double> table = {
      // strongly negative
      {"fails", -0.75},       {"fail", -0.7},         {"failed", -0.7},
      {"failure", -0.7},      {"badly", -0.75},       {"poor", -0.7},
      {"poorly", -0.75},      {"worst", -0.9},        {"worse", -0.65},
      {"wrong", -0.7},        {"incorrect", -0.7},    {"flawed", -0.75},
      {"broken", -0.7},       {"unusable", -0.85},    {"unreliable", -0.7},
      {"unsatisfactory", -0.7}, {"inadequate", -0.7}, {"insufficient", -0.65},
      {"brittle", -0.65},     {"inferior", -0.7},     {"deficient", -0.7},
      {"severe", -0.6},       {"severely", -0.7},     {"suffers", -0.65},
      {"suffer", -0.6},       {"lacks", -0.6},        {"lacking", -0.6},
      {"erroneous", -0.7},    {"errors", -0.5},       {"error", -0.45},
      {"problematic", -0.6},  {"problems", -0.45},    {"problem", -0.4},
      {"weak", -0.6},         {"weakness", -0.6},     {"weaknesses", -0.6},
      {"limited", -0.45},     {"limitation", -0.45},  {"limitations", -0.45},
      {"crude", -0.6},        {"noisy", -0.4},        {"slow", -0.4},
      {"expensive", -0.4},    {"degrades", -0.6},     {"degraded", -0.6},
      {"unstable", -0.65},    {"fragile", -0.6},      {"misleading", -0.7},
      {"inconsistent", -0.55}, {"unable", -0.55},     {"ignores", -0.5},
      {"overfits", -0.6},     {"underperforms", -0.7},
      // strongly positive
      {"excellent", 0.85},    {"outstanding", 0.9},   {"superior", 0.7},
      {"best", 0.75},         {"perfect", 0.9},       {"remarkable", 0.75},
      {"impressive", 0.75},   {"elegant", 0.65},      {"successful", 0.65},
      {"successfully", 0.7},  {"effective", 0.65},    {"effectively", 0.65},
      {"efficient", 0.6},     {"efficiently", 0.6},   {"robust", 0.6},
      {"accurate", 0.6},      {"accurately", 0.6},    {"powerful", 0.65},
      {"strong", 0.55},       {"outperforms", 0.7},   {"outperform", 0.7},
      {"surpasses", 0.7},     {"improves", 0.55},     {"improved", 0.5},
      {"improvement", 0.5},   {"improvements", 0.5},  {"gains", 0.45},
      {"benefit", 0.45},      {"benefits", 0.45},     {"advantage", 0.5},
      {"advantages", 0.5},    {"useful", 0.5},        {"valuable", 0.55},
      {"promising", 0.55},    {"reliable", 0.55},     {"fast", 0.4},
      {"faster", 0.45},       {"better", 0.45},       {"good", 0.5},
      {"well", 0.35},         {"simple", 0.3},        {"novel", 0.4},
      {"clean", 0.4},         {"clear", 0.35},        {"consistent", 0.4},
      {"stable", 0.45},       {"scalable", 0.5},      {"versatile", 0.5},
  };
  return table;
}

// Lowercased alphabetic runs; scoring needs words only, not the full
// numeric-aware tokenization used for model inputs.
std::vector<std::string> words_of(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (const char c : text) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

}  // namespace

double lexicon_valence_score(const std::string& sentence) {
  const auto& table = valence_table();
  double sum = 0.0;
  int matched = 0;
  for (const std::string& w : words_of(sentence)) {
    const auto it = table.find(w);
    if (it != table.end()) {
      sum += it->second;
      ++matched;
    }
  }
  if (matched == 0) return 0.0;
  return std::clamp(sum / matched, -1.0, 1.0);
}

}  // namespace citescope::corpus
