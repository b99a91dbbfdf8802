#include <algorithm>
#include <cmath>
#include <set>

#include "metashape/error.h"
#include "metashape/stats.h"
#include "metashape/util/utf8.h"

namespace metashape {

namespace {

// Common English function words.
constexpr std::string_view kStopWords[] = {
    "a",       "about",   "above",  "after",  "again",   "against", "all",
    "also",    "am",      "an",     "and",    "any",     "are",     "as",
    "at",      "be",      "because", "been",  "before",  "being",   "below",
    "between", "both",    "but",    "by",     "can",     "could",   "did",
    "do",      "does",    "doing",  "down",   "during",  "each",    "few",
    "for",     "from",    "further", "had",   "has",     "have",    "having",
    "he",      "her",     "here",   "hers",   "herself", "him",     "himself",
    "his",     "how",     "i",      "if",     "in",      "into",    "is",
    "it",      "its",     "itself", "just",   "me",      "more",    "most",
    "my",      "myself",  "no",     "nor",    "not",     "now",     "of",
    "off",     "on",      "once",   "only",   "or",      "other",   "our",
    "ours",    "out",     "over",   "own",    "s",       "same",    "she",
    "should",  "so",      "some",   "such",   "t",       "than",    "that",
    "the",     "their",   "theirs", "them",   "then",    "there",   "these",
    "they",    "this",    "those",  "through", "to",     "too",     "under",
    "until",   "up",      "very",   "was",    "we",      "were",    "what",
    "when",    "where",   "which",  "while",  "who",     "whom",    "why",
    "will",    "with",    "would",  "you",    "your",    "yours",
};

bool HasAlnum(std::string_view token) {
  for (char32_t c : utf8::Decode(token)) {
    if (utf8::IsAlnum(c)) return true;
  }
  return false;
}

}  // namespace

bool IsStopWord(std::string_view token) {
  return std::binary_search(std::begin(kStopWords), std::end(kStopWords),
                            utf8::FoldCase(token));
}

CategoryTfidf::CategoryTfidf(const Dataset& train,
                             const MetadataCatalog& catalog)
    : catalog_(&catalog), num_docs_(catalog.category_universe().size()) {
  for (const auto& ex : train.examples) {
    std::set<std::string> categories;
    for (const auto& meta : MetadataFor(ex, catalog)) {
      categories.insert(meta.categories.begin(), meta.categories.end());
    }
    if (categories.empty()) continue;
    for (const auto& c : categories) {
      auto& tf = term_freq_[c];
      for (const auto& t : ex.tokens) {
        if (IsStopWord(t) || !HasAlnum(t)) continue;
        ++tf[t];
      }
    }
  }
  for (const auto& [category, tf] : term_freq_) {
    for (const auto& [word, count] : tf) ++doc_freq_[word];
  }
}

double CategoryTfidf::Score(const std::string& category,
                            const std::string& word) const {
  auto doc = term_freq_.find(category);
  if (doc == term_freq_.end()) return 0.0;
  auto tf = doc->second.find(word);
  if (tf == doc->second.end()) return 0.0;
  const double df = static_cast<double>(doc_freq_.at(word));
  const double idf =
      std::log((1.0 + static_cast<double>(num_docs_)) / (1.0 + df)) + 1.0;
  return static_cast<double>(tf->second) * idf;
}

std::vector<std::string> CategoryTfidf::TopWords(const std::string& category,
                                                 size_t k) const {
  if (catalog_->category_universe().count(category) == 0) {
    throw ValidationError("unknown category '" + category + "'");
  }
  auto doc = term_freq_.find(category);
  if (doc == term_freq_.end() || k == 0) return {};
  std::vector<std::pair<double, const std::string*>> ranked;
  ranked.reserve(doc->second.size());
  for (const auto& [word, count] : doc->second) {
    ranked.emplace_back(Score(category, word), &word);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });
  std::vector<std::string> out;
  for (size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(*ranked[i].second);
  return out;
}

std::vector<std::string> TfidfTopWords(const std::string& category,
                                       const Dataset& train,
                                       const MetadataCatalog& catalog,
                                       size_t k) {
  return CategoryTfidf(train, catalog).TopWords(category, k);
}

}  // namespace metashape
