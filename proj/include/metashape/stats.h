#ifndef METASHAPE_STATS_H_
#define METASHAPE_STATS_H_

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metashape/catalog.h"
#include "metashape/corpus.h"

namespace metashape {

// PMI of a (label, token) pair with a zero count under alpha = 0. Ranks
// below every finite PMI and contributes 2^pmi = 0 to r_y.
inline constexpr double kUndefinedPmi = -std::numeric_limits<double>::infinity();

inline bool IsUndefinedPmi(double pmi) { return pmi == kUndefinedPmi; }

enum class VocabSource {
  kExampleTokens,
  kMetadataTokens,
  kBoth,
  kMentionSurfaces,  // normalized entity spans, one pattern per mention
};

std::string_view VocabSourceName(VocabSource source);
std::optional<VocabSource> ParseVocabSource(std::string_view name);

struct TokenCounts {
  int64_t total = 0;
  std::vector<int64_t> joint;  // indexed by label

  bool operator==(const TokenCounts&) const = default;
};

// Presence counts: a token counts at most once per example and label.
class CountTable {
 public:
  CountTable() = default;
  explicit CountTable(size_t num_labels)
      : class_count_(num_labels, 0) {}

  // `tokens` may contain duplicates; each distinct token counts once.
  void AddExample(std::span<const LabelId> labels,
                  std::span<const std::string> tokens);
  void AddTokenCounts(const std::string& token, TokenCounts counts);
  void SetTotals(int64_t n_examples, std::vector<int64_t> class_count);

  // Associative and commutative.
  void Merge(const CountTable& other);

  int64_t n_examples() const { return n_examples_; }
  size_t num_labels() const { return class_count_.size(); }
  size_t vocab_size() const { return tokens_.size(); }
  int64_t class_count(LabelId y) const { return class_count_.at(y); }
  const std::vector<int64_t>& class_counts() const { return class_count_; }
  int64_t token_count(std::string_view token) const;
  int64_t joint_count(LabelId y, std::string_view token) const;
  const TokenCounts* Find(std::string_view token) const;
  const std::map<std::string, TokenCounts, std::less<>>& tokens() const {
    return tokens_;
  }

  bool operator==(const CountTable&) const = default;

 private:
  int64_t n_examples_ = 0;
  std::vector<int64_t> class_count_;
  std::map<std::string, TokenCounts, std::less<>> tokens_;
};

// The statistics token for a category: the whole category string, case
// folded and whitespace collapsed ("Body  of Water" -> "body of water").
std::string CategoryKey(std::string_view category);

// Statistics tokens contributed by an example under a vocabulary source.
std::vector<std::string> ExampleVocabulary(const Example& example,
                                           const MetadataCatalog& catalog,
                                           VocabSource source,
                                           bool fold_case = true);

CountTable BuildCounts(const Dataset& train, VocabSource source,
                       const MetadataCatalog& catalog, bool fold_case = true,
                       int threads = 1);

// Smoothed PMI in bits:
//   P(y,m) = (joint + a) / D,  P(y) = (class + a V) / D,
//   P(m) = (token + a |Y|) / D,  D = n + a |Y| V,  V = vocab size.
// With a = 0 any zero count yields kUndefinedPmi.
double Pmi(const CountTable& counts, LabelId y, std::string_view token,
           double alpha);

class Distribution {
 public:
  Distribution() = default;

  // Validates nonnegativity and unit sum within `tolerance`.
  static Distribution FromProbabilities(std::vector<double> probs,
                                        double tolerance = 1e-12);
  // Normalizes nonnegative weights; all-zero weights give the uniform.
  static Distribution Normalize(std::vector<double> weights);
  static Distribution Uniform(size_t size);
  static Distribution PointMass(size_t size, size_t index);

  size_t size() const { return probs_.size(); }
  double operator[](size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }
  size_t ArgMax() const;

  bool operator==(const Distribution&) const = default;

 private:
  explicit Distribution(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

// Entropy in bits with 0 log 0 = 0.
double Entropy(const Distribution& d);

// KL(p || q) in bits. When q is zero somewhere p is positive, q is smoothed
// by 1e-9 per entry and renormalized first. Throws std::invalid_argument on
// dimension mismatch.
double KlDivergence(const Distribution& p, const Distribution& q);
inline constexpr double kKlEpsilon = 1e-9;

// Mean per-row entropy. Throws std::invalid_argument on an empty input.
double PredictionEntropy(std::span<const Distribution> rows);

class TrainStatistics {
 public:
  TrainStatistics() = default;
  TrainStatistics(CountTable counts, double alpha, VocabSource source,
                  std::vector<std::string> label_names, bool fold_case = true);

  const CountTable& counts() const { return counts_; }
  double alpha() const { return alpha_; }
  VocabSource source() const { return source_; }
  bool fold_case() const { return fold_case_; }
  size_t num_labels() const { return counts_.num_labels(); }
  const std::vector<std::string>& label_names() const { return label_names_; }

  // f_y = class_count(y) / n_examples (all zero for an empty table).
  const std::vector<double>& frequencies() const { return freq_; }

  // Per-label PMI for a token seen in training, or nullptr if unseen.
  const std::vector<double>* PmiRow(std::string_view token) const;
  double Pmi(LabelId y, std::string_view token) const;

 private:
  CountTable counts_;
  double alpha_ = 0.0;
  VocabSource source_ = VocabSource::kMetadataTokens;
  bool fold_case_ = true;
  std::vector<std::string> label_names_;
  std::vector<double> freq_;
  std::map<std::string, std::vector<double>, std::less<>> pmi_;
};

// r_y = 2^pmi(y,m) f_y, normalized. Tokens unseen in training, and tokens
// whose weights are all zero, give the uniform distribution.
Distribution ConditionalClassDistribution(std::string_view token,
                                          const TrainStatistics& stats);

// Entropy of ConditionalClassDistribution (H_m).
double TokenEntropy(std::string_view token, const TrainStatistics& stats);

// The k tokens with highest finite pmi(y, .), ties by token text.
std::vector<std::string> TopPmiTokens(const TrainStatistics& stats, LabelId y,
                                      size_t k);

// Versioned JSON artifact. Only counts are stored; PMI is re-derived.
void WriteStatistics(const TrainStatistics& stats, std::ostream& out);
TrainStatistics ReadStatistics(std::istream& in,
                               const std::string& source = "<input>");
void SaveStatistics(const TrainStatistics& stats, const std::string& path);
TrainStatistics LoadStatistics(const std::string& path);

// Per-category TF-IDF over category pseudo-documents. A pseudo-document
// concatenates the tokens of every training example with a mention carrying
// the category. IDF = ln((1 + N) / (1 + df)) + 1 over the N categories of
// the catalog. Stop words and punctuation-only tokens are skipped.
class CategoryTfidf {
 public:
  CategoryTfidf(const Dataset& train, const MetadataCatalog& catalog);

  // Top k words by TF-IDF, ties lexicographic. Throws ValidationError for a
  // category outside the catalog universe.
  std::vector<std::string> TopWords(const std::string& category,
                                    size_t k) const;
  double Score(const std::string& category, const std::string& word) const;

 private:
  const MetadataCatalog* catalog_;
  std::map<std::string, std::map<std::string, int64_t>> term_freq_;
  std::map<std::string, int64_t> doc_freq_;
  size_t num_docs_ = 0;
};

std::vector<std::string> TfidfTopWords(const std::string& category,
                                       const Dataset& train,
                                       const MetadataCatalog& catalog,
                                       size_t k);

bool IsStopWord(std::string_view token);

}  // namespace metashape

#endif  // METASHAPE_STATS_H_
