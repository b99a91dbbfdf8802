#ifndef METASHAPE_SELECTION_H_
#define METASHAPE_SELECTION_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metashape/catalog.h"
#include "metashape/corpus.h"
#include "metashape/stats.h"

namespace metashape {

enum class StrategyKind { kHighRank, kLowRank, kRandom, kPopular };

std::string_view StrategyName(StrategyKind kind);
std::optional<StrategyKind> ParseStrategy(std::string_view name);

struct SelectionStrategy {
  StrategyKind kind = StrategyKind::kHighRank;
  uint64_t seed = 0;  // only read by kRandom
};

enum class UnitSource { kCategory, kDescription, kNoise };

std::string_view UnitSourceName(UnitSource source);

struct MetadataUnit {
  UnitSource source = UnitSource::kCategory;
  std::string text;
  // H_m for category units; NaN for description and noise units, which are
  // not entropy-ranked.
  double score = 0.0;

  bool operator==(const MetadataUnit& o) const;
};

struct MentionSelection {
  size_t mention_index = 0;
  Role role = Role::kMain;
  std::vector<MetadataUnit> units;

  bool operator==(const MentionSelection&) const = default;
};

// One entry per mention of the example, in mention order.
struct SelectionResult {
  std::string example_id;
  std::vector<MentionSelection> mentions;

  bool operator==(const SelectionResult&) const = default;
};

// Metadata statistics for ranking: counts over metadata tokens of the
// training split, PMI table and class frequencies.
TrainStatistics Precompute(const Dataset& train, const MetadataCatalog& catalog,
                           double alpha = 0.0, bool fold_case = true,
                           int threads = 1);

struct ScoredCategory {
  std::string text;
  std::string key;  // CategoryKey(text)
  double entropy = 0.0;
  int64_t count = 0;  // training token_count of key
};

ScoredCategory ScoreCategory(const std::string& category,
                             const TrainStatistics& stats);

// Ranks categories from most to least discriminative: entropy ascending,
// then higher count, then text.
bool RanksBefore(const ScoredCategory& a, const ScoredCategory& b);

// Per mention: up to n category units chosen by the strategy, then
// description words in document order to fill the remaining budget.
SelectionResult Select(const Example& example, const MetadataCatalog& catalog,
                       const TrainStatistics& stats,
                       const SelectionStrategy& strategy, size_t n);

std::vector<SelectionResult> SelectDataset(const Dataset& dataset,
                                           const MetadataCatalog& catalog,
                                           const TrainStatistics& stats,
                                           const SelectionStrategy& strategy,
                                           size_t n, int threads = 1);

// Replaces `count` units per mention (positions drawn at random) with tokens
// drawn uniformly from `vocabulary`. The number of units is unchanged.
SelectionResult ReplaceWithRandomTokens(const SelectionResult& selection,
                                        size_t count,
                                        std::span<const std::string> vocabulary,
                                        uint64_t seed);

// Empirical frequency of selected category strings.
struct CategoryDistribution {
  std::vector<std::string> support;  // sorted
  std::vector<double> probs;
};

CategoryDistribution SelectionDistribution(
    std::span<const SelectionResult> selections);

// KL(p || q) in bits over the union of both supports.
double SelectionKl(const CategoryDistribution& p, const CategoryDistribution& q);

std::string SerializeSelection(const SelectionResult& selection);
SelectionResult ParseSelection(std::string_view json_line,
                               const std::string& source = "<input>",
                               size_t line = 1);
void WriteSelections(std::span<const SelectionResult> selections,
                     std::ostream& out);
std::vector<SelectionResult> ReadSelections(std::istream& in,
                                            const std::string& source = "<input>");
std::vector<SelectionResult> LoadSelections(const std::string& path);

}  // namespace metashape

#endif  // METASHAPE_SELECTION_H_
