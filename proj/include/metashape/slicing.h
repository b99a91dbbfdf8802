#ifndef METASHAPE_SLICING_H_
#define METASHAPE_SLICING_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metashape/corpus.h"
#include "metashape/selection.h"
#include "metashape/stats.h"

namespace metashape {

struct SliceDefinition {
  std::string name;
  std::vector<std::string> member_ids;  // dataset order
  std::map<std::string, std::string> provenance;
};

// Gold-independent model output for one example.
struct Prediction {
  std::vector<LabelId> predicted;  // sorted
  Distribution scores;
};

using PredictionMap = std::map<std::string, Prediction>;

struct SliceMetrics {
  std::string name;
  int64_t support = 0;
  int64_t true_positives = 0;
  int64_t predicted = 0;  // label decisions made
  int64_t gold = 0;       // gold label decisions
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mean_entropy = 0.0;
  bool defined = false;  // false for an empty slice
};

struct SliceReport {
  std::vector<SliceMetrics> rows;

  const SliceMetrics* Find(const std::string& name) const;
};

SliceDefinition WholeSet(const Dataset& test, const std::string& name = "all");

// Tail: any mention (restricted to `roles`) whose surface was seen fewer than
// `threshold` times in training for its role. Everything else is head.
std::pair<SliceDefinition, SliceDefinition> TailHeadSplit(
    const Dataset& test, const SpanPopularityIndex& index,
    int64_t threshold = 10,
    std::span<const Role> roles = std::span<const Role>(kAllRoles));

// Category strings inserted for each example id.
std::map<std::string, std::set<std::string>> InsertedCategories(
    std::span<const SelectionResult> selections);

// Members have a token in the cue-word union of their inserted categories.
SliceDefinition SubpopulationSlice(
    const Dataset& test,
    const std::map<std::string, std::vector<std::string>>& cue_words,
    const std::map<std::string, std::set<std::string>>& inserted_categories);

// Y_p: classes with positive span PMI for a mention surface seen at least
// `min_seen` times. Y_m: classes with positive metadata PMI for an inserted
// token. Members have non-empty Y_p and Y_m and a gold class in Y_p \ Y_m.
SliceDefinition MisleadingMetadataSlice(
    const Dataset& test, const TrainStatistics& span_stats,
    const TrainStatistics& metadata_stats,
    std::span<const SelectionResult> selections,
    const SpanPopularityIndex& index, int64_t min_seen,
    std::span<const Role> roles = std::span<const Role>(kAllRoles));

// Examples containing one of the k highest-PMI tokens for a gold class.
SliceDefinition TopPmiSlice(const Dataset& test, const TrainStatistics& stats,
                            size_t k);

// Micro P/R/F1 over label decisions plus mean entropy of the scores.
// Throws ValidationError when a member lacks a prediction.
SliceMetrics ScoreSlice(const SliceDefinition& slice,
                        const PredictionMap& predictions, const Dataset& gold);

SliceReport MakeSliceReport(const PredictionMap& predictions,
                            const Dataset& gold,
                            std::span<const SliceDefinition> slices);

// Pools the raw counts of disjoint slices and recomputes the metrics.
SliceMetrics CombineSlices(std::span<const SliceMetrics> parts,
                           const std::string& name);

std::string SliceReportJson(const SliceReport& report);
std::string SliceReportTable(const SliceReport& report);

// JSONL {"id", "predicted": [label], "scores": {label: prob}}.
PredictionMap ReadPredictions(std::istream& in, const LabelVocabulary& vocab,
                              const std::string& source = "<input>");
PredictionMap LoadPredictions(const std::string& path,
                              const LabelVocabulary& vocab);
void WritePredictions(const PredictionMap& predictions,
                      const std::vector<std::string>& order,
                      const LabelVocabulary& vocab, std::ostream& out);

}  // namespace metashape

#endif  // METASHAPE_SLICING_H_
