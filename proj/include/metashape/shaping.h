#ifndef METASHAPE_SHAPING_H_
#define METASHAPE_SHAPING_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metashape/catalog.h"
#include "metashape/corpus.h"
#include "metashape/selection.h"
#include "metashape/stats.h"

namespace metashape {

enum class Placement { kAfterSpan, kEndOfExample };
enum class MaskMode { kDelete, kPlaceholder };

// Rate used when blank noising is switched on without an explicit rate.
inline constexpr double kDefaultMaskRate = 0.10;

struct MarkerPair {
  std::string open = "[ENTITY]";
  std::string close = "[/ENTITY]";
};

struct ShapingConfig {
  size_t budget_n = 1;   // metadata units per mention
  size_t token_cap = 0;  // whitespace tokens per mention insertion; 0 = none
  Placement placement = Placement::kAfterSpan;
  std::string boundary_token = "#";
  bool structure = true;
  std::array<MarkerPair, 3> structure_markers;  // indexed by Role
  double mask_rate = 0.0;
  MaskMode mask_mode = MaskMode::kDelete;
  std::string placeholder_token = "[MASK]";
  uint64_t seed = 0;
  bool fold_case = true;

  const MarkerPair& markers(Role role) const {
    return structure_markers[static_cast<size_t>(role)];
  }

  // Throws ValidationError when an invariant is violated.
  void Validate() const;
};

// Flat "key = value" config. Keys are the ShapingConfig field names;
// structure markers are "structure_markers = OPEN CLOSE" (all roles),
// "structure_markers.<role> = OPEN CLOSE", or "structure_markers = none".
// Lines whose first non-blank character is '#' are comments.
void SetShapingOption(ShapingConfig* config, std::string_view key,
                      std::string_view value);
ShapingConfig ReadShapingConfig(std::istream& in,
                                const std::string& source = "<input>");
ShapingConfig LoadShapingConfig(const std::string& path);
std::map<std::string, std::string> ShapingConfigValues(const ShapingConfig& config);

// One inserted metadata content token. Offsets are Unicode scalar indices
// into shaped_text; a deleted token has start == end.
struct InsertedToken {
  size_t mention = 0;
  size_t unit = 0;
  UnitSource source = UnitSource::kCategory;
  std::string unit_text;
  std::string text;
  size_t start = 0;
  size_t end = 0;
  bool masked = false;

  bool operator==(const InsertedToken&) const = default;
};

enum class SegmentKind { kStructureOpen, kStructureClose, kMetadata };

std::string_view SegmentKindName(SegmentKind kind);

// A contiguous inserted chunk of shaped_text (markers, boundaries and the
// separating spaces included). Removing every segment yields the original.
struct Segment {
  SegmentKind kind = SegmentKind::kMetadata;
  size_t mention = 0;
  size_t start = 0;
  size_t end = 0;

  bool operator==(const Segment&) const = default;
};

// Rendering plan kept so noising can re-render without re-parsing text.
struct LayoutToken {
  size_t unit = 0;
  UnitSource source = UnitSource::kCategory;
  std::string unit_text;
  std::string text;
  bool masked = false;
};

struct LayoutPiece {
  enum class Kind { kText, kOpen, kClose, kGroup } kind = Kind::kText;
  size_t mention = 0;
  std::string text;                 // kText, kOpen, kClose
  std::vector<LayoutToken> tokens;  // kGroup
};

struct ShapedExample {
  std::string id;
  std::string original_text;
  std::string shaped_text;
  std::vector<LabelId> labels;
  std::vector<InsertedToken> inserted;
  std::vector<Segment> segments;
  std::vector<LayoutPiece> layout;  // empty when read back from a file
};

// Throws ValidationError when the selection names a mention the example
// does not have.
ShapedExample ShapeExample(const Example& example,
                           const SelectionResult& selection,
                           const ShapingConfig& config);

// Masks each inserted content token independently with probability
// config.mask_rate. The draw for a token depends only on (seed, example id,
// mention index, token index). Groups left without tokens are dropped.
ShapedExample BlankNoise(const ShapedExample& shaped,
                         const ShapingConfig& config, uint64_t seed);

// Removes every audited segment from shaped_text.
std::string StripInsertions(const ShapedExample& shaped);

struct RoleTagCounts {
  int64_t mentions = 0;
  int64_t with_category = 0;     // examples with >= 1 category for the role
  int64_t with_description = 0;  // examples with >= 1 description token
};

struct ShapingReport {
  int64_t examples = 0;
  std::array<RoleTagCounts, 3> roles;
  std::map<size_t, int64_t> units_per_mention;  // histogram over mentions
  int64_t inserted_tokens = 0;
  int64_t masked_tokens = 0;
};

struct ShapedDataset {
  std::vector<ShapedExample> examples;
  ShapingReport report;
};

// Selects (strategy, config.budget_n), shapes, and blank-noises when
// config.mask_rate > 0. Output does not depend on `threads`.
ShapedDataset ShapeDataset(const Dataset& dataset,
                           const MetadataCatalog& catalog,
                           const TrainStatistics& stats,
                           const SelectionStrategy& strategy,
                           const ShapingConfig& config, int threads = 1);

// Shapes with precomputed selections (one per example, same order).
ShapedDataset ShapeWithSelections(const Dataset& dataset,
                                  const std::vector<SelectionResult>& selections,
                                  const ShapingConfig& config, int threads = 1);

std::string SerializeShaped(const Example& example, const ShapedExample& shaped,
                            const LabelVocabulary& vocab);
void WriteShapedDataset(const Dataset& dataset, const ShapedDataset& shaped,
                        std::ostream& out);
std::string ReportToJson(const ShapingReport& report);

// Reads shaped JSONL: the original dataset plus shaped text and audit.
// Plain dataset files are accepted too; their shaped_text is the text.
struct ShapedFile {
  Dataset dataset;
  std::vector<ShapedExample> shaped;
};
ShapedFile ReadShapedFile(std::istream& in, const LoadOptions& options,
                          const std::string& source = "<input>");
ShapedFile LoadShapedFile(const std::string& path, const LoadOptions& options);

}  // namespace metashape

#endif  // METASHAPE_SHAPING_H_
