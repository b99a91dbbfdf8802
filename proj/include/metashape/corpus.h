#ifndef METASHAPE_CORPUS_H_
#define METASHAPE_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace metashape {

enum class Role { kSubject, kObject, kMain };
inline constexpr Role kAllRoles[] = {Role::kSubject, Role::kObject, Role::kMain};

std::string_view RoleName(Role role);
std::optional<Role> ParseRole(std::string_view name);

enum class Split { kTrain, kValid, kTest };
enum class TaskKind { kSingleLabel, kMultiLabel };

std::string_view SplitName(Split split);
std::optional<TaskKind> ParseTaskKind(std::string_view name);

using LabelId = int;

// A linked or unlinked entity span. Offsets are half-open Unicode scalar
// indices into the example text.
struct EntityMention {
  Role role = Role::kMain;
  size_t start = 0;
  size_t end = 0;
  std::string surface;
  std::optional<std::string> entity_id;

  bool operator==(const EntityMention&) const = default;
};

struct Example {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  std::vector<LabelId> labels;  // sorted, unique, non-empty
  std::vector<EntityMention> mentions;

  bool operator==(const Example&) const = default;
};

// Dense label ids 0..size()-1 with display names. At least two labels.
class LabelVocabulary {
 public:
  LabelVocabulary() = default;
  explicit LabelVocabulary(std::vector<std::string> names);

  size_t size() const { return names_.size(); }
  const std::string& name(LabelId id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<LabelId> Find(std::string_view name) const;

  bool operator==(const LabelVocabulary& other) const {
    return names_ == other.names_;
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, LabelId, std::less<>> index_;
};

struct Dataset {
  Split split = Split::kTrain;
  TaskKind task_kind = TaskKind::kSingleLabel;
  LabelVocabulary label_vocab;
  std::vector<Example> examples;
};

// Splits on Unicode whitespace, then peels leading and trailing punctuation
// off each chunk, one token per punctuation character.
std::vector<std::string> Tokenize(std::string_view text, bool fold_case = true);

struct LoadOptions {
  TaskKind task_kind = TaskKind::kSingleLabel;
  Split split = Split::kTrain;
  // When unset, the vocabulary is the sorted set of labels in the file.
  const LabelVocabulary* vocab = nullptr;
  bool fold_case = true;
};

// Parses one JSONL record. `source` and `line` only feed error messages.
Example ParseExample(std::string_view json_line, const LabelVocabulary& vocab,
                     TaskKind task_kind, bool fold_case,
                     const std::string& source = "<input>", size_t line = 1);

// All-or-nothing load of a JSONL dataset. Throws RecordError naming the line
// and field for the first bad record.
Dataset ReadDataset(std::istream& in, const LoadOptions& options,
                    const std::string& source = "<input>");
Dataset LoadDataset(const std::string& path, const LoadOptions& options);

// Sorted unique label strings appearing in a dataset file.
std::vector<std::string> ScanLabels(std::istream& in,
                                    const std::string& source = "<input>");
std::vector<std::string> ScanLabels(const std::string& path);

// Canonical single-line JSON (keys: id, text, labels, spans).
std::string SerializeExample(const Example& example,
                             const LabelVocabulary& vocab);
void WriteDataset(const Dataset& dataset, std::ostream& out);

// Training-split occurrence counts of normalized mention surfaces per role.
class SpanPopularityIndex {
 public:
  void Add(Role role, std::string_view surface, int64_t count = 1);
  int64_t Count(Role role, std::string_view surface) const;
  int64_t Total() const { return total_; }
  size_t DistinctSurfaces(Role role) const;

 private:
  std::unordered_map<std::string, int64_t> counts_[3];
  int64_t total_ = 0;
};

SpanPopularityIndex BuildPopularityIndex(const Dataset& train);

}  // namespace metashape

#endif  // METASHAPE_CORPUS_H_
