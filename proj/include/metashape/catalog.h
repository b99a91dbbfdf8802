#ifndef METASHAPE_CATALOG_H_
#define METASHAPE_CATALOG_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metashape/corpus.h"

namespace metashape {

// Descriptions are cut to this many whitespace tokens on load.
inline constexpr size_t kMaxDescriptionWords = 50;

struct MetadataRecord {
  std::string entity_id;
  std::vector<std::string> categories;  // file order, no duplicates
  std::optional<std::string> description;

  bool operator==(const MetadataRecord&) const = default;
};

struct MentionMetadata {
  std::vector<std::string> categories;
  std::optional<std::string> description;

  bool empty() const { return categories.empty() && !description; }
  bool operator==(const MentionMetadata&) const = default;
};

class MetadataCatalog {
 public:
  // Merges into an existing record: categories are list-unioned in order,
  // a non-null description replaces the previous one.
  void Add(MetadataRecord record);

  const MetadataRecord* Find(const std::string& entity_id) const;
  const std::map<std::string, MetadataRecord>& records() const {
    return records_;
  }
  const std::set<std::string>& category_universe() const { return universe_; }
  size_t size() const { return records_.size(); }

 private:
  std::map<std::string, MetadataRecord> records_;
  std::set<std::string> universe_;
};

MetadataCatalog ReadCatalog(std::istream& in,
                            const std::string& source = "<input>");
MetadataCatalog LoadCatalog(const std::string& path);
void WriteCatalog(const MetadataCatalog& catalog, std::ostream& out);

// Keeps at most `max_words` whitespace tokens, preserving the original text
// up to the end of the last kept token.
std::string TruncateWords(const std::string& text, size_t max_words);

// One entry per mention, in mention order. Unlinked mentions and entity ids
// missing from the catalog yield empty metadata.
std::vector<MentionMetadata> MetadataFor(const Example& example,
                                         const MetadataCatalog& catalog);

}  // namespace metashape

#endif  // METASHAPE_CATALOG_H_
