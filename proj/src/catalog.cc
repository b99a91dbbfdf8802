#include "metashape/catalog.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "metashape/error.h"
#include "metashape/util/utf8.h"

namespace metashape {

using json = nlohmann::json;

namespace {

std::string Trim(const std::string& s) {
  const std::u32string scalars = utf8::Decode(s);
  size_t b = 0, e = scalars.size();
  while (b < e && utf8::IsWhitespace(scalars[b])) ++b;
  while (e > b && utf8::IsWhitespace(scalars[e - 1])) --e;
  return utf8::Encode(scalars.substr(b, e - b));
}

}  // namespace

void MetadataCatalog::Add(MetadataRecord record) {
  auto [it, inserted] = records_.try_emplace(record.entity_id);
  MetadataRecord& dst = it->second;
  if (inserted) dst.entity_id = record.entity_id;
  for (auto& c : record.categories) {
    if (std::find(dst.categories.begin(), dst.categories.end(), c) ==
        dst.categories.end()) {
      universe_.insert(c);
      dst.categories.push_back(std::move(c));
    }
  }
  if (record.description) dst.description = std::move(record.description);
}

const MetadataRecord* MetadataCatalog::Find(const std::string& entity_id) const {
  auto it = records_.find(entity_id);
  return it == records_.end() ? nullptr : &it->second;
}

std::string TruncateWords(const std::string& text, size_t max_words) {
  const std::u32string scalars = utf8::Decode(text);
  size_t words = 0;
  size_t last_end = 0;
  size_t i = 0;
  while (i < scalars.size()) {
    while (i < scalars.size() && utf8::IsWhitespace(scalars[i])) ++i;
    if (i == scalars.size()) break;
    if (words == max_words) return utf8::Encode(scalars.substr(0, last_end));
    while (i < scalars.size() && !utf8::IsWhitespace(scalars[i])) ++i;
    last_end = i;
    ++words;
  }
  return text;
}

MetadataCatalog ReadCatalog(std::istream& in, const std::string& source) {
  MetadataCatalog catalog;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(),
                    [](char c) { return c == ' ' || c == '\t' || c == '\r'; })) {
      continue;
    }
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw RecordError(source, lineno, "<record>",
                        std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) {
      throw RecordError(source, lineno, "<record>", "expected a JSON object");
    }
    MetadataRecord rec;
    auto id = record.find("entity_id");
    if (id == record.end() || !id->is_string()) {
      throw RecordError(source, lineno, "entity_id", "expected a string");
    }
    rec.entity_id = id->get<std::string>();
    if (Trim(rec.entity_id).empty()) {
      throw RecordError(source, lineno, "entity_id", "empty entity id");
    }
    auto cats = record.find("categories");
    if (cats != record.end() && !cats->is_null()) {
      if (!cats->is_array()) {
        throw RecordError(source, lineno, "categories", "expected an array");
      }
      for (size_t i = 0; i < cats->size(); ++i) {
        const std::string field = "categories[" + std::to_string(i) + "]";
        if (!(*cats)[i].is_string()) {
          throw RecordError(source, lineno, field, "expected a string");
        }
        std::string c;
        try {
          c = Trim((*cats)[i].get<std::string>());
        } catch (const std::invalid_argument& e) {
          throw RecordError(source, lineno, field, e.what());
        }
        if (c.empty()) {
          throw RecordError(source, lineno, field, "empty category");
        }
        if (std::find(rec.categories.begin(), rec.categories.end(), c) ==
            rec.categories.end()) {
          rec.categories.push_back(std::move(c));
        }
      }
    }
    auto desc = record.find("description");
    if (desc != record.end() && !desc->is_null()) {
      if (!desc->is_string()) {
        throw RecordError(source, lineno, "description",
                          "expected a string or null");
      }
      try {
        rec.description = TruncateWords(desc->get<std::string>(),
                                        kMaxDescriptionWords);
      } catch (const std::invalid_argument& e) {
        throw RecordError(source, lineno, "description", e.what());
      }
    }
    catalog.Add(std::move(rec));
  }
  return catalog;
}

MetadataCatalog LoadCatalog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open catalog file '" + path + "'");
  return ReadCatalog(in, path);
}

void WriteCatalog(const MetadataCatalog& catalog, std::ostream& out) {
  for (const auto& [id, rec] : catalog.records()) {
    nlohmann::ordered_json j;
    j["entity_id"] = rec.entity_id;
    j["categories"] = rec.categories;
    j["description"] =
        rec.description ? nlohmann::ordered_json(*rec.description) : nullptr;
    out << j.dump() << '\n';
  }
}

std::vector<MentionMetadata> MetadataFor(const Example& example,
                                         const MetadataCatalog& catalog) {
  std::vector<MentionMetadata> out(example.mentions.size());
  for (size_t i = 0; i < example.mentions.size(); ++i) {
    const auto& m = example.mentions[i];
    if (!m.entity_id) continue;
    const MetadataRecord* rec = catalog.Find(*m.entity_id);
    if (rec == nullptr) continue;
    out[i].categories = rec->categories;
    out[i].description = rec->description;
  }
  return out;
}

}  // namespace metashape
