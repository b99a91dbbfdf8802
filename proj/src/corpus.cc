#include "metashape/corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "metashape/error.h"
#include "metashape/util/utf8.h"

namespace metashape {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view RoleName(Role role) {
  switch (role) {
    case Role::kSubject: return "subject";
    case Role::kObject: return "object";
    case Role::kMain: return "main";
  }
  return "main";
}

std::optional<Role> ParseRole(std::string_view name) {
  if (name == "subject") return Role::kSubject;
  if (name == "object") return Role::kObject;
  if (name == "main") return Role::kMain;
  return std::nullopt;
}

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<TaskKind> ParseTaskKind(std::string_view name) {
  if (name == "single_label" || name == "single") return TaskKind::kSingleLabel;
  if (name == "multi_label" || name == "multi") return TaskKind::kMultiLabel;
  return std::nullopt;
}

LabelVocabulary::LabelVocabulary(std::vector<std::string> names)
    : names_(std::move(names)) {
  if (names_.size() < 2) {
    throw ValidationError("label vocabulary needs at least 2 labels, got " +
                          std::to_string(names_.size()));
  }
  for (size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], static_cast<LabelId>(i)).second) {
      throw ValidationError("duplicate label '" + names_[i] + "'");
    }
  }
}

std::optional<LabelId> LabelVocabulary::Find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Tokenize(std::string_view text, bool fold_case) {
  std::vector<std::string> tokens;
  const std::u32string scalars = utf8::Decode(text);
  size_t i = 0;
  const size_t n = scalars.size();
  auto emit = [&](size_t begin, size_t end) {
    std::string token;
    for (size_t k = begin; k < end; ++k) {
      utf8::Append(&token, fold_case ? utf8::FoldCase(scalars[k]) : scalars[k]);
    }
    tokens.push_back(std::move(token));
  };
  while (i < n) {
    while (i < n && utf8::IsWhitespace(scalars[i])) ++i;
    size_t begin = i;
    while (i < n && !utf8::IsWhitespace(scalars[i])) ++i;
    size_t end = i;
    if (begin == end) continue;
    size_t core_begin = begin;
    while (core_begin < end && utf8::IsPunctuation(scalars[core_begin])) {
      ++core_begin;
    }
    size_t core_end = end;
    while (core_end > core_begin && utf8::IsPunctuation(scalars[core_end - 1])) {
      --core_end;
    }
    for (size_t k = begin; k < core_begin; ++k) emit(k, k + 1);
    if (core_begin < core_end) emit(core_begin, core_end);
    for (size_t k = core_end; k < end; ++k) emit(k, k + 1);
  }
  return tokens;
}

namespace {

json ParseLine(std::string_view line, const std::string& source, size_t lineno) {
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
  return record;
}

const json& Require(const json& record, const char* field,
                    const std::string& source, size_t line) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw RecordError(source, line, field, "missing");
  }
  return *it;
}

bool IsBlank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  });
}

}  // namespace

Example ParseExample(std::string_view json_line, const LabelVocabulary& vocab,
                     TaskKind task_kind, bool fold_case,
                     const std::string& source, size_t line) {
  const json record = ParseLine(json_line, source, line);
  Example ex;

  const json& id = Require(record, "id", source, line);
  if (!id.is_string() || id.get_ref<const std::string&>().empty()) {
    throw RecordError(source, line, "id", "expected a non-empty string");
  }
  ex.id = id.get<std::string>();

  const json& text = Require(record, "text", source, line);
  if (!text.is_string()) {
    throw RecordError(source, line, "text", "expected a string");
  }
  ex.text = text.get<std::string>();
  std::vector<size_t> offsets;
  try {
    offsets = utf8::ScalarOffsets(ex.text);
  } catch (const std::invalid_argument& e) {
    throw RecordError(source, line, "text", e.what());
  }
  const size_t length = offsets.size() - 1;

  const json& labels = Require(record, "labels", source, line);
  if (!labels.is_array() || labels.empty()) {
    throw RecordError(source, line, "labels", "expected a non-empty array");
  }
  std::set<LabelId> label_set;
  for (size_t i = 0; i < labels.size(); ++i) {
    const std::string field = "labels[" + std::to_string(i) + "]";
    if (!labels[i].is_string()) {
      throw RecordError(source, line, field, "expected a string");
    }
    auto id_or = vocab.Find(labels[i].get_ref<const std::string&>());
    if (!id_or) {
      throw RecordError(source, line, field,
                        "unknown label '" + labels[i].get<std::string>() + "'");
    }
    label_set.insert(*id_or);
  }
  if (task_kind == TaskKind::kSingleLabel && label_set.size() != 1) {
    throw RecordError(source, line, "labels",
                      "single-label task requires exactly one label");
  }
  ex.labels.assign(label_set.begin(), label_set.end());

  const json& spans = Require(record, "spans", source, line);
  if (!spans.is_array()) {
    throw RecordError(source, line, "spans", "expected an array");
  }
  int role_seen[3] = {0, 0, 0};
  for (size_t i = 0; i < spans.size(); ++i) {
    const std::string prefix = "spans[" + std::to_string(i) + "]";
    const json& span = spans[i];
    if (!span.is_object()) {
      throw RecordError(source, line, prefix, "expected an object");
    }
    EntityMention m;
    const json& role = Require(span, "role", source, line);
    if (!role.is_string()) {
      throw RecordError(source, line, prefix + ".role", "expected a string");
    }
    auto role_or = ParseRole(role.get_ref<const std::string&>());
    if (!role_or) {
      throw RecordError(source, line, prefix + ".role",
                        "unknown role '" + role.get<std::string>() + "'");
    }
    m.role = *role_or;
    for (const char* key : {"start", "end"}) {
      const json& v = Require(span, key, source, line);
      if (!v.is_number_integer() || v.get<int64_t>() < 0) {
        throw RecordError(source, line, prefix + "." + key,
                          "expected a non-negative integer");
      }
    }
    const auto start = span["start"].get<int64_t>();
    const auto end = span["end"].get<int64_t>();
    if (static_cast<size_t>(end) > length) {
      throw RecordError(source, line, prefix + ".end",
                        "offset " + std::to_string(end) +
                            " out of range for text of length " +
                            std::to_string(length));
    }
    if (start >= end) {
      throw RecordError(source, line, prefix + ".start",
                        "span must satisfy start < end");
    }
    m.start = static_cast<size_t>(start);
    m.end = static_cast<size_t>(end);
    m.surface = ex.text.substr(offsets[m.start], offsets[m.end] - offsets[m.start]);
    auto eid = span.find("entity_id");
    if (eid != span.end() && !eid->is_null()) {
      if (!eid->is_string() || eid->get_ref<const std::string&>().empty()) {
        throw RecordError(source, line, prefix + ".entity_id",
                          "expected a non-empty string or null");
      }
      m.entity_id = eid->get<std::string>();
    }
    ++role_seen[static_cast<int>(m.role)];
    ex.mentions.push_back(std::move(m));
  }
  for (Role r : kAllRoles) {
    if (role_seen[static_cast<int>(r)] > 1) {
      throw RecordError(source, line, "spans",
                        "more than one '" + std::string(RoleName(r)) +
                            "' mention");
    }
  }
  if (role_seen[static_cast<int>(Role::kMain)] > 0 &&
      role_seen[static_cast<int>(Role::kSubject)] +
              role_seen[static_cast<int>(Role::kObject)] > 0) {
    throw RecordError(source, line, "spans",
                      "a 'main' mention cannot be combined with subject/object");
  }
  ex.tokens = Tokenize(ex.text, fold_case);
  return ex;
}

Dataset ReadDataset(std::istream& in, const LoadOptions& options,
                    const std::string& source) {
  Dataset ds;
  ds.split = options.split;
  ds.task_kind = options.task_kind;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);

  if (options.vocab != nullptr) {
    ds.label_vocab = *options.vocab;
  } else {
    std::set<std::string> names;
    for (size_t i = 0; i < lines.size(); ++i) {
      if (IsBlank(lines[i])) continue;
      const json record = ParseLine(lines[i], source, i + 1);
      auto it = record.find("labels");
      if (it == record.end() || !it->is_array()) continue;
      for (const auto& l : *it) {
        if (l.is_string()) names.insert(l.get<std::string>());
      }
    }
    ds.label_vocab = LabelVocabulary({names.begin(), names.end()});
  }

  std::unordered_set<std::string> ids;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (IsBlank(lines[i])) continue;
    Example ex = ParseExample(lines[i], ds.label_vocab, options.task_kind,
                              options.fold_case, source, i + 1);
    if (!ids.insert(ex.id).second) {
      throw RecordError(source, i + 1, "id", "duplicate id '" + ex.id + "'");
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

Dataset LoadDataset(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset file '" + path + "'");
  return ReadDataset(in, options, path);
}

std::vector<std::string> ScanLabels(std::istream& in, const std::string& source) {
  std::set<std::string> names;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (IsBlank(line)) continue;
    const json record = ParseLine(line, source, lineno);
    auto it = record.find("labels");
    if (it == record.end() || !it->is_array()) {
      throw RecordError(source, lineno, "labels", "expected an array");
    }
    for (const auto& l : *it) {
      if (!l.is_string()) {
        throw RecordError(source, lineno, "labels", "expected strings");
      }
      names.insert(l.get<std::string>());
    }
  }
  return {names.begin(), names.end()};
}

std::vector<std::string> ScanLabels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset file '" + path + "'");
  return ScanLabels(in, path);
}

std::string SerializeExample(const Example& example,
                             const LabelVocabulary& vocab) {
  ordered_json record;
  record["id"] = example.id;
  record["text"] = example.text;
  ordered_json labels = ordered_json::array();
  for (LabelId l : example.labels) labels.push_back(vocab.name(l));
  record["labels"] = std::move(labels);
  ordered_json spans = ordered_json::array();
  for (const auto& m : example.mentions) {
    ordered_json span;
    span["role"] = RoleName(m.role);
    span["start"] = m.start;
    span["end"] = m.end;
    span["entity_id"] = m.entity_id ? ordered_json(*m.entity_id) : ordered_json();
    spans.push_back(std::move(span));
  }
  record["spans"] = std::move(spans);
  return record.dump();
}

void WriteDataset(const Dataset& dataset, std::ostream& out) {
  for (const auto& ex : dataset.examples) {
    out << SerializeExample(ex, dataset.label_vocab) << '\n';
  }
}

void SpanPopularityIndex::Add(Role role, std::string_view surface,
                              int64_t count) {
  counts_[static_cast<int>(role)][utf8::NormalizeSurface(surface)] += count;
  total_ += count;
}

int64_t SpanPopularityIndex::Count(Role role, std::string_view surface) const {
  const auto& table = counts_[static_cast<int>(role)];
  auto it = table.find(utf8::NormalizeSurface(surface));
  return it == table.end() ? 0 : it->second;
}

size_t SpanPopularityIndex::DistinctSurfaces(Role role) const {
  return counts_[static_cast<int>(role)].size();
}

SpanPopularityIndex BuildPopularityIndex(const Dataset& train) {
  if (train.split != Split::kTrain) {
    throw ValidationError("popularity index must be built from the train split");
  }
  SpanPopularityIndex index;
  for (const auto& ex : train.examples) {
    for (const auto& m : ex.mentions) index.Add(m.role, m.surface);
  }
  return index;
}

}  // namespace metashape
