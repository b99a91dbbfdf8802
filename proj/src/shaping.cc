#include "metashape/shaping.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "metashape/error.h"
#include "metashape/util/kvconfig.h"
#include "metashape/util/parallel.h"
#include "metashape/util/random.h"
#include "metashape/util/utf8.h"

namespace metashape {

std::string_view SegmentKindName(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::kStructureOpen: return "structure_open";
    case SegmentKind::kStructureClose: return "structure_close";
    case SegmentKind::kMetadata: return "metadata";
  }
  return "metadata";
}

void ShapingConfig::Validate() const {
  if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) {
    throw ValidationError("mask_rate must lie in [0, 1]");
  }
  if (boundary_token.empty()) {
    throw ValidationError("boundary_token must be non-empty");
  }
  if (mask_mode == MaskMode::kPlaceholder && placeholder_token.empty()) {
    throw ValidationError("placeholder_token must be non-empty");
  }
  if (structure) {
    for (const auto& m : structure_markers) {
      if (m.open.empty() || m.close.empty()) {
        throw ValidationError("structure markers must be non-empty");
      }
    }
  }
}

namespace {

MarkerPair ParseMarkers(std::string_view key, std::string_view value) {
  std::istringstream in{std::string(value)};
  MarkerPair pair;
  std::string extra;
  if (!(in >> pair.open >> pair.close) || (in >> extra)) {
    throw ValidationError("config key '" + std::string(key) +
                          "' expects 'OPEN CLOSE', got '" + std::string(value) +
                          "'");
  }
  return pair;
}

}  // namespace

void SetShapingOption(ShapingConfig* config, std::string_view key,
                      std::string_view value) {
  if (key == "budget_n") {
    config->budget_n = ParseConfigUnsigned(key, value);
  } else if (key == "token_cap") {
    config->token_cap = ParseConfigUnsigned(key, value);
  } else if (key == "placement") {
    if (value == "after_span") {
      config->placement = Placement::kAfterSpan;
    } else if (value == "end_of_example") {
      config->placement = Placement::kEndOfExample;
    } else {
      throw ValidationError("placement must be after_span or end_of_example");
    }
  } else if (key == "boundary_token") {
    config->boundary_token = std::string(value);
  } else if (key == "structure_markers") {
    if (value == "none") {
      config->structure = false;
    } else {
      config->structure = true;
      config->structure_markers.fill(ParseMarkers(key, value));
    }
  } else if (key.starts_with("structure_markers.")) {
    auto role = ParseRole(key.substr(std::string_view("structure_markers.").size()));
    if (!role) throw ValidationError("unknown role in '" + std::string(key) + "'");
    config->structure_markers[static_cast<size_t>(*role)] = ParseMarkers(key, value);
  } else if (key == "mask_rate") {
    config->mask_rate = ParseConfigDouble(key, value);
  } else if (key == "mask_mode") {
    if (value == "delete") {
      config->mask_mode = MaskMode::kDelete;
    } else if (value == "placeholder") {
      config->mask_mode = MaskMode::kPlaceholder;
    } else {
      throw ValidationError("mask_mode must be delete or placeholder");
    }
  } else if (key == "placeholder_token") {
    config->placeholder_token = std::string(value);
  } else if (key == "seed") {
    config->seed = ParseConfigUnsigned(key, value);
  } else if (key == "fold_case") {
    config->fold_case = ParseConfigBool(key, value);
  } else {
    throw ValidationError("unknown shaping config key '" + std::string(key) + "'");
  }
}

ShapingConfig ReadShapingConfig(std::istream& in, const std::string& source) {
  ShapingConfig config;
  ReadKeyValues(in, source, [&](std::string_view key, std::string_view value) {
    SetShapingOption(&config, key, value);
  });
  config.Validate();
  return config;
}

ShapingConfig LoadShapingConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  return ReadShapingConfig(in, path);
}

std::map<std::string, std::string> ShapingConfigValues(const ShapingConfig& c) {
  std::map<std::string, std::string> v;
  v["budget_n"] = std::to_string(c.budget_n);
  v["token_cap"] = std::to_string(c.token_cap);
  v["placement"] = c.placement == Placement::kAfterSpan ? "after_span"
                                                        : "end_of_example";
  v["boundary_token"] = c.boundary_token;
  if (!c.structure) {
    v["structure_markers"] = "none";
  } else {
    for (Role r : kAllRoles) {
      v["structure_markers." + std::string(RoleName(r))] =
          c.markers(r).open + " " + c.markers(r).close;
    }
  }
  v["mask_rate"] = FormatDouble(c.mask_rate);
  v["mask_mode"] = c.mask_mode == MaskMode::kDelete ? "delete" : "placeholder";
  v["placeholder_token"] = c.placeholder_token;
  v["seed"] = std::to_string(c.seed);
  v["fold_case"] = c.fold_case ? "true" : "false";
  return v;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::vector<std::string> SplitWhitespace(const std::string& text) {
  std::vector<std::string> words;
  std::string current;
  for (char32_t c : utf8::Decode(text)) {
    if (utf8::IsWhitespace(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      utf8::Append(&current, c);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

void Render(ShapedExample* s, const ShapingConfig& config) {
  s->shaped_text.clear();
  s->inserted.clear();
  s->segments.clear();
  size_t pos = 0;  // in scalars
  auto append = [&](std::string_view t) {
    s->shaped_text.append(t);
    pos += utf8::ScalarLength(t);
  };
  for (const LayoutPiece& piece : s->layout) {
    switch (piece.kind) {
      case LayoutPiece::Kind::kText:
        append(piece.text);
        break;
      case LayoutPiece::Kind::kOpen: {
        const size_t start = pos;
        append(piece.text);
        append(" ");
        s->segments.push_back({SegmentKind::kStructureOpen, piece.mention, start, pos});
        break;
      }
      case LayoutPiece::Kind::kClose: {
        const size_t start = pos;
        append(" ");
        append(piece.text);
        s->segments.push_back({SegmentKind::kStructureClose, piece.mention, start, pos});
        break;
      }
      case LayoutPiece::Kind::kGroup: {
        const bool deleting = config.mask_mode == MaskMode::kDelete;
        const bool any_visible = std::any_of(
            piece.tokens.begin(), piece.tokens.end(),
            [&](const LayoutToken& t) { return !(t.masked && deleting); });
        const size_t start = pos;
        if (any_visible) {
          append(" ");
          append(config.boundary_token);
        }
        for (const LayoutToken& t : piece.tokens) {
          InsertedToken audit{piece.mention, t.unit, t.source, t.unit_text,
                              t.text, pos, pos, t.masked};
          if (!(t.masked && deleting)) {
            append(" ");
            audit.start = pos;
            append(t.masked ? config.placeholder_token : t.text);
            audit.end = pos;
          }
          s->inserted.push_back(std::move(audit));
        }
        if (any_visible) {
          append(" ");
          append(config.boundary_token);
          s->segments.push_back({SegmentKind::kMetadata, piece.mention, start, pos});
        }
        break;
      }
    }
  }
}

struct Event {
  size_t pos;
  int order;  // 0 = close (and its group), 1 = open
  size_t span_len;
  size_t mention;
};

}  // namespace

ShapedExample ShapeExample(const Example& example,
                           const SelectionResult& selection,
                           const ShapingConfig& config) {
  if (selection.example_id != example.id) {
    throw ValidationError("selection for '" + selection.example_id +
                          "' applied to example '" + example.id + "'");
  }
  const size_t num_mentions = example.mentions.size();
  std::vector<std::vector<LayoutToken>> groups(num_mentions);
  for (const auto& ms : selection.mentions) {
    if (ms.mention_index >= num_mentions) {
      throw ValidationError("selection for '" + example.id +
                            "' references mention " +
                            std::to_string(ms.mention_index) + " but the example has " +
                            std::to_string(num_mentions));
    }
    auto& group = groups[ms.mention_index];
    size_t units = 0;
    for (size_t u = 0; u < ms.units.size() && units < config.budget_n; ++u) {
      const auto words = SplitWhitespace(ms.units[u].text);
      if (words.empty()) continue;
      if (config.token_cap > 0 && group.size() + words.size() > config.token_cap) {
        break;
      }
      for (const auto& w : words) {
        group.push_back({units, ms.units[u].source, ms.units[u].text, w, false});
      }
      ++units;
    }
  }

  ShapedExample shaped;
  shaped.id = example.id;
  shaped.original_text = example.text;
  shaped.labels = example.labels;

  const std::vector<size_t> offsets = utf8::ScalarOffsets(example.text);
  std::vector<Event> events;
  for (size_t i = 0; i < num_mentions; ++i) {
    const auto& m = example.mentions[i];
    const size_t len = m.end - m.start;
    events.push_back({m.end, 0, len, i});
    if (config.structure) events.push_back({m.start, 1, len, i});
  }
  // Closes before opens at one position; inner spans close first and outer
  // spans open first.
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.pos != b.pos) return a.pos < b.pos;
    if (a.order != b.order) return a.order < b.order;
    if (a.span_len != b.span_len) {
      return a.order == 0 ? a.span_len < b.span_len : a.span_len > b.span_len;
    }
    return a.order == 0 ? a.mention > b.mention : a.mention < b.mention;
  });

  size_t cursor = 0;
  auto emit_text = [&](size_t upto) {
    if (upto > cursor) {
      shaped.layout.push_back({LayoutPiece::Kind::kText, 0,
                               example.text.substr(offsets[cursor],
                                                   offsets[upto] - offsets[cursor]),
                               {}});
      cursor = upto;
    }
  };
  for (const Event& e : events) {
    emit_text(e.pos);
    const Role role = example.mentions[e.mention].role;
    if (e.order == 1) {
      shaped.layout.push_back(
          {LayoutPiece::Kind::kOpen, e.mention, config.markers(role).open, {}});
      continue;
    }
    if (config.structure) {
      shaped.layout.push_back(
          {LayoutPiece::Kind::kClose, e.mention, config.markers(role).close, {}});
    }
    if (config.placement == Placement::kAfterSpan && !groups[e.mention].empty()) {
      shaped.layout.push_back(
          {LayoutPiece::Kind::kGroup, e.mention, {}, groups[e.mention]});
    }
  }
  emit_text(offsets.size() - 1);
  if (config.placement == Placement::kEndOfExample) {
    for (size_t i = 0; i < num_mentions; ++i) {
      if (groups[i].empty()) continue;
      shaped.layout.push_back({LayoutPiece::Kind::kGroup, i, {}, groups[i]});
    }
  }
  Render(&shaped, config);
  return shaped;
}

ShapedExample BlankNoise(const ShapedExample& shaped,
                         const ShapingConfig& config, uint64_t seed) {
  ShapedExample out = shaped;
  if (out.layout.empty()) {
    throw ValidationError("blank noising needs the rendering layout of '" +
                          shaped.id + "'");
  }
  if (config.mask_rate <= 0.0) return out;
  for (LayoutPiece& piece : out.layout) {
    if (piece.kind != LayoutPiece::Kind::kGroup) continue;
    for (size_t t = 0; t < piece.tokens.size(); ++t) {
      Rng rng(MixSeed(seed, std::string_view(out.id),
                      static_cast<uint64_t>(piece.mention),
                      static_cast<uint64_t>(t)));
      if (rng.Bernoulli(config.mask_rate)) piece.tokens[t].masked = true;
    }
  }
  Render(&out, config);
  return out;
}

std::string StripInsertions(const ShapedExample& shaped) {
  const std::vector<size_t> offsets = utf8::ScalarOffsets(shaped.shaped_text);
  std::vector<Segment> segs = shaped.segments;
  std::sort(segs.begin(), segs.end(),
            [](const Segment& a, const Segment& b) { return a.start < b.start; });
  std::string out;
  size_t cursor = 0;
  for (const Segment& s : segs) {
    if (s.start < cursor || s.end > offsets.size() - 1 || s.start > s.end) {
      throw ValidationError("inconsistent segment audit for '" + shaped.id + "'");
    }
    out.append(shaped.shaped_text, offsets[cursor], offsets[s.start] - offsets[cursor]);
    cursor = s.end;
  }
  out.append(shaped.shaped_text, offsets[cursor],
             offsets.back() - offsets[cursor]);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset level

ShapedDataset ShapeWithSelections(const Dataset& dataset,
                                  const std::vector<SelectionResult>& selections,
                                  const ShapingConfig& config, int threads) {
  config.Validate();
  if (selections.size() != dataset.examples.size()) {
    throw ValidationError("selection count does not match the dataset");
  }
  ShapedDataset out;
  out.examples.resize(dataset.examples.size());
  ParallelFor(out.examples.size(), threads, [&](size_t i) {
    const Example& ex = dataset.examples[i];
    try {
      ShapedExample shaped = ShapeExample(ex, selections[i], config);
      if (config.mask_rate > 0.0) shaped = BlankNoise(shaped, config, config.seed);
      out.examples[i] = std::move(shaped);
    } catch (const ValidationError& e) {
      throw ValidationError("example '" + ex.id + "': " + e.what());
    }
  });

  ShapingReport& report = out.report;
  report.examples = static_cast<int64_t>(dataset.examples.size());
  for (size_t i = 0; i < dataset.examples.size(); ++i) {
    const Example& ex = dataset.examples[i];
    const ShapedExample& shaped = out.examples[i];
    bool has_cat[3] = {false, false, false};
    bool has_desc[3] = {false, false, false};
    std::vector<size_t> units(ex.mentions.size(), 0);
    std::vector<std::vector<bool>> seen_unit(ex.mentions.size());
    for (const auto& t : shaped.inserted) {
      const size_t r = static_cast<size_t>(ex.mentions[t.mention].role);
      if (t.source == UnitSource::kCategory) has_cat[r] = true;
      if (t.source == UnitSource::kDescription) has_desc[r] = true;
      auto& seen = seen_unit[t.mention];
      if (seen.size() <= t.unit) seen.resize(t.unit + 1, false);
      if (!seen[t.unit]) {
        seen[t.unit] = true;
        ++units[t.mention];
      }
      ++report.inserted_tokens;
      if (t.masked) ++report.masked_tokens;
    }
    for (size_t m = 0; m < ex.mentions.size(); ++m) {
      ++report.roles[static_cast<size_t>(ex.mentions[m].role)].mentions;
      ++report.units_per_mention[units[m]];
    }
    for (size_t r = 0; r < 3; ++r) {
      report.roles[r].with_category += has_cat[r];
      report.roles[r].with_description += has_desc[r];
    }
  }
  return out;
}

ShapedDataset ShapeDataset(const Dataset& dataset,
                           const MetadataCatalog& catalog,
                           const TrainStatistics& stats,
                           const SelectionStrategy& strategy,
                           const ShapingConfig& config, int threads) {
  const auto selections =
      SelectDataset(dataset, catalog, stats, strategy, config.budget_n, threads);
  return ShapeWithSelections(dataset, selections, config, threads);
}

// ---------------------------------------------------------------------------
// Serialization

std::string SerializeShaped(const Example& example, const ShapedExample& shaped,
                            const LabelVocabulary& vocab) {
  auto record = nlohmann::ordered_json::parse(SerializeExample(example, vocab));
  record["shaped_text"] = shaped.shaped_text;
  nlohmann::ordered_json inserted = nlohmann::ordered_json::array();
  for (const auto& t : shaped.inserted) {
    nlohmann::ordered_json j;
    j["mention"] = t.mention;
    j["unit"] = t.unit;
    j["source"] = UnitSourceName(t.source);
    j["unit_text"] = t.unit_text;
    j["text"] = t.text;
    j["start"] = t.start;
    j["end"] = t.end;
    j["masked"] = t.masked;
    inserted.push_back(std::move(j));
  }
  record["inserted"] = std::move(inserted);
  nlohmann::ordered_json segments = nlohmann::ordered_json::array();
  for (const auto& s : shaped.segments) {
    nlohmann::ordered_json j;
    j["kind"] = SegmentKindName(s.kind);
    j["mention"] = s.mention;
    j["start"] = s.start;
    j["end"] = s.end;
    segments.push_back(std::move(j));
  }
  record["segments"] = std::move(segments);
  return record.dump();
}

void WriteShapedDataset(const Dataset& dataset, const ShapedDataset& shaped,
                        std::ostream& out) {
  for (size_t i = 0; i < dataset.examples.size(); ++i) {
    out << SerializeShaped(dataset.examples[i], shaped.examples[i],
                           dataset.label_vocab)
        << '\n';
  }
}

std::string ReportToJson(const ShapingReport& report) {
  nlohmann::ordered_json j;
  j["examples"] = report.examples;
  nlohmann::ordered_json roles;
  for (Role r : kAllRoles) {
    const auto& c = report.roles[static_cast<size_t>(r)];
    if (c.mentions == 0) continue;
    nlohmann::ordered_json jr;
    jr["mentions"] = c.mentions;
    jr["examples_with_category"] = c.with_category;
    jr["examples_with_description"] = c.with_description;
    roles[std::string(RoleName(r))] = std::move(jr);
  }
  j["roles"] = roles.is_null() ? nlohmann::ordered_json::object() : roles;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [units, count] : report.units_per_mention) {
    hist[std::to_string(units)] = count;
  }
  j["units_per_mention"] = std::move(hist);
  j["inserted_tokens"] = report.inserted_tokens;
  j["masked_tokens"] = report.masked_tokens;
  return j.dump(1);
}

namespace {

std::optional<UnitSource> UnitSourceFromName(std::string_view name) {
  for (auto s : {UnitSource::kCategory, UnitSource::kDescription,
                 UnitSource::kNoise}) {
    if (UnitSourceName(s) == name) return s;
  }
  return std::nullopt;
}

std::optional<SegmentKind> SegmentKindFromName(std::string_view name) {
  for (auto k : {SegmentKind::kStructureOpen, SegmentKind::kStructureClose,
                 SegmentKind::kMetadata}) {
    if (SegmentKindName(k) == name) return k;
  }
  return std::nullopt;
}

}  // namespace

ShapedFile ReadShapedFile(std::istream& in, const LoadOptions& options,
                          const std::string& source) {
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  ShapedFile file;
  {
    std::istringstream again(content);
    file.dataset = ReadDataset(again, options, source);
  }
  std::istringstream lines(content);
  std::string line;
  size_t lineno = 0;
  size_t index = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Example& ex = file.dataset.examples.at(index++);
    ShapedExample s;
    s.id = ex.id;
    s.original_text = ex.text;
    s.labels = ex.labels;
    try {
      const auto j = nlohmann::json::parse(line);
      auto st = j.find("shaped_text");
      if (st == j.end()) {
        s.shaped_text = ex.text;
      } else {
        s.shaped_text = st->get<std::string>();
        for (const auto& jt : j.value("inserted", nlohmann::json::array())) {
          InsertedToken t;
          t.mention = jt.at("mention").get<size_t>();
          t.unit = jt.at("unit").get<size_t>();
          auto src = UnitSourceFromName(jt.at("source").get<std::string>());
          if (!src) throw RecordError(source, lineno, "inserted.source", "unknown");
          t.source = *src;
          t.unit_text = jt.at("unit_text").get<std::string>();
          t.text = jt.at("text").get<std::string>();
          t.start = jt.at("start").get<size_t>();
          t.end = jt.at("end").get<size_t>();
          t.masked = jt.at("masked").get<bool>();
          s.inserted.push_back(std::move(t));
        }
        for (const auto& js : j.value("segments", nlohmann::json::array())) {
          Segment seg;
          auto kind = SegmentKindFromName(js.at("kind").get<std::string>());
          if (!kind) throw RecordError(source, lineno, "segments.kind", "unknown");
          seg.kind = *kind;
          seg.mention = js.at("mention").get<size_t>();
          seg.start = js.at("start").get<size_t>();
          seg.end = js.at("end").get<size_t>();
          s.segments.push_back(seg);
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw RecordError(source, lineno, "shaped_text", e.what());
    }
    file.shaped.push_back(std::move(s));
  }
  return file;
}

ShapedFile LoadShapedFile(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset file '" + path + "'");
  return ReadShapedFile(in, options, path);
}

}  // namespace metashape
