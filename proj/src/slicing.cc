#include "metashape/slicing.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "metashape/error.h"
#include "metashape/util/utf8.h"

namespace metashape {

const SliceMetrics* SliceReport::Find(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

SliceDefinition WholeSet(const Dataset& test, const std::string& name) {
  SliceDefinition s;
  s.name = name;
  for (const auto& ex : test.examples) s.member_ids.push_back(ex.id);
  s.provenance["rule"] = "all examples";
  return s;
}

namespace {

bool RoleSelected(Role role, std::span<const Role> roles) {
  return std::find(roles.begin(), roles.end(), role) != roles.end();
}

std::string RoleList(std::span<const Role> roles) {
  std::string out;
  for (Role r : roles) {
    if (!out.empty()) out += ",";
    out += RoleName(r);
  }
  return out;
}

}  // namespace

std::pair<SliceDefinition, SliceDefinition> TailHeadSplit(
    const Dataset& test, const SpanPopularityIndex& index, int64_t threshold,
    std::span<const Role> roles) {
  SliceDefinition tail, head;
  tail.name = "tail";
  head.name = "head";
  for (auto* s : {&tail, &head}) {
    s->provenance["rule"] = "any mention surface seen < threshold times";
    s->provenance["threshold"] = std::to_string(threshold);
    s->provenance["roles"] = RoleList(roles);
  }
  for (const auto& ex : test.examples) {
    bool is_tail = false;
    for (const auto& m : ex.mentions) {
      if (!RoleSelected(m.role, roles)) continue;
      if (index.Count(m.role, m.surface) < threshold) is_tail = true;
    }
    (is_tail ? tail : head).member_ids.push_back(ex.id);
  }
  return {std::move(tail), std::move(head)};
}

std::map<std::string, std::set<std::string>> InsertedCategories(
    std::span<const SelectionResult> selections) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& s : selections) {
    auto& cats = out[s.example_id];
    for (const auto& m : s.mentions) {
      for (const auto& u : m.units) {
        if (u.source == UnitSource::kCategory) cats.insert(u.text);
      }
    }
  }
  return out;
}

SliceDefinition SubpopulationSlice(
    const Dataset& test,
    const std::map<std::string, std::vector<std::string>>& cue_words,
    const std::map<std::string, std::set<std::string>>& inserted_categories) {
  SliceDefinition s;
  s.name = "subpopulation";
  s.provenance["rule"] =
      "example token in the cue words of an inserted category";
  for (const auto& ex : test.examples) {
    auto it = inserted_categories.find(ex.id);
    if (it == inserted_categories.end()) continue;
    std::set<std::string> cues;
    for (const auto& c : it->second) {
      auto cw = cue_words.find(c);
      if (cw != cue_words.end()) cues.insert(cw->second.begin(), cw->second.end());
    }
    const bool member = std::any_of(ex.tokens.begin(), ex.tokens.end(),
                                    [&](const std::string& t) { return cues.count(t) > 0; });
    if (member) s.member_ids.push_back(ex.id);
  }
  return s;
}

namespace {

void AddPositive(const TrainStatistics& stats, std::string_view token,
                 std::set<LabelId>* classes) {
  const auto* row = stats.PmiRow(token);
  if (row == nullptr) return;
  for (size_t y = 0; y < row->size(); ++y) {
    if ((*row)[y] > 0.0) classes->insert(static_cast<LabelId>(y));
  }
}

}  // namespace

SliceDefinition MisleadingMetadataSlice(
    const Dataset& test, const TrainStatistics& span_stats,
    const TrainStatistics& metadata_stats,
    std::span<const SelectionResult> selections,
    const SpanPopularityIndex& index, int64_t min_seen,
    std::span<const Role> roles) {
  std::map<std::string, const SelectionResult*> by_id;
  for (const auto& s : selections) by_id[s.example_id] = &s;

  SliceDefinition slice;
  slice.name = "misleading_metadata";
  slice.provenance["rule"] = "gold in Y_p, gold not in Y_m, both non-empty";
  slice.provenance["min_seen"] = std::to_string(min_seen);
  slice.provenance["roles"] = RoleList(roles);
  for (const auto& ex : test.examples) {
    std::set<LabelId> yp, ym;
    for (const auto& m : ex.mentions) {
      if (!RoleSelected(m.role, roles)) continue;
      if (index.Count(m.role, m.surface) < min_seen) continue;
      AddPositive(span_stats, utf8::NormalizeSurface(m.surface), &yp);
    }
    auto it = by_id.find(ex.id);
    if (it != by_id.end()) {
      for (const auto& ms : it->second->mentions) {
        for (const auto& u : ms.units) {
          if (u.source == UnitSource::kCategory) {
            AddPositive(metadata_stats, CategoryKey(u.text), &ym);
          } else {
            for (const auto& t : Tokenize(u.text, metadata_stats.fold_case())) {
              AddPositive(metadata_stats, t, &ym);
            }
          }
        }
      }
    }
    if (yp.empty() || ym.empty()) continue;
    const bool member = std::any_of(ex.labels.begin(), ex.labels.end(), [&](LabelId y) {
      return yp.count(y) > 0 && ym.count(y) == 0;
    });
    if (member) slice.member_ids.push_back(ex.id);
  }
  return slice;
}

SliceDefinition TopPmiSlice(const Dataset& test, const TrainStatistics& stats,
                            size_t k) {
  std::vector<std::set<std::string>> top(stats.num_labels());
  for (size_t y = 0; y < top.size(); ++y) {
    auto words = TopPmiTokens(stats, static_cast<LabelId>(y), k);
    top[y].insert(words.begin(), words.end());
  }
  SliceDefinition s;
  s.name = "top_pmi";
  s.provenance["rule"] = "contains a top-k PMI token for a gold class";
  s.provenance["k"] = std::to_string(k);
  for (const auto& ex : test.examples) {
    bool member = false;
    for (LabelId y : ex.labels) {
      for (const auto& t : ex.tokens) {
        if (top.at(y).count(t) > 0) member = true;
      }
    }
    if (member) s.member_ids.push_back(ex.id);
  }
  return s;
}

namespace {

void Finalize(SliceMetrics* m) {
  m->defined = m->support > 0;
  m->precision = m->predicted > 0 ? static_cast<double>(m->true_positives) /
                                        static_cast<double>(m->predicted)
                                  : 0.0;
  m->recall = m->gold > 0 ? static_cast<double>(m->true_positives) /
                                static_cast<double>(m->gold)
                          : 0.0;
  const double pr = m->precision + m->recall;
  m->f1 = pr > 0.0 ? 2.0 * m->precision * m->recall / pr : 0.0;
}

}  // namespace

SliceMetrics ScoreSlice(const SliceDefinition& slice,
                        const PredictionMap& predictions, const Dataset& gold) {
  std::map<std::string_view, const Example*> by_id;
  for (const auto& ex : gold.examples) by_id[ex.id] = &ex;
  SliceMetrics m;
  m.name = slice.name;
  double entropy_sum = 0.0;
  for (const auto& id : slice.member_ids) {
    auto p = predictions.find(id);
    if (p == predictions.end()) {
      throw ValidationError("slice '" + slice.name + "': missing prediction for '" +
                            id + "'");
    }
    auto g = by_id.find(id);
    if (g == by_id.end()) {
      throw ValidationError("slice '" + slice.name + "': unknown example '" + id + "'");
    }
    const auto& pred = p->second.predicted;
    const auto& labels = g->second->labels;
    std::vector<LabelId> both;
    std::set_intersection(pred.begin(), pred.end(), labels.begin(), labels.end(),
                          std::back_inserter(both));
    ++m.support;
    m.true_positives += static_cast<int64_t>(both.size());
    m.predicted += static_cast<int64_t>(pred.size());
    m.gold += static_cast<int64_t>(labels.size());
    entropy_sum += Entropy(p->second.scores);
  }
  Finalize(&m);
  m.mean_entropy = m.support > 0 ? entropy_sum / static_cast<double>(m.support) : 0.0;
  return m;
}

SliceReport MakeSliceReport(const PredictionMap& predictions,
                            const Dataset& gold,
                            std::span<const SliceDefinition> slices) {
  SliceReport report;
  for (const auto& s : slices) report.rows.push_back(ScoreSlice(s, predictions, gold));
  return report;
}

SliceMetrics CombineSlices(std::span<const SliceMetrics> parts,
                           const std::string& name) {
  SliceMetrics m;
  m.name = name;
  double entropy_sum = 0.0;
  for (const auto& p : parts) {
    m.support += p.support;
    m.true_positives += p.true_positives;
    m.predicted += p.predicted;
    m.gold += p.gold;
    entropy_sum += p.mean_entropy * static_cast<double>(p.support);
  }
  Finalize(&m);
  m.mean_entropy = m.support > 0 ? entropy_sum / static_cast<double>(m.support) : 0.0;
  return m;
}

std::string SliceReportJson(const SliceReport& report) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json j;
    j["slice"] = r.name;
    j["support"] = r.support;
    j["defined"] = r.defined;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["mean_entropy"] = r.mean_entropy;
    j["true_positives"] = r.true_positives;
    j["predicted"] = r.predicted;
    j["gold"] = r.gold;
    rows.push_back(std::move(j));
  }
  nlohmann::ordered_json j;
  j["slices"] = std::move(rows);
  return j.dump(1);
}

std::string SliceReportTable(const SliceReport& report) {
  size_t width = 5;
  for (const auto& r : report.rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %8s %9s %9s %9s %9s\n",
                static_cast<int>(width), "slice", "support", "precision",
                "recall", "f1", "entropy");
  out << buf;
  for (const auto& r : report.rows) {
    if (!r.defined) {
      std::snprintf(buf, sizeof buf, "%-*s %8lld %9s %9s %9s %9s\n",
                    static_cast<int>(width), r.name.c_str(),
                    static_cast<long long>(r.support), "n/a", "n/a", "n/a", "n/a");
    } else {
      std::snprintf(buf, sizeof buf, "%-*s %8lld %9.4f %9.4f %9.4f %9.4f\n",
                    static_cast<int>(width), r.name.c_str(),
                    static_cast<long long>(r.support), r.precision, r.recall,
                    r.f1, r.mean_entropy);
    }
    out << buf;
  }
  return out.str();
}

PredictionMap ReadPredictions(std::istream& in, const LabelVocabulary& vocab,
                              const std::string& source) {
  PredictionMap out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto id = j.at("id").get<std::string>();
      Prediction p;
      std::set<LabelId> predicted;
      for (const auto& l : j.at("predicted")) {
        auto y = vocab.Find(l.get<std::string>());
        if (!y) {
          throw RecordError(source, lineno, "predicted",
                            "unknown label '" + l.get<std::string>() + "'");
        }
        predicted.insert(*y);
      }
      p.predicted.assign(predicted.begin(), predicted.end());
      std::vector<double> weights(vocab.size(), 0.0);
      auto scores = j.find("scores");
      if (scores != j.end() && !scores->empty()) {
        for (const auto& [label, prob] : scores->items()) {
          auto y = vocab.Find(label);
          if (!y) throw RecordError(source, lineno, "scores", "unknown label '" + label + "'");
          weights[*y] = prob.get<double>();
        }
      } else {
        for (LabelId y : p.predicted) weights[y] = 1.0;
      }
      try {
        p.scores = Distribution::Normalize(std::move(weights));
      } catch (const std::invalid_argument& e) {
        throw RecordError(source, lineno, "scores", e.what());
      }
      if (!out.emplace(id, std::move(p)).second) {
        throw RecordError(source, lineno, "id", "duplicate id '" + id + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw RecordError(source, lineno, "<record>", e.what());
    }
  }
  return out;
}

PredictionMap LoadPredictions(const std::string& path,
                              const LabelVocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open predictions file '" + path + "'");
  return ReadPredictions(in, vocab, path);
}

void WritePredictions(const PredictionMap& predictions,
                      const std::vector<std::string>& order,
                      const LabelVocabulary& vocab, std::ostream& out) {
  for (const auto& id : order) {
    const Prediction& p = predictions.at(id);
    nlohmann::ordered_json j;
    j["id"] = id;
    nlohmann::ordered_json predicted = nlohmann::ordered_json::array();
    for (LabelId y : p.predicted) predicted.push_back(vocab.name(y));
    j["predicted"] = std::move(predicted);
    nlohmann::ordered_json scores = nlohmann::ordered_json::object();
    for (size_t y = 0; y < p.scores.size(); ++y) {
      scores[vocab.name(static_cast<LabelId>(y))] = p.scores[y];
    }
    j["scores"] = std::move(scores);
    out << j.dump() << '\n';
  }
}

}  // namespace metashape
