#include "metashape/selection.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "metashape/error.h"
#include "metashape/util/parallel.h"
#include "metashape/util/random.h"
#include "metashape/util/utf8.h"

namespace metashape {

std::string_view StrategyName(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kHighRank: return "high_rank";
    case StrategyKind::kLowRank: return "low_rank";
    case StrategyKind::kRandom: return "random";
    case StrategyKind::kPopular: return "popular";
  }
  return "high_rank";
}

std::optional<StrategyKind> ParseStrategy(std::string_view name) {
  if (name == "high" || name == "high_rank") return StrategyKind::kHighRank;
  if (name == "low" || name == "low_rank") return StrategyKind::kLowRank;
  if (name == "random") return StrategyKind::kRandom;
  if (name == "popular") return StrategyKind::kPopular;
  return std::nullopt;
}

std::string_view UnitSourceName(UnitSource source) {
  switch (source) {
    case UnitSource::kCategory: return "category";
    case UnitSource::kDescription: return "description";
    case UnitSource::kNoise: return "noise";
  }
  return "category";
}

namespace {

std::optional<UnitSource> ParseUnitSource(std::string_view name) {
  for (auto s : {UnitSource::kCategory, UnitSource::kDescription,
                 UnitSource::kNoise}) {
    if (UnitSourceName(s) == name) return s;
  }
  return std::nullopt;
}

constexpr double kUnranked = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> WhitespaceWords(const std::string& text) {
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

}  // namespace

bool MetadataUnit::operator==(const MetadataUnit& o) const {
  const bool same_score =
      (std::isnan(score) && std::isnan(o.score)) || score == o.score;
  return source == o.source && text == o.text && same_score;
}

TrainStatistics Precompute(const Dataset& train, const MetadataCatalog& catalog,
                           double alpha, bool fold_case, int threads) {
  CountTable counts = BuildCounts(train, VocabSource::kMetadataTokens, catalog,
                                  fold_case, threads);
  return TrainStatistics(std::move(counts), alpha, VocabSource::kMetadataTokens,
                         train.label_vocab.names(), fold_case);
}

ScoredCategory ScoreCategory(const std::string& category,
                             const TrainStatistics& stats) {
  ScoredCategory s;
  s.text = category;
  s.key = CategoryKey(category);
  s.entropy = TokenEntropy(s.key, stats);
  s.count = stats.counts().token_count(s.key);
  return s;
}

bool RanksBefore(const ScoredCategory& a, const ScoredCategory& b) {
  if (a.entropy != b.entropy) return a.entropy < b.entropy;
  if (a.count != b.count) return a.count > b.count;
  return a.text < b.text;
}

SelectionResult Select(const Example& example, const MetadataCatalog& catalog,
                       const TrainStatistics& stats,
                       const SelectionStrategy& strategy, size_t n) {
  SelectionResult result;
  result.example_id = example.id;
  const auto metadata = MetadataFor(example, catalog);
  for (size_t i = 0; i < example.mentions.size(); ++i) {
    MentionSelection sel;
    sel.mention_index = i;
    sel.role = example.mentions[i].role;
    const MentionMetadata& meta = metadata[i];

    std::vector<ScoredCategory> scored;
    scored.reserve(meta.categories.size());
    for (const auto& c : meta.categories) scored.push_back(ScoreCategory(c, stats));

    const size_t take = std::min(n, scored.size());
    switch (strategy.kind) {
      case StrategyKind::kHighRank:
        std::stable_sort(scored.begin(), scored.end(), RanksBefore);
        break;
      case StrategyKind::kLowRank:
        std::stable_sort(scored.begin(), scored.end(),
                         [](const ScoredCategory& a, const ScoredCategory& b) {
                           if (a.entropy != b.entropy) return a.entropy > b.entropy;
                           if (a.count != b.count) return a.count > b.count;
                           return a.text < b.text;
                         });
        break;
      case StrategyKind::kPopular:
        std::stable_sort(scored.begin(), scored.end(),
                         [](const ScoredCategory& a, const ScoredCategory& b) {
                           if (a.count != b.count) return a.count > b.count;
                           return a.text < b.text;
                         });
        break;
      case StrategyKind::kRandom: {
        // Partial Fisher-Yates over the catalog order.
        Rng rng(MixSeed(strategy.seed, std::string_view(example.id),
                        static_cast<uint64_t>(i)));
        for (size_t k = 0; k < take; ++k) {
          const size_t j = k + rng.Below(scored.size() - k);
          std::swap(scored[k], scored[j]);
        }
        break;
      }
    }
    for (size_t k = 0; k < take; ++k) {
      sel.units.push_back(
          {UnitSource::kCategory, scored[k].text, scored[k].entropy});
    }
    if (meta.description && sel.units.size() < n) {
      for (auto& word : WhitespaceWords(*meta.description)) {
        if (sel.units.size() >= n) break;
        sel.units.push_back({UnitSource::kDescription, std::move(word), kUnranked});
      }
    }
    result.mentions.push_back(std::move(sel));
  }
  return result;
}

std::vector<SelectionResult> SelectDataset(const Dataset& dataset,
                                           const MetadataCatalog& catalog,
                                           const TrainStatistics& stats,
                                           const SelectionStrategy& strategy,
                                           size_t n, int threads) {
  std::vector<SelectionResult> out(dataset.examples.size());
  ParallelFor(out.size(), threads, [&](size_t i) {
    out[i] = Select(dataset.examples[i], catalog, stats, strategy, n);
  });
  return out;
}

SelectionResult ReplaceWithRandomTokens(const SelectionResult& selection,
                                        size_t count,
                                        std::span<const std::string> vocabulary,
                                        uint64_t seed) {
  if (count > 0 && vocabulary.empty()) {
    throw std::invalid_argument("replacement vocabulary is empty");
  }
  SelectionResult out = selection;
  for (auto& mention : out.mentions) {
    const size_t m = mention.units.size();
    const size_t replace = std::min(count, m);
    Rng rng(MixSeed(seed, std::string_view(selection.example_id),
                    static_cast<uint64_t>(mention.mention_index)));
    std::vector<size_t> positions(m);
    std::iota(positions.begin(), positions.end(), 0);
    for (size_t k = 0; k < replace; ++k) {
      const size_t j = k + rng.Below(m - k);
      std::swap(positions[k], positions[j]);
      MetadataUnit& unit = mention.units[positions[k]];
      unit.source = UnitSource::kNoise;
      unit.text = vocabulary[rng.Below(vocabulary.size())];
      unit.score = kUnranked;
    }
  }
  return out;
}

CategoryDistribution SelectionDistribution(
    std::span<const SelectionResult> selections) {
  std::map<std::string, int64_t> counts;
  int64_t total = 0;
  for (const auto& s : selections) {
    for (const auto& m : s.mentions) {
      for (const auto& u : m.units) {
        if (u.source != UnitSource::kCategory) continue;
        ++counts[u.text];
        ++total;
      }
    }
  }
  CategoryDistribution d;
  for (const auto& [category, c] : counts) {
    d.support.push_back(category);
    d.probs.push_back(static_cast<double>(c) / static_cast<double>(total));
  }
  return d;
}

double SelectionKl(const CategoryDistribution& p, const CategoryDistribution& q) {
  std::map<std::string, std::pair<double, double>> merged;
  for (size_t i = 0; i < p.support.size(); ++i) merged[p.support[i]].first = p.probs[i];
  for (size_t i = 0; i < q.support.size(); ++i) merged[q.support[i]].second = q.probs[i];
  if (merged.empty()) return 0.0;
  std::vector<double> pv, qv;
  for (const auto& [k, v] : merged) {
    pv.push_back(v.first);
    qv.push_back(v.second);
  }
  // An empty selection set is treated as uniform over the joint support.
  auto as_dist = [](std::vector<double> v) {
    return Distribution::Normalize(std::move(v));
  };
  return KlDivergence(as_dist(std::move(pv)), as_dist(std::move(qv)));
}

// ---------------------------------------------------------------------------
// JSONL

std::string SerializeSelection(const SelectionResult& selection) {
  nlohmann::ordered_json j;
  j["id"] = selection.example_id;
  nlohmann::ordered_json mentions = nlohmann::ordered_json::array();
  for (const auto& m : selection.mentions) {
    nlohmann::ordered_json jm;
    jm["mention"] = m.mention_index;
    jm["role"] = RoleName(m.role);
    nlohmann::ordered_json units = nlohmann::ordered_json::array();
    for (const auto& u : m.units) {
      nlohmann::ordered_json ju;
      ju["source"] = UnitSourceName(u.source);
      ju["text"] = u.text;
      ju["score"] = std::isnan(u.score) ? nlohmann::ordered_json()
                                        : nlohmann::ordered_json(u.score);
      units.push_back(std::move(ju));
    }
    jm["units"] = std::move(units);
    mentions.push_back(std::move(jm));
  }
  j["mentions"] = std::move(mentions);
  return j.dump();
}

SelectionResult ParseSelection(std::string_view json_line,
                               const std::string& source, size_t line) {
  SelectionResult s;
  try {
    const auto j = nlohmann::json::parse(json_line);
    s.example_id = j.at("id").get<std::string>();
    for (const auto& jm : j.at("mentions")) {
      MentionSelection m;
      m.mention_index = jm.at("mention").get<size_t>();
      auto role = ParseRole(jm.at("role").get<std::string>());
      if (!role) throw RecordError(source, line, "mentions.role", "unknown role");
      m.role = *role;
      for (const auto& ju : jm.at("units")) {
        MetadataUnit u;
        auto src = ParseUnitSource(ju.at("source").get<std::string>());
        if (!src) {
          throw RecordError(source, line, "units.source", "unknown unit source");
        }
        u.source = *src;
        u.text = ju.at("text").get<std::string>();
        const auto& score = ju.at("score");
        u.score = score.is_null() ? kUnranked : score.get<double>();
        m.units.push_back(std::move(u));
      }
      s.mentions.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw RecordError(source, line, "<record>", e.what());
  }
  return s;
}

void WriteSelections(std::span<const SelectionResult> selections,
                     std::ostream& out) {
  for (const auto& s : selections) out << SerializeSelection(s) << '\n';
}

std::vector<SelectionResult> ReadSelections(std::istream& in,
                                            const std::string& source) {
  std::vector<SelectionResult> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(ParseSelection(line, source, lineno));
  }
  return out;
}

std::vector<SelectionResult> LoadSelections(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open selections file '" + path + "'");
  return ReadSelections(in, path);
}

}  // namespace metashape
