#include "metashape/stats.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "metashape/error.h"
#include "metashape/util/parallel.h"
#include "metashape/util/utf8.h"

namespace metashape {

std::string_view VocabSourceName(VocabSource source) {
  switch (source) {
    case VocabSource::kExampleTokens: return "example_tokens";
    case VocabSource::kMetadataTokens: return "metadata_tokens";
    case VocabSource::kBoth: return "both";
    case VocabSource::kMentionSurfaces: return "mention_surfaces";
  }
  return "metadata_tokens";
}

std::optional<VocabSource> ParseVocabSource(std::string_view name) {
  for (auto s : {VocabSource::kExampleTokens, VocabSource::kMetadataTokens,
                 VocabSource::kBoth, VocabSource::kMentionSurfaces}) {
    if (VocabSourceName(s) == name) return s;
  }
  if (name == "example") return VocabSource::kExampleTokens;
  if (name == "metadata") return VocabSource::kMetadataTokens;
  if (name == "surfaces") return VocabSource::kMentionSurfaces;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// CountTable

void CountTable::AddExample(std::span<const LabelId> labels,
                            std::span<const std::string> tokens) {
  ++n_examples_;
  std::set<LabelId> label_set(labels.begin(), labels.end());
  for (LabelId y : label_set) ++class_count_.at(y);
  std::set<std::string_view> distinct(tokens.begin(), tokens.end());
  for (std::string_view t : distinct) {
    auto it = tokens_.find(t);
    if (it == tokens_.end()) {
      it = tokens_.emplace(std::string(t),
                           TokenCounts{0, std::vector<int64_t>(num_labels(), 0)})
               .first;
    }
    ++it->second.total;
    for (LabelId y : label_set) ++it->second.joint[y];
  }
}

void CountTable::AddTokenCounts(const std::string& token, TokenCounts counts) {
  if (counts.joint.size() != num_labels()) {
    throw std::invalid_argument("joint count width does not match labels");
  }
  tokens_[token] = std::move(counts);
}

void CountTable::SetTotals(int64_t n_examples, std::vector<int64_t> class_count) {
  n_examples_ = n_examples;
  class_count_ = std::move(class_count);
}

void CountTable::Merge(const CountTable& other) {
  if (other.num_labels() != num_labels()) {
    throw std::invalid_argument("cannot merge count tables over different labels");
  }
  n_examples_ += other.n_examples_;
  for (size_t y = 0; y < class_count_.size(); ++y) {
    class_count_[y] += other.class_count_[y];
  }
  for (const auto& [token, c] : other.tokens_) {
    auto it = tokens_.find(token);
    if (it == tokens_.end()) {
      tokens_.emplace(token, c);
      continue;
    }
    it->second.total += c.total;
    for (size_t y = 0; y < c.joint.size(); ++y) it->second.joint[y] += c.joint[y];
  }
}

int64_t CountTable::token_count(std::string_view token) const {
  const TokenCounts* c = Find(token);
  return c == nullptr ? 0 : c->total;
}

int64_t CountTable::joint_count(LabelId y, std::string_view token) const {
  const TokenCounts* c = Find(token);
  return c == nullptr ? 0 : c->joint.at(y);
}

const TokenCounts* CountTable::Find(std::string_view token) const {
  auto it = tokens_.find(token);
  return it == tokens_.end() ? nullptr : &it->second;
}

std::string CategoryKey(std::string_view category) {
  return utf8::NormalizeSurface(category);
}

std::vector<std::string> ExampleVocabulary(const Example& example,
                                           const MetadataCatalog& catalog,
                                           VocabSource source, bool fold_case) {
  std::vector<std::string> out;
  if (source == VocabSource::kExampleTokens || source == VocabSource::kBoth) {
    out = example.tokens;
  }
  if (source == VocabSource::kMetadataTokens || source == VocabSource::kBoth) {
    for (const auto& meta : MetadataFor(example, catalog)) {
      for (const auto& c : meta.categories) out.push_back(CategoryKey(c));
      if (meta.description) {
        for (auto& t : Tokenize(*meta.description, fold_case)) {
          out.push_back(std::move(t));
        }
      }
    }
  }
  if (source == VocabSource::kMentionSurfaces) {
    for (const auto& m : example.mentions) {
      out.push_back(utf8::NormalizeSurface(m.surface));
    }
  }
  return out;
}

CountTable BuildCounts(const Dataset& train, VocabSource source,
                       const MetadataCatalog& catalog, bool fold_case,
                       int threads) {
  const size_t n = train.examples.size();
  const size_t shards = std::max<size_t>(1, std::min<size_t>(n, threads));
  std::vector<CountTable> partial(shards, CountTable(train.label_vocab.size()));
  const size_t chunk = n == 0 ? 0 : (n + shards - 1) / shards;
  ParallelFor(shards, threads, [&](size_t s) {
    const size_t end = std::min(n, (s + 1) * chunk);
    for (size_t i = s * chunk; i < end; ++i) {
      const Example& ex = train.examples[i];
      const auto vocab = ExampleVocabulary(ex, catalog, source, fold_case);
      partial[s].AddExample(ex.labels, vocab);
    }
  });
  CountTable table = std::move(partial[0]);
  for (size_t s = 1; s < shards; ++s) table.Merge(partial[s]);
  return table;
}

double Pmi(const CountTable& counts, LabelId y, std::string_view token,
           double alpha) {
  const double num_labels = static_cast<double>(counts.num_labels());
  const double vocab = static_cast<double>(counts.vocab_size());
  const double joint = static_cast<double>(counts.joint_count(y, token));
  const double cls = static_cast<double>(counts.class_count(y));
  const double tok = static_cast<double>(counts.token_count(token));
  const double denom =
      static_cast<double>(counts.n_examples()) + alpha * num_labels * vocab;
  const double p_joint = (joint + alpha) / denom;
  const double p_class = (cls + alpha * vocab) / denom;
  const double p_token = (tok + alpha * num_labels) / denom;
  if (!(denom > 0.0) || !(p_joint > 0.0) || !(p_class > 0.0) ||
      !(p_token > 0.0)) {
    return kUndefinedPmi;
  }
  return std::log2(p_joint / (p_class * p_token));
}

// ---------------------------------------------------------------------------
// Distributions

Distribution Distribution::FromProbabilities(std::vector<double> probs,
                                             double tolerance) {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("distribution entries must be finite and >= 0");
    }
    sum += p;
  }
  if (probs.empty() || std::abs(sum - 1.0) > tolerance) {
    throw std::invalid_argument("distribution must sum to 1");
  }
  return Distribution(std::move(probs));
}

Distribution Distribution::Normalize(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("weights must be finite and >= 0");
    }
    sum += w;
  }
  if (weights.empty()) throw std::invalid_argument("empty distribution");
  if (sum == 0.0) return Uniform(weights.size());
  for (double& w : weights) w /= sum;
  return Distribution(std::move(weights));
}

Distribution Distribution::Uniform(size_t size) {
  if (size == 0) throw std::invalid_argument("empty distribution");
  return Distribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Distribution Distribution::PointMass(size_t size, size_t index) {
  if (index >= size) throw std::invalid_argument("point mass index out of range");
  std::vector<double> p(size, 0.0);
  p[index] = 1.0;
  return Distribution(std::move(p));
}

size_t Distribution::ArgMax() const {
  return static_cast<size_t>(
      std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

double Entropy(const Distribution& d) {
  const auto& probs = d.probs();
  if (!probs.empty() &&
      std::all_of(probs.begin(), probs.end(), [&](double p) { return p == probs[0]; })) {
    return std::log2(static_cast<double>(probs.size()));  // exact for the uniform
  }
  double h = 0.0;
  for (double p : d.probs()) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

double KlDivergence(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("KL divergence over mismatched label spaces");
  }
  std::vector<double> qs = q.probs();
  bool needs_smoothing = false;
  for (size_t i = 0; i < qs.size(); ++i) {
    if (p[i] > 0.0 && qs[i] == 0.0) needs_smoothing = true;
  }
  if (needs_smoothing) {
    const double z = 1.0 + kKlEpsilon * static_cast<double>(qs.size());
    for (double& v : qs) v = (v + kKlEpsilon) / z;
  }
  double kl = 0.0;
  for (size_t i = 0; i < qs.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log2(p[i] / qs[i]);
  }
  return std::max(kl, 0.0);
}

double PredictionEntropy(std::span<const Distribution> rows) {
  if (rows.empty()) {
    throw std::invalid_argument("prediction entropy of an empty sequence");
  }
  double total = 0.0;
  for (const auto& r : rows) total += Entropy(r);
  return total / static_cast<double>(rows.size());
}

// ---------------------------------------------------------------------------
// TrainStatistics

TrainStatistics::TrainStatistics(CountTable counts, double alpha,
                                 VocabSource source,
                                 std::vector<std::string> label_names,
                                 bool fold_case)
    : counts_(std::move(counts)),
      alpha_(alpha),
      source_(source),
      fold_case_(fold_case),
      label_names_(std::move(label_names)) {
  if (!(alpha_ >= 0.0) || !std::isfinite(alpha_)) {
    throw ValidationError("smoothing alpha must be finite and >= 0");
  }
  if (label_names_.size() != counts_.num_labels()) {
    throw ValidationError("label names do not match the count table");
  }
  freq_.assign(counts_.num_labels(), 0.0);
  if (counts_.n_examples() > 0) {
    for (size_t y = 0; y < freq_.size(); ++y) {
      freq_[y] = static_cast<double>(counts_.class_count(static_cast<LabelId>(y))) /
                 static_cast<double>(counts_.n_examples());
    }
  }
  for (const auto& [token, c] : counts_.tokens()) {
    std::vector<double> row(counts_.num_labels());
    for (size_t y = 0; y < row.size(); ++y) {
      row[y] = metashape::Pmi(counts_, static_cast<LabelId>(y), token, alpha_);
    }
    pmi_.emplace(token, std::move(row));
  }
}

const std::vector<double>* TrainStatistics::PmiRow(std::string_view token) const {
  auto it = pmi_.find(token);
  return it == pmi_.end() ? nullptr : &it->second;
}

double TrainStatistics::Pmi(LabelId y, std::string_view token) const {
  const auto* row = PmiRow(token);
  if (row != nullptr) return row->at(y);
  return metashape::Pmi(counts_, y, token, alpha_);
}

Distribution ConditionalClassDistribution(std::string_view token,
                                          const TrainStatistics& stats) {
  const auto* row = stats.PmiRow(token);
  if (row == nullptr) return Distribution::Uniform(stats.num_labels());
  std::vector<double> r(row->size());
  for (size_t y = 0; y < r.size(); ++y) {
    r[y] = std::exp2((*row)[y]) * stats.frequencies()[y];
  }
  return Distribution::Normalize(std::move(r));
}

double TokenEntropy(std::string_view token, const TrainStatistics& stats) {
  return Entropy(ConditionalClassDistribution(token, stats));
}

std::vector<std::string> TopPmiTokens(const TrainStatistics& stats, LabelId y,
                                      size_t k) {
  std::vector<std::pair<double, const std::string*>> ranked;
  for (const auto& [token, c] : stats.counts().tokens()) {
    const double pmi = stats.Pmi(y, token);
    if (!IsUndefinedPmi(pmi)) ranked.emplace_back(pmi, &token);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });
  std::vector<std::string> out;
  for (size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(*ranked[i].second);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {
constexpr const char* kStatsFormat = "metashape.train_statistics";
constexpr int kStatsVersion = 1;
}  // namespace

void WriteStatistics(const TrainStatistics& stats, std::ostream& out) {
  nlohmann::ordered_json j;
  j["format"] = kStatsFormat;
  j["version"] = kStatsVersion;
  j["alpha"] = stats.alpha();
  j["vocab_source"] = VocabSourceName(stats.source());
  j["fold_case"] = stats.fold_case();
  j["labels"] = stats.label_names();
  j["n_examples"] = stats.counts().n_examples();
  j["class_count"] = stats.counts().class_counts();
  nlohmann::ordered_json tokens = nlohmann::ordered_json::array();
  for (const auto& [token, c] : stats.counts().tokens()) {
    nlohmann::ordered_json t;
    t["token"] = token;
    t["count"] = c.total;
    t["joint"] = c.joint;
    tokens.push_back(std::move(t));
  }
  j["tokens"] = std::move(tokens);
  out << j.dump(1) << '\n';
}

TrainStatistics ReadStatistics(std::istream& in, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (j.value("format", "") != kStatsFormat) {
      throw ValidationError(source + ": not a train statistics artifact");
    }
    const int version = j.at("version").get<int>();
    if (version != kStatsVersion) {
      throw ValidationError(source + ": unsupported statistics version " +
                            std::to_string(version));
    }
    auto src = ParseVocabSource(j.at("vocab_source").get<std::string>());
    if (!src) throw ValidationError(source + ": unknown vocab_source");
    auto labels = j.at("labels").get<std::vector<std::string>>();
    CountTable counts(labels.size());
    counts.SetTotals(j.at("n_examples").get<int64_t>(),
                     j.at("class_count").get<std::vector<int64_t>>());
    if (counts.class_counts().size() != labels.size()) {
      throw ValidationError(source + ": class_count width mismatch");
    }
    for (const auto& t : j.at("tokens")) {
      TokenCounts c{t.at("count").get<int64_t>(),
                    t.at("joint").get<std::vector<int64_t>>()};
      if (c.joint.size() != labels.size()) {
        throw ValidationError(source + ": joint width mismatch");
      }
      counts.AddTokenCounts(t.at("token").get<std::string>(), std::move(c));
    }
    return TrainStatistics(std::move(counts), j.at("alpha").get<double>(), *src,
                           std::move(labels), j.value("fold_case", true));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(source + ": malformed statistics: " + e.what());
  }
}

void SaveStatistics(const TrainStatistics& stats, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write statistics to '" + path + "'");
  WriteStatistics(stats, out);
}

TrainStatistics LoadStatistics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open statistics file '" + path + "'");
  return ReadStatistics(in, path);
}

}  // namespace metashape
