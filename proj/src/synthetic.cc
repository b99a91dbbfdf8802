#include "metashape/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "metashape/error.h"
#include "metashape/util/kvconfig.h"
#include "metashape/util/random.h"

namespace metashape {

namespace {

constexpr const char* kFiller[] = {
    "the",    "report", "about",  "was",     "seen",   "with",   "near",
    "later",  "during", "often",  "several", "people", "noted",  "that",
    "after",  "some",   "time",   "there",   "again",  "along",  "while",
    "many",   "said",   "other",  "which",   "from",   "one",    "new",
    "first",  "over",   "into",   "then",    "where",  "still",  "also",
    "around", "under",  "across", "between", "before"};

constexpr const char* kSyllables[] = {"ka", "lo", "mi",  "ren", "tu", "vas",
                                      "zor", "pel", "qui", "dar", "so", "bel",
                                      "fi", "gan", "hu",  "ny"};

std::string Padded(const char* prefix, size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02zu", prefix, i);
  return buf;
}

// Distinct pronounceable name per index (base-16 syllables).
std::string EntityName(size_t index) {
  std::string name;
  size_t x = index;
  for (int i = 0; i < 4; ++i) {
    name += kSyllables[x % 16];
    x /= 16;
  }
  name[0] = static_cast<char>(name[0] - 'a' + 'A');
  return name;
}

struct Entity {
  std::string id;
  std::string surface;
  size_t label = 0;
};

std::string Filler(Rng& rng) { return kFiller[rng.Below(std::size(kFiller))]; }

Example MakeExample(const std::string& id, const Entity& entity, size_t gold,
                    const SyntheticParams& p, Rng& rng) {
  std::vector<std::string> words;
  for (size_t i = 0; i < p.context_words; ++i) words.push_back(Filler(rng));
  if (rng.Bernoulli(p.cue_rate)) {
    words.insert(words.begin() + rng.Below(words.size() + 1), Padded("hint", gold));
  }
  const size_t at = rng.Below(words.size() + 1);
  words.insert(words.begin() + at, entity.surface);

  Example ex;
  ex.id = id;
  size_t offset = 0;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i > 0) {
      ex.text += ' ';
      ++offset;
    }
    if (i == at) {
      EntityMention m;
      m.role = Role::kMain;
      m.start = offset;
      m.end = offset + words[i].size();
      m.surface = words[i];
      m.entity_id = entity.id;
      ex.mentions.push_back(std::move(m));
    }
    ex.text += words[i];
    offset += words[i].size();
  }
  ex.tokens = Tokenize(ex.text);
  ex.labels = {static_cast<LabelId>(gold)};
  return ex;
}

}  // namespace

void SyntheticParams::Validate() const {
  if (num_labels < 2) throw ValidationError("num_labels must be >= 2");
  if (num_labels > 100) throw ValidationError("num_labels must be <= 100");
  if (fine_per_label < 1) throw ValidationError("fine_per_label must be >= 1");
  if (entities_per_category < 1 || entities_per_category > 4096) {
    throw ValidationError("entities_per_category must lie in [1, 4096]");
  }
  if (num_labels * fine_per_label * entities_per_category > 65536) {
    throw ValidationError("too many entities (limit 65536)");
  }
  if (generic_per_entity > generic_categories) {
    throw ValidationError("generic_per_entity exceeds generic_categories");
  }
  if (!(zipf_exponent >= 0.0) || !std::isfinite(zipf_exponent)) {
    throw ValidationError("zipf_exponent must be a finite number >= 0");
  }
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) {
    throw ValidationError("label_noise must lie in [0, 1]");
  }
  if (!(cue_rate >= 0.0 && cue_rate <= 1.0)) {
    throw ValidationError("cue_rate must lie in [0, 1]");
  }
  if (train_size < 1 || test_size < 1) {
    throw ValidationError("train_size and test_size must be >= 1");
  }
}

void SetSyntheticOption(SyntheticParams* p, std::string_view key,
                        std::string_view value) {
  if (key == "num_labels") {
    p->num_labels = ParseConfigUnsigned(key, value);
  } else if (key == "fine_per_label") {
    p->fine_per_label = ParseConfigUnsigned(key, value);
  } else if (key == "entities_per_category") {
    p->entities_per_category = ParseConfigUnsigned(key, value);
  } else if (key == "generic_categories") {
    p->generic_categories = ParseConfigUnsigned(key, value);
  } else if (key == "generic_per_entity") {
    p->generic_per_entity = ParseConfigUnsigned(key, value);
  } else if (key == "zipf_exponent") {
    p->zipf_exponent = ParseConfigDouble(key, value);
  } else if (key == "label_noise") {
    p->label_noise = ParseConfigDouble(key, value);
  } else if (key == "cue_rate") {
    p->cue_rate = ParseConfigDouble(key, value);
  } else if (key == "context_words") {
    p->context_words = ParseConfigUnsigned(key, value);
  } else if (key == "description_words") {
    p->description_words = ParseConfigUnsigned(key, value);
  } else if (key == "train_size") {
    p->train_size = ParseConfigUnsigned(key, value);
  } else if (key == "test_size") {
    p->test_size = ParseConfigUnsigned(key, value);
  } else if (key == "seed") {
    p->seed = ParseConfigUnsigned(key, value);
  } else {
    throw ValidationError("unknown generator parameter '" + std::string(key) + "'");
  }
}

std::map<std::string, std::string> SyntheticValues(const SyntheticParams& p) {
  return {{"num_labels", std::to_string(p.num_labels)},
          {"fine_per_label", std::to_string(p.fine_per_label)},
          {"entities_per_category", std::to_string(p.entities_per_category)},
          {"generic_categories", std::to_string(p.generic_categories)},
          {"generic_per_entity", std::to_string(p.generic_per_entity)},
          {"zipf_exponent", FormatDouble(p.zipf_exponent)},
          {"label_noise", FormatDouble(p.label_noise)},
          {"cue_rate", FormatDouble(p.cue_rate)},
          {"context_words", std::to_string(p.context_words)},
          {"description_words", std::to_string(p.description_words)},
          {"train_size", std::to_string(p.train_size)},
          {"test_size", std::to_string(p.test_size)},
          {"seed", std::to_string(p.seed)}};
}

SyntheticBenchmark GenerateSynthetic(const SyntheticParams& p) {
  p.Validate();
  std::vector<std::string> label_names;
  for (size_t y = 0; y < p.num_labels; ++y) label_names.push_back(Padded("label_", y));
  const size_t num_fine = p.num_labels * p.fine_per_label;

  SyntheticBenchmark bench;
  Rng meta_rng(MixSeed(p.seed, "catalog"));
  std::vector<std::vector<Entity>> by_fine(num_fine);
  for (size_t f = 0; f < num_fine; ++f) {
    const size_t label = f / p.fine_per_label;
    for (size_t k = 0; k < p.entities_per_category; ++k) {
      const size_t index = f * p.entities_per_category + k;
      Entity e{Padded("E", index), EntityName(index), label};

      MetadataRecord rec;
      rec.entity_id = e.id;
      rec.categories = {Padded("kind", f), Padded("group", label / 2)};
      std::vector<size_t> generic(p.generic_categories);
      for (size_t g = 0; g < generic.size(); ++g) generic[g] = g;
      for (size_t g = 0; g < p.generic_per_entity; ++g) {
        std::swap(generic[g], generic[g + meta_rng.Below(generic.size() - g)]);
        rec.categories.push_back(Padded("common", generic[g]));
      }
      for (size_t i = rec.categories.size(); i > 1; --i) {
        std::swap(rec.categories[i - 1], rec.categories[meta_rng.Below(i)]);
      }
      std::string desc = "a";
      for (size_t w = 0; w < p.description_words; ++w) desc += " " + Filler(meta_rng);
      rec.description = desc;
      bench.catalog.Add(std::move(rec));
      by_fine[f].push_back(std::move(e));
    }
  }

  // Zipf CDF over within-category popularity ranks.
  std::vector<double> cdf(p.entities_per_category);
  double acc = 0.0;
  for (size_t k = 0; k < cdf.size(); ++k) {
    acc += 1.0 / std::pow(static_cast<double>(k + 1), p.zipf_exponent);
    cdf[k] = acc;
  }
  for (double& c : cdf) c /= acc;

  auto fill = [&](Dataset& ds, Split split, size_t size, const char* prefix) {
    ds.split = split;
    ds.task_kind = TaskKind::kSingleLabel;
    ds.label_vocab = LabelVocabulary(label_names);
    Rng rng(MixSeed(p.seed, prefix));
    for (size_t i = 0; i < size; ++i) {
      const size_t f = rng.Below(num_fine);
      const double u = rng.Uniform();
      const size_t k = std::min<size_t>(
          std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), cdf.size() - 1);
      const Entity& e = by_fine[f][k];
      size_t gold = e.label;
      if (rng.Bernoulli(p.label_noise)) {
        gold = (gold + 1 + rng.Below(p.num_labels - 1)) % p.num_labels;
      }
      char id[32];
      std::snprintf(id, sizeof id, "%s-%05zu", prefix, i);
      ds.examples.push_back(MakeExample(id, e, gold, p, rng));
    }
  };
  fill(bench.train, Split::kTrain, p.train_size, "train");
  fill(bench.test, Split::kTest, p.test_size, "test");
  return bench;
}

void WriteSynthetic(const SyntheticBenchmark& bench, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    return out;
  };
  {
    auto out = open("train.jsonl");
    WriteDataset(bench.train, out);
  }
  {
    auto out = open("test.jsonl");
    WriteDataset(bench.test, out);
  }
  auto out = open("catalog.jsonl");
  WriteCatalog(bench.catalog, out);
}

}  // namespace metashape
