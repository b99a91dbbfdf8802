#ifndef METASHAPE_SYNTHETIC_H_
#define METASHAPE_SYNTHETIC_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "metashape/catalog.h"
#include "metashape/corpus.h"

namespace metashape {

// Category-structured benchmark. Every label owns `fine_per_label` fine
// categories; coarse categories cover label pairs; generic categories are
// label independent. Entity popularity inside a fine category is Zipf.
struct SyntheticParams {
  size_t num_labels = 8;
  size_t fine_per_label = 4;
  size_t entities_per_category = 50;
  size_t generic_categories = 6;
  size_t generic_per_entity = 2;
  double zipf_exponent = 1.0;
  double label_noise = 0.1;  // gold label replaced by another label
  double cue_rate = 0.25;    // chance the context carries a label cue word
  size_t context_words = 8;
  size_t description_words = 6;
  size_t train_size = 3000;
  size_t test_size = 1000;
  uint64_t seed = 0;

  void Validate() const;
};

void SetSyntheticOption(SyntheticParams* params, std::string_view key,
                        std::string_view value);
std::map<std::string, std::string> SyntheticValues(const SyntheticParams& p);

struct SyntheticBenchmark {
  Dataset train;
  Dataset test;
  MetadataCatalog catalog;
};

SyntheticBenchmark GenerateSynthetic(const SyntheticParams& params);

// Writes train.jsonl, test.jsonl and catalog.jsonl into `dir`.
void WriteSynthetic(const SyntheticBenchmark& bench, const std::string& dir);

}  // namespace metashape

#endif  // METASHAPE_SYNTHETIC_H_
