#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "doctest.h"
#include "metashape/error.h"
#include "metashape/synthetic.h"

using namespace metashape;

namespace {

// Share of catalog entities that no training mention links to.
double InventoryUnseen(const SyntheticBenchmark& b) {
  std::set<std::string> seen;
  for (const auto& ex : b.train.examples) {
    for (const auto& m : ex.mentions) seen.insert(*m.entity_id);
  }
  size_t unseen = 0;
  for (const auto& [id, rec] : b.catalog.records()) unseen += seen.count(id) == 0;
  return double(unseen) / double(b.catalog.size());
}

}  // namespace

TEST_CASE("fine category predicts the label when there is no noise") {
  SyntheticParams p;
  p.num_labels = 2;
  p.fine_per_label = 1;
  p.label_noise = 0.0;
  p.train_size = 300;
  p.test_size = 100;
  const auto b = GenerateSynthetic(p);
  CHECK(b.train.examples.size() == 300);
  CHECK(b.test.examples.size() == 100);
  CHECK(b.train.label_vocab.names() == std::vector<std::string>{"label_00", "label_01"});
  for (const auto* ds : {&b.train, &b.test}) {
    for (const auto& ex : ds->examples) {
      REQUIRE(ex.mentions.size() == 1);
      const auto* rec = b.catalog.Find(*ex.mentions[0].entity_id);
      REQUIRE(rec != nullptr);
      const std::string fine = ex.labels[0] == 0 ? "kind00" : "kind01";
      CHECK(std::find(rec->categories.begin(), rec->categories.end(), fine) !=
            rec->categories.end());
    }
  }
}

TEST_CASE("every mention span matches its surface and entity") {
  SyntheticParams p;
  p.train_size = 200;
  p.test_size = 50;
  const auto b = GenerateSynthetic(p);
  std::stringstream buf;
  WriteDataset(b.train, buf);
  LoadOptions opts;
  opts.vocab = &b.train.label_vocab;
  const Dataset back = ReadDataset(buf, opts, "mem");
  REQUIRE(back.examples.size() == b.train.examples.size());
  for (size_t i = 0; i < back.examples.size(); ++i) CHECK(back.examples[i] == b.train.examples[i]);
}

TEST_CASE("same seed gives identical output; different seed differs") {
  SyntheticParams p;
  p.train_size = 100;
  p.test_size = 20;
  p.seed = 5;
  auto dump = [](const SyntheticBenchmark& b) {
    std::ostringstream out;
    WriteDataset(b.train, out);
    WriteDataset(b.test, out);
    WriteCatalog(b.catalog, out);
    return out.str();
  };
  const std::string a = dump(GenerateSynthetic(p));
  CHECK(dump(GenerateSynthetic(p)) == a);
  p.seed = 6;
  CHECK(dump(GenerateSynthetic(p)) != a);
}

TEST_CASE("share of the entity inventory never seen in training grows with the Zipf exponent") {
  SyntheticParams p;
  p.train_size = 2000;
  p.test_size = 10;
  double prev = -1.0;
  for (double s : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    p.zipf_exponent = s;
    const double u = InventoryUnseen(GenerateSynthetic(p));
    CAPTURE(s);
    CHECK(u > prev);
    prev = u;
  }
}

TEST_CASE("invalid parameters") {
  auto bad = [](auto mutate) {
    SyntheticParams p;
    mutate(p);
    return p;
  };
  CHECK_THROWS_AS(GenerateSynthetic(bad([](auto& p) { p.num_labels = 1; })), ValidationError);
  CHECK_THROWS_AS(GenerateSynthetic(bad([](auto& p) { p.zipf_exponent = -1; })), ValidationError);
  CHECK_THROWS_AS(GenerateSynthetic(bad([](auto& p) { p.label_noise = 2; })), ValidationError);
  CHECK_THROWS_AS(GenerateSynthetic(bad([](auto& p) { p.train_size = 0; })), ValidationError);
  CHECK_THROWS_AS(GenerateSynthetic(bad([](auto& p) { p.generic_per_entity = 9; })),
                  ValidationError);
  SyntheticParams p;
  CHECK_THROWS_AS(SetSyntheticOption(&p, "colour", "1"), ValidationError);
  CHECK_THROWS_AS(SetSyntheticOption(&p, "zipf_exponent", "x"), ValidationError);
  SetSyntheticOption(&p, "zipf_exponent", "1.25");
  CHECK(p.zipf_exponent == 1.25);
  CHECK(SyntheticValues(p).at("zipf_exponent") == "1.25");
}

TEST_CASE("written files load back") {
  SyntheticParams p;
  p.train_size = 30;
  p.test_size = 10;
  const auto b = GenerateSynthetic(p);
  const auto dir = std::filesystem::temp_directory_path() / "metashape_synth_test";
  std::filesystem::remove_all(dir);
  WriteSynthetic(b, dir.string());
  const auto catalog = LoadCatalog((dir / "catalog.jsonl").string());
  CHECK(catalog.records() == b.catalog.records());
  LoadOptions opts;
  opts.split = Split::kTest;
  const auto test = LoadDataset((dir / "test.jsonl").string(), opts);
  CHECK(test.examples.size() == 10);
  std::filesystem::remove_all(dir);
}
