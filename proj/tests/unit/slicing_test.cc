#include <cmath>
#include <sstream>

#include "doctest.h"
#include "generators.h"
#include "metashape/error.h"
#include "metashape/selection.h"
#include "metashape/slicing.h"
#include "oracles.h"

using namespace metashape;
namespace oracle = metashape::testing::oracle;

namespace {

Example Mention(const std::string& id, const std::string& text, size_t end, LabelId y,
                Role role = Role::kMain) {
  Example ex;
  ex.id = id;
  ex.text = text;
  ex.tokens = Tokenize(text);
  ex.labels = {y};
  ex.mentions.push_back({role, 0, end, text.substr(0, end), std::nullopt});
  return ex;
}

Dataset Make(std::vector<Example> examples, Split split = Split::kTest, size_t k = 2) {
  Dataset ds;
  ds.split = split;
  std::vector<std::string> names;
  for (size_t i = 0; i < k; ++i) names.push_back("L" + std::to_string(i));
  ds.label_vocab = LabelVocabulary(names);
  ds.examples = std::move(examples);
  return ds;
}

Dataset TrainWithParis(int times) {
  std::vector<Example> ex;
  for (int i = 0; i < times; ++i) ex.push_back(Mention("tr" + std::to_string(i), "Paris x", 5, 0));
  return Make(ex, Split::kTrain);
}

Prediction Predict(LabelId y, size_t k = 2) {
  return {{y}, Distribution::PointMass(k, static_cast<size_t>(y))};
}

}  // namespace

TEST_CASE("tail and head at the threshold") {
  const Dataset test = Make({Mention("a", "Paris y", 5, 0), Mention("b", "Lyon y", 4, 0)});
  {
    const auto index = BuildPopularityIndex(TrainWithParis(10));
    const auto [tail, head] = TailHeadSplit(test, index, 10);
    CHECK(tail.member_ids == std::vector<std::string>{"b"});  // count 0
    CHECK(head.member_ids == std::vector<std::string>{"a"});  // exactly 10
  }
  {
    const auto index = BuildPopularityIndex(TrainWithParis(9));
    const auto [tail, head] = TailHeadSplit(test, index, 10);
    CHECK(tail.member_ids == std::vector<std::string>{"a", "b"});
    CHECK(head.member_ids.empty());
  }
  {
    const auto index = BuildPopularityIndex(TrainWithParis(1));
    const auto [tail, head] = TailHeadSplit(test, index, 0);
    CHECK(tail.member_ids.empty());
    CHECK(head.member_ids.size() == 2);
  }
}

TEST_CASE("a single rare mention puts a relation example in the tail") {
  Example ex;
  ex.id = "r";
  ex.text = "Paris Zork";
  ex.tokens = Tokenize(ex.text);
  ex.labels = {0};
  ex.mentions.push_back({Role::kSubject, 0, 5, "Paris", std::nullopt});
  ex.mentions.push_back({Role::kObject, 6, 10, "Zork", std::nullopt});
  std::vector<Example> train;
  for (int i = 0; i < 12; ++i) {
    Example t = ex;
    t.id = "t" + std::to_string(i);
    t.mentions.pop_back();
    train.push_back(t);
  }
  const auto index = BuildPopularityIndex(Make(train, Split::kTrain));
  const Dataset test = Make({ex});
  CHECK(TailHeadSplit(test, index, 10).first.member_ids.size() == 1);
  const Role subject_only[] = {Role::kSubject};
  CHECK(TailHeadSplit(test, index, 10, subject_only).second.member_ids.size() == 1);
}

TEST_CASE("property: tail and head partition the test set") {
  testing::Gen g(2121);
  for (int round = 0; round < 80; ++round) {
    const Dataset train = testing::RandomDataset(g, g.Size(0, 60), 3, {});
    Dataset test = testing::RandomDataset(g, g.Size(0, 40), 3, {}, Split::kTest);
    const auto index = BuildPopularityIndex(train);
    const int64_t threshold = g.Int(0, 5);
    const auto [tail, head] = TailHeadSplit(test, index, threshold);
    std::set<std::string> t(tail.member_ids.begin(), tail.member_ids.end());
    std::set<std::string> h(head.member_ids.begin(), head.member_ids.end());
    CHECK(t.size() + h.size() == test.examples.size());
    for (const auto& ex : test.examples) {
      CHECK(t.count(ex.id) + h.count(ex.id) == 1);
      bool rare = false;
      for (const auto& m : ex.mentions) rare |= index.Count(m.role, m.surface) < threshold;
      CHECK(t.count(ex.id) == (rare ? 1u : 0u));
    }
    // Raising the threshold can only grow the tail.
    const auto bigger = TailHeadSplit(test, index, threshold + 1).first;
    CHECK(bigger.member_ids.size() >= tail.member_ids.size());
  }
}

TEST_CASE("subpopulation membership") {
  Dataset test = Make({Mention("a", "Thames boats float", 6, 0),
                       Mention("b", "Thames is long", 6, 0),
                       Mention("c", "boats everywhere", 5, 1)});
  const std::map<std::string, std::vector<std::string>> cues = {{"river", {"boats", "float"}},
                                                                {"city", {"long"}}};
  std::map<std::string, std::set<std::string>> inserted = {{"a", {"river"}}, {"b", {"river"}}};
  CHECK(SubpopulationSlice(test, cues, inserted).member_ids == std::vector<std::string>{"a"});
  inserted["b"].insert("city");
  CHECK(SubpopulationSlice(test, cues, inserted).member_ids ==
        std::vector<std::string>{"a", "b"});
}

TEST_CASE("inserted categories only count category units") {
  SelectionResult s{"a", {{0, Role::kMain, {{UnitSource::kCategory, "river", 0},
                                             {UnitSource::kDescription, "long", NAN}}}}};
  const std::vector<SelectionResult> v = {s};
  const auto m = InsertedCategories(v);
  CHECK(m.at("a") == std::set<std::string>{"river"});
}

namespace {

// Span stats: "thames river" is seen with label 0 (three times). Metadata
// stats: "body of water" is seen with label 1.
struct Misleading {
  Dataset train;
  TrainStatistics span_stats;
  TrainStatistics meta_stats;
  SpanPopularityIndex index;
};

Misleading MakeMisleading() {
  Misleading m;
  std::vector<Example> train;
  for (int i = 0; i < 3; ++i) train.push_back(Mention("s" + std::to_string(i), "Thames River", 12, 0));
  train.push_back(Mention("o", "Nile", 4, 1));
  m.train = Make(train, Split::kTrain);
  m.index = BuildPopularityIndex(m.train);
  m.span_stats = TrainStatistics(BuildCounts(m.train, VocabSource::kMentionSurfaces, {}), 0.0,
                                 VocabSource::kMentionSurfaces, m.train.label_vocab.names());
  CountTable meta(2);
  meta.SetTotals(4, {3, 1});
  meta.AddTokenCounts("body of water", {1, {0, 1}});
  meta.AddTokenCounts("river", {2, {1, 1}});
  m.meta_stats = TrainStatistics(meta, 0.0, VocabSource::kMetadataTokens, {"L0", "L1"});
  return m;
}

}  // namespace

TEST_CASE("misleading metadata slice") {
  const Misleading m = MakeMisleading();
  const Dataset test = Make({Mention("t1", "Thames River flows", 12, 0),
                             Mention("t2", "Thames River again", 12, 1),
                             Mention("t3", "Unknown place", 7, 0)});
  const std::vector<SelectionResult> sel = {
      {"t1", {{0, Role::kMain, {{UnitSource::kCategory, "Body of Water", 0}}}}},
      {"t2", {{0, Role::kMain, {{UnitSource::kCategory, "Body of Water", 0}}}}},
      {"t3", {{0, Role::kMain, {{UnitSource::kCategory, "Body of Water", 0}}}}}};
  // t1: Y_p = {0}, Y_m = {1}, gold 0 -> member. t2: gold 1 is in Y_m. t3: Y_p empty.
  CHECK(MisleadingMetadataSlice(test, m.span_stats, m.meta_stats, sel, m.index, 1).member_ids ==
        std::vector<std::string>{"t1"});
  CHECK(MisleadingMetadataSlice(test, m.span_stats, m.meta_stats, sel, m.index, 3).member_ids ==
        std::vector<std::string>{"t1"});
  CHECK(MisleadingMetadataSlice(test, m.span_stats, m.meta_stats, sel, m.index, 4).member_ids
            .empty());
  // No inserted metadata: Y_m is empty.
  const std::vector<SelectionResult> empty = {{"t1", {{0, Role::kMain, {}}}}};
  CHECK(MisleadingMetadataSlice(test, m.span_stats, m.meta_stats, empty, m.index, 1).member_ids
            .empty());
  // Description tokens contribute to Y_m too.
  const std::vector<SelectionResult> desc = {
      {"t1", {{0, Role::kMain, {{UnitSource::kDescription, "River", NAN}}}}}};
  // "river" has positive PMI for label 1 only (1/2 vs 1/4).
  CHECK(MisleadingMetadataSlice(test, m.span_stats, m.meta_stats, desc, m.index, 1).member_ids ==
        std::vector<std::string>{"t1"});
}

TEST_CASE("property: misleading slice shrinks as min_seen grows") {
  testing::Gen g(2323);
  for (int round = 0; round < 40; ++round) {
    std::vector<std::string> ids;
    const auto catalog = testing::RandomCatalog(g, 8, &ids);
    const Dataset train = testing::RandomDataset(g, 50, 3, ids);
    const Dataset test = testing::RandomDataset(g, 30, 3, ids, Split::kTest);
    const TrainStatistics span(BuildCounts(train, VocabSource::kMentionSurfaces, catalog), 0.0,
                               VocabSource::kMentionSurfaces, train.label_vocab.names());
    const TrainStatistics meta = Precompute(train, catalog);
    const auto sel = SelectDataset(test, catalog, meta, {}, 3);
    const auto index = BuildPopularityIndex(train);
    std::set<std::string> prev;
    for (int64_t k = 0; k <= 6; ++k) {
      const auto s = MisleadingMetadataSlice(test, span, meta, sel, index, k);
      std::set<std::string> cur(s.member_ids.begin(), s.member_ids.end());
      if (k > 0) CHECK(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
      prev = cur;
    }
  }
}

TEST_CASE("top pmi slice") {
  CountTable t(2);
  t.SetTotals(4, {2, 2});
  t.AddTokenCounts("goal", {2, {2, 0}});
  t.AddTokenCounts("vote", {2, {0, 2}});
  const TrainStatistics stats(t, 0.0, VocabSource::kExampleTokens, {"L0", "L1"});
  const Dataset test = Make({Mention("a", "a goal", 1, 0), Mention("b", "a goal", 1, 1),
                             Mention("c", "the vote", 3, 1)});
  CHECK(TopPmiSlice(test, stats, 1).member_ids == std::vector<std::string>{"a", "c"});
  CHECK(TopPmiSlice(test, stats, 0).member_ids.empty());
}

TEST_CASE("slice metrics") {
  const Dataset test = Make({Mention("a", "x", 1, 0), Mention("b", "x", 1, 1),
                             Mention("c", "x", 1, 0), Mention("d", "x", 1, 1),
                             Mention("e", "x", 1, 0), Mention("f", "x", 1, 1)});
  const SliceDefinition all = WholeSet(test);
  CHECK(all.member_ids.size() == 6);
  PredictionMap perfect, wrong, four;
  for (const auto& ex : test.examples) {
    perfect[ex.id] = Predict(ex.labels[0]);
    wrong[ex.id] = Predict(1 - ex.labels[0]);
    four[ex.id] = Predict(ex.id < "e" ? ex.labels[0] : 1 - ex.labels[0]);
  }
  const auto p = ScoreSlice(all, perfect, test);
  CHECK(p.f1 == 1.0);
  CHECK(p.precision == 1.0);
  CHECK(p.recall == 1.0);
  CHECK(p.mean_entropy == 0.0);
  CHECK(ScoreSlice(all, wrong, test).f1 == 0.0);
  const auto f = ScoreSlice(all, four, test);
  CHECK(f.true_positives == 4);
  CHECK(f.f1 == doctest::Approx(4.0 / 6.0));
  CHECK(f.support == 6);

  SliceDefinition empty{"empty", {}, {}};
  const auto e = ScoreSlice(empty, perfect, test);
  CHECK_FALSE(e.defined);
  CHECK(e.support == 0);
  CHECK(SliceReportTable(MakeSliceReport(perfect, test, std::vector{empty}))
            .find("n/a") != std::string::npos);

  PredictionMap missing = perfect;
  missing.erase("c");
  CHECK_THROWS_AS(ScoreSlice(all, missing, test), ValidationError);
}

TEST_CASE("property: metrics match a recount and disjoint slices combine exactly") {
  testing::Gen g(2424);
  for (int round = 0; round < 200; ++round) {
    const size_t k = g.Size(2, 5);
    const bool multi = g.Coin();
    const Dataset test = testing::RandomDataset(g, g.Size(1, 40), k, {}, Split::kTest, multi);
    PredictionMap preds;
    for (const auto& ex : test.examples) {
      Prediction p;
      std::set<LabelId> ls;
      const size_t n = multi ? g.Size(0, k) : 1;
      while (ls.size() < n) ls.insert(static_cast<LabelId>(g.Size(0, k - 1)));
      p.predicted.assign(ls.begin(), ls.end());
      p.scores = Distribution::FromProbabilities(testing::RandomProbs(g, k, true), 1e-9);
      preds[ex.id] = p;
    }
    // Random partition into up to 4 parts.
    std::vector<SliceDefinition> parts(g.Size(1, 4));
    for (size_t i = 0; i < parts.size(); ++i) parts[i].name = "p" + std::to_string(i);
    for (const auto& ex : test.examples) parts[g.Size(0, parts.size() - 1)].member_ids.push_back(ex.id);
    std::vector<SliceMetrics> scored;
    for (const auto& p : parts) scored.push_back(ScoreSlice(p, preds, test));
    const SliceMetrics pooled = CombineSlices(scored, "all");
    const SliceMetrics whole = ScoreSlice(WholeSet(test), preds, test);

    oracle::Micro micro;
    double h = 0.0;
    for (const auto& ex : test.examples) {
      const auto& p = preds[ex.id];
      for (LabelId y : p.predicted) {
        micro.pred += 1;
        micro.tp += std::count(ex.labels.begin(), ex.labels.end(), y);
      }
      micro.gold += double(ex.labels.size());
      h += oracle::Entropy(p.scores.probs());
    }
    h /= double(test.examples.size());
    CHECK(std::fabs(whole.precision - micro.P()) <= 1e-12);
    CHECK(std::fabs(whole.recall - micro.R()) <= 1e-12);
    CHECK(std::fabs(whole.f1 - micro.F1()) <= 1e-12);
    CHECK(std::fabs(whole.mean_entropy - h) <= 1e-12);
    CHECK(pooled.support == whole.support);
    CHECK(pooled.true_positives == whole.true_positives);
    CHECK(std::fabs(pooled.f1 - whole.f1) <= 1e-12);
    CHECK(std::fabs(pooled.mean_entropy - whole.mean_entropy) <= 1e-12);
  }
}

TEST_CASE("property: predictions survive a round trip") {
  testing::Gen g(2525);
  for (int round = 0; round < 30; ++round) {
    const size_t k = g.Size(2, 6);
    const Dataset test = testing::RandomDataset(g, g.Size(1, 20), k, {}, Split::kTest);
    PredictionMap preds;
    std::vector<std::string> order;
    for (const auto& ex : test.examples) {
      const auto probs = testing::RandomProbs(g, k, true);
      const auto d = Distribution::FromProbabilities(probs, 1e-9);
      preds[ex.id] = {{static_cast<LabelId>(d.ArgMax())}, d};
      order.push_back(ex.id);
    }
    std::stringstream buf;
    WritePredictions(preds, order, test.label_vocab, buf);
    const PredictionMap back = ReadPredictions(buf, test.label_vocab, "mem");
    REQUIRE(back.size() == preds.size());
    for (const auto& [id, p] : preds) {
      CHECK(back.at(id).predicted == p.predicted);
      // Scores are renormalized on read.
      for (size_t y = 0; y < k; ++y) CHECK(std::fabs(back.at(id).scores[y] - p.scores[y]) <= 1e-15);
    }
  }
}

TEST_CASE("prediction reader errors") {
  const LabelVocabulary vocab({"a", "b"});
  std::istringstream unknown(R"({"id":"x","predicted":["zzz"]})");
  CHECK_THROWS_AS(ReadPredictions(unknown, vocab, "p"), RecordError);
  std::istringstream dup(R"({"id":"x","predicted":["a"]})"
                         "\n"
                         R"({"id":"x","predicted":["b"]})");
  CHECK_THROWS_AS(ReadPredictions(dup, vocab, "p"), ValidationError);
}

TEST_CASE("report formats") {
  const Dataset test = Make({Mention("a", "x", 1, 0), Mention("b", "x", 1, 1)});
  PredictionMap preds = {{"a", Predict(0)}, {"b", Predict(0)}};
  const std::vector<SliceDefinition> slices = {WholeSet(test), {"only_b", {"b"}, {}}};
  const SliceReport r = MakeSliceReport(preds, test, slices);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.Find("only_b")->f1 == 0.0);
  CHECK(r.Find("nope") == nullptr);
  const std::string table = SliceReportTable(r);
  CHECK(table.find("all") != std::string::npos);
  CHECK(table.find("only_b") != std::string::npos);
  const std::string json = SliceReportJson(r);
  CHECK(json.find("\"only_b\"") != std::string::npos);
  CHECK(json.find("\"f1\"") != std::string::npos);
}
