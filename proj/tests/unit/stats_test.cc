#include <cmath>
#include <sstream>

#include "doctest.h"
#include "generators.h"
#include "metashape/error.h"
#include "metashape/stats.h"
#include "oracles.h"

using namespace metashape;
namespace oracle = metashape::testing::oracle;

namespace {

CountTable FromRows(const std::vector<testing::RawRow>& rows, size_t num_labels) {
  CountTable t(num_labels);
  for (const auto& r : rows) t.AddExample(r.labels, r.tokens);
  return t;
}

std::vector<std::string> Names(size_t k) {
  std::vector<std::string> n;
  for (size_t i = 0; i < k; ++i) n.push_back("L" + std::to_string(i));
  return n;
}

}  // namespace

TEST_CASE("toy corpus: token that only occurs with one class") {
  // A,m  A,m  B,x  B,x
  const std::vector<testing::RawRow> rows = {
      {{0}, {"m"}}, {{0}, {"m", "m"}}, {{1}, {"x"}}, {{1}, {"x"}}};
  const TrainStatistics stats(FromRows(rows, 2), 0.0, VocabSource::kMetadataTokens,
                              Names(2));
  CHECK(stats.Pmi(0, "m") == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(IsUndefinedPmi(stats.Pmi(1, "m")));
  const Distribution r = ConditionalClassDistribution("m", stats);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 0.0);
  CHECK(TokenEntropy("m", stats) == 0.0);
  CHECK(stats.counts().token_count("m") == 2);  // presence, not frequency
}

TEST_CASE("empty dataset gives an empty table") {
  Dataset ds;
  ds.label_vocab = LabelVocabulary({"a", "b", "c"});
  const CountTable t = BuildCounts(ds, VocabSource::kExampleTokens, MetadataCatalog{});
  CHECK(t.n_examples() == 0);
  CHECK(t.vocab_size() == 0);
  CHECK(t.class_counts() == std::vector<int64_t>{0, 0, 0});
  const TrainStatistics stats(t, 0.0, VocabSource::kExampleTokens, ds.label_vocab.names());
  CHECK(stats.frequencies() == std::vector<double>{0, 0, 0});
  CHECK(ConditionalClassDistribution("anything", stats) == Distribution::Uniform(3));
}

TEST_CASE("multi-label example increments every label") {
  CountTable t(3);
  const std::vector<LabelId> labels = {0, 2};
  const std::vector<std::string> toks = {"a", "b", "a"};
  t.AddExample(labels, toks);
  CHECK(t.n_examples() == 1);
  CHECK(t.class_counts() == std::vector<int64_t>{1, 0, 1});
  CHECK(t.joint_count(0, "a") == 1);
  CHECK(t.joint_count(1, "a") == 0);
  CHECK(t.joint_count(2, "a") == 1);
  CHECK(t.token_count("a") == 1);
}

TEST_CASE("independent token has zero pmi") {
  // m appears in half of each class.
  const std::vector<testing::RawRow> rows = {
      {{0}, {"m"}}, {{0}, {}}, {{1}, {"m"}}, {{1}, {}}};
  const TrainStatistics stats(FromRows(rows, 2), 0.0, VocabSource::kExampleTokens, Names(2));
  CHECK(std::fabs(stats.Pmi(0, "m")) < 1e-15);
  CHECK(std::fabs(stats.Pmi(1, "m")) < 1e-15);
  CHECK(TokenEntropy("m", stats) == doctest::Approx(1.0));
}

TEST_CASE("smoothing makes pmi finite") {
  const std::vector<testing::RawRow> rows = {{{0}, {"m"}}, {{1}, {"x"}}};
  const CountTable t = FromRows(rows, 2);
  CHECK(IsUndefinedPmi(Pmi(t, 1, "m", 0.0)));
  CHECK(std::isfinite(Pmi(t, 1, "m", 0.5)));
  CHECK(Pmi(t, 1, "m", 0.5) < Pmi(t, 0, "m", 0.5));
}

TEST_CASE("unseen token gives the uniform distribution") {
  for (double alpha : {0.0, 1.0}) {
    for (size_t k : {2u, 5u, 80u}) {
      const std::vector<testing::RawRow> rows = {{{0}, {"m"}}, {{1}, {"x"}}};
      const TrainStatistics stats(FromRows(rows, k), alpha, VocabSource::kExampleTokens,
                                  Names(k));
      CHECK(ConditionalClassDistribution("zzz", stats) == Distribution::Uniform(k));
      CHECK(TokenEntropy("zzz", stats) == std::log2(double(k)));
      CHECK(stats.PmiRow("zzz") == nullptr);
    }
  }
}

TEST_CASE("entropy values") {
  CHECK(Entropy(Distribution::Uniform(4)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(Entropy(Distribution::PointMass(4, 2)) == 0.0);
  CHECK(Entropy(Distribution::FromProbabilities({0.75, 0.25})) ==
        doctest::Approx(0.8112781244591328).epsilon(1e-12));
}

TEST_CASE("kl values") {
  const auto p = Distribution::FromProbabilities({0.2, 0.3, 0.5});
  CHECK(KlDivergence(p, p) == 0.0);
  CHECK(KlDivergence(Distribution::PointMass(2, 0), Distribution::Uniform(2)) ==
        doctest::Approx(1.0).epsilon(1e-15));
  // q has a zero where p does not: finite after smoothing.
  const double kl = KlDivergence(Distribution::Uniform(2), Distribution::PointMass(2, 0));
  CHECK(std::isfinite(kl));
  CHECK(kl > 10.0);
  CHECK_THROWS_AS(KlDivergence(Distribution::Uniform(2), Distribution::Uniform(3)),
                  std::invalid_argument);
}

TEST_CASE("distribution validation") {
  CHECK_THROWS(Distribution::FromProbabilities({0.5, 0.6}));
  CHECK_THROWS(Distribution::FromProbabilities({1.5, -0.5}));
  CHECK(Distribution::Normalize({0, 0, 0}) == Distribution::Uniform(3));
  CHECK(Distribution::Normalize({1, 3}).probs() == std::vector<double>{0.25, 0.75});
  CHECK(Distribution::FromProbabilities({0.1, 0.7, 0.2}).ArgMax() == 1);
}

TEST_CASE("prediction entropy") {
  std::vector<Distribution> rows(7, Distribution::Uniform(80));
  CHECK(PredictionEntropy(rows) == doctest::Approx(std::log2(80.0)).epsilon(1e-14));
  rows = {Distribution::Uniform(4), Distribution::PointMass(4, 0)};
  CHECK(PredictionEntropy(rows) == doctest::Approx(1.0));
  CHECK_THROWS_AS(PredictionEntropy(std::vector<Distribution>{}), std::invalid_argument);
}

TEST_CASE("category key is the folded, collapsed category") {
  CHECK(CategoryKey("Body  of Water") == "body of water");
  CHECK(CategoryKey(" Politician ") == "politician");
}

TEST_CASE("vocabulary sources") {
  MetadataCatalog catalog;
  catalog.Add({"Q1", {"Body of Water", "river"}, "a river in England"});
  Example ex;
  ex.id = "e";
  ex.text = "The Thames River flows.";
  ex.tokens = Tokenize(ex.text);
  ex.labels = {0};
  ex.mentions.push_back({Role::kMain, 4, 16, "Thames River", "Q1"});
  CHECK(ExampleVocabulary(ex, catalog, VocabSource::kExampleTokens) == ex.tokens);
  CHECK(ExampleVocabulary(ex, catalog, VocabSource::kMetadataTokens) ==
        std::vector<std::string>{"body of water", "river", "a", "river", "in", "england"});
  CHECK(ExampleVocabulary(ex, catalog, VocabSource::kMentionSurfaces) ==
        std::vector<std::string>{"thames river"});
  CHECK(ExampleVocabulary(ex, catalog, VocabSource::kBoth).size() == ex.tokens.size() + 6);
}

TEST_CASE("tf-idf over category pseudo-documents") {
  MetadataCatalog catalog;
  catalog.Add({"Q1", {"river"}, std::nullopt});
  catalog.Add({"Q2", {"city"}, std::nullopt});
  catalog.Add({"Q3", {"river", "city"}, std::nullopt});
  catalog.Add({"Q4", {"unused"}, std::nullopt});
  Dataset train;
  train.label_vocab = LabelVocabulary({"a", "b"});
  auto add = [&](const std::string& id, const std::string& text, const std::string& q) {
    Example ex;
    ex.id = id;
    ex.text = text;
    ex.tokens = Tokenize(text);
    ex.labels = {0};
    ex.mentions.push_back({Role::kMain, 0, 1, text.substr(0, 1), q});
    train.examples.push_back(ex);
  };
  add("1", "boats float on the water water", "Q1");
  add("2", "streets and water .", "Q2");
  add("3", "bridges , boats", "Q3");
  const CategoryTfidf tfidf(train, catalog);
  // N = 3 categories. df: water 2, boats 2, float 1, streets 1, bridges 2.
  const double idf1 = std::log(4.0 / 2.0) + 1.0;
  const double idf2 = std::log(4.0 / 3.0) + 1.0;
  CHECK(tfidf.Score("river", "water") == doctest::Approx(2 * idf2));
  CHECK(tfidf.Score("river", "float") == doctest::Approx(idf1));
  CHECK(tfidf.Score("river", "the") == 0.0);
  CHECK(tfidf.Score("city", ".") == 0.0);
  CHECK(tfidf.Score("city", "streets") == doctest::Approx(idf1));
  CHECK(tfidf.TopWords("river", 2) == std::vector<std::string>{"boats", "water"});
  CHECK(tfidf.TopWords("river", 10) == std::vector<std::string>{"boats", "water", "float", "bridges"});
  CHECK(tfidf.TopWords("unused", 3).empty());
  CHECK_THROWS_AS(tfidf.TopWords("ghost", 3), ValidationError);
}

TEST_CASE("property: tf-idf top words agree with brute force") {
  testing::Gen g(77);
  for (int round = 0; round < 25; ++round) {
    std::vector<std::string> ids;
    const MetadataCatalog catalog = testing::RandomCatalog(g, 8, &ids);
    const Dataset train = testing::RandomDataset(g, 25, 3, ids);
    const CategoryTfidf tfidf(train, catalog);
    for (const auto& cat : catalog.category_universe()) {
      // Brute force: recount from scratch.
      std::map<std::string, std::map<std::string, double>> tf;
      for (const auto& ex : train.examples) {
        std::set<std::string> cats;
        for (const auto& m : MetadataFor(ex, catalog)) cats.insert(m.categories.begin(), m.categories.end());
        for (const auto& c : cats) {
          for (const auto& t : ex.tokens) {
            bool alnum = false;
            for (char32_t ch : utf8::Decode(t)) alnum |= utf8::IsAlnum(ch);
            if (alnum && !IsStopWord(t)) tf[c][t] += 1;
          }
        }
      }
      std::vector<std::pair<double, std::string>> scored;
      for (const auto& [w, f] : tf[cat]) {
        double df = 0;
        for (const auto& [c, words] : tf) df += words.count(w);
        const double n = double(catalog.category_universe().size());
        scored.push_back({-f * (std::log((1 + n) / (1 + df)) + 1), w});
      }
      std::sort(scored.begin(), scored.end());
      const size_t k = g.Size(0, 6);
      std::vector<std::string> expect;
      for (size_t i = 0; i < std::min(k, scored.size()); ++i) expect.push_back(scored[i].second);
      CHECK(tfidf.TopWords(cat, k) == expect);
    }
  }
}

TEST_CASE("top pmi tokens") {
  const std::vector<testing::RawRow> rows = {
      {{0}, {"a", "b"}}, {{0}, {"a"}}, {{1}, {"b", "c"}}, {{1}, {"c"}}};
  const TrainStatistics stats(FromRows(rows, 2), 0.0, VocabSource::kExampleTokens, Names(2));
  CHECK(TopPmiTokens(stats, 0, 1) == std::vector<std::string>{"a"});
  CHECK(TopPmiTokens(stats, 1, 2) == std::vector<std::string>{"c", "b"});
  CHECK(TopPmiTokens(stats, 1, 10).size() == 2);  // "a" is undefined for label 1
}

TEST_CASE("property: pmi, conditional distribution and entropy match the recount") {
  testing::Gen g(101);
  for (int round = 0; round < 200; ++round) {
    const size_t k = g.Size(2, 6);
    const bool multi = g.Coin();
    const auto rows = testing::RandomRows(g, k, g.Size(1, 12), g.Size(0, 40), multi);
    const double alpha = g.Coin() ? 0.0 : g.Real() * 2;
    const CountTable t = FromRows(rows, k);
    const auto rc = oracle::CountRows(rows, k);
    const TrainStatistics stats(t, alpha, VocabSource::kExampleTokens, Names(k));
    for (const auto& [tok, counts] : t.tokens()) {
      for (size_t y = 0; y < k; ++y) {
        const double got = stats.Pmi(static_cast<LabelId>(y), tok);
        const double want = oracle::Pmi(rc, static_cast<LabelId>(y), tok, alpha);
        if (std::isinf(want)) {
          CHECK(IsUndefinedPmi(got));
        } else {
          CHECK(std::fabs(got - want) <= 1e-12);
        }
        if (alpha > 0) {
          CHECK(std::isfinite(got));
        }
        // Identity: pmi = log2 P(y|m) - log2 P(y) under the same estimates.
        if (alpha == 0 && std::isfinite(got)) {
          const double pym = double(t.joint_count(y, tok)) / double(t.token_count(tok));
          const double py = double(t.class_count(y)) / double(t.n_examples());
          CHECK(std::fabs(got - (std::log2(pym) - std::log2(py))) <= 1e-12);
        }
      }
      const auto want = oracle::ClassGivenToken(rc, tok, alpha);
      const Distribution got = ConditionalClassDistribution(tok, stats);
      double sum = 0.0;
      for (size_t y = 0; y < k; ++y) {
        CHECK(std::fabs(got[y] - want[y]) <= 1e-12);
        CHECK(got[y] >= 0.0);
        sum += got[y];
      }
      CHECK(std::fabs(sum - 1.0) <= 1e-12);
      const double h = TokenEntropy(tok, stats);
      CHECK(std::fabs(h - oracle::Entropy(want)) <= 1e-12);
      CHECK(h >= 0.0);
      CHECK(h <= std::log2(double(k)) + 1e-12);
    }
  }
}

TEST_CASE("property: counts are order independent and merge is associative") {
  testing::Gen g(202);
  for (int round = 0; round < 100; ++round) {
    const size_t k = g.Size(2, 5);
    auto rows = testing::RandomRows(g, k, 10, g.Size(0, 30), g.Coin());
    const CountTable whole = FromRows(rows, k);
    auto shuffled = rows;
    for (size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[g.Size(0, i - 1)]);
    CHECK(FromRows(shuffled, k) == whole);

    const size_t a = g.Size(0, rows.size());
    const size_t b = g.Size(a, rows.size());
    const CountTable t1 = FromRows({rows.begin(), rows.begin() + a}, k);
    const CountTable t2 = FromRows({rows.begin() + a, rows.begin() + b}, k);
    const CountTable t3 = FromRows({rows.begin() + b, rows.end()}, k);
    CountTable left = t1;
    left.Merge(t2);
    left.Merge(t3);
    CountTable right23 = t2;
    right23.Merge(t3);
    CountTable right = t1;
    right.Merge(right23);
    CountTable swapped = t3;
    swapped.Merge(t1);
    swapped.Merge(t2);
    CHECK(left == whole);
    CHECK(right == whole);
    CHECK(swapped == whole);
  }
}

TEST_CASE("property: thread count does not change counts") {
  testing::Gen g(303);
  for (int round = 0; round < 20; ++round) {
    std::vector<std::string> ids;
    const auto catalog = testing::RandomCatalog(g, 10, &ids);
    const auto ds = testing::RandomDataset(g, g.Size(0, 60), 4, ids, Split::kTrain, g.Coin());
    for (VocabSource src : {VocabSource::kExampleTokens, VocabSource::kMetadataTokens,
                            VocabSource::kBoth, VocabSource::kMentionSurfaces}) {
      const auto one = BuildCounts(ds, src, catalog, true, 1);
      CHECK(BuildCounts(ds, src, catalog, true, 3) == one);
      CHECK(BuildCounts(ds, src, catalog, true, 8) == one);
    }
  }
}

TEST_CASE("property: statistics serialization round trip") {
  testing::Gen g(404);
  for (int round = 0; round < 50; ++round) {
    const size_t k = g.Size(2, 5);
    const auto rows = testing::RandomRows(g, k, 15, g.Size(0, 30), g.Coin());
    const double alpha = g.Coin() ? 0.0 : 0.25;
    const TrainStatistics stats(FromRows(rows, k), alpha, VocabSource::kBoth, Names(k), g.Coin());
    std::stringstream buf;
    WriteStatistics(stats, buf);
    const TrainStatistics back = ReadStatistics(buf, "mem");
    CHECK(back.counts() == stats.counts());
    CHECK(back.alpha() == stats.alpha());
    CHECK(back.source() == stats.source());
    CHECK(back.fold_case() == stats.fold_case());
    CHECK(back.label_names() == stats.label_names());
    for (const auto& [tok, c] : stats.counts().tokens()) {
      CHECK(ConditionalClassDistribution(tok, back) == ConditionalClassDistribution(tok, stats));
    }
    std::stringstream again;
    WriteStatistics(back, again);
    std::stringstream first;
    WriteStatistics(stats, first);
    CHECK(again.str() == first.str());
  }
}

TEST_CASE("statistics reader rejects bad input") {
  std::istringstream junk("{\"format\":\"something else\"}");
  CHECK_THROWS_AS(ReadStatistics(junk, "mem"), ValidationError);
  std::istringstream broken("{");
  CHECK_THROWS_AS(ReadStatistics(broken, "mem"), ValidationError);
}

TEST_CASE("property: kl is nonnegative and zero on identical inputs") {
  testing::Gen g(505);
  for (int round = 0; round < 500; ++round) {
    const size_t k = g.Size(1, 8);
    const auto p = testing::RandomProbs(g, k, g.Coin());
    const auto q = testing::RandomProbs(g, k, g.Coin());
    const double kl = KlDivergence(Distribution::FromProbabilities(p, 1e-9),
                                   Distribution::FromProbabilities(q, 1e-9));
    CHECK(kl >= 0.0);
    CHECK(std::fabs(kl - oracle::Kl(p, q)) <= 1e-9 * std::max(1.0, kl));
    CHECK(KlDivergence(Distribution::FromProbabilities(p, 1e-9),
                       Distribution::FromProbabilities(p, 1e-9)) == doctest::Approx(0.0));
  }
}
