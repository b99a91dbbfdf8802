#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cli.h"
#include "doctest.h"

namespace fs = std::filesystem;
using metashape::cli::Run;

namespace {

const fs::path kSource = METASHAPE_SOURCE_DIR;
const fs::path kToy = kSource / "data" / "toy";
const fs::path kGolden = kSource / "tests" / "golden";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Call(std::vector<std::string> args) {
  args.insert(args.begin(), "metashape");
  std::ostringstream out, err;
  const int code = Run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot read " << p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("metashape_cli_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& f) const { return (path_ / f).string(); }

 private:
  fs::path path_;
};

std::string Toy(const std::string& f) { return (kToy / f).string(); }

// The bundled pipeline: stats, select, shape both splits, eval, slice.
void Pipeline(const TempDir& t, const std::string& threads) {
  auto ok = [](const Result& r) {
    INFO(r.err);
    REQUIRE(r.code == 0);
  };
  ok(Call({"stats", "--train", Toy("train.jsonl"), "--catalog", Toy("catalog.jsonl"),
           "--stats-out", t / "stats.json", "--threads", threads}));
  ok(Call({"select", "--data", Toy("test.jsonl"), "--catalog", Toy("catalog.jsonl"),
           "--stats-in", t / "stats.json", "--n", "2", "--out", t / "selections.jsonl",
           "--threads", threads}));
  ok(Call({"shape", "--data", Toy("test.jsonl"), "--catalog", Toy("catalog.jsonl"),
           "--stats-in", t / "stats.json", "--config", Toy("shaping.cfg"), "--out",
           t / "test.shaped.jsonl", "--report", t / "report.json", "--threads", threads}));
  ok(Call({"shape", "--data", Toy("train.jsonl"), "--catalog", Toy("catalog.jsonl"),
           "--stats-in", t / "stats.json", "--config", Toy("shaping.cfg"), "--out",
           t / "train.shaped.jsonl", "--threads", threads}));
  ok(Call({"eval", "--train", t / "train.shaped.jsonl", "--test", t / "test.shaped.jsonl",
           "--slices", "all,tail_head", "--threshold", "2", "--predictions-out",
           t / "predictions.jsonl", "--out", t / "eval.txt"}));
  ok(Call({"slice", "--test", Toy("test.jsonl"), "--predictions", t / "predictions.jsonl",
           "--train", Toy("train.jsonl"), "--catalog", Toy("catalog.jsonl"), "--stats-in",
           t / "stats.json", "--selections", t / "selections.jsonl", "--threshold", "2",
           "--min-seen", "1", "--top-pmi", "2", "--out", t / "slices.txt"}));
}

const char* kGoldenFiles[] = {"stats.json",  "selections.jsonl", "test.shaped.jsonl",
                              "report.json", "eval.txt",         "slices.txt"};

}  // namespace

TEST_CASE("exit codes") {
  ::unsetenv("METASHAPE_THREADS");
  CHECK(Call({"--help"}).code == 0);
  CHECK(Call({"shape", "--help"}).code == 0);
  CHECK(Call({"shape", "--help"}).out.find("--stats-in") != std::string::npos);
  CHECK(Call({}).code == 2);
  CHECK(Call({"frobnicate"}).code == 2);

  const Result missing = Call({"select", "--data", Toy("test.jsonl"), "--catalog",
                               Toy("catalog.jsonl")});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("--stats-in") != std::string::npos);

  const Result bad_value = Call({"stats", "--train", Toy("train.jsonl"), "--catalog",
                                 Toy("catalog.jsonl"), "--stats-out", "x", "--alpha", "abc"});
  CHECK(bad_value.code == 2);

  TempDir t("codes");
  const Result missing_file = Call({"stats", "--train", t / "nope.jsonl", "--catalog",
                                    Toy("catalog.jsonl"), "--stats-out", t / "s.json"});
  CHECK(missing_file.code == 1);
  CHECK_FALSE(missing_file.err.empty());

  {
    std::ofstream bad(t / "bad.jsonl");
    bad << R"({"id":"a","text":"ab","labels":["x"],"spans":[]})" << "\n"
        << R"({"id":"b","text":"ab","labels":["y"],"spans":[{"role":"main","start":0,"end":9}]})"
        << "\n";
  }
  const Result bad_record = Call({"stats", "--train", t / "bad.jsonl", "--catalog",
                                  Toy("catalog.jsonl"), "--stats-out", t / "s.json"});
  CHECK(bad_record.code == 1);
  CHECK(bad_record.err.find("bad.jsonl:2") != std::string::npos);
  CHECK(bad_record.err.find("spans[0].end") != std::string::npos);
  CHECK_FALSE(fs::exists(t / "s.json"));
}

TEST_CASE("golden pipeline on the bundled toy corpus") {
  ::unsetenv("METASHAPE_THREADS");
  TempDir t("golden");
  Pipeline(t, "1");
  for (const char* f : kGoldenFiles) {
    CAPTURE(f);
    CHECK(Slurp(t / f) == Slurp(kGolden / f));
  }
  // Every file output has a manifest naming its inputs.
  const std::string manifest = Slurp(t / "test.shaped.jsonl.manifest.json");
  CHECK(manifest.find("\"subcommand\": \"shape\"") != std::string::npos);
  CHECK(manifest.find("catalog.jsonl") != std::string::npos);
  CHECK(manifest.find("\"budget_n\": \"2\"") != std::string::npos);
  CHECK(manifest.find("threads") == std::string::npos);
}

TEST_CASE("outputs and manifests are byte-identical across thread counts") {
  ::unsetenv("METASHAPE_THREADS");
  TempDir t("threads");
  Pipeline(t, "1");
  std::map<std::string, std::string> first;
  for (const auto& e : fs::directory_iterator(fs::path(t / ""))) {
    first[e.path().filename().string()] = Slurp(e.path());
  }
  Pipeline(t, "8");
  for (const auto& [name, bytes] : first) {
    CAPTURE(name);
    CHECK(Slurp(t / name) == bytes);
  }
  CHECK(first.size() >= 12);
}

TEST_CASE("thread count falls back to the environment") {
  TempDir t("env");
  ::setenv("METASHAPE_THREADS", "4", 1);
  CHECK(Call({"stats", "--train", Toy("train.jsonl"), "--catalog", Toy("catalog.jsonl"),
              "--stats-out", t / "s.json"})
            .code == 0);
  ::setenv("METASHAPE_THREADS", "many", 1);
  CHECK(Call({"stats", "--train", Toy("train.jsonl"), "--catalog", Toy("catalog.jsonl"),
              "--stats-out", t / "s2.json"})
            .code == 2);
  ::unsetenv("METASHAPE_THREADS");
  CHECK(Slurp(t / "s.json") == Slurp(kGolden / "stats.json"));
}

TEST_CASE("select reports kl against a second strategy") {
  TempDir t("kl");
  REQUIRE(Call({"stats", "--train", Toy("train.jsonl"), "--catalog", Toy("catalog.jsonl"),
                "--stats-out", t / "s.json"})
              .code == 0);
  const Result r = Call({"select", "--data", Toy("test.jsonl"), "--catalog",
                         Toy("catalog.jsonl"), "--stats-in", t / "s.json", "--n", "1",
                         "--kl-vs", "random"});
  CHECK(r.code == 0);
  CHECK(r.err.find("KL(high_rank || random)") != std::string::npos);
  CHECK(r.out.find("\"te01\"") != std::string::npos);
}

TEST_CASE("gen-synthetic writes a loadable benchmark") {
  TempDir t("synth");
  const Result r = Call({"gen-synthetic", "--out-dir", t / "bench", "--train-size", "50",
                         "--test-size", "10", "--seed", "3"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(t / "bench/train.jsonl"));
  CHECK(fs::exists(t / "bench/catalog.jsonl"));
  CHECK(fs::exists(t / "bench/manifest.json"));
  CHECK(Call({"stats", "--train", t / "bench/train.jsonl", "--catalog",
              t / "bench/catalog.jsonl", "--stats-out", t / "s.json"})
            .code == 0);
  CHECK(Call({"gen-synthetic", "--out-dir", t / "x", "--param", "bogus=1"}).code == 1);
}
