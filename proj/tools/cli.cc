#include "cli.h"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "metashape/catalog.h"
#include "metashape/corpus.h"
#include "metashape/error.h"
#include "metashape/manifest.h"
#include "metashape/oracle.h"
#include "metashape/selection.h"
#include "metashape/shaping.h"
#include "metashape/slicing.h"
#include "metashape/stats.h"
#include "metashape/synthetic.h"
#include "metashape/util/kvconfig.h"

namespace metashape::cli {

namespace {

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << text;
  if (!f) throw ValidationError("failed writing '" + path + "'");
}

// Writes `text` to `path`, or to `out` when no path was given.
void Emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    WriteText(path, text);
  }
}

void EmitManifest(RunManifest manifest, const std::string& output) {
  if (output.empty()) return;
  manifest.outputs.insert(manifest.outputs.begin(), output);
  WriteManifest(manifest, ManifestPathFor(output));
}

TaskKind ParseTask(const std::string& name) {
  auto t = ParseTaskKind(name);
  if (!t) throw ValidationError("unknown task kind '" + name + "'");
  return *t;
}

StrategyKind ParseStrategyOrThrow(const std::string& name) {
  auto s = ParseStrategy(name);
  if (!s) {
    throw CLI::ValidationError("--strategy",
                               "expected high, low, random or popular, got '" +
                                   name + "'");
  }
  return *s;
}

std::vector<Role> ParseRoles(const std::vector<std::string>& names) {
  if (names.empty()) return {std::begin(kAllRoles), std::end(kAllRoles)};
  std::vector<Role> roles;
  for (const auto& n : names) {
    auto r = ParseRole(n);
    if (!r) throw CLI::ValidationError("--roles", "unknown role '" + n + "'");
    roles.push_back(*r);
  }
  return roles;
}

std::string JoinRoles(std::span<const Role> roles) {
  std::string s;
  for (Role r : roles) {
    if (!s.empty()) s += ",";
    s += RoleName(r);
  }
  return s;
}

// Sorted union of the labels in every file.
LabelVocabulary UnionVocabulary(const std::vector<std::string>& paths) {
  std::set<std::string> names;
  for (const auto& p : paths) {
    for (auto& n : ScanLabels(p)) names.insert(std::move(n));
  }
  return LabelVocabulary({names.begin(), names.end()});
}

constexpr int kMaxThreads = 1024;

void AddThreads(CLI::App* cmd, int* threads) {
  cmd->add_option("--threads", *threads,
                  "Worker threads (default: $METASHAPE_THREADS, else 1)")
      ->check(CLI::Range(1, kMaxThreads));
}

// Fills --threads from METASHAPE_THREADS when the flag was not given.
void ThreadsFromEnv(const CLI::App* cmd, int* threads) {
  if (!cmd->parsed() || cmd->count("--threads") > 0) return;
  const char* env = std::getenv("METASHAPE_THREADS");
  if (env == nullptr || *env == '\0') return;
  const std::string_view v(env);
  int n = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || end != v.data() + v.size() || n < 1 || n > kMaxThreads) {
    throw CLI::ValidationError("METASHAPE_THREADS",
                               "expected an integer in [1, 1024], got '" +
                                   std::string(v) + "'");
  }
  *threads = n;
}

void AddTask(CLI::App* cmd, std::string* task) {
  cmd->add_option("--task", *task, "single_label or multi_label")
      ->capture_default_str();
}

// --- stats ------------------------------------------------------------------

struct StatsArgs {
  std::string train, catalog, stats_out, vocab_source = "metadata_tokens";
  std::string task = "single_label";
  double alpha = 0.0;
  size_t top_pmi = 0;
  bool no_fold_case = false;
  int threads = 1;
};

void RunStats(const StatsArgs& a, std::ostream& out) {
  auto source = ParseVocabSource(a.vocab_source);
  if (!source) throw ValidationError("unknown vocab source '" + a.vocab_source + "'");
  if (!(a.alpha >= 0.0)) throw ValidationError("--alpha must be >= 0");
  const bool fold = !a.no_fold_case;
  LoadOptions opts;
  opts.task_kind = ParseTask(a.task);
  opts.fold_case = fold;
  const Dataset train = LoadDataset(a.train, opts);
  MetadataCatalog catalog;
  if (!a.catalog.empty()) {
    catalog = LoadCatalog(a.catalog);
  } else if (*source == VocabSource::kMetadataTokens || *source == VocabSource::kBoth) {
    throw ValidationError("--catalog is needed for vocab source '" +
                          std::string(VocabSourceName(*source)) + "'");
  }
  TrainStatistics stats(BuildCounts(train, *source, catalog, fold, a.threads),
                        a.alpha, *source, train.label_vocab.names(), fold);
  std::ostringstream buf;
  WriteStatistics(stats, buf);
  WriteText(a.stats_out, buf.str());

  RunManifest m;
  m.subcommand = "stats";
  m.config = {{"alpha", FormatDouble(a.alpha)},
              {"vocab_source", std::string(VocabSourceName(*source))},
              {"fold_case", fold ? "true" : "false"},
              {"task", a.task},
              {"top_pmi", std::to_string(a.top_pmi)}};
  m.AddInput("train", a.train);
  if (!a.catalog.empty()) m.AddInput("catalog", a.catalog);
  EmitManifest(m, a.stats_out);

  if (a.top_pmi > 0) {
    for (size_t y = 0; y < stats.num_labels(); ++y) {
      const auto tokens = TopPmiTokens(stats, static_cast<LabelId>(y), a.top_pmi);
      for (size_t r = 0; r < tokens.size(); ++r) {
        out << stats.label_names()[y] << '\t' << r + 1 << '\t' << tokens[r]
            << '\t' << FormatDouble(stats.Pmi(static_cast<LabelId>(y), tokens[r]))
            << '\n';
      }
    }
  }
}

// --- select -----------------------------------------------------------------

struct SelectArgs {
  std::string data, catalog, stats_in, strategy = "high", out, kl_vs;
  std::string task = "single_label";
  size_t n = 1;
  uint64_t seed = 0;
  int threads = 1;
};

void RequireMetadataStats(const TrainStatistics& stats) {
  if (stats.source() != VocabSource::kMetadataTokens &&
      stats.source() != VocabSource::kBoth) {
    throw ValidationError(
        "selection needs statistics over metadata tokens, got vocab source '" +
        std::string(VocabSourceName(stats.source())) + "'");
  }
}

void RunSelect(const SelectArgs& a, std::ostream& out, std::ostream& err) {
  const StrategyKind kind = ParseStrategyOrThrow(a.strategy);
  const TrainStatistics stats = LoadStatistics(a.stats_in);
  RequireMetadataStats(stats);
  const LabelVocabulary vocab(stats.label_names());
  LoadOptions opts;
  opts.task_kind = ParseTask(a.task);
  opts.vocab = &vocab;
  opts.fold_case = stats.fold_case();
  const Dataset data = LoadDataset(a.data, opts);
  const MetadataCatalog catalog = LoadCatalog(a.catalog);

  const auto selections =
      SelectDataset(data, catalog, stats, {kind, a.seed}, a.n, a.threads);
  std::ostringstream buf;
  WriteSelections(selections, buf);
  Emit(buf.str(), a.out, out);

  RunManifest m;
  m.subcommand = "select";
  m.seed = a.seed;
  m.config = {{"strategy", std::string(StrategyName(kind))},
              {"n", std::to_string(a.n)},
              {"task", a.task}};
  m.AddInput("data", a.data);
  m.AddInput("catalog", a.catalog);
  m.AddInput("stats", a.stats_in);

  if (!a.kl_vs.empty()) {
    const StrategyKind other = ParseStrategyOrThrow(a.kl_vs);
    const auto theirs =
        SelectDataset(data, catalog, stats, {other, a.seed}, a.n, a.threads);
    const double kl = SelectionKl(SelectionDistribution(selections),
                                  SelectionDistribution(theirs));
    err << "KL(" << StrategyName(kind) << " || " << StrategyName(other)
        << ") = " << FormatDouble(kl) << " bits\n";
    m.config["kl_vs"] = std::string(StrategyName(other));
  }
  EmitManifest(m, a.out);
}

// --- shape ------------------------------------------------------------------

struct ShapeArgs {
  std::string data, catalog, stats_in, config, strategy = "high", selections;
  std::string out, report, task = "single_label";
  size_t n = 1;
  uint64_t seed = 0;
  double mask_rate = 0.0;
  int threads = 1;
  const CLI::Option* n_opt = nullptr;
  const CLI::Option* seed_opt = nullptr;
  const CLI::Option* mask_opt = nullptr;
};

void RunShape(const ShapeArgs& a, std::ostream& out, std::ostream& err) {
  if (a.selections.empty() && a.stats_in.empty()) {
    throw CLI::RequiredError("--stats-in (or --selections)");
  }
  ShapingConfig config;
  if (!a.config.empty()) config = LoadShapingConfig(a.config);
  if (a.n_opt->count() > 0) config.budget_n = a.n;
  if (a.seed_opt->count() > 0) config.seed = a.seed;
  if (a.mask_opt->count() > 0) config.mask_rate = a.mask_rate;
  config.Validate();

  RunManifest m;
  m.subcommand = "shape";
  m.seed = config.seed;
  m.config = ShapingConfigValues(config);
  m.config["task"] = a.task;

  LoadOptions opts;
  opts.task_kind = ParseTask(a.task);
  opts.fold_case = config.fold_case;
  ShapedDataset shaped;
  Dataset data;
  if (!a.selections.empty()) {
    data = LoadDataset(a.data, opts);
    const auto selections = LoadSelections(a.selections);
    shaped = ShapeWithSelections(data, selections, config, a.threads);
    m.AddInput("data", a.data);
    m.AddInput("selections", a.selections);
  } else {
    const StrategyKind kind = ParseStrategyOrThrow(a.strategy);
    const TrainStatistics stats = LoadStatistics(a.stats_in);
    RequireMetadataStats(stats);
    const LabelVocabulary vocab(stats.label_names());
    opts.vocab = &vocab;
    data = LoadDataset(a.data, opts);
    if (a.catalog.empty()) throw CLI::RequiredError("--catalog");
    const MetadataCatalog catalog = LoadCatalog(a.catalog);
    shaped = ShapeDataset(data, catalog, stats, {kind, config.seed}, config,
                          a.threads);
    m.config["strategy"] = std::string(StrategyName(kind));
    m.AddInput("data", a.data);
    m.AddInput("catalog", a.catalog);
    m.AddInput("stats", a.stats_in);
  }
  if (!a.config.empty()) m.AddInput("config", a.config);

  std::ostringstream buf;
  WriteShapedDataset(data, shaped, buf);
  Emit(buf.str(), a.out, out);
  const std::string report = ReportToJson(shaped.report);
  if (!a.report.empty()) {
    WriteText(a.report, report + "\n");
    m.outputs.push_back(a.report);
  } else {
    err << "shaped " << shaped.report.examples << " examples, "
        << shaped.report.inserted_tokens << " metadata tokens inserted, "
        << shaped.report.masked_tokens << " masked\n";
  }
  EmitManifest(m, a.out);
}

// --- slice ------------------------------------------------------------------

struct SliceArgs {
  std::string test, predictions, train, catalog, stats_in, selections;
  std::string format = "table", out, task = "single_label";
  std::vector<std::string> roles;
  int64_t threshold = 10;
  int64_t min_seen = 1;
  size_t top_pmi = 0;
  size_t tfidf_k = 10;
};

std::string Render(const SliceReport& report, const std::string& format) {
  if (format == "json") return SliceReportJson(report) + "\n";
  if (format == "table") return SliceReportTable(report);
  throw CLI::ValidationError("--format", "expected json or table");
}

void RunSlice(const SliceArgs& a, std::ostream& out) {
  const std::vector<Role> roles = ParseRoles(a.roles);
  std::optional<TrainStatistics> stats;
  if (!a.stats_in.empty()) stats = LoadStatistics(a.stats_in);

  LabelVocabulary vocab = stats ? LabelVocabulary(stats->label_names())
                                : UnionVocabulary(a.train.empty()
                                                      ? std::vector{a.test}
                                                      : std::vector{a.train, a.test});
  LoadOptions opts;
  opts.task_kind = ParseTask(a.task);
  opts.vocab = &vocab;
  opts.split = Split::kTest;
  const Dataset test = LoadDataset(a.test, opts);
  const PredictionMap predictions = LoadPredictions(a.predictions, vocab);

  RunManifest m;
  m.subcommand = "slice";
  m.config = {{"threshold", std::to_string(a.threshold)},
              {"min_seen", std::to_string(a.min_seen)},
              {"roles", JoinRoles(roles)},
              {"top_pmi", std::to_string(a.top_pmi)},
              {"tfidf_k", std::to_string(a.tfidf_k)},
              {"format", a.format},
              {"task", a.task}};
  m.AddInput("test", a.test);
  m.AddInput("predictions", a.predictions);

  std::vector<SliceDefinition> slices{WholeSet(test)};
  std::optional<Dataset> train;
  if (!a.train.empty()) {
    LoadOptions topts = opts;
    topts.split = Split::kTrain;
    train = LoadDataset(a.train, topts);
    m.AddInput("train", a.train);
    const SpanPopularityIndex index = BuildPopularityIndex(*train);
    auto [tail, head] = TailHeadSplit(test, index, a.threshold, roles);
    slices.push_back(std::move(tail));
    slices.push_back(std::move(head));

    std::vector<SelectionResult> selections;
    if (!a.selections.empty()) {
      selections = LoadSelections(a.selections);
      m.AddInput("selections", a.selections);
    }
    if (!a.catalog.empty() && !selections.empty()) {
      const MetadataCatalog catalog = LoadCatalog(a.catalog);
      m.AddInput("catalog", a.catalog);
      const CategoryTfidf tfidf(*train, catalog);
      std::map<std::string, std::vector<std::string>> cues;
      for (const auto& c : catalog.category_universe()) {
        cues[c] = tfidf.TopWords(c, a.tfidf_k);
      }
      slices.push_back(SubpopulationSlice(test, cues, InsertedCategories(selections)));
    }
    if (stats && !selections.empty()) {
      MetadataCatalog none;
      const TrainStatistics span_stats(
          BuildCounts(*train, VocabSource::kMentionSurfaces, none,
                      stats->fold_case()),
          0.0, VocabSource::kMentionSurfaces, vocab.names(), stats->fold_case());
      slices.push_back(MisleadingMetadataSlice(test, span_stats, *stats,
                                               selections, index, a.min_seen,
                                               roles));
    }
    if (a.top_pmi > 0) {
      const bool fold = stats ? stats->fold_case() : true;
      const TrainStatistics word_stats(
          BuildCounts(*train, VocabSource::kExampleTokens, MetadataCatalog{}, fold),
          0.0, VocabSource::kExampleTokens, vocab.names(), fold);
      slices.push_back(TopPmiSlice(test, word_stats, a.top_pmi));
    }
  }
  if (stats) m.AddInput("stats", a.stats_in);
  const SliceReport report = MakeSliceReport(predictions, test, slices);
  Emit(Render(report, a.format), a.out, out);
  EmitManifest(m, a.out);
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string train, test, config, format = "table", out, model_out;
  std::string predictions_out, feature_source, task = "single_label";
  std::vector<std::string> slices{"all", "tail_head"};
  std::vector<std::string> roles;
  int64_t threshold = 10;
  int epochs = 0;
  double learning_rate = 0.0, l2 = 0.0;
  uint64_t seed = 0;
  const CLI::Option* epochs_opt = nullptr;
  const CLI::Option* lr_opt = nullptr;
  const CLI::Option* l2_opt = nullptr;
  const CLI::Option* seed_opt = nullptr;
};

void RunEval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  TrainingConfig config;
  if (!a.config.empty()) config = LoadTrainingConfig(a.config);
  if (a.epochs_opt->count() > 0) config.epochs = a.epochs;
  if (a.lr_opt->count() > 0) config.learning_rate = a.learning_rate;
  if (a.l2_opt->count() > 0) config.l2 = a.l2;
  if (a.seed_opt->count() > 0) config.seed = a.seed;
  if (!a.feature_source.empty()) {
    auto fs = ParseFeatureSource(a.feature_source);
    if (!fs) {
      throw CLI::ValidationError("--feature-source",
                                 "expected unigrams or unigrams+inserted_audit");
    }
    config.feature_source = *fs;
  }
  config.Validate();
  const std::vector<Role> roles = ParseRoles(a.roles);

  const LabelVocabulary vocab = UnionVocabulary({a.train, a.test});
  LoadOptions opts;
  opts.task_kind = ParseTask(a.task);
  opts.vocab = &vocab;
  opts.fold_case = config.fold_case;
  ShapedFile train = LoadShapedFile(a.train, opts);
  opts.split = Split::kTest;
  ShapedFile test = LoadShapedFile(a.test, opts);
  train.dataset.split = Split::kTrain;

  const auto train_x = MakeInstances(train.dataset, train.shaped,
                                     config.feature_source, config.fold_case);
  const auto test_x = MakeInstances(test.dataset, test.shaped,
                                    config.feature_source, config.fold_case);
  const MaxEntModel model = Train(train_x, vocab.names(), opts.task_kind, config);

  std::vector<SliceDefinition> slices;
  for (const auto& s : a.slices) {
    if (s == "all") {
      slices.push_back(WholeSet(test.dataset));
    } else if (s == "tail_head") {
      const SpanPopularityIndex index = BuildPopularityIndex(train.dataset);
      auto [tail, head] = TailHeadSplit(test.dataset, index, a.threshold, roles);
      slices.push_back(std::move(tail));
      slices.push_back(std::move(head));
    } else {
      throw CLI::ValidationError("--slices", "unknown slice '" + s +
                                                 "' (expected all, tail_head)");
    }
  }
  const PredictionMap predictions = PredictAll(model, test_x);
  const SliceReport report = MakeSliceReport(predictions, test.dataset, slices);
  Emit(Render(report, a.format), a.out, out);
  err << "trained on " << train_x.size() << " examples, vocabulary "
      << model.vocab_size() << ", final loss "
      << FormatDouble(model.loss_history().back()) << "\n";

  RunManifest m;
  m.subcommand = "eval";
  m.seed = config.seed;
  m.config = TrainingConfigValues(config);
  m.config["threshold"] = std::to_string(a.threshold);
  m.config["roles"] = JoinRoles(roles);
  m.config["format"] = a.format;
  m.config["task"] = a.task;
  std::string joined;
  for (const auto& s : a.slices) joined += (joined.empty() ? "" : ",") + s;
  m.config["slices"] = joined;
  m.AddInput("train", a.train);
  m.AddInput("test", a.test);
  if (!a.config.empty()) m.AddInput("config", a.config);
  std::vector<std::string> written;
  if (!a.out.empty()) written.push_back(a.out);
  if (!a.model_out.empty()) {
    std::ostringstream buf;
    WriteModel(model, buf);
    WriteText(a.model_out, buf.str());
    written.push_back(a.model_out);
  }
  if (!a.predictions_out.empty()) {
    std::vector<std::string> order;
    for (const auto& ex : test.dataset.examples) order.push_back(ex.id);
    std::ostringstream buf;
    WritePredictions(predictions, order, vocab, buf);
    WriteText(a.predictions_out, buf.str());
    written.push_back(a.predictions_out);
  }
  if (!written.empty()) {
    m.outputs.assign(written.begin() + 1, written.end());
    EmitManifest(m, written.front());
  }
}

// --- gen-synthetic ----------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  std::vector<std::string> params;
  SyntheticParams p;
};

void RunSynth(SynthArgs a, std::ostream& err) {
  for (const auto& kv : a.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--param", "expected key=value, got '" + kv + "'");
    }
    SetSyntheticOption(&a.p, TrimAscii(kv.substr(0, eq)), TrimAscii(kv.substr(eq + 1)));
  }
  const SyntheticBenchmark bench = GenerateSynthetic(a.p);
  WriteSynthetic(bench, a.out_dir);
  RunManifest m;
  m.subcommand = "gen-synthetic";
  m.seed = a.p.seed;
  m.config = SyntheticValues(a.p);
  const std::filesystem::path dir(a.out_dir);
  for (const char* f : {"train.jsonl", "test.jsonl", "catalog.jsonl"}) {
    m.outputs.push_back((dir / f).string());
  }
  WriteManifest(m, (dir / "manifest.json").string());
  err << "wrote " << bench.train.examples.size() << " train and "
      << bench.test.examples.size() << " test examples, "
      << bench.catalog.size() << " entities to " << a.out_dir << "\n";
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Metadata shaping for entity-rich classification data",
               "metashape"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ToolVersion());

  StatsArgs st;
  auto* stats = app.add_subcommand("stats", "Count class/token statistics over a training split");
  stats->add_option("--train", st.train, "Training JSONL")->required();
  stats->add_option("--catalog", st.catalog, "Metadata catalog JSONL");
  stats->add_option("--stats-out", st.stats_out, "Where to write the statistics")->required();
  stats->add_option("--alpha", st.alpha, "Additive smoothing")->capture_default_str();
  stats->add_option("--vocab-source", st.vocab_source,
                    "example_tokens, metadata_tokens, both or mention_surfaces")
      ->capture_default_str();
  stats->add_option("--top-pmi", st.top_pmi, "Print the k highest-PMI tokens per class");
  stats->add_flag("--no-fold-case", st.no_fold_case, "Keep token case");
  AddTask(stats, &st.task);
  AddThreads(stats, &st.threads);

  SelectArgs se;
  auto* select = app.add_subcommand("select", "Pick metadata units per mention");
  select->add_option("--data", se.data, "Dataset JSONL")->required();
  select->add_option("--catalog", se.catalog, "Metadata catalog JSONL")->required();
  select->add_option("--stats-in", se.stats_in, "Statistics from `stats`")->required();
  select->add_option("--strategy", se.strategy, "high, low, random or popular")
      ->capture_default_str();
  select->add_option("--n", se.n, "Units per mention")->capture_default_str();
  select->add_option("--seed", se.seed, "Seed for the random strategy")->capture_default_str();
  select->add_option("--out", se.out, "Output JSONL (default: stdout)");
  select->add_option("--kl-vs", se.kl_vs, "Report KL divergence against another strategy");
  AddTask(select, &se.task);
  AddThreads(select, &se.threads);

  ShapeArgs sh;
  auto* shape = app.add_subcommand("shape", "Rewrite examples with selected metadata");
  shape->add_option("--data", sh.data, "Dataset JSONL")->required();
  shape->add_option("--catalog", sh.catalog, "Metadata catalog JSONL");
  shape->add_option("--stats-in", sh.stats_in, "Statistics from `stats`");
  shape->add_option("--selections", sh.selections, "Precomputed selections JSONL");
  shape->add_option("--config", sh.config, "Shaping config (key = value)");
  shape->add_option("--strategy", sh.strategy, "high, low, random or popular")
      ->capture_default_str();
  sh.n_opt = shape->add_option("--n", sh.n, "Units per mention (overrides budget_n)");
  sh.seed_opt = shape->add_option("--seed", sh.seed, "Seed (overrides config)");
  sh.mask_opt = shape->add_option("--mask-rate", sh.mask_rate, "Blank-noising rate");
  shape->add_option("--out", sh.out, "Output JSONL (default: stdout)");
  shape->add_option("--report", sh.report, "Write the shaping report JSON here");
  AddTask(shape, &sh.task);
  AddThreads(shape, &sh.threads);

  SliceArgs sl;
  auto* slice = app.add_subcommand("slice", "Score predictions on evaluation slices");
  slice->add_option("--test", sl.test, "Test JSONL")->required();
  slice->add_option("--predictions", sl.predictions, "Predictions JSONL")->required();
  slice->add_option("--train", sl.train, "Training JSONL (enables tail/head)");
  slice->add_option("--catalog", sl.catalog, "Catalog (enables subpopulation slice)");
  slice->add_option("--stats-in", sl.stats_in, "Metadata statistics");
  slice->add_option("--selections", sl.selections, "Selections used for the test set");
  slice->add_option("--threshold", sl.threshold, "Tail threshold")->capture_default_str();
  slice->add_option("--min-seen", sl.min_seen, "Minimum span count for Y_p")
      ->capture_default_str();
  slice->add_option("--roles", sl.roles, "Roles to slice on")->delimiter(',');
  slice->add_option("--top-pmi", sl.top_pmi,
                    "Add a slice of examples holding a top-k PMI training word (needs --train)");
  slice->add_option("--tfidf-k", sl.tfidf_k, "Cue words per category")->capture_default_str();
  slice->add_option("--format", sl.format, "json or table")->capture_default_str();
  slice->add_option("--out", sl.out, "Report path (default: stdout)");
  AddTask(slice, &sl.task);

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Train the maxent oracle and report slices");
  eval->add_option("--train", ev.train, "Training JSONL (plain or shaped)")->required();
  eval->add_option("--test", ev.test, "Test JSONL (plain or shaped)")->required();
  eval->add_option("--config", ev.config, "Training config (key = value)");
  ev.epochs_opt = eval->add_option("--epochs", ev.epochs, "Gradient steps");
  ev.lr_opt = eval->add_option("--learning-rate", ev.learning_rate, "Step size");
  ev.l2_opt = eval->add_option("--l2", ev.l2, "L2 penalty");
  ev.seed_opt = eval->add_option("--seed", ev.seed, "Initialization seed");
  eval->add_option("--feature-source", ev.feature_source,
                   "unigrams or unigrams+inserted_audit");
  eval->add_option("--slices", ev.slices, "all, tail_head")->delimiter(',');
  eval->add_option("--threshold", ev.threshold, "Tail threshold")->capture_default_str();
  eval->add_option("--roles", ev.roles, "Roles for tail/head")->delimiter(',');
  eval->add_option("--format", ev.format, "json or table")->capture_default_str();
  eval->add_option("--out", ev.out, "Report path (default: stdout)");
  eval->add_option("--model-out", ev.model_out, "Write the trained model JSON");
  eval->add_option("--predictions-out", ev.predictions_out, "Write test predictions");
  AddTask(eval, &ev.task);

  SynthArgs sy;
  auto* synth = app.add_subcommand("gen-synthetic", "Write a synthetic benchmark");
  synth->add_option("--out-dir", sy.out_dir, "Output directory")->required();
  synth->add_option("--seed", sy.p.seed, "Generator seed")->capture_default_str();
  synth->add_option("--labels", sy.p.num_labels, "Number of labels")->capture_default_str();
  synth->add_option("--entities-per-category", sy.p.entities_per_category)
      ->capture_default_str();
  synth->add_option("--zipf", sy.p.zipf_exponent, "Zipf exponent")->capture_default_str();
  synth->add_option("--noise", sy.p.label_noise, "Label noise rate")->capture_default_str();
  synth->add_option("--train-size", sy.p.train_size)->capture_default_str();
  synth->add_option("--test-size", sy.p.test_size)->capture_default_str();
  synth->add_option("--param", sy.params, "Any generator parameter as key=value");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    ThreadsFromEnv(stats, &st.threads);
    ThreadsFromEnv(select, &se.threads);
    ThreadsFromEnv(shape, &sh.threads);
    if (stats->parsed()) RunStats(st, out);
    if (select->parsed()) RunSelect(se, out, err);
    if (shape->parsed()) RunShape(sh, out, err);
    if (slice->parsed()) RunSlice(sl, out);
    if (eval->parsed()) RunEval(ev, out, err);
    if (synth->parsed()) RunSynth(sy, err);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace metashape::cli
