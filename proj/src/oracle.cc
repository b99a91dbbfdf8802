#include "metashape/oracle.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "json.hpp"
#include "metashape/error.h"
#include "metashape/kernels.h"
#include "metashape/util/kvconfig.h"
#include "metashape/util/random.h"

namespace metashape {

using json = nlohmann::ordered_json;

std::string_view FeatureSourceName(FeatureSource source) {
  return source == FeatureSource::kUnigrams ? "unigrams"
                                            : "unigrams+inserted_audit";
}

std::optional<FeatureSource> ParseFeatureSource(std::string_view name) {
  if (name == "unigrams") return FeatureSource::kUnigrams;
  if (name == "unigrams+inserted_audit") return FeatureSource::kUnigramsAndAudit;
  return std::nullopt;
}

void TrainingConfig::Validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be > 0");
  }
  if (!(l2 >= 0.0) || !std::isfinite(l2)) {
    throw ValidationError("l2 must be >= 0");
  }
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
    throw ValidationError("init_scale must be >= 0");
  }
}

void SetTrainingOption(TrainingConfig* config, std::string_view key,
                       std::string_view value) {
  if (key == "epochs") {
    const uint64_t e = ParseConfigUnsigned(key, value);
    if (e > 1000000) throw ValidationError("epochs is unreasonably large");
    config->epochs = static_cast<int>(e);
  } else if (key == "learning_rate") {
    config->learning_rate = ParseConfigDouble(key, value);
  } else if (key == "l2") {
    config->l2 = ParseConfigDouble(key, value);
  } else if (key == "seed") {
    config->seed = ParseConfigUnsigned(key, value);
  } else if (key == "init_scale") {
    config->init_scale = ParseConfigDouble(key, value);
  } else if (key == "feature_source") {
    auto source = ParseFeatureSource(value);
    if (!source) {
      throw ValidationError(
          "feature_source must be unigrams or unigrams+inserted_audit");
    }
    config->feature_source = *source;
  } else if (key == "fold_case") {
    config->fold_case = ParseConfigBool(key, value);
  } else {
    throw ValidationError("unknown training config key '" + std::string(key) +
                          "'");
  }
}

TrainingConfig ReadTrainingConfig(std::istream& in, const std::string& source) {
  TrainingConfig config;
  ReadKeyValues(in, source, [&](std::string_view key, std::string_view value) {
    SetTrainingOption(&config, key, value);
  });
  config.Validate();
  return config;
}

TrainingConfig LoadTrainingConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  return ReadTrainingConfig(in, path);
}

std::map<std::string, std::string> TrainingConfigValues(const TrainingConfig& c) {
  return {{"epochs", std::to_string(c.epochs)},
          {"learning_rate", FormatDouble(c.learning_rate)},
          {"l2", FormatDouble(c.l2)},
          {"seed", std::to_string(c.seed)},
          {"init_scale", FormatDouble(c.init_scale)},
          {"feature_source", std::string(FeatureSourceName(c.feature_source))},
          {"fold_case", c.fold_case ? "true" : "false"}};
}

Instance MakeInstance(const std::string& id, std::string_view text,
                      std::span<const LabelId> labels,
                      std::span<const InsertedToken> inserted,
                      FeatureSource source, bool fold_case) {
  Instance inst;
  inst.id = id;
  inst.labels.assign(labels.begin(), labels.end());
  inst.features = Tokenize(text, fold_case);
  if (source == FeatureSource::kUnigramsAndAudit) {
    for (const InsertedToken& t : inserted) {
      if (t.masked) continue;
      for (const std::string& tok : Tokenize(t.text, fold_case)) {
        inst.features.push_back("meta:" + tok);
      }
    }
  }
  std::sort(inst.features.begin(), inst.features.end());
  inst.features.erase(std::unique(inst.features.begin(), inst.features.end()),
                      inst.features.end());
  return inst;
}

std::vector<Instance> MakeInstances(const Dataset& dataset,
                                    FeatureSource source, bool fold_case) {
  std::vector<Instance> out;
  out.reserve(dataset.examples.size());
  for (const Example& ex : dataset.examples) {
    out.push_back(MakeInstance(ex.id, ex.text, ex.labels, {}, source, fold_case));
  }
  return out;
}

std::vector<Instance> MakeInstances(const Dataset& dataset,
                                    std::span<const ShapedExample> shaped,
                                    FeatureSource source, bool fold_case) {
  if (shaped.size() != dataset.examples.size()) {
    throw ValidationError("shaped examples do not match the dataset");
  }
  std::vector<Instance> out;
  out.reserve(shaped.size());
  for (size_t i = 0; i < shaped.size(); ++i) {
    const Example& ex = dataset.examples[i];
    if (shaped[i].id != ex.id) {
      throw ValidationError("shaped example '" + shaped[i].id +
                            "' out of order; expected '" + ex.id + "'");
    }
    out.push_back(MakeInstance(ex.id, shaped[i].shaped_text, ex.labels,
                               shaped[i].inserted, source, fold_case));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double Softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> Softmax(std::vector<double> logits) {
  const double m = kernels::Max(logits);
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - m);
    z += l;
  }
  kernels::Scale(1.0 / z, logits);
  return logits;
}

std::string Fingerprint(std::span<const Instance> data,
                        const std::vector<std::string>& label_names,
                        TaskKind task_kind, const TrainingConfig& config) {
  uint64_t h = kFnvOffset;
  for (const Instance& inst : data) {
    h = Fnv1a(inst.id, h);
    h = Fnv1a("\x1f", h);
    for (const std::string& f : inst.features) h = Fnv1a(f + "\x1e", h);
    for (LabelId y : inst.labels) h = Fnv1a(std::to_string(y) + ",", h);
    h = Fnv1a("\x1d", h);
  }
  for (const std::string& name : label_names) h = Fnv1a(name + "\x1e", h);
  h = Fnv1a(task_kind == TaskKind::kMultiLabel ? "multi" : "single", h);
  for (const auto& [k, v] : TrainingConfigValues(config)) {
    h = Fnv1a(k + "=" + v + "\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

MaxEntModel MaxEntModel::Initialize(std::span<const Instance> data,
                                    const std::vector<std::string>& label_names,
                                    TaskKind task_kind,
                                    const TrainingConfig& config) {
  config.Validate();
  if (label_names.size() < 2) {
    throw ValidationError("a classifier needs at least two labels");
  }
  MaxEntModel model;
  model.label_names_ = label_names;
  model.multi_label_ = task_kind == TaskKind::kMultiLabel;
  model.feature_source_ = config.feature_source;
  model.fold_case_ = config.fold_case;
  std::set<std::string_view> tokens;
  for (const Instance& inst : data) {
    for (LabelId y : inst.labels) {
      if (y < 0 || static_cast<size_t>(y) >= label_names.size()) {
        throw ValidationError("instance '" + inst.id + "' has label id " +
                              std::to_string(y) + " outside the vocabulary");
      }
    }
    tokens.insert(inst.features.begin(), inst.features.end());
  }
  for (std::string_view t : tokens) model.vocab_.emplace(t, model.vocab_.size());
  const size_t k = label_names.size();
  model.weights_.assign(model.vocab_.size() * k, 0.0);
  model.bias_.assign(k, 0.0);
  if (config.init_scale > 0.0) {
    Rng rng(MixSeed(config.seed, "init"));
    for (double& w : model.weights_) {
      w = config.init_scale * (2.0 * rng.Uniform() - 1.0);
    }
  }
  model.trained_on_ = Fingerprint(data, label_names, task_kind, config);
  return model;
}

std::optional<size_t> MaxEntModel::TokenIndex(std::string_view token) const {
  auto it = vocab_.find(token);
  if (it == vocab_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> MaxEntModel::Vocabulary() const {
  std::vector<std::string> out(vocab_.size());
  for (const auto& [token, i] : vocab_) out[i] = token;
  return out;
}

std::vector<size_t> MaxEntModel::Encode(
    std::span<const std::string> features) const {
  std::vector<size_t> idx;
  idx.reserve(features.size());
  for (const std::string& f : features) {
    if (auto i = TokenIndex(f)) idx.push_back(*i);
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

std::vector<double> MaxEntModel::Logits(
    std::span<const std::string> features) const {
  std::vector<double> logits = bias_;
  const size_t k = num_labels();
  for (size_t i : Encode(features)) {
    kernels::Add(std::span<const double>(weights_).subspan(i * k, k), logits);
  }
  return logits;
}

std::vector<double> MaxEntModel::LabelProbabilities(
    std::span<const std::string> features) const {
  std::vector<double> logits = Logits(features);
  if (!multi_label_) return Softmax(std::move(logits));
  for (double& l : logits) l = Sigmoid(l);
  return logits;
}

Distribution MaxEntModel::Predict(std::span<const std::string> features) const {
  return Distribution::Normalize(LabelProbabilities(features));
}

Prediction MaxEntModel::Classify(std::span<const std::string> features) const {
  Prediction out;
  const std::vector<double> p = LabelProbabilities(features);
  if (multi_label_) {
    for (size_t y = 0; y < p.size(); ++y) {
      if (p[y] >= 0.5) out.predicted.push_back(static_cast<LabelId>(y));
    }
    out.scores = Distribution::Normalize(p);
  } else {
    out.scores = Distribution::Normalize(p);
    out.predicted.push_back(static_cast<LabelId>(out.scores.ArgMax()));
  }
  return out;
}

double MaxEntModel::InstanceLoss(std::span<const size_t> features,
                                 std::span<const LabelId> labels,
                                 double* residual) const {
  const size_t k = num_labels();
  std::vector<double> logits = bias_;
  for (size_t i : features) {
    kernels::Add(std::span<const double>(weights_).subspan(i * k, k), logits);
  }
  double loss = 0.0;
  if (multi_label_) {
    for (size_t y = 0; y < k; ++y) {
      const bool gold = std::binary_search(labels.begin(), labels.end(),
                                           static_cast<LabelId>(y));
      loss += Softplus(logits[y]) - (gold ? logits[y] : 0.0);
      if (residual) residual[y] = Sigmoid(logits[y]) - (gold ? 1.0 : 0.0);
    }
    return loss;
  }
  const double m = kernels::Max(logits);
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  const double log_z = m + std::log(z);
  const LabelId gold = labels.front();
  loss = log_z - logits[gold];
  if (residual) {
    for (size_t y = 0; y < k; ++y) residual[y] = std::exp(logits[y] - log_z);
    residual[gold] -= 1.0;
  }
  return loss;
}

double MaxEntModel::Objective(std::span<const Instance> data, double l2,
                              Gradient* gradient) const {
  if (data.empty()) throw ValidationError("objective over an empty dataset");
  const size_t k = num_labels();
  if (gradient) {
    gradient->weights.assign(weights_.size(), 0.0);
    gradient->bias.assign(k, 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(data.size());
  std::vector<double> residual(k);
  double total = 0.0;
  for (const Instance& inst : data) {
    if (inst.labels.empty()) {
      throw ValidationError("instance '" + inst.id + "' has no labels");
    }
    const std::vector<size_t> idx = Encode(inst.features);
    total += InstanceLoss(idx, inst.labels, gradient ? residual.data() : nullptr);
    if (!gradient) continue;
    for (size_t i : idx) {
      kernels::Axpy(inv_n, residual,
                    std::span<double>(gradient->weights).subspan(i * k, k));
    }
    kernels::Axpy(inv_n, residual, gradient->bias);
  }
  double loss = total * inv_n;
  if (l2 > 0.0) {
    loss += l2 * kernels::SumSquares(weights_);
    if (gradient) kernels::Axpy(2.0 * l2, weights_, gradient->weights);
  }
  return loss;
}

MaxEntModel Train(std::span<const Instance> data,
                  const std::vector<std::string>& label_names,
                  TaskKind task_kind, const TrainingConfig& config) {
  std::set<LabelId> present;
  for (const Instance& inst : data) present.insert(inst.labels.begin(), inst.labels.end());
  if (present.size() < 2) {
    throw ValidationError("training data must contain at least two classes");
  }
  MaxEntModel model =
      MaxEntModel::Initialize(data, label_names, task_kind, config);
  Gradient grad;
  for (int epoch = 0; epoch <= config.epochs; ++epoch) {
    const bool last = epoch == config.epochs;
    const double loss = model.Objective(data, config.l2, last ? nullptr : &grad);
    if (!std::isfinite(loss)) {
      throw ValidationError("training loss became non-finite at epoch " +
                            std::to_string(epoch) +
                            "; lower the learning rate");
    }
    model.loss_history_.push_back(loss);
    if (last) break;
    kernels::Axpy(-config.learning_rate, grad.weights, model.weights_);
    kernels::Axpy(-config.learning_rate, grad.bias, model.bias_);
  }
  return model;
}

double GradientCheck(const MaxEntModel& model, std::span<const Instance> data,
                     double l2, double epsilon) {
  if (!(epsilon > 0.0)) throw ValidationError("gradient check needs epsilon > 0");
  if (data.empty() || data.size() > 50) {
    throw ValidationError("gradient check expects 1 to 50 instances");
  }
  Gradient analytic;
  model.Objective(data, l2, &analytic);
  MaxEntModel probe = model;
  double worst = 0.0;
  auto check = [&](std::span<double> params, const std::vector<double>& grad) {
    for (size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + epsilon;
      const double up = probe.Objective(data, l2, nullptr);
      params[i] = saved - epsilon;
      const double down = probe.Objective(data, l2, nullptr);
      params[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double denom = std::max({std::abs(grad[i]), std::abs(numeric),
                                     kGradientCheckFloor});
      worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
    }
  };
  check(probe.weights(), analytic.weights);
  check(probe.bias(), analytic.bias);
  return worst;
}

PredictionMap PredictAll(const MaxEntModel& model,
                         std::span<const Instance> data) {
  PredictionMap out;
  for (const Instance& inst : data) out[inst.id] = model.Classify(inst.features);
  return out;
}

SliceReport Evaluate(const MaxEntModel& model, std::span<const Instance> data,
                     const Dataset& gold,
                     std::span<const SliceDefinition> slices) {
  return MakeSliceReport(PredictAll(model, data), gold, slices);
}

// ---------------------------------------------------------------------------

void WriteModel(const MaxEntModel& model, std::ostream& out) {
  json j;
  j["format"] = "metashape.maxent";
  j["version"] = 1;
  j["labels"] = model.label_names();
  j["multi_label"] = model.multi_label();
  j["feature_source"] = FeatureSourceName(model.feature_source());
  j["fold_case"] = model.fold_case();
  j["trained_on"] = model.trained_on();
  j["bias"] = std::vector<double>(model.bias().begin(), model.bias().end());
  j["vocab"] = model.Vocabulary();
  const size_t k = model.num_labels();
  json rows = json::array();
  for (size_t i = 0; i < model.vocab_size(); ++i) {
    rows.push_back(std::vector<double>(model.weights().begin() + i * k,
                                       model.weights().begin() + (i + 1) * k));
  }
  j["weights"] = std::move(rows);
  out << j.dump() << '\n';
}

MaxEntModel ReadModel(std::istream& in, const std::string& source) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(source + ": invalid model JSON: " + e.what());
  }
  auto fail = [&](const std::string& what) {
    return ValidationError(source + ": " + what);
  };
  if (!j.is_object() || j.value("format", "") != "metashape.maxent") {
    throw fail("not a metashape.maxent model");
  }
  if (j.value("version", 0) != 1) throw fail("unsupported model version");
  MaxEntModel m;
  try {
    m.label_names_ = j.at("labels").get<std::vector<std::string>>();
    m.multi_label_ = j.at("multi_label").get<bool>();
    auto fs = ParseFeatureSource(j.at("feature_source").get<std::string>());
    if (!fs) throw fail("unknown feature_source");
    m.feature_source_ = *fs;
    m.fold_case_ = j.at("fold_case").get<bool>();
    m.trained_on_ = j.at("trained_on").get<std::string>();
    m.bias_ = j.at("bias").get<std::vector<double>>();
    const auto vocab = j.at("vocab").get<std::vector<std::string>>();
    const auto& rows = j.at("weights");
    const size_t k = m.label_names_.size();
    if (m.bias_.size() != k || !rows.is_array() || rows.size() != vocab.size()) {
      throw fail("model dimensions disagree");
    }
    for (size_t i = 0; i < vocab.size(); ++i) {
      if (!m.vocab_.emplace(vocab[i], i).second) throw fail("duplicate vocab entry");
      const auto row = rows[i].get<std::vector<double>>();
      if (row.size() != k) throw fail("weight row has wrong width");
      m.weights_.insert(m.weights_.end(), row.begin(), row.end());
    }
  } catch (const json::exception& e) {
    throw fail(std::string("malformed model: ") + e.what());
  }
  return m;
}

}  // namespace metashape
