#ifndef METASHAPE_ORACLE_H_
#define METASHAPE_ORACLE_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metashape/corpus.h"
#include "metashape/shaping.h"
#include "metashape/slicing.h"
#include "metashape/stats.h"

namespace metashape {

enum class FeatureSource { kUnigrams, kUnigramsAndAudit };

std::string_view FeatureSourceName(FeatureSource source);
std::optional<FeatureSource> ParseFeatureSource(std::string_view name);

struct TrainingConfig {
  int epochs = 100;
  double learning_rate = 1.0;
  double l2 = 1e-4;
  uint64_t seed = 0;
  double init_scale = 0.0;  // weights start uniform in [-s, s]
  FeatureSource feature_source = FeatureSource::kUnigrams;
  bool fold_case = true;

  void Validate() const;
};

void SetTrainingOption(TrainingConfig* config, std::string_view key,
                       std::string_view value);
TrainingConfig ReadTrainingConfig(std::istream& in,
                                  const std::string& source = "<input>");
TrainingConfig LoadTrainingConfig(const std::string& path);
std::map<std::string, std::string> TrainingConfigValues(const TrainingConfig& c);

// One classifier input: a bag of feature strings plus gold labels.
struct Instance {
  std::string id;
  std::vector<std::string> features;  // sorted, unique
  std::vector<LabelId> labels;
};

// Unigrams of the text; with kUnigramsAndAudit each inserted, unmasked
// metadata token also contributes "meta:<token>".
Instance MakeInstance(const std::string& id, std::string_view text,
                      std::span<const LabelId> labels,
                      std::span<const InsertedToken> inserted,
                      FeatureSource source, bool fold_case);

std::vector<Instance> MakeInstances(const Dataset& dataset,
                                    FeatureSource source, bool fold_case);
std::vector<Instance> MakeInstances(const Dataset& dataset,
                                    std::span<const ShapedExample> shaped,
                                    FeatureSource source, bool fold_case);

// Gradient of the training objective, laid out like the model parameters.
struct Gradient {
  std::vector<double> weights;
  std::vector<double> bias;
};

// Multinomial logistic regression over binary token features (one-vs-rest
// logistic units for multi-label tasks).
class MaxEntModel {
 public:
  MaxEntModel() = default;

  // Zero bias, weights from init_scale, vocabulary from the instances.
  static MaxEntModel Initialize(std::span<const Instance> data,
                                const std::vector<std::string>& label_names,
                                TaskKind task_kind,
                                const TrainingConfig& config);

  size_t num_labels() const { return bias_.size(); }
  size_t vocab_size() const { return vocab_.size(); }
  bool multi_label() const { return multi_label_; }
  const std::vector<std::string>& label_names() const { return label_names_; }
  const std::string& trained_on() const { return trained_on_; }
  FeatureSource feature_source() const { return feature_source_; }
  bool fold_case() const { return fold_case_; }
  const std::vector<double>& loss_history() const { return loss_history_; }

  std::optional<size_t> TokenIndex(std::string_view token) const;
  std::vector<std::string> Vocabulary() const;  // by index
  double weight(LabelId y, size_t token) const {
    return weights_[token * num_labels() + y];
  }
  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }
  std::span<double> bias() { return bias_; }
  std::span<const double> bias() const { return bias_; }

  // Raw class scores b + sum of weight rows; unseen features add nothing.
  std::vector<double> Logits(std::span<const std::string> features) const;

  // Softmax (single-label) or normalized per-label sigmoids (multi-label).
  Distribution Predict(std::span<const std::string> features) const;

  // Per-label sigmoid probabilities (multi-label) or the softmax.
  std::vector<double> LabelProbabilities(
      std::span<const std::string> features) const;

  // Argmax label, or every label with probability >= 0.5 for multi-label.
  Prediction Classify(std::span<const std::string> features) const;

  // Mean loss + l2 * ||weights||^2 and optionally its gradient.
  double Objective(std::span<const Instance> data, double l2,
                   Gradient* gradient) const;

  bool operator==(const MaxEntModel&) const = default;

 private:
  friend MaxEntModel Train(std::span<const Instance>,
                           const std::vector<std::string>&, TaskKind,
                           const TrainingConfig&);
  friend MaxEntModel ReadModel(std::istream&, const std::string&);

  // Feature indices present in the vocabulary, sorted.
  std::vector<size_t> Encode(std::span<const std::string> features) const;
  double InstanceLoss(std::span<const size_t> features,
                      std::span<const LabelId> labels, double* residual) const;

  std::vector<std::string> label_names_;
  std::map<std::string, size_t, std::less<>> vocab_;
  std::vector<double> weights_;  // token-major, num_labels per row
  std::vector<double> bias_;
  bool multi_label_ = false;
  FeatureSource feature_source_ = FeatureSource::kUnigrams;
  bool fold_case_ = true;
  std::string trained_on_;
  std::vector<double> loss_history_;
};

// Full-batch gradient descent. loss_history holds the objective before each
// epoch and after the last. Throws ValidationError when fewer than two
// classes occur or the loss stops being finite.
MaxEntModel Train(std::span<const Instance> data,
                  const std::vector<std::string>& label_names,
                  TaskKind task_kind, const TrainingConfig& config);

// Max relative error between the analytic gradient and central differences
// at the model's current parameters. Relative error is
// |a - n| / max(|a|, |n|, floor). At most 50 instances; epsilon > 0.
inline constexpr double kGradientCheckFloor = 1e-6;
double GradientCheck(const MaxEntModel& model, std::span<const Instance> data,
                     double l2, double epsilon);

PredictionMap PredictAll(const MaxEntModel& model,
                         std::span<const Instance> data);

SliceReport Evaluate(const MaxEntModel& model, std::span<const Instance> data,
                     const Dataset& gold,
                     std::span<const SliceDefinition> slices);

void WriteModel(const MaxEntModel& model, std::ostream& out);
MaxEntModel ReadModel(std::istream& in, const std::string& source = "<input>");

}  // namespace metashape

#endif  // METASHAPE_ORACLE_H_
