#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "gaitmag/nn/model.hpp"
#include "gaitmag/pipeline.hpp"

namespace gaitmag {

inline constexpr int kClasses = 4;

using Confusion = std::array<std::array<long, kClasses>, kClasses>;  // [true][predicted]

/// One-vs-rest ROC: one point per distinct score threshold, from (0, 0) to
/// (1, 1). thresholds[i] is the score cut that produced point i (+inf for
/// the origin).
struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;
  double auc = 0.0;
};

/// Throws EmptyClass when there are no positives or no negatives.
RocCurve roc_curve(std::span<const double> scores, std::span<const char> positive);

/// W vs WW (or any pair) read off a confusion matrix two ways: accuracy of
/// the 2x2 sub-matrix, and the mean of the two per-class recalls in the full
/// matrix.
struct PairAccuracy {
  double restricted = 0.0;
  double mean_recall = 0.0;
};

PairAccuracy pair_accuracy(const Confusion& c, int a, int b);

struct RunReport {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double accuracy = 0.0;
  Confusion confusion{};
  std::array<double, kClasses> precision{};  // 0 for a class that is never predicted
  std::array<double, kClasses> recall{};
  std::array<RocCurve, kClasses> roc{};
  PairAccuracy w_ww;
};

/// Metrics from class probabilities (rows) against true labels.
RunReport evaluate_probs(const Eigen::MatrixXd& probs, std::span<const int> labels);
RunReport evaluate(const nn::Model& model, const Dataset& data, std::span<const std::size_t> test);

struct AggregateReport {
  std::string tag;
  std::string modality;
  int window_len = 0;
  nn::ModelConfig model;
  nn::TrainConfig train;
  std::vector<RunReport> runs;  // ordered by seed
  int n_failed = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population standard deviation
  std::size_t closest = 0;    // run nearest the mean, smallest seed on ties
  PairAccuracy w_ww_mean;
  std::array<double, kClasses> auc_mean{};
};

using Progress = std::function<void(const std::string&)>;

/// Seeds base_seed .. base_seed + n - 1; every run trains on train + val and
/// is scored on the fixed test split. Statistics cover the runs that did not
/// fail. Throws InvalidConfig for n < 2.
AggregateReport repeated_runs(const Dataset& data, const nn::ModelConfig& model, const nn::TrainConfig& train,
                              int n, std::uint64_t base_seed, const Progress& progress = {});

/// Model config adapted to a dataset's window length and feature count.
nn::ModelConfig fit_model(const nn::ModelConfig& base, const Dataset& data);

enum class FeatureSubset { Position, Orientation, Both };

std::string_view subset_name(FeatureSubset s);
/// Magnetic feature columns: position {0,1,2,6,7,8}, orientation {3,4,5,9,10,11}.
std::vector<int> subset_columns(FeatureSubset s);

struct AblationReport {
  std::array<AggregateReport, 3> subsets;  // position, orientation, both
};

/// Requires a 12-feature magnetic dataset. CNN subsets drop the lane pooling
/// to 1, since three per-foot features cannot be halved twice.
AblationReport ablation(const Dataset& data, const nn::ModelConfig& model, const nn::TrainConfig& train, int n,
                        std::uint64_t base_seed, const Progress& progress = {});

struct CompareCell {
  nn::Arch arch = nn::Arch::Lstm;
  int window_len = 0;
  AggregateReport magnetic;
  AggregateReport imu;
  double accuracy_gap = 0.0;    // magnetic - imu, mean accuracy
  double w_ww_gap = 0.0;        // magnetic - imu, restricted W/WW accuracy
  double w_ww_recall_gap = 0.0; // magnetic - imu, mean W/WW recall
};

struct CompareReport {
  std::vector<CompareCell> cells;
};

/// Throws MismatchedCohort unless both datasets hold the same recordings
/// (subject, activity) in the same order.
void check_same_cohort(const Dataset& a, const Dataset& b);

/// One cell per (dataset pair, architecture). mag[i] and imu[i] must share a
/// window length.
CompareReport modality_compare(std::span<const Dataset> mag, std::span<const Dataset> imu,
                               std::span<const nn::Arch> archs, const nn::ModelConfig& base,
                               const nn::TrainConfig& train, int n, std::uint64_t base_seed,
                               const Progress& progress = {});

void to_json(nlohmann::json& j, const RocCurve& r);
void to_json(nlohmann::json& j, const RunReport& r);
void to_json(nlohmann::json& j, const AggregateReport& r);
void to_json(nlohmann::json& j, const AblationReport& r);
void to_json(nlohmann::json& j, const CompareReport& r);
void from_json(const nlohmann::json& j, RocCurve& r);
void from_json(const nlohmann::json& j, RunReport& r);

std::string text_report(const AggregateReport& r);
std::string text_report(const AblationReport& r);
std::string text_report(const CompareReport& r);

}  // namespace gaitmag
