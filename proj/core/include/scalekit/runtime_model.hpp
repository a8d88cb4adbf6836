#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scalekit/complexity.hpp"

namespace scalekit {

/// One timed model: absolute flops/params/acts and minutes per training epoch.
struct Measurement {
  std::string model_name;
  std::string strategy;
  double flops = 0;
  double params = 0;
  double acts = 0;
  double epoch_time = 0;  // minutes
  std::int64_t batch_size = 0;

  bool operator==(const Measurement&) const = default;
};

/// Features of the linear runtime model. FlopsOnly and ParamsOnly exist as
/// diagnostics to compare against the activation fit.
enum class FeatureSet { ActsOnly, ActsPlusFlops, FlopsOnly, ParamsOnly };

std::string_view to_string(FeatureSet features);
/// Accepts "acts", "acts+flops", "flops", "params". Throws LookupError.
FeatureSet feature_set_from_string(std::string_view name);

struct RuntimeModel {
  double intercept = 0;    // minutes
  double coef_acts = 0;    // minutes per activation
  double coef_flops = 0;   // minutes per flop
  double coef_params = 0;  // minutes per parameter
  double fit_r = 0;        // Pearson r between fitted and observed times
  FeatureSet feature_set = FeatureSet::ActsOnly;

  bool operator==(const RuntimeModel&) const = default;
};

/// Product-moment correlation. Throws ShapeError on length mismatch or fewer
/// than two points, DegenerateDataError when either side has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Ordinary least squares with intercept. Needs at least three measurements
/// (PreconditionError); a rank-deficient design raises DegenerateDataError.
RuntimeModel fit_runtime(std::span<const Measurement> measurements, FeatureSet features);

struct RuntimePrediction {
  double minutes = 0;
  bool clamped = false;  // the linear model went negative and was clamped to 0
};

RuntimePrediction predict_runtime(const RuntimeModel& model, const ComplexityReport& report);

struct CorrelationRow {
  std::string group;  // strategy name, or "(pooled)"
  std::size_t count = 0;
  std::optional<double> r_flops;
  std::optional<double> r_params;
  std::optional<double> r_acts;
};

struct CorrelationReport {
  std::vector<CorrelationRow> groups;  // in order of first appearance
  CorrelationRow pooled;
  std::vector<std::string> notices;    // skipped groups and degenerate metrics
};

/// Within-strategy and pooled correlation of flops, params and acts with
/// epoch time. Groups with fewer than two measurements are skipped.
CorrelationReport correlation_report(std::span<const Measurement> measurements);

/// fit_r of each single-feature fit on the same data. Separates the metric
/// that predicts runtime across strategies from the ones that only do so
/// within a strategy.
struct FeatureComparison {
  double r_acts = 0;
  double r_flops = 0;
  double r_params = 0;
};

FeatureComparison compare_features(std::span<const Measurement> measurements);

inline constexpr std::string_view kMeasurementHeader =
    "model,strategy,flops,params,acts,epoch_time_min,batch_size";

/// Parses the measurement CSV (header required). Throws ParseError naming the
/// 1-based line of the first malformed row.
std::vector<Measurement> parse_measurements_csv(std::string_view text);
std::string measurements_to_csv(std::span<const Measurement> measurements);

inline constexpr std::string_view kRuntimeModelSchema = "scalekit-runtime/1";

std::string serialize(const RuntimeModel& model);
RuntimeModel deserialize_runtime_model(std::string_view document);

}  // namespace scalekit
