#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace slotcast::eval {

// All values on the slot-minute scale. Explained variance and the variance
// ratio are absent when the actuals have zero (population) variance.
struct MetricSet {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> explained_variance;
  std::optional<double> variance_ratio;
};

// Throws LengthMismatch, EmptyInput.
MetricSet metrics(std::span<const double> actual, std::span<const double> predicted);

enum class BaselineSource { TrainDerived, TestDerived };
std::string_view to_string(BaselineSource s);

struct Baselines {
  double mean_value = 0.0;
  double median_value = 0.0;
  BaselineSource source = BaselineSource::TrainDerived;
};

// Constant predictors from the selected vector. Throws EmptyInput when it is empty.
Baselines baselines(std::span<const double> train_actuals, std::span<const double> test_actuals,
                    BaselineSource mode);

double mean(std::span<const double> v);
// Average of the two middle values for even lengths. Throws EmptyInput.
double median(std::span<const double> v);

// A tier keeps the records whose actual slot-time is >= min_actual.
struct TierSpec {
  std::string name;
  std::optional<double> min_actual;

  bool contains(double actual) const { return !min_actual || actual >= *min_actual; }
};

// full, cost_significant (>= 0.01) and long_tail (>= 20).
std::vector<TierSpec> default_tiers(double cost_significant_min = 0.01, double long_tail_min = 20.0);

struct TierResult {
  TierSpec tier;
  std::size_t n = 0;
  // Absent for empty tiers.
  std::optional<MetricSet> model;
  std::optional<MetricSet> mean_baseline;
  std::optional<MetricSet> median_baseline;
  // (baseline_mae - model_mae) / baseline_mae; absent when baseline MAE is 0.
  std::optional<double> reduction_vs_mean;
  std::optional<double> reduction_vs_median;
};

struct EvalReport {
  Baselines baselines;
  std::vector<TierResult> tiers;
  std::vector<double> actual;
  std::vector<double> predicted;
};

// Throws LengthMismatch; InvalidConfig when no tiers are given.
EvalReport tiered_eval(std::span<const double> actual, std::span<const double> predicted,
                       std::span<const TierSpec> tiers, const Baselines& baselines);

enum class ReportFormat { Text, Structured, PlotData };

// Text: one table row per tier. Structured: JSON, null for undefined values.
// PlotData: CSV of actual, predicted, residual (predicted - actual).
std::string emit_report(const EvalReport& report, ReportFormat format);

}  // namespace slotcast::eval
