#include "slotcast/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "slotcast/error.hpp"

namespace slotcast::eval {

namespace {

double population_variance(std::span<const double> v) {
  const double m = mean(v);
  double sq = 0.0;
  for (const double x : v) sq += (x - m) * (x - m);
  return sq / static_cast<double>(v.size());
}

std::optional<double> reduction(const MetricSet& baseline, const MetricSet& model) {
  if (baseline.mae == 0.0) return std::nullopt;
  return (baseline.mae - model.mae) / baseline.mae;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json metrics_json(const std::optional<MetricSet>& m) {
  if (!m) return nullptr;
  return {{"mae", m->mae},
          {"rmse", m->rmse},
          {"explained_variance", optional_json(m->explained_variance)},
          {"variance_ratio", optional_json(m->variance_ratio)}};
}

std::string cell(const std::optional<double>& v, const char* fmt) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, *v);
  return buf;
}

std::string text_report(const EvalReport& report) {
  std::ostringstream out;
  char line[256];
  out << "baseline source: " << to_string(report.baselines.source) << '\n';
  std::snprintf(line, sizeof line, "baseline values: mean %.6g, median %.6g slot-min\n",
                report.baselines.mean_value, report.baselines.median_value);
  out << line << '\n';
  std::snprintf(line, sizeof line, "%-26s %7s %11s %11s %10s %11s %10s %11s %9s %9s\n", "tier", "N",
                "model_mae", "mean_mae", "vs_mean", "median_mae", "vs_median", "model_rmse", "ev",
                "var_ratio");
  out << line;
  for (const auto& t : report.tiers) {
    const auto mae = [](const std::optional<MetricSet>& m) {
      return m ? std::optional<double>(m->mae) : std::nullopt;
    };
    const auto pct = [](const std::optional<double>& r) {
      return r ? std::optional<double>(100.0 * *r) : std::nullopt;
    };
    std::optional<double> rmse, ev, ratio;
    if (t.model) {
      rmse = t.model->rmse;
      ev = t.model->explained_variance;
      ratio = t.model->variance_ratio;
    }
    std::string name = t.tier.name;
    if (t.tier.min_actual) name += " (>=" + cell(t.tier.min_actual, "%g") + ")";
    std::snprintf(line, sizeof line, "%-26s %7zu %11s %11s %10s %11s %10s %11s %9s %9s\n", name.c_str(),
                  t.n, cell(mae(t.model), "%.4f").c_str(), cell(mae(t.mean_baseline), "%.4f").c_str(),
                  cell(pct(t.reduction_vs_mean), "%.1f%%").c_str(), cell(mae(t.median_baseline), "%.4f").c_str(),
                  cell(pct(t.reduction_vs_median), "%.1f%%").c_str(), cell(rmse, "%.4f").c_str(),
                  cell(ev, "%.3f").c_str(), cell(ratio, "%.3f").c_str());
    out << line;
  }
  return out.str();
}

std::string structured_report(const EvalReport& report) {
  nlohmann::json doc;
  doc["baseline"] = {{"source", to_string(report.baselines.source)},
                     {"mean", report.baselines.mean_value},
                     {"median", report.baselines.median_value}};
  doc["n_queries"] = report.actual.size();
  auto tiers = nlohmann::json::array();
  for (const auto& t : report.tiers) {
    tiers.push_back({{"name", t.tier.name},
                     {"min_actual", optional_json(t.tier.min_actual)},
                     {"n", t.n},
                     {"model", metrics_json(t.model)},
                     {"baseline_mean", metrics_json(t.mean_baseline)},
                     {"baseline_median", metrics_json(t.median_baseline)},
                     {"mae_reduction_vs_mean", optional_json(t.reduction_vs_mean)},
                     {"mae_reduction_vs_median", optional_json(t.reduction_vs_median)}});
  }
  doc["tiers"] = std::move(tiers);
  return doc.dump(2) + "\n";
}

std::string plot_data(const EvalReport& report) {
  std::string out = "actual,predicted,residual\n";
  char line[128];
  for (std::size_t i = 0; i < report.actual.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", report.actual[i], report.predicted[i],
                  report.predicted[i] - report.actual[i]);
    out += line;
  }
  return out;
}

}  // namespace

double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorKind::EmptyInput, "mean of an empty vector");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorKind::EmptyInput, "median of an empty vector");
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  const std::size_t mid = s.size() / 2;
  return s.size() % 2 == 1 ? s[mid] : 0.5 * (s[mid - 1] + s[mid]);
}

MetricSet metrics(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) {
    throw Error(ErrorKind::LengthMismatch, "actual and predicted differ in length");
  }
  if (actual.empty()) throw Error(ErrorKind::EmptyInput, "no values to score");

  const auto n = static_cast<double>(actual.size());
  std::vector<double> residual(actual.size());
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    residual[i] = actual[i] - predicted[i];
    abs_sum += std::abs(residual[i]);
    sq_sum += residual[i] * residual[i];
  }
  MetricSet m;
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  const double var_actual = population_variance(actual);
  if (var_actual > 0.0) {
    m.explained_variance = 1.0 - population_variance(residual) / var_actual;
    m.variance_ratio = population_variance(predicted) / var_actual;
  }
  return m;
}

std::string_view to_string(BaselineSource s) {
  return s == BaselineSource::TrainDerived ? "train" : "test";
}

Baselines baselines(std::span<const double> train_actuals, std::span<const double> test_actuals,
                    BaselineSource mode) {
  const auto source = mode == BaselineSource::TrainDerived ? train_actuals : test_actuals;
  if (source.empty()) throw Error(ErrorKind::EmptyInput, "baseline source vector is empty");
  return Baselines{mean(source), median(source), mode};
}

std::vector<TierSpec> default_tiers(double cost_significant_min, double long_tail_min) {
  return {TierSpec{"full", std::nullopt}, TierSpec{"cost_significant", cost_significant_min},
          TierSpec{"long_tail", long_tail_min}};
}

EvalReport tiered_eval(std::span<const double> actual, std::span<const double> predicted,
                       std::span<const TierSpec> tiers, const Baselines& baselines) {
  if (actual.size() != predicted.size()) {
    throw Error(ErrorKind::LengthMismatch, "actual and predicted differ in length");
  }
  if (tiers.empty()) throw Error(ErrorKind::InvalidConfig, "at least one tier is required");

  EvalReport report;
  report.baselines = baselines;
  report.actual.assign(actual.begin(), actual.end());
  report.predicted.assign(predicted.begin(), predicted.end());
  for (const auto& tier : tiers) {
    TierResult r;
    r.tier = tier;
    std::vector<double> a, p;
    for (std::size_t i = 0; i < actual.size(); ++i) {
      if (tier.contains(actual[i])) {
        a.push_back(actual[i]);
        p.push_back(predicted[i]);
      }
    }
    r.n = a.size();
    if (!a.empty()) {
      r.model = metrics(a, p);
      r.mean_baseline = metrics(a, std::vector<double>(a.size(), baselines.mean_value));
      r.median_baseline = metrics(a, std::vector<double>(a.size(), baselines.median_value));
      r.reduction_vs_mean = reduction(*r.mean_baseline, *r.model);
      r.reduction_vs_median = reduction(*r.median_baseline, *r.model);
    }
    report.tiers.push_back(std::move(r));
  }
  return report;
}

std::string emit_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Text: return text_report(report);
    case ReportFormat::Structured: return structured_report(report);
    case ReportFormat::PlotData: return plot_data(report);
  }
  return {};
}

}  // namespace slotcast::eval
