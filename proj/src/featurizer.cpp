#include "slotcast/featurizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "slotcast/error.hpp"

namespace slotcast::features {

namespace {

constexpr std::array<std::string_view, 6> kNumericBase = {
    "complexity_score", "account_count", "resource_count",
    "accounts_aws",     "accounts_gcp",  "accounts_azure",
};

std::optional<std::int64_t> optional_value(const QueryRecord& r, OptionalField f) {
  switch (f) {
    case OptionalField::BytesProcessed: return r.total_bytes_processed;
    case OptionalField::BytesBilled: return r.total_bytes_billed;
    case OptionalField::AccountCount: return r.account_count;
    case OptionalField::ResourceCount: return r.resource_count;
    case OptionalField::AccountsAws: return r.accounts_aws;
    case OptionalField::AccountsGcp: return r.accounts_gcp;
    case OptionalField::AccountsAzure: return r.accounts_azure;
  }
  return std::nullopt;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

template <typename F>
std::vector<std::string> top_keys(const std::map<std::string, std::int64_t>& freq, std::size_t n,
                                  F&& accept) {
  std::vector<std::pair<std::string, std::int64_t>> ranked;
  for (const auto& [k, c] : freq) {
    if (accept(k)) ranked.emplace_back(k, c);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > n) ranked.resize(n);
  std::vector<std::string> out;
  for (auto& [k, _] : ranked) out.push_back(std::move(k));
  return out;
}

struct Imputed {
  std::array<double, kOptionalFieldCount> value{};
  std::array<bool, kOptionalFieldCount> missing{};
};

Imputed impute(const QueryRecord& r, const std::array<double, kOptionalFieldCount>& medians) {
  Imputed out;
  for (std::size_t f = 0; f < kOptionalFieldCount; ++f) {
    const auto v = optional_value(r, static_cast<OptionalField>(f));
    out.missing[f] = !v.has_value();
    out.value[f] = v ? static_cast<double>(*v) : medians[f];
  }
  return out;
}

double field(const Imputed& imp, OptionalField f) { return imp.value[static_cast<std::size_t>(f)]; }

std::vector<double> raw_numeric(const QueryRecord& r, const sql::ComplexityReport& report,
                                const Imputed& imp, std::span<const std::string> asset_keys) {
  std::vector<double> v = {
      static_cast<double>(report.score),        field(imp, OptionalField::AccountCount),
      field(imp, OptionalField::ResourceCount), field(imp, OptionalField::AccountsAws),
      field(imp, OptionalField::AccountsGcp),   field(imp, OptionalField::AccountsAzure),
  };
  for (const auto& key : asset_keys) {
    const auto it = r.asset_type_counts.find(key);
    v.push_back(it == r.asset_type_counts.end() ? 0.0 : static_cast<double>(it->second));
  }
  return v;
}

double safe_log1p(double x) { return std::log1p(std::max(x, 0.0)); }

void check_inputs(std::span<const QueryRecord> records, std::span<const sql::ComplexityReport> reports) {
  if (records.size() != reports.size()) {
    throw Error(ErrorKind::LengthMismatch, "one complexity report is required per record");
  }
}

}  // namespace

std::string_view field_name(OptionalField f) {
  switch (f) {
    case OptionalField::BytesProcessed: return "bytes_processed";
    case OptionalField::BytesBilled: return "bytes_billed";
    case OptionalField::AccountCount: return "account_count";
    case OptionalField::ResourceCount: return "resource_count";
    case OptionalField::AccountsAws: return "accounts_aws";
    case OptionalField::AccountsGcp: return "accounts_gcp";
    case OptionalField::AccountsAzure: return "accounts_azure";
  }
  return "?";
}

std::size_t CategoryMap::bucket(const std::string& value) const {
  const auto it = std::find(values.begin(), values.end(), value);
  return static_cast<std::size_t>(it - values.begin());
}

CategoryMap fit_category_map(std::span<const std::string> observed, std::size_t top_n) {
  std::map<std::string, std::int64_t> freq;
  for (const auto& v : observed) ++freq[v];
  return CategoryMap{top_keys(freq, top_n, [](const std::string& k) { return !k.empty(); })};
}

std::pair<FeaturizerState, FeatureMatrix> fit_transform_features(
    std::span<const QueryRecord> records, std::span<const sql::ComplexityReport> reports,
    const FeaturizerConfig& config) {
  if (records.empty()) throw Error(ErrorKind::EmptyCorpus, "no training records");
  check_inputs(records, reports);

  FeaturizerState state;

  std::vector<sql::CleanedQuery> cleaned;
  cleaned.reserve(records.size());
  for (const auto& r : records) cleaned.push_back(sql::clean_query(r.query_text));
  state.text = text::fit_text(cleaned, config.tfidf);
  if (records.size() >= 2) {
    std::vector<text::SparseVector> rows;
    rows.reserve(cleaned.size());
    for (const auto& q : cleaned) rows.push_back(text::transform_text(state.text, q));
    state.svd = text::fit_svd(rows, state.text.size(), config.svd);
  } else {
    state.svd.vocab_size = state.text.size();
    state.svd.components.resize(0, static_cast<Eigen::Index>(state.text.size()));
  }

  for (std::size_t f = 0; f < kOptionalFieldCount; ++f) {
    std::vector<double> observed;
    for (const auto& r : records) {
      if (const auto v = optional_value(r, static_cast<OptionalField>(f))) {
        observed.push_back(static_cast<double>(*v));
      }
    }
    state.medians[f] = median_of(std::move(observed));
  }

  std::map<std::string, std::int64_t> key_freq;
  for (const auto& r : records) {
    for (const auto& [k, _] : r.asset_type_counts) ++key_freq[k];
  }
  state.asset_count_keys = top_keys(key_freq, static_cast<std::size_t>(config.top_n_asset_counts),
                                    [](const std::string&) { return true; });

  std::vector<std::vector<double>> numeric;
  numeric.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    numeric.push_back(raw_numeric(records[i], reports[i], impute(records[i], state.medians),
                                  state.asset_count_keys));
  }
  const std::size_t width = numeric.front().size();
  state.means.assign(width, 0.0);
  state.stds.assign(width, 0.0);
  const auto n = static_cast<double>(records.size());
  for (std::size_t c = 0; c < width; ++c) {
    double sum = 0.0;
    for (const auto& row : numeric) sum += row[c];
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& row : numeric) sq += (row[c] - mean) * (row[c] - mean);
    const double sd = std::sqrt(sq / n);
    state.means[c] = mean;
    state.stds[c] = sd > 0.0 ? sd : 1.0;
  }

  std::vector<std::string> asset_types, regions;
  for (const auto& r : records) {
    asset_types.push_back(r.asset_type);
    regions.push_back(r.region);
  }
  state.asset_types = fit_category_map(asset_types, static_cast<std::size_t>(config.top_n_categories));
  state.regions = fit_category_map(regions, static_cast<std::size_t>(config.top_n_categories));

  auto& names = state.column_names;
  for (Eigen::Index i = 0; i < state.svd.rank(); ++i) names.push_back("text_svd_" + std::to_string(i));
  for (const auto base : kNumericBase) names.push_back("num_" + std::string(base));
  for (const auto& key : state.asset_count_keys) names.push_back("num_asset_count_" + key);
  for (std::size_t f = 0; f < kOptionalFieldCount; ++f) {
    names.push_back("num_" + std::string(field_name(static_cast<OptionalField>(f))) + "_missing");
  }
  for (const auto* v : {"log_bytes_processed", "log_bytes_billed", "log_bytes_per_account",
                        "log_bytes_per_resource"}) {
    names.push_back(std::string("vol_") + v);
  }
  for (const auto& v : state.asset_types.values) names.push_back("cat_asset_type=" + v);
  names.push_back("cat_asset_type=OTHER");
  for (const auto& v : state.regions.values) names.push_back("cat_region=" + v);
  names.push_back("cat_region=OTHER");
  for (const auto* v : {"cat_provider_aws", "cat_provider_gcp", "cat_provider_azure", "cat_cache_hit"}) {
    names.push_back(v);
  }

  state.fitted = true;
  FeatureMatrix matrix = transform_features(state, records, reports);
  return {std::move(state), std::move(matrix)};
}

FeatureMatrix transform_features(const FeaturizerState& state, std::span<const QueryRecord> records,
                                 std::span<const sql::ComplexityReport> reports) {
  if (!state.fitted) throw Error(ErrorKind::StateNotFitted, "featurizer has not been fitted");
  check_inputs(records, reports);

  FeatureMatrix m;
  m.column_names = state.column_names;
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(records.size()),
                                   static_cast<Eigen::Index>(state.column_names.size()));

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto row = static_cast<Eigen::Index>(i);
    Eigen::Index col = 0;

    if (state.svd.rank() > 0) {
      const auto q = sql::clean_query(r.query_text);
      const Eigen::VectorXd proj = text::project_text(state.svd, text::transform_text(state.text, q));
      m.values.block(row, 0, 1, proj.size()) = proj.transpose();
      col += proj.size();
    }

    const Imputed imp = impute(r, state.medians);
    const auto numeric = raw_numeric(r, reports[i], imp, state.asset_count_keys);
    for (std::size_t c = 0; c < numeric.size(); ++c) {
      m.values(row, col++) = (numeric[c] - state.means[c]) / state.stds[c];
    }
    for (std::size_t f = 0; f < kOptionalFieldCount; ++f) m.values(row, col++) = imp.missing[f] ? 1.0 : 0.0;

    const double bytes = field(imp, OptionalField::BytesProcessed);
    const double accounts = field(imp, OptionalField::AccountCount);
    const double resources = field(imp, OptionalField::ResourceCount);
    m.values(row, col++) = safe_log1p(bytes);
    m.values(row, col++) = safe_log1p(field(imp, OptionalField::BytesBilled));
    m.values(row, col++) = accounts > 0.0 ? safe_log1p(bytes / accounts) : 0.0;
    m.values(row, col++) = resources > 0.0 ? safe_log1p(bytes / resources) : 0.0;

    m.values(row, col + static_cast<Eigen::Index>(state.asset_types.bucket(r.asset_type))) = 1.0;
    col += static_cast<Eigen::Index>(state.asset_types.values.size()) + 1;
    m.values(row, col + static_cast<Eigen::Index>(state.regions.bucket(r.region))) = 1.0;
    col += static_cast<Eigen::Index>(state.regions.values.size()) + 1;
    m.values(row, col++) = field(imp, OptionalField::AccountsAws) > 0.0 ? 1.0 : 0.0;
    m.values(row, col++) = field(imp, OptionalField::AccountsGcp) > 0.0 ? 1.0 : 0.0;
    m.values(row, col++) = field(imp, OptionalField::AccountsAzure) > 0.0 ? 1.0 : 0.0;
    m.values(row, col++) = r.cache_hit ? 1.0 : 0.0;
  }
  return m;
}

}  // namespace slotcast::features
