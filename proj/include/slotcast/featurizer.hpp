#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "slotcast/query_record.hpp"
#include "slotcast/sql_analyzer.hpp"
#include "slotcast/svd.hpp"
#include "slotcast/tfidf.hpp"

namespace slotcast::features {

struct FeaturizerConfig {
  text::TfidfConfig tfidf;
  text::SvdConfig svd;
  std::int64_t top_n_categories = 20;
  std::int64_t top_n_asset_counts = 20;
};

// Dense fused rows plus a provenance label per column.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// Retained values of one categorical field, most frequent first (ties
// lexicographic). Anything else maps to the implicit OTHER bucket.
struct CategoryMap {
  std::vector<std::string> values;

  // Index into `values`, or values.size() for OTHER.
  std::size_t bucket(const std::string& value) const;
};

CategoryMap fit_category_map(std::span<const std::string> observed, std::size_t top_n);

// Optional numeric inputs that receive median imputation plus a missing flag.
enum class OptionalField : std::uint8_t {
  BytesProcessed,
  BytesBilled,
  AccountCount,
  ResourceCount,
  AccountsAws,
  AccountsGcp,
  AccountsAzure,
};
inline constexpr std::size_t kOptionalFieldCount = 7;
std::string_view field_name(OptionalField f);

struct FeaturizerState {
  bool fitted = false;
  text::TextVectorizerState text;
  text::SvdBasis svd;
  // Median of observed training values per OptionalField (0 when none observed).
  std::array<double, kOptionalFieldCount> medians{};
  std::vector<std::string> asset_count_keys;
  // Standard-scaler statistics for the numeric block, in column order.
  std::vector<double> means;
  std::vector<double> stds;
  CategoryMap asset_types;
  CategoryMap regions;
  std::vector<std::string> column_names;
};

// Throws EmptyCorpus on empty input and LengthMismatch when reports and
// records differ in length. All statistics come from `records` only.
std::pair<FeaturizerState, FeatureMatrix> fit_transform_features(
    std::span<const QueryRecord> records, std::span<const sql::ComplexityReport> reports,
    const FeaturizerConfig& config);

// Throws StateNotFitted on a default-constructed state.
FeatureMatrix transform_features(const FeaturizerState& state, std::span<const QueryRecord> records,
                                 std::span<const sql::ComplexityReport> reports);

}  // namespace slotcast::features
