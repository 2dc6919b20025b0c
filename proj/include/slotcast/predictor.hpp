#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slotcast/featurizer.hpp"
#include "slotcast/gbrt.hpp"
#include "slotcast/query_record.hpp"
#include "slotcast/sql_analyzer.hpp"

namespace slotcast::predictor {

// ln(1 + slot_min). Throws NegativeTarget for negative (or NaN) input.
double forward_target(double slot_min);
// exp(z) - 1, clamped below at 0.
double inverse_target(double z);

enum class Route : std::uint8_t { Simple, Complex };
std::string_view to_string(Route r);

struct Router {
  std::int64_t threshold = 26;
  std::int64_t min_subset = 50;

  Route route(std::int64_t complexity_score) const {
    return complexity_score < threshold ? Route::Simple : Route::Complex;
  }
};

struct TrainConfig {
  sql::OperatorWeights weights = sql::OperatorWeights::defaults();
  features::FeaturizerConfig featurizer;
  gbrt::Config gbrt;
  Router router;
  // When false a single Unified forest serves both routes.
  bool dual_model = true;
  // Drives the SVD sketch and the booster's binning sample.
  std::uint64_t seed = 42;
};

struct TrainingMetadata {
  std::int64_t records = 0;
  std::int64_t simple_records = 0;
  std::int64_t complex_records = 0;
  // Slot-minute mean/median of the training targets (train-derived baselines).
  double slot_min_mean = 0.0;
  double slot_min_median = 0.0;
  std::string timestamp;
};

struct ModelBundle {
  static constexpr std::int64_t kFormatVersion = 1;

  std::int64_t format_version = kFormatVersion;
  TrainConfig config;
  features::FeaturizerState featurizer;
  std::optional<gbrt::Forest> simple;
  std::optional<gbrt::Forest> complex;
  std::optional<gbrt::Forest> unified;
  TrainingMetadata metadata;

  const gbrt::Forest& forest_for(Route r) const;
  // "simple", "complex" or "unified": which forest serves the route.
  std::string_view model_name(Route r) const;
};

// Fits the shared featurizer on all records, then one forest per route. A
// route with fewer than min_subset records (or too few to grow a tree) is
// served by a Unified forest trained on every record. Throws TooFewSamples
// and MalformedRecord (record without total_slot_ms).
ModelBundle train(std::span<const QueryRecord> records, const TrainConfig& config,
                  std::string timestamp = {});

struct PredictionResult {
  double slot_min = 0.0;
  Route route = Route::Simple;
  std::int64_t complexity_score = 0;
  double log_space_value = 0.0;
};

// Throws BundleVersionMismatch for bundles from a different format version.
PredictionResult predict(const ModelBundle& bundle, const QueryRecord& record);
std::vector<PredictionResult> predict_batch(const ModelBundle& bundle, std::span<const QueryRecord> records);

// Bundle file: a key=value text header (ending in an END line), the binary
// payload, and a little-endian CRC32 over everything before it.
std::vector<std::uint8_t> encode_bundle(const ModelBundle& bundle);
// The binary payload alone; independent of the training timestamp.
std::vector<std::uint8_t> encode_payload(const ModelBundle& bundle);
// Throws BundleVersionMismatch, CorruptBundle.
ModelBundle decode_bundle(std::span<const std::uint8_t> bytes);

// Throws IoError in addition to the decode errors.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

std::string training_summary(const ModelBundle& bundle);

}  // namespace slotcast::predictor
