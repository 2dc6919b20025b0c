#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace slotcast {

// One ingested query. Field names mirror the JSONL ingest schema.
struct QueryRecord {
  std::string query_text;
  std::string project_id;
  std::string dataset_id;
  std::string region;
  std::string asset_type;
  bool cache_hit = false;
  std::optional<std::int64_t> total_bytes_processed;
  std::optional<std::int64_t> total_bytes_billed;
  std::optional<std::int64_t> account_count;
  std::optional<std::int64_t> resource_count;
  std::optional<std::int64_t> accounts_aws;
  std::optional<std::int64_t> accounts_gcp;
  std::optional<std::int64_t> accounts_azure;
  std::map<std::string, std::int64_t> asset_type_counts;
  std::string creation_time;
  std::string environment;
  std::optional<std::int64_t> total_slot_ms;
  std::optional<std::int64_t> elapsed_ms;
  bool timed_out = false;

  // Source line in the ingested file (1-based); 0 when not ingested from a file.
  std::int64_t line_number = 0;

  std::optional<double> slot_min() const {
    if (!total_slot_ms) return std::nullopt;
    return static_cast<double>(*total_slot_ms) / 60000.0;
  }
};

}  // namespace slotcast
