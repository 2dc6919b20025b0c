#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slotcast/query_record.hpp"

namespace slotcast::ingest {

enum class Mode {
  // total_slot_ms is required; absent or negative values are dropped as anomalous.
  Training,
  // total_slot_ms is optional; only inconsistent values are dropped.
  Inference,
};

struct IngestStats {
  std::int64_t read = 0;
  std::int64_t kept = 0;
  std::int64_t dropped_ddl = 0;
  std::int64_t dropped_timeout = 0;
  std::int64_t dropped_anomalous = 0;
  std::int64_t dropped_empty = 0;
  std::int64_t malformed = 0;
  // Line numbers of the malformed lines.
  std::vector<std::int64_t> malformed_lines;

  std::int64_t dropped() const {
    return dropped_ddl + dropped_timeout + dropped_anomalous + dropped_empty + malformed;
  }
  bool balanced() const { return read == kept + dropped(); }
};

struct IngestResult {
  std::vector<QueryRecord> records;
  IngestStats stats;
};

// DDL-only statement: first keyword CREATE, ALTER or DROP and no SELECT anywhere.
bool is_ddl_only(std::string_view sql);

// Throws MalformedRecord (invalid JSON, wrong field types, negative counts).
QueryRecord parse_record(std::string_view json_line);
std::string to_json_line(const QueryRecord& record);

// Blank lines are skipped and not counted. Malformed lines are counted and
// skipped. Order is preserved.
IngestResult ingest_stream(std::istream& in, Mode mode);
// Throws IoError when the file cannot be read.
IngestResult ingest_file(const std::filesystem::path& path, Mode mode);

void write_jsonl(std::ostream& out, std::span<const QueryRecord> records);

}  // namespace slotcast::ingest
