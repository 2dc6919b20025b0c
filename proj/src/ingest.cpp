#include "slotcast/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "slotcast/error.hpp"
#include "slotcast/sql_analyzer.hpp"

namespace slotcast::ingest {

namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& msg) { throw Error(ErrorKind::MalformedRecord, msg); }

// Integers may arrive as JSON integers, integral floats, or decimal strings
// (warehouse exports often quote INT64 columns).
std::optional<std::int64_t> int_field(const json& obj, const char* name, bool allow_negative = false) {
  const auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  std::int64_t v = 0;
  if (it->is_number_integer()) {
    if (it->is_number_unsigned() && it->get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      malformed(std::string(name) + " is out of range");
    }
    v = it->get<std::int64_t>();
  } else if (it->is_number_float()) {
    const double d = it->get<double>();
    if (!std::isfinite(d) || d != std::floor(d) || std::abs(d) > 9.2e18) {
      malformed(std::string(name) + " must be an integer");
    }
    v = static_cast<std::int64_t>(d);
  } else if (it->is_string()) {
    const auto& s = it->get_ref<const std::string&>();
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      malformed(std::string(name) + " must be an integer");
    }
  } else {
    malformed(std::string(name) + " must be an integer");
  }
  if (v < 0 && !allow_negative) malformed(std::string(name) + " must be non-negative");
  return v;
}

std::string string_field(const json& obj, const char* name) {
  const auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) malformed(std::string(name) + " must be a string");
  return it->get<std::string>();
}

bool bool_field(const json& obj, const char* name) {
  const auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) return false;
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_string()) {
    const auto& s = it->get_ref<const std::string&>();
    if (s == "true") return true;
    if (s == "false") return false;
  }
  malformed(std::string(name) + " must be a boolean");
}

enum class Drop { None, Empty, Ddl, Timeout, Anomalous };

Drop classify(const QueryRecord& r, Mode mode) {
  if (sql::clean_query(r.query_text).tokens.empty()) return Drop::Empty;
  if (is_ddl_only(r.query_text)) return Drop::Ddl;
  if (r.timed_out) return Drop::Timeout;
  if (r.total_slot_ms && *r.total_slot_ms < 0) return Drop::Anomalous;
  if (mode == Mode::Training && !r.total_slot_ms) return Drop::Anomalous;
  if (r.elapsed_ms && *r.elapsed_ms == 0 && r.total_slot_ms && *r.total_slot_ms > 0) return Drop::Anomalous;
  return Drop::None;
}

}  // namespace

bool is_ddl_only(std::string_view sql_text) {
  const auto q = sql::clean_query(sql_text);
  const auto first = std::find_if(q.tokens.begin(), q.tokens.end(),
                                  [](const sql::Token& t) { return t.kind == sql::TokenKind::Keyword; });
  if (first == q.tokens.end()) return false;
  if (first->text != "CREATE" && first->text != "ALTER" && first->text != "DROP") return false;
  return std::none_of(q.tokens.begin(), q.tokens.end(), [](const sql::Token& t) { return t.text == "SELECT"; });
}

QueryRecord parse_record(std::string_view json_line) {
  json obj;
  try {
    obj = json::parse(json_line);
  } catch (const json::parse_error& e) {
    malformed(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) malformed("record must be a JSON object");

  QueryRecord r;
  r.query_text = string_field(obj, "query_text");
  r.project_id = string_field(obj, "project_id");
  r.dataset_id = string_field(obj, "dataset_id");
  r.region = string_field(obj, "region");
  r.asset_type = string_field(obj, "asset_type");
  r.cache_hit = bool_field(obj, "cache_hit");
  r.total_bytes_processed = int_field(obj, "total_bytes_processed");
  r.total_bytes_billed = int_field(obj, "total_bytes_billed");
  r.account_count = int_field(obj, "account_count");
  r.resource_count = int_field(obj, "resource_count");
  r.accounts_aws = int_field(obj, "accounts_aws");
  r.accounts_gcp = int_field(obj, "accounts_gcp");
  r.accounts_azure = int_field(obj, "accounts_azure");
  r.creation_time = string_field(obj, "creation_time");
  r.environment = string_field(obj, "environment");
  r.total_slot_ms = int_field(obj, "total_slot_ms", true);
  r.elapsed_ms = int_field(obj, "elapsed_ms");
  r.timed_out = bool_field(obj, "timed_out");
  if (const auto it = obj.find("asset_type_counts"); it != obj.end() && !it->is_null()) {
    if (!it->is_object()) malformed("asset_type_counts must be an object");
    for (const auto& [key, _] : it->items()) {
      r.asset_type_counts[key] = *int_field(*it, key.c_str());
    }
  }
  return r;
}

std::string to_json_line(const QueryRecord& r) {
  nlohmann::ordered_json obj;
  obj["query_text"] = r.query_text;
  obj["project_id"] = r.project_id;
  obj["dataset_id"] = r.dataset_id;
  obj["region"] = r.region;
  obj["asset_type"] = r.asset_type;
  obj["cache_hit"] = r.cache_hit;
  auto opt = [&](const char* name, const std::optional<std::int64_t>& v) {
    if (v) obj[name] = *v;
  };
  opt("total_bytes_processed", r.total_bytes_processed);
  opt("total_bytes_billed", r.total_bytes_billed);
  opt("account_count", r.account_count);
  opt("resource_count", r.resource_count);
  opt("accounts_aws", r.accounts_aws);
  opt("accounts_gcp", r.accounts_gcp);
  opt("accounts_azure", r.accounts_azure);
  obj["asset_type_counts"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.asset_type_counts) obj["asset_type_counts"][k] = v;
  obj["creation_time"] = r.creation_time;
  obj["environment"] = r.environment;
  opt("total_slot_ms", r.total_slot_ms);
  opt("elapsed_ms", r.elapsed_ms);
  obj["timed_out"] = r.timed_out;
  return obj.dump();
}

IngestResult ingest_stream(std::istream& in, Mode mode) {
  IngestResult out;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++out.stats.read;
    QueryRecord r;
    try {
      r = parse_record(line);
    } catch (const Error&) {
      ++out.stats.malformed;
      out.stats.malformed_lines.push_back(line_no);
      continue;
    }
    r.line_number = line_no;
    switch (classify(r, mode)) {
      case Drop::Empty: ++out.stats.dropped_empty; break;
      case Drop::Ddl: ++out.stats.dropped_ddl; break;
      case Drop::Timeout: ++out.stats.dropped_timeout; break;
      case Drop::Anomalous: ++out.stats.dropped_anomalous; break;
      case Drop::None:
        ++out.stats.kept;
        out.records.push_back(std::move(r));
        break;
    }
  }
  if (in.bad()) throw Error(ErrorKind::IoError, "read error while ingesting");
  return out;
}

IngestResult ingest_file(const std::filesystem::path& path, Mode mode) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return ingest_stream(in, mode);
}

void write_jsonl(std::ostream& out, std::span<const QueryRecord> records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

}  // namespace slotcast::ingest
