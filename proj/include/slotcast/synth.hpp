#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slotcast/query_record.hpp"
#include "slotcast/sql_analyzer.hpp"

namespace slotcast::synth {

// Ground-truth cost:
//   slot_min = b * (bytes / 1e9)^alpha * (1 + beta * S) * (gamma if cache hit) * exp(eps)
// with eps ~ N(0, sigma^2) clipped to +-6 sigma.
struct OracleCostModel {
  double base = 0.05;
  double volume_exponent = 0.8;
  double complexity_slope = 0.02;
  double cache_multiplier = 1e-4;
  double sigma = 0.5;

  double noise_free(double bytes, std::int64_t score, bool cache_hit) const;
};

struct EnvironmentProfile {
  std::string name;
  std::int64_t accounts_min = 1;
  std::int64_t accounts_max = 1;
  std::int64_t resources_min = 1;
  std::int64_t resources_max = 1;
  // Typical bytes scanned by a regular query; draws span a decade either side.
  double bytes_scale = 1e9;
  std::vector<std::string> regions;
  // Relative weight when drawing an environment for a record.
  double share = 1.0;
};

// xs1 xs2 s1 s2 m1 m2 l1 l2 l3, accounts from tens to tens of thousands.
std::vector<EnvironmentProfile> default_profiles();
std::vector<std::string> default_train_environments();
std::vector<std::string> default_test_environments();

struct WorkloadConfig {
  std::int64_t n_queries = 3000;
  std::vector<EnvironmentProfile> profiles = default_profiles();
  // Profiles to draw from (by name); empty means all.
  std::vector<std::string> environments;
  // Mean occurrences per regular query, per operator kind.
  std::array<double, sql::kOperatorKindCount> operator_rates = default_operator_rates();
  double trivial_fraction = 0.62;
  double long_tail_fraction = 0.03;
  // Fraction of records with bytes_billed / accounts_azure left absent.
  double missing_fraction = 0.05;
  OracleCostModel oracle;
  std::uint64_t seed = 42;

  static std::array<double, sql::kOperatorKindCount> default_operator_rates();
  // Throws InvalidConfig.
  void validate() const;
};

struct SyntheticQuery {
  QueryRecord record;
  // Operator counts the SQL was assembled to contain.
  sql::OperatorCounts intended;
  double noise_free_slot_min = 0.0;
};

// Deterministic in config (including seed). Throws InvalidConfig.
std::vector<SyntheticQuery> generate_detailed(const WorkloadConfig& config);
std::vector<QueryRecord> generate(const WorkloadConfig& config);

// SQL text containing exactly `counts` operator occurrences under the lexical
// rules. Subselect must be >= WithCte, Update and Insert >= Merge.
std::string assemble_sql(const sql::OperatorCounts& counts, std::uint64_t seed);

// Records in a test environment go to test; others go to train when train_envs
// is empty or lists them, and are dropped otherwise. Order is preserved.
// Throws OverlappingEnvironments when a label is in both lists.
std::pair<std::vector<QueryRecord>, std::vector<QueryRecord>> split_by_environment(
    std::span<const QueryRecord> records, std::span<const std::string> train_envs,
    std::span<const std::string> test_envs);

}  // namespace slotcast::synth
