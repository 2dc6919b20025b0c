#include "slotcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <random>
#include <set>
#include <sstream>

#include "slotcast/error.hpp"

namespace slotcast::synth {

namespace {

using sql::OperatorKind;

constexpr std::array<const char*, 10> kColumns = {
    "account_id", "amount",  "region_code", "label",    "event_date",
    "user_id",    "sku",     "cost_usd",    "status",   "session_id",
};
constexpr std::array<const char*, 8> kTables = {
    "events", "billing_export", "assets", "sessions", "inventory", "usage_daily", "accounts", "findings",
};
constexpr std::array<const char*, 6> kDatasets = {"raw", "curated", "finops", "security", "ops", "staging"};
constexpr std::array<const char*, 5> kAssetTypes = {"table", "view", "materialized_view", "external_table",
                                                    "snapshot"};
constexpr std::array<double, 5> kAssetTypeWeights = {0.55, 0.2, 0.1, 0.1, 0.05};
constexpr std::array<const char*, 6> kAssetCountKeys = {"compute_instance", "storage_bucket", "database",
                                                        "function",         "cluster",        "network"};

class Picker {
 public:
  explicit Picker(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& rng() { return rng_; }

  template <typename C>
  const auto& one(const C& c) {
    return c[std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(rng_)];
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  std::int64_t log_uniform(std::int64_t lo, std::int64_t hi) {
    const double v = std::exp(uniform(std::log(static_cast<double>(lo)), std::log(static_cast<double>(hi))));
    return std::clamp(static_cast<std::int64_t>(std::llround(v)), lo, hi);
  }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }
  std::int64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<std::int64_t>(mean)(rng_);
  }

 private:
  std::mt19937_64 rng_;
};

std::string table_ref(Picker& p) {
  return std::string("`") + p.one(std::array<const char*, 3>{"acme-prod", "acme-data", "shared-lake"}) + "." +
         p.one(kDatasets) + "." + p.one(kTables) + "`";
}

// Per-block pieces of the SELECT; every piece contributes a known count.
struct Block {
  bool distinct = false;
  bool group_by = false;
  bool having = false;
  bool order_by = false;
  std::vector<std::string> select_items;
  std::vector<std::string> joins;
  std::vector<std::string> from_extras;
  std::vector<std::string> filters;
};

std::string render_block(const Block& b, const std::string& source) {
  std::ostringstream s;
  s << "SELECT " << (b.distinct ? "DISTINCT " : "") << "t0.account_id, t0.amount";
  for (const auto& item : b.select_items) s << ",\n  " << item;
  s << "\nFROM " << source << " AS t0";
  for (const auto& j : b.joins) s << "\n" << j;
  for (const auto& f : b.from_extras) s << ", " << f;
  s << "\nWHERE t0.event_date >= '2024-01-01'";
  for (const auto& f : b.filters) s << "\n  AND " << f;
  if (b.group_by) s << "\nGROUP BY t0.account_id, t0.amount";
  if (b.having) s << "\nHAVING COUNT(*) > 1";
  if (b.order_by) s << "\nORDER BY t0.amount DESC";
  return s.str();
}

std::int64_t score_of(const sql::OperatorCounts& c) {
  const auto w = sql::OperatorWeights::defaults();
  std::int64_t s = 0;
  for (const auto k : sql::kAllOperatorKinds) s += c[k] * w[k];
  return s;
}

enum class Shape { Trivial, Regular, LongTail };

sql::OperatorCounts draw_counts(Picker& p, const std::array<double, sql::kOperatorKindCount>& rates,
                                double multiplier, bool light) {
  sql::OperatorCounts c;
  for (const auto k : sql::kAllOperatorKinds) {
    if (light && (k == OperatorKind::Merge || k == OperatorKind::Update || k == OperatorKind::JsUdf ||
                  k == OperatorKind::CrossJoin)) {
      continue;
    }
    c[k] = p.poisson(rates[static_cast<std::size_t>(k)] * multiplier);
  }
  c[OperatorKind::Subselect] += c[OperatorKind::WithCte];
  c[OperatorKind::Update] += c[OperatorKind::Merge];
  c[OperatorKind::Insert] += c[OperatorKind::Merge];
  return c;
}

std::string timestamp_for(std::int64_t index) {
  const std::time_t t = 1709251200 + static_cast<std::time_t>(index) * 37;  // 2024-03-01T00:00:00Z
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

double OracleCostModel::noise_free(double bytes, std::int64_t score, bool cache_hit) const {
  const double volume = bytes > 0.0 ? std::pow(bytes / 1e9, volume_exponent) : 0.0;
  return base * volume * (1.0 + complexity_slope * static_cast<double>(score)) *
         (cache_hit ? cache_multiplier : 1.0);
}

std::vector<EnvironmentProfile> default_profiles() {
  return {
      {"xs1", 10, 40, 50, 400, 1e8, {"us-east1"}, 1.0},
      {"xs2", 20, 80, 100, 800, 2e8, {"europe-west1"}, 1.0},
      {"s1", 100, 400, 1000, 5000, 1e9, {"us-central1"}, 1.0},
      {"s2", 200, 800, 2000, 10000, 3e9, {"us-east1", "us-west2"}, 1.0},
      {"m1", 1000, 4000, 10000, 50000, 1e10, {"us-central1", "europe-west1"}, 1.0},
      {"m2", 2000, 8000, 20000, 100000, 3e10, {"asia-southeast1"}, 1.0},
      {"l1", 10000, 50000, 100000, 500000, 1e11, {"us-central1", "us-east1"}, 1.0},
      {"l2", 8000, 40000, 80000, 400000, 8e10, {"us-central1", "europe-west1"}, 1.0},
      {"l3", 5000, 20000, 50000, 200000, 4e10, {"us-east1"}, 1.0},
  };
}

std::vector<std::string> default_train_environments() { return {"xs1", "xs2", "s1", "s2", "m1", "m2", "l1"}; }
std::vector<std::string> default_test_environments() { return {"l2", "l3"}; }

std::array<double, sql::kOperatorKindCount> WorkloadConfig::default_operator_rates() {
  // Operator kind order.
  return {1.2, 0.1, 0.8, 0.4, 0.5, 0.5, 0.3, 0.15, 0.1, 0.3, 0.05, 0.05, 0.15, 0.6, 0.6, 0.3, 0.2};
}

void WorkloadConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  if (n_queries < 0) fail("n_queries must be >= 0");
  for (const double f : {trivial_fraction, long_tail_fraction, missing_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) fail("fractions must lie in [0, 1]");
  }
  if (trivial_fraction + long_tail_fraction > 1.0) fail("trivial and long-tail fractions sum above 1");
  if (!(oracle.base >= 0.0) || !(oracle.sigma >= 0.0) || !(oracle.cache_multiplier >= 0.0) ||
      !std::isfinite(oracle.volume_exponent) || !(oracle.complexity_slope >= 0.0)) {
    fail("invalid oracle coefficients");
  }
  for (const double r : operator_rates) {
    if (!(r >= 0.0)) fail("operator rates must be >= 0");
  }
  if (profiles.empty()) fail("no environment profiles");
  std::set<std::string> names;
  for (const auto& p : profiles) {
    if (!names.insert(p.name).second) fail("duplicate environment profile " + p.name);
    if (p.accounts_min < 1 || p.accounts_max < p.accounts_min || p.resources_min < 1 ||
        p.resources_max < p.resources_min || !(p.bytes_scale > 0.0) || !(p.share >= 0.0) || p.regions.empty()) {
      fail("invalid environment profile " + p.name);
    }
  }
  double share = 0.0;
  for (const auto& p : profiles) {
    if (environments.empty() || std::find(environments.begin(), environments.end(), p.name) != environments.end()) {
      share += p.share;
    }
  }
  for (const auto& e : environments) {
    if (!names.contains(e)) fail("unknown environment " + e);
  }
  if (!(share > 0.0)) fail("selected environments have zero total share");
}

std::string assemble_sql(const sql::OperatorCounts& counts, std::uint64_t seed) {
  for (const auto k : sql::kAllOperatorKinds) {
    if (counts[k] < 0) throw Error(ErrorKind::InvalidConfig, "negative operator count");
  }
  const auto ctes = counts[OperatorKind::WithCte];
  const auto merges = counts[OperatorKind::Merge];
  if (counts[OperatorKind::Subselect] < ctes || counts[OperatorKind::Update] < merges ||
      counts[OperatorKind::Insert] < merges) {
    throw Error(ErrorKind::InvalidConfig, "operator counts are not jointly realizable");
  }

  Picker p(seed);
  std::ostringstream sql;

  for (std::int64_t i = 0; i < counts[OperatorKind::SqlUdf]; ++i) {
    sql << "CREATE TEMP FUNCTION fn_s" << i << "(x FLOAT64) AS (x * " << p.integer(2, 9) << ");\n";
  }
  for (std::int64_t i = 0; i < counts[OperatorKind::JsUdf]; ++i) {
    sql << "CREATE TEMP FUNCTION fn_j" << i
        << "(s STRING) RETURNS STRING LANGUAGE js AS r\"\"\"return s.toLowerCase();\"\"\";\n";
  }

  const std::int64_t n_blocks =
      std::max<std::int64_t>({1, counts[OperatorKind::GroupBy], counts[OperatorKind::Having],
                              counts[OperatorKind::OrderBy], counts[OperatorKind::Distinct]});
  std::vector<Block> blocks(static_cast<std::size_t>(n_blocks));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto i = static_cast<std::int64_t>(b);
    blocks[b].group_by = i < counts[OperatorKind::GroupBy];
    blocks[b].having = i < counts[OperatorKind::Having];
    blocks[b].order_by = i < counts[OperatorKind::OrderBy];
    blocks[b].distinct = i < counts[OperatorKind::Distinct];
  }
  std::size_t next = 0;
  auto block = [&]() -> Block& { return blocks[next++ % blocks.size()]; };

  for (std::int64_t i = 0; i < counts[OperatorKind::Window]; ++i) {
    const std::string col = p.one(kColumns);
    block().select_items.push_back(i % 2 == 0 ? "ROW_NUMBER() OVER (PARTITION BY t0." + col + ") AS rn" +
                                                    std::to_string(i)
                                              : "SUM(t0.amount) OVER (PARTITION BY t0." + col + ") AS w" +
                                                    std::to_string(i));
  }
  for (std::int64_t i = 0; i < counts[OperatorKind::RegexFunction]; ++i) {
    static constexpr std::array<const char*, 3> kRegex = {
        "REGEXP_CONTAINS(t0.label, r'^prod-[a-z]+')", "REGEXP_EXTRACT(t0.status, r'code=(\\d+)')",
        "REGEXP_REPLACE(t0.sku, r'[^A-Z0-9]', '')"};
    block().select_items.push_back(std::string(p.one(kRegex)) + " AS rx" + std::to_string(i));
  }
  for (std::int64_t i = 0; i < counts[OperatorKind::ArrayStruct]; ++i) {
    block().select_items.push_back(i % 2 == 0 ? "STRUCT(t0.user_id AS id, t0.cost_usd AS cost) AS s" +
                                                    std::to_string(i)
                                              : "ARRAY<INT64>[t0.user_id, " + std::to_string(p.integer(1, 99)) +
                                                    "] AS a" + std::to_string(i));
  }
  for (std::int64_t i = 0; i < counts[OperatorKind::SqlUdf]; ++i) {
    blocks.front().select_items.push_back("fn_s" + std::to_string(i) + "(t0.amount) AS f" + std::to_string(i));
  }
  for (std::int64_t i = 0; i < counts[OperatorKind::JsUdf]; ++i) {
    blocks.front().select_items.push_back("fn_j" + std::to_string(i) + "(t0.label) AS g" + std::to_string(i));
  }
  for (std::int64_t i = 0; i < counts[OperatorKind::Join]; ++i) {
    static constexpr std::array<const char*, 3> kJoin = {"JOIN", "LEFT JOIN", "INNER JOIN"};
    const std::string alias = "j" + std::to_string(i);
    block().joins.push_back(std::string(p.one(kJoin)) + " " + table_ref(p) + " AS " + alias + " ON t0." +
                            p.one(kColumns) + " = " + alias + ".id");
  }
  for (std::int64_t i = 0; i < counts[OperatorKind::CrossJoin]; ++i) {
    block().joins.push_back("CROSS JOIN " + table_ref(p) + " AS x" + std::to_string(i));
  }
  for (std::int64_t i = 0; i < counts[OperatorKind::Unnest]; ++i) {
    block().from_extras.push_back("UNNEST(t0.tags) AS tag" + std::to_string(i));
  }
  const std::int64_t extra_subselects = counts[OperatorKind::Subselect] - ctes;
  for (std::int64_t i = 0; i < extra_subselects; ++i) {
    const std::string col = p.one(kColumns);
    block().filters.push_back("t0." + col + " IN (SELECT " + col + " FROM " + table_ref(p) + ")");
  }

  if (ctes > 0) {
    sql << "WITH ";
    for (std::int64_t i = 0; i < ctes; ++i) {
      if (i > 0) sql << ",\n";
      sql << "cte" << i << " AS (SELECT * FROM " << table_ref(p) << " WHERE amount > "
          << p.integer(0, 500) << ")";
    }
    sql << "\n";
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b > 0) sql << "\nUNION ALL\n";
    const std::string source = b == 0 && ctes > 0 ? "cte0" : table_ref(p);
    sql << render_block(blocks[b], source);
  }

  const std::int64_t updates = counts[OperatorKind::Update] - merges;
  const std::int64_t inserts = counts[OperatorKind::Insert] - merges;
  for (std::int64_t i = 0; i < merges; ++i) {
    sql << ";\nMERGE " << table_ref(p) << " AS tgt USING " << table_ref(p)
        << " AS src ON tgt.id = src.id\nWHEN MATCHED THEN UPDATE SET amount = src.amount\n"
        << "WHEN NOT MATCHED THEN INSERT (id, amount) VALUES (src.id, src.amount)";
  }
  for (std::int64_t i = 0; i < updates; ++i) {
    sql << ";\nUPDATE " << table_ref(p) << " SET status = 'processed' WHERE id = " << p.integer(1, 100000);
  }
  for (std::int64_t i = 0; i < inserts; ++i) {
    sql << ";\nINSERT INTO " << table_ref(p) << " (id, note) VALUES (" << p.integer(1, 100000) << ", 'batch')";
  }
  return sql.str();
}

std::vector<SyntheticQuery> generate_detailed(const WorkloadConfig& config) {
  config.validate();
  Picker p(config.seed);

  std::vector<const EnvironmentProfile*> envs;
  std::vector<double> shares;
  for (const auto& prof : config.profiles) {
    if (config.environments.empty() ||
        std::find(config.environments.begin(), config.environments.end(), prof.name) != config.environments.end()) {
      envs.push_back(&prof);
      shares.push_back(prof.share);
    }
  }
  std::discrete_distribution<std::size_t> pick_env(shares.begin(), shares.end());
  std::discrete_distribution<std::size_t> pick_asset(kAssetTypeWeights.begin(), kAssetTypeWeights.end());
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<SyntheticQuery> out;
  out.reserve(static_cast<std::size_t>(config.n_queries));
  for (std::int64_t i = 0; i < config.n_queries; ++i) {
    const EnvironmentProfile& env = *envs[pick_env(p.rng())];
    const double u = p.uniform(0.0, 1.0);
    const Shape shape = u < config.trivial_fraction                               ? Shape::Trivial
                        : u < config.trivial_fraction + config.long_tail_fraction ? Shape::LongTail
                                                                                  : Shape::Regular;

    SyntheticQuery q;
    QueryRecord& r = q.record;
    r.environment = env.name;
    r.project_id = env.name + "-analytics";
    r.dataset_id = p.one(kDatasets);
    r.region = p.one(env.regions);
    r.asset_type = kAssetTypes[pick_asset(p.rng())];
    r.creation_time = timestamp_for(i);

    const auto accounts = p.log_uniform(env.accounts_min, env.accounts_max);
    const auto resources = p.log_uniform(env.resources_min, env.resources_max);
    r.account_count = accounts;
    r.resource_count = resources;
    std::array<double, 3> w{};
    for (auto& x : w) x = p.chance(0.7) ? p.uniform(0.2, 1.0) : 0.0;
    if (w[0] + w[1] + w[2] == 0.0) w[0] = 1.0;
    const double total_w = w[0] + w[1] + w[2];
    const auto aws = static_cast<std::int64_t>(std::floor(static_cast<double>(accounts) * w[0] / total_w));
    const auto gcp = static_cast<std::int64_t>(std::floor(static_cast<double>(accounts) * w[1] / total_w));
    r.accounts_aws = aws;
    r.accounts_gcp = gcp;
    r.accounts_azure = accounts - aws - gcp;
    for (const char* key : kAssetCountKeys) {
      if (p.chance(0.6)) r.asset_type_counts[key] = p.log_uniform(1, std::max<std::int64_t>(2, resources / 4));
    }

    double bytes = 0.0;
    double multiplier = 1.0;
    switch (shape) {
      case Shape::Trivial:
        r.cache_hit = p.chance(0.5);
        bytes = r.cache_hit ? std::min(env.bytes_scale * std::pow(10.0, p.uniform(-1.0, 1.0)), 1e11)
                            : std::pow(10.0, p.uniform(3.0, 6.0));
        break;
      case Shape::Regular:
        bytes = env.bytes_scale * std::pow(10.0, p.uniform(-1.0, 1.0));
        multiplier = p.uniform(0.3, 2.5);
        break;
      case Shape::LongTail:
        bytes = std::pow(10.0, p.uniform(12.3, 13.0));
        multiplier = p.uniform(2.5, 4.0);
        break;
    }
    if (shape == Shape::Trivial) {
      do {
        q.intended = draw_counts(p, config.operator_rates, 0.3, true);
      } while (score_of(q.intended) > 12);
    } else {
      q.intended = draw_counts(p, config.operator_rates, multiplier, false);
    }
    r.query_text = assemble_sql(q.intended, p.rng()());

    const auto bytes_int = static_cast<std::int64_t>(std::llround(bytes));
    r.total_bytes_processed = bytes_int;
    if (!p.chance(config.missing_fraction)) {
      constexpr std::int64_t kMinBilled = 10LL << 20;
      r.total_bytes_billed = r.cache_hit ? 0 : std::max(kMinBilled, (bytes_int + kMinBilled - 1) / kMinBilled * kMinBilled);
    }
    if (p.chance(config.missing_fraction)) r.accounts_azure.reset();

    const double eps = std::clamp(noise(p.rng()), -6.0, 6.0) * config.oracle.sigma;
    q.noise_free_slot_min = config.oracle.noise_free(bytes, score_of(q.intended), r.cache_hit);
    const double slot_min = std::max(0.0, q.noise_free_slot_min * std::exp(eps));
    const auto slot_ms = static_cast<std::int64_t>(std::llround(slot_min * 60000.0));
    r.total_slot_ms = slot_ms;
    const double parallelism = p.uniform(10.0, 2000.0);
    r.elapsed_ms = slot_ms > 0 ? std::max<std::int64_t>(1, std::llround(static_cast<double>(slot_ms) / parallelism))
                               : p.integer(5, 60);
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<QueryRecord> generate(const WorkloadConfig& config) {
  auto detailed = generate_detailed(config);
  std::vector<QueryRecord> out;
  out.reserve(detailed.size());
  for (auto& q : detailed) out.push_back(std::move(q.record));
  return out;
}

std::pair<std::vector<QueryRecord>, std::vector<QueryRecord>> split_by_environment(
    std::span<const QueryRecord> records, std::span<const std::string> train_envs,
    std::span<const std::string> test_envs) {
  const std::set<std::string> train(train_envs.begin(), train_envs.end());
  const std::set<std::string> test(test_envs.begin(), test_envs.end());
  for (const auto& e : train) {
    if (test.contains(e)) throw Error(ErrorKind::OverlappingEnvironments, "environment " + e + " is in both lists");
  }
  std::pair<std::vector<QueryRecord>, std::vector<QueryRecord>> out;
  for (const auto& r : records) {
    if (test.contains(r.environment)) {
      out.second.push_back(r);
    } else if (train.empty() || train.contains(r.environment)) {
      out.first.push_back(r);
    }
  }
  return out;
}

}  // namespace slotcast::synth
