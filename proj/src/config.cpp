#include "slotcast/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "slotcast/error.hpp"

namespace slotcast::config {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw Error(ErrorKind::InvalidConfig,
              "config key " + std::string(key) + ": expected " + std::string(expected) + ", got '" +
                  std::string(value) + "'");
}

std::int64_t parse_int(std::string_view key, std::string_view v) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "an unsigned integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out)) bad_value(key, v, "a finite number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> parse_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto item = trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

// A recognised training key with its reader and writer.
struct TrainField {
  std::string key;
  std::function<void(predictor::TrainConfig&, std::string_view)> read;
  std::function<std::string(const predictor::TrainConfig&)> write;
};

template <typename Get>
TrainField int_field(std::string key, Get get, std::int64_t min) {
  return {key,
          [key, get, min](predictor::TrainConfig& c, std::string_view v) {
            const auto x = parse_int(key, v);
            if (x < min) bad_value(key, v, "a value >= " + std::to_string(min));
            get(c) = x;
          },
          [get](const predictor::TrainConfig& c) {
            return std::to_string(get(const_cast<predictor::TrainConfig&>(c)));
          }};
}

template <typename Get>
TrainField double_field(std::string key, Get get, double min, bool exclusive) {
  return {key,
          [key, get, min, exclusive](predictor::TrainConfig& c, std::string_view v) {
            const auto x = parse_double(key, v);
            if (exclusive ? !(x > min) : !(x >= min)) {
              bad_value(key, v, std::string(exclusive ? "a value > " : "a value >= ") + format_double(min));
            }
            get(c) = x;
          },
          [get](const predictor::TrainConfig& c) { return format_double(get(const_cast<predictor::TrainConfig&>(c))); }};
}

const std::vector<TrainField>& train_fields() {
  using C = predictor::TrainConfig;
  static const std::vector<TrainField> fields = [] {
    std::vector<TrainField> f;
    for (const auto k : sql::kAllOperatorKinds) {
      const std::string key = "weight." + std::string(sql::config_key(k));
      f.push_back({key,
                   [key, k](C& c, std::string_view v) { c.weights.set(k, parse_int(key, v)); },
                   [k](const C& c) { return std::to_string(c.weights[k]); }});
    }
    f.push_back(int_field("text.min_df", [](C& c) -> auto& { return c.featurizer.tfidf.min_df; }, 1));
    f.push_back(int_field("text.max_vocab", [](C& c) -> auto& { return c.featurizer.tfidf.max_vocab; }, 1));
    f.push_back(int_field("svd.components", [](C& c) -> auto& { return c.featurizer.svd.components; }, 1));
    f.push_back(int_field("svd.oversampling", [](C& c) -> auto& { return c.featurizer.svd.oversampling; }, 0));
    f.push_back(
        int_field("svd.power_iterations", [](C& c) -> auto& { return c.featurizer.svd.power_iterations; }, 0));
    f.push_back(int_field("categories.top_n", [](C& c) -> auto& { return c.featurizer.top_n_categories; }, 0));
    f.push_back(int_field("asset_counts.top_n", [](C& c) -> auto& { return c.featurizer.top_n_asset_counts; }, 0));
    f.push_back(double_field("gbrt.learning_rate", [](C& c) -> auto& { return c.gbrt.learning_rate; }, 0.0, true));
    f.push_back(int_field("gbrt.iterations", [](C& c) -> auto& { return c.gbrt.iterations; }, 0));
    f.push_back(int_field("gbrt.max_leaves", [](C& c) -> auto& { return c.gbrt.max_leaves; }, 2));
    f.push_back(int_field("gbrt.min_samples_leaf", [](C& c) -> auto& { return c.gbrt.min_samples_leaf; }, 1));
    f.push_back(double_field("gbrt.l2", [](C& c) -> auto& { return c.gbrt.l2; }, 0.0, false));
    f.push_back(int_field("gbrt.max_bins", [](C& c) -> auto& { return c.gbrt.max_bins; }, 2));
    f.push_back(int_field("gbrt.binning_sample", [](C& c) -> auto& { return c.gbrt.binning_sample; }, 1));
    f.push_back(int_field("router.threshold", [](C& c) -> auto& { return c.router.threshold; }, 0));
    f.push_back(int_field("router.min_subset", [](C& c) -> auto& { return c.router.min_subset; }, 0));
    f.push_back({"dual_model", [](C& c, std::string_view v) { c.dual_model = parse_bool("dual_model", v); },
                 [](const C& c) { return std::string(c.dual_model ? "true" : "false"); }});
    f.push_back({"seed", [](C& c, std::string_view v) { c.seed = parse_uint("seed", v); },
                 [](const C& c) { return std::to_string(c.seed); }});
    return f;
  }();
  return fields;
}

const std::vector<std::string>& eval_keys() {
  static const std::vector<std::string> keys = {"eval.cost_significant_min", "eval.long_tail_min", "eval.baseline"};
  return keys;
}

const std::vector<std::string>& synth_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k = {"synth.n_queries",
                                  "synth.test_queries",
                                  "synth.trivial_fraction",
                                  "synth.long_tail_fraction",
                                  "synth.missing_fraction",
                                  "synth.seed",
                                  "synth.oracle.base",
                                  "synth.oracle.volume_exponent",
                                  "synth.oracle.complexity_slope",
                                  "synth.oracle.cache_multiplier",
                                  "synth.oracle.sigma",
                                  "synth.train_environments",
                                  "synth.test_environments"};
    for (const auto kind : sql::kAllOperatorKinds) k.push_back("synth.rate." + std::string(sql::config_key(kind)));
    return k;
  }();
  return keys;
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": empty key");
    if (kv.contains(key)) {
      throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    kv.set(key, std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void KeyValues::set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }

std::optional<std::string> KeyValues::get(std::string_view key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValues::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

void check_known_keys(const KeyValues& kv) {
  static const std::set<std::string, std::less<>> known = [] {
    std::set<std::string, std::less<>> s;
    for (const auto& f : train_fields()) s.insert(f.key);
    s.insert(eval_keys().begin(), eval_keys().end());
    s.insert(synth_keys().begin(), synth_keys().end());
    return s;
  }();
  for (const auto& [k, _] : kv.entries()) {
    if (!known.contains(k)) throw Error(ErrorKind::InvalidConfig, "unknown config key " + k);
  }
}

void apply(const KeyValues& kv, predictor::TrainConfig& config) {
  for (const auto& f : train_fields()) {
    if (const auto v = kv.get(f.key)) f.read(config, *v);
  }
  config.gbrt.validate();
}

void apply(const KeyValues& kv, EvalSettings& settings) {
  if (const auto v = kv.get("eval.cost_significant_min")) {
    settings.cost_significant_min = parse_double("eval.cost_significant_min", *v);
  }
  if (const auto v = kv.get("eval.long_tail_min")) settings.long_tail_min = parse_double("eval.long_tail_min", *v);
  if (const auto v = kv.get("eval.baseline")) {
    if (*v == "train") {
      settings.baseline = eval::BaselineSource::TrainDerived;
    } else if (*v == "test") {
      settings.baseline = eval::BaselineSource::TestDerived;
    } else {
      bad_value("eval.baseline", *v, "train or test");
    }
  }
}

void apply(const KeyValues& kv, SynthSettings& settings) {
  auto& w = settings.workload;
  auto num = [&](const char* key, double& target) {
    if (const auto v = kv.get(key)) target = parse_double(key, *v);
  };
  if (const auto v = kv.get("synth.n_queries")) w.n_queries = parse_int("synth.n_queries", *v);
  if (const auto v = kv.get("synth.test_queries")) settings.test_queries = parse_int("synth.test_queries", *v);
  if (settings.test_queries < 0) bad_value("synth.test_queries", std::to_string(settings.test_queries), ">= 0");
  if (const auto v = kv.get("synth.seed")) w.seed = parse_uint("synth.seed", *v);
  num("synth.trivial_fraction", w.trivial_fraction);
  num("synth.long_tail_fraction", w.long_tail_fraction);
  num("synth.missing_fraction", w.missing_fraction);
  num("synth.oracle.base", w.oracle.base);
  num("synth.oracle.volume_exponent", w.oracle.volume_exponent);
  num("synth.oracle.complexity_slope", w.oracle.complexity_slope);
  num("synth.oracle.cache_multiplier", w.oracle.cache_multiplier);
  num("synth.oracle.sigma", w.oracle.sigma);
  for (const auto kind : sql::kAllOperatorKinds) {
    const std::string key = "synth.rate." + std::string(sql::config_key(kind));
    if (const auto v = kv.get(key)) w.operator_rates[static_cast<std::size_t>(kind)] = parse_double(key, *v);
  }
  if (const auto v = kv.get("synth.train_environments")) settings.train_environments = parse_list(*v);
  if (const auto v = kv.get("synth.test_environments")) settings.test_environments = parse_list(*v);
  w.validate();
}

void write(KeyValues& kv, const predictor::TrainConfig& config) {
  for (const auto& f : train_fields()) kv.set(f.key, f.write(config));
}

std::string default_config_text() {
  std::ostringstream out;
  KeyValues train;
  write(train, predictor::TrainConfig{});
  out << "# Operator weights (complexity score = sum of count x weight)\n";
  for (const auto& [k, v] : train.entries()) {
    if (k.starts_with("weight.")) out << k << "=" << v << "\n";
  }
  out << "\n# Text features, numeric encoding, booster and router\n";
  for (const auto& f : train_fields()) {
    if (!f.key.starts_with("weight.")) out << f.key << "=" << *train.get(f.key) << "\n";
  }

  const EvalSettings e;
  out << "\n# Evaluation tiers (actual slot-minutes) and baseline source (train|test)\n";
  out << "eval.cost_significant_min=" << format_double(e.cost_significant_min) << "\n";
  out << "eval.long_tail_min=" << format_double(e.long_tail_min) << "\n";
  out << "eval.baseline=" << eval::to_string(e.baseline) << "\n";

  const SynthSettings s;
  const auto& w = s.workload;
  out << "\n# Synthetic workload\n";
  out << "synth.n_queries=" << w.n_queries << "\n";
  out << "synth.test_queries=" << s.test_queries << "\n";
  out << "synth.trivial_fraction=" << format_double(w.trivial_fraction) << "\n";
  out << "synth.long_tail_fraction=" << format_double(w.long_tail_fraction) << "\n";
  out << "synth.missing_fraction=" << format_double(w.missing_fraction) << "\n";
  out << "synth.seed=" << w.seed << "\n";
  out << "synth.oracle.base=" << format_double(w.oracle.base) << "\n";
  out << "synth.oracle.volume_exponent=" << format_double(w.oracle.volume_exponent) << "\n";
  out << "synth.oracle.complexity_slope=" << format_double(w.oracle.complexity_slope) << "\n";
  out << "synth.oracle.cache_multiplier=" << format_double(w.oracle.cache_multiplier) << "\n";
  out << "synth.oracle.sigma=" << format_double(w.oracle.sigma) << "\n";
  for (const auto kind : sql::kAllOperatorKinds) {
    out << "synth.rate." << sql::config_key(kind) << "="
        << format_double(w.operator_rates[static_cast<std::size_t>(kind)]) << "\n";
  }
  out << "synth.train_environments=" << join(s.train_environments) << "\n";
  out << "synth.test_environments=" << join(s.test_environments) << "\n";
  return out.str();
}

}  // namespace slotcast::config
