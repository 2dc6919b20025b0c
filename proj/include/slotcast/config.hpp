#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "slotcast/evaluator.hpp"
#include "slotcast/predictor.hpp"
#include "slotcast/synth.hpp"

namespace slotcast::config {

// Flat key=value document. Blank lines and lines starting with '#' are
// ignored; surrounding whitespace is trimmed.
class KeyValues {
 public:
  // Throws InvalidConfig on a line without '=' or a repeated key.
  static KeyValues parse(std::string_view text);
  // Throws IoError, InvalidConfig.
  static KeyValues load(const std::filesystem::path& path);

  void set(std::string key, std::string value);
  std::optional<std::string> get(std::string_view key) const;
  bool contains(std::string_view key) const { return get(key).has_value(); }
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

  std::string serialize() const;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

struct EvalSettings {
  double cost_significant_min = 0.01;
  double long_tail_min = 20.0;
  eval::BaselineSource baseline = eval::BaselineSource::TrainDerived;
};

// Environments used by `synth` when writing a train/test pair.
struct SynthSettings {
  synth::WorkloadConfig workload;
  std::int64_t test_queries = 0;
  std::vector<std::string> train_environments = synth::default_train_environments();
  std::vector<std::string> test_environments = synth::default_test_environments();
};

// Throws InvalidConfig on any key outside the recognised set.
void check_known_keys(const KeyValues& kv);

// Each apply() reads only its own keys and throws InvalidConfig on values that
// do not parse or are out of range.
void apply(const KeyValues& kv, predictor::TrainConfig& config);
void apply(const KeyValues& kv, EvalSettings& settings);
void apply(const KeyValues& kv, SynthSettings& settings);

// Writes every training key (exact round trip through apply()).
void write(KeyValues& kv, const predictor::TrainConfig& config);

// A commented config file listing every key at its default.
std::string default_config_text();

}  // namespace slotcast::config
