#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "slotcast/predictor.hpp"
#include "slotcast/synth.hpp"

namespace slotcast::testing {

// Small enough that a full train takes well under a second.
inline predictor::TrainConfig fast_train_config() {
  predictor::TrainConfig c;
  c.featurizer.svd.components = 24;
  c.gbrt.iterations = 40;
  c.gbrt.learning_rate = 0.15;
  c.gbrt.min_samples_leaf = 5;
  c.gbrt.max_leaves = 15;
  c.router.min_subset = 20;
  return c;
}

inline std::vector<QueryRecord> synthetic_records(std::int64_t n, std::uint64_t seed) {
  synth::WorkloadConfig w;
  w.n_queries = n;
  w.seed = seed;
  return synth::generate(w);
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("slotcast_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace slotcast::testing
