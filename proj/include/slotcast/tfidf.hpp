#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "slotcast/sql_analyzer.hpp"

namespace slotcast::text {

// Sparse row with sorted, unique column indices.
struct SparseVector {
  std::size_t dim = 0;
  std::vector<std::pair<std::uint32_t, double>> entries;

  double norm() const;
};

struct TfidfConfig {
  std::int64_t min_df = 2;
  std::int64_t max_vocab = 50000;
};

// Unigram and bigram terms of a cleaned query, in order of appearance.
// Punctuation tokens are skipped; bigrams join adjacent words with a space.
std::vector<std::string> extract_terms(const sql::CleanedQuery& q);

// Fitted TF-IDF state. Column indices follow lexicographic term order.
struct TextVectorizerState {
  std::vector<std::string> terms;
  std::vector<std::int64_t> doc_freq;
  // ln((1 + n_docs) / (1 + df)) + 1
  std::vector<double> idf;
  std::int64_t n_docs = 0;

  std::size_t size() const { return terms.size(); }
  // Rebuilds the term -> column lookup; call after populating `terms` by hand.
  void reindex();
  // Column of `term`, or -1.
  std::int64_t index_of(const std::string& term) const;

 private:
  std::unordered_map<std::string, std::uint32_t> lookup_;
};

// Throws EmptyCorpus for an empty corpus.
TextVectorizerState fit_text(std::span<const sql::CleanedQuery> corpus, const TfidfConfig& config);

// Raw-count tf times idf, then L2-normalised. Out-of-vocabulary terms are ignored.
SparseVector transform_text(const TextVectorizerState& state, const sql::CleanedQuery& q);

}  // namespace slotcast::text
