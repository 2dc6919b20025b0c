#include "slotcast/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "slotcast/error.hpp"

namespace slotcast::text {

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& [_, v] : entries) s += v * v;
  return std::sqrt(s);
}

std::vector<std::string> extract_terms(const sql::CleanedQuery& q) {
  std::vector<const std::string*> words;
  for (const auto& t : q.tokens) {
    if (t.is_word()) words.push_back(&t.text);
  }
  std::vector<std::string> terms;
  terms.reserve(words.size() * 2);
  for (const auto* w : words) terms.push_back(*w);
  for (std::size_t i = 1; i < words.size(); ++i) terms.push_back(*words[i - 1] + " " + *words[i]);
  return terms;
}

void TextVectorizerState::reindex() {
  lookup_.clear();
  lookup_.reserve(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) lookup_.emplace(terms[i], static_cast<std::uint32_t>(i));
}

std::int64_t TextVectorizerState::index_of(const std::string& term) const {
  const auto it = lookup_.find(term);
  return it == lookup_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

TextVectorizerState fit_text(std::span<const sql::CleanedQuery> corpus, const TfidfConfig& config) {
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "cannot fit TF-IDF on zero documents");
  if (config.min_df < 1 || config.max_vocab < 0) {
    throw Error(ErrorKind::InvalidConfig, "min_df must be >= 1 and max_vocab >= 0");
  }

  std::unordered_map<std::string, std::int64_t> df;
  for (const auto& doc : corpus) {
    auto terms = extract_terms(doc);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    for (auto& t : terms) ++df[std::move(t)];
  }

  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (auto& [term, count] : df) {
    if (count >= config.min_df) kept.emplace_back(term, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (kept.size() > static_cast<std::size_t>(config.max_vocab)) kept.resize(config.max_vocab);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  TextVectorizerState state;
  state.n_docs = static_cast<std::int64_t>(corpus.size());
  state.terms.reserve(kept.size());
  for (auto& [term, count] : kept) {
    state.terms.push_back(term);
    state.doc_freq.push_back(count);
    state.idf.push_back(std::log((1.0 + static_cast<double>(state.n_docs)) /
                                 (1.0 + static_cast<double>(count))) +
                        1.0);
  }
  state.reindex();
  return state;
}

SparseVector transform_text(const TextVectorizerState& state, const sql::CleanedQuery& q) {
  std::map<std::uint32_t, double> counts;
  for (const auto& term : extract_terms(q)) {
    const auto idx = state.index_of(term);
    if (idx >= 0) counts[static_cast<std::uint32_t>(idx)] += 1.0;
  }
  SparseVector v;
  v.dim = state.size();
  v.entries.reserve(counts.size());
  for (const auto& [idx, c] : counts) v.entries.emplace_back(idx, c * state.idf[idx]);
  const double n = v.norm();
  if (n > 0.0) {
    for (auto& [_, value] : v.entries) value /= n;
  }
  return v;
}

}  // namespace slotcast::text
