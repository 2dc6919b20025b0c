#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slotcast::sql {

enum class TokenKind : std::uint8_t { Keyword, Identifier, Placeholder, Punctuation };

struct Token {
  TokenKind kind = TokenKind::Punctuation;
  std::string text;
  // Whitespace (or a stripped comment) separated this token from the previous one.
  bool space_before = false;

  bool is_word() const { return kind != TokenKind::Punctuation; }
  friend bool operator==(const Token& a, const Token& b) {
    return a.kind == b.kind && a.text == b.text;
  }
};

inline constexpr std::string_view kStringPlaceholder = "STR";
inline constexpr std::string_view kNumberPlaceholder = "NUM";
inline constexpr std::string_view kTablePlaceholder = "TABLE";

// Normalized SQL: uppercase, comment-free, literal-free, with project-qualified
// table paths collapsed to TABLE.
struct CleanedQuery {
  std::string text;
  std::vector<Token> tokens;

  friend bool operator==(const CleanedQuery&, const CleanedQuery&) = default;
};

// Best-effort lexical cleaning; never rejects input. clean_query is idempotent:
// clean_query(clean_query(x).text) == clean_query(x).
CleanedQuery clean_query(std::string_view raw_sql);

enum class OperatorKind : std::uint8_t {
  Join,
  CrossJoin,
  GroupBy,
  Distinct,
  OrderBy,
  Window,
  RegexFunction,
  SqlUdf,
  JsUdf,
  Unnest,
  Merge,
  Update,
  Insert,
  WithCte,
  Subselect,
  ArrayStruct,
  Having,
};

inline constexpr std::size_t kOperatorKindCount = 17;
inline constexpr std::array<OperatorKind, kOperatorKindCount> kAllOperatorKinds = {
    OperatorKind::Join,          OperatorKind::CrossJoin, OperatorKind::GroupBy,
    OperatorKind::Distinct,      OperatorKind::OrderBy,   OperatorKind::Window,
    OperatorKind::RegexFunction, OperatorKind::SqlUdf,    OperatorKind::JsUdf,
    OperatorKind::Unnest,        OperatorKind::Merge,     OperatorKind::Update,
    OperatorKind::Insert,        OperatorKind::WithCte,   OperatorKind::Subselect,
    OperatorKind::ArrayStruct,   OperatorKind::Having,
};

// Human-readable label, e.g. "Cross Join".
std::string_view display_name(OperatorKind kind);
// Config key suffix, e.g. "cross_join".
std::string_view config_key(OperatorKind kind);
std::optional<OperatorKind> operator_from_key(std::string_view key);

class OperatorCounts {
 public:
  std::int64_t& operator[](OperatorKind k) { return values_[static_cast<std::size_t>(k)]; }
  std::int64_t operator[](OperatorKind k) const { return values_[static_cast<std::size_t>(k)]; }
  OperatorCounts& operator+=(const OperatorCounts& other);

  friend bool operator==(const OperatorCounts&, const OperatorCounts&) = default;

 private:
  std::array<std::int64_t, kOperatorKindCount> values_{};
};

class OperatorWeights {
 public:
  // Join=3, Cross Join=5, Group By=2, Distinct=2, Order By=2, Window=3,
  // Regex=4, SQL UDF=1, JS UDF=6, Unnest=2, Merge=4, Update=3, Insert=1,
  // WITH CTE=1, Subselect=2, Array/Struct=1, Having=1.
  static OperatorWeights defaults();

  std::int64_t operator[](OperatorKind k) const { return values_[static_cast<std::size_t>(k)]; }
  // Throws InvalidConfig on a negative weight.
  void set(OperatorKind k, std::int64_t weight);

  friend bool operator==(const OperatorWeights&, const OperatorWeights&) = default;

 private:
  std::array<std::int64_t, kOperatorKindCount> values_{};
};

struct ComplexityReport {
  OperatorCounts counts;
  OperatorWeights weights;
  std::int64_t score = 0;

  std::int64_t contribution(OperatorKind k) const { return counts[k] * weights[k]; }
};

// Lexical operator tally over the cleaned token stream:
//  - Join: JOIN not preceded by CROSS; Cross Join: the CROSS JOIN bigram
//  - Group By / Order By: bigrams; Having, Distinct, Merge, Update, Insert,
//    Unnest: keyword occurrences
//  - Window: OVER followed by "("; Regex Function: words starting REGEXP_
//  - WITH CTE: one per binding `name [(cols)] AS ( ... )` in a WITH list
//  - Subselect: "(" immediately followed by SELECT (each occurrence)
//  - Array/Struct: ARRAY or STRUCT keywords
//  - UDFs: CREATE [OR REPLACE] [TEMP|TEMPORARY] FUNCTION, JS when LANGUAGE JS
//    appears before the end of that statement
OperatorCounts count_operators(const CleanedQuery& q);

ComplexityReport complexity_score(const CleanedQuery& q,
                                  const OperatorWeights& weights = OperatorWeights::defaults());

// Convenience: clean then score.
ComplexityReport analyze(std::string_view raw_sql,
                         const OperatorWeights& weights = OperatorWeights::defaults());

// One line per operator (kind, count, weight, contribution) then the total.
std::string format_report(const ComplexityReport& report);

}  // namespace slotcast::sql
