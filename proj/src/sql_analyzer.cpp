#include "slotcast/sql_analyzer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "slotcast/error.hpp"

namespace slotcast::sql {

namespace {

const std::unordered_set<std::string_view>& keyword_set() {
  static const std::unordered_set<std::string_view> kKeywords = {
      "ALL",       "ALTER",     "AND",       "ANY",       "ARRAY",     "AS",
      "ASC",       "BETWEEN",   "BY",        "CASE",      "CAST",      "CREATE",
      "CROSS",     "CUBE",      "DEFAULT",   "DELETE",    "DESC",      "DISTINCT",
      "DROP",      "ELSE",      "END",       "EXCEPT",    "EXISTS",    "FALSE",
      "FETCH",     "FOLLOWING", "FOR",       "FROM",      "FULL",      "FUNCTION",
      "GROUP",     "GROUPING",  "HAVING",    "IF",        "IN",        "INNER",
      "INSERT",    "INTERSECT", "INTERVAL",  "INTO",      "IS",        "JOIN",
      "LANGUAGE",  "LEFT",      "LIKE",      "LIMIT",     "MATCHED",   "MERGE",
      "NOT",       "NULL",      "NULLS",     "OF",        "OFFSET",    "ON",
      "OR",        "ORDER",     "OUTER",     "OVER",      "PARTITION", "PRECEDING",
      "QUALIFY",   "RANGE",     "RECURSIVE", "REPLACE",   "RETURNS",   "RIGHT",
      "ROLLUP",    "ROWS",      "SELECT",    "SET",       "SOME",      "STRUCT",
      "TABLE",     "TEMP",      "TEMPORARY", "THEN",      "TRUE",      "TRUNCATE",
      "UNBOUNDED", "UNION",     "UNNEST",    "UPDATE",    "USING",     "VALUES",
      "WHEN",      "WHERE",     "WINDOW",    "WITH",      "WITHIN",
  };
  return kKeywords;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_word_start(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}
bool is_word_char(char c) { return is_word_start(c) || is_digit(c); }
bool is_quote(char c) { return c == '\'' || c == '"'; }

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

bool is_plain_identifier(std::string_view s) {
  if (s.empty() || !is_word_start(s.front())) return false;
  return std::all_of(s.begin(), s.end(), is_word_char);
}

bool is_string_prefix(std::string_view word) {
  const std::string w = upper(word);
  return w == "R" || w == "B" || w == "RB" || w == "BR";
}

Token word_token(std::string_view raw, bool space_before) {
  std::string text = upper(raw);
  TokenKind kind = TokenKind::Identifier;
  if (text == kStringPlaceholder || text == kNumberPlaceholder || text == kTablePlaceholder) {
    kind = TokenKind::Placeholder;
  } else if (keyword_set().contains(text)) {
    kind = TokenKind::Keyword;
  }
  return Token{kind, std::move(text), space_before};
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (is_space(c)) {
        pending_space_ = true;
        ++pos_;
      } else if (starts_with("--")) {
        skip_line_comment();
      } else if (starts_with("/*")) {
        skip_block_comment();
      } else if (is_quote(c)) {
        skip_string(false);
        emit(Token{TokenKind::Placeholder, std::string(kStringPlaceholder), false});
      } else if (c == '`') {
        lex_backtick_chain();
      } else if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
        skip_number();
        emit(Token{TokenKind::Placeholder, std::string(kNumberPlaceholder), false});
      } else if (is_word_start(c)) {
        lex_word();
      } else {
        lex_punctuation();
      }
    }
    return std::move(tokens_);
  }

 private:
  bool starts_with(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

  void emit(Token t) {
    t.space_before = pending_space_ && !tokens_.empty();
    pending_space_ = false;
    tokens_.push_back(std::move(t));
  }

  void skip_line_comment() {
    while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
    pending_space_ = true;
  }

  void skip_block_comment() {
    const auto end = src_.find("*/", pos_ + 2);
    pos_ = end == std::string_view::npos ? src_.size() : end + 2;
    pending_space_ = true;
  }

  // pos_ is on the opening quote. Unterminated strings run to end of input.
  void skip_string(bool raw) {
    const char q = src_[pos_];
    const bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q;
    if (triple) {
      pos_ += 3;
      while (pos_ < src_.size()) {
        if (!raw && src_[pos_] == '\\') {
          pos_ += 2;
        } else if (pos_ + 2 < src_.size() && src_[pos_] == q && src_[pos_ + 1] == q &&
                   src_[pos_ + 2] == q) {
          pos_ += 3;
          return;
        } else {
          ++pos_;
        }
      }
      pos_ = src_.size();
      return;
    }
    ++pos_;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\\') {
        pos_ += 2;
      } else if (c == q) {
        ++pos_;
        // '' inside a single-quoted literal is an escaped quote.
        if (pos_ < src_.size() && src_[pos_] == q) {
          ++pos_;
          continue;
        }
        return;
      } else {
        ++pos_;
      }
    }
    pos_ = src_.size();
  }

  void skip_number() {
    if (starts_with("0x") || starts_with("0X")) {
      pos_ += 2;
      while (pos_ < src_.size() && std::isxdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      return;
    }
    while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && is_digit(src_[p])) {
        pos_ = p;
        while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
      }
    }
  }

  void lex_word() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && is_word_char(src_[pos_])) ++pos_;
    const std::string_view word = src_.substr(start, pos_ - start);
    if (pos_ < src_.size() && is_quote(src_[pos_]) && is_string_prefix(word)) {
      const bool raw = upper(word).find('R') != std::string::npos;
      skip_string(raw);
      emit(Token{TokenKind::Placeholder, std::string(kStringPlaceholder), false});
      return;
    }
    emit(word_token(word, false));
  }

  // Returns the backtick-quoted content; pos_ starts on the opening backtick.
  std::string_view read_backtick() {
    const std::size_t start = ++pos_;
    while (pos_ < src_.size() && src_[pos_] != '`') {
      pos_ += src_[pos_] == '\\' ? 2 : 1;
    }
    pos_ = std::min(pos_, src_.size());
    const std::string_view content = src_.substr(start, pos_ - start);
    if (pos_ < src_.size()) ++pos_;
    return content;
  }

  // A dotted path with at least one backticked segment. Dotted backtick
  // content, non-identifier content, or three or more path parts collapse to
  // TABLE; anything else stays as plain identifiers.
  void lex_backtick_chain() {
    struct Segment {
      std::string_view text;
      bool quoted;
    };
    std::vector<Segment> segments{{read_backtick(), true}};
    while (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
           (src_[pos_ + 1] == '`' || is_word_start(src_[pos_ + 1]))) {
      ++pos_;
      if (src_[pos_] == '`') {
        segments.push_back({read_backtick(), true});
      } else {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && is_word_char(src_[pos_])) ++pos_;
        segments.push_back({src_.substr(start, pos_ - start), false});
      }
    }
    std::size_t parts = 0;
    bool collapse = false;
    for (const auto& seg : segments) {
      parts += 1 + static_cast<std::size_t>(std::count(seg.text.begin(), seg.text.end(), '.'));
      if (seg.quoted && !is_plain_identifier(seg.text)) collapse = true;
    }
    if (collapse || parts >= 3) {
      emit(Token{TokenKind::Placeholder, std::string(kTablePlaceholder), false});
      return;
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (i > 0) emit(Token{TokenKind::Punctuation, ".", false});
      emit(word_token(segments[i].text, false));
    }
  }

  void lex_punctuation() {
    static constexpr std::array<std::string_view, 10> kMulti = {"<=", ">=", "<>", "!=", "||",
                                                                "<<", ">>", "=>", "->", "::"};
    for (const auto op : kMulti) {
      if (starts_with(op)) {
        pos_ += op.size();
        emit(Token{TokenKind::Punctuation, std::string(op), false});
        return;
      }
    }
    emit(Token{TokenKind::Punctuation, std::string(1, src_[pos_]), false});
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  bool pending_space_ = false;
  std::vector<Token> tokens_;
};

std::string render(const std::vector<Token>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && (tokens[i].space_before || (tokens[i - 1].is_word() && tokens[i].is_word()))) {
      out.push_back(' ');
    }
    out += tokens[i].text;
  }
  return out;
}

bool text_is(const std::vector<Token>& t, std::size_t i, std::string_view s) {
  return i < t.size() && t[i].text == s;
}

// Index just past the ")" matching the "(" at `open`, or t.size() if unbalanced.
std::size_t skip_parens(const std::vector<Token>& t, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < t.size(); ++i) {
    if (t[i].text == "(") ++depth;
    if (t[i].text == ")" && --depth == 0) return i + 1;
  }
  return t.size();
}

std::int64_t count_cte_bindings(const std::vector<Token>& t, std::size_t with_pos) {
  std::size_t j = with_pos + 1;
  if (text_is(t, j, "RECURSIVE")) ++j;
  std::int64_t bindings = 0;
  while (j < t.size() && t[j].is_word()) {
    ++j;
    if (text_is(t, j, "(")) j = skip_parens(t, j);
    if (!text_is(t, j, "AS")) break;
    ++j;
    if (!text_is(t, j, "(")) break;
    j = skip_parens(t, j);
    ++bindings;
    if (!text_is(t, j, ",")) break;
    ++j;
  }
  return bindings;
}

// Returns nullopt when the CREATE at `i` does not declare a function;
// otherwise whether the declaration is a JavaScript UDF.
std::optional<bool> udf_at(const std::vector<Token>& t, std::size_t i) {
  std::size_t j = i + 1;
  if (text_is(t, j, "OR") && text_is(t, j + 1, "REPLACE")) j += 2;
  if (text_is(t, j, "TEMP") || text_is(t, j, "TEMPORARY")) ++j;
  if (!text_is(t, j, "FUNCTION")) return std::nullopt;
  int depth = 0;
  for (std::size_t k = j + 1; k < t.size(); ++k) {
    const std::string& s = t[k].text;
    if (s == "(") ++depth;
    if (s == ")") --depth;
    if ((s == ";" && depth <= 0) || s == "CREATE") break;
    if (s == "LANGUAGE" && text_is(t, k + 1, "JS")) return true;
  }
  return false;
}

}  // namespace

CleanedQuery clean_query(std::string_view raw_sql) {
  CleanedQuery q;
  q.tokens = Lexer(raw_sql).run();
  q.text = render(q.tokens);
  return q;
}

std::string_view display_name(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Join: return "Join";
    case OperatorKind::CrossJoin: return "Cross Join";
    case OperatorKind::GroupBy: return "Group By";
    case OperatorKind::Distinct: return "Distinct";
    case OperatorKind::OrderBy: return "Order By";
    case OperatorKind::Window: return "Window Function (OVER)";
    case OperatorKind::RegexFunction: return "Regex Function";
    case OperatorKind::SqlUdf: return "SQL UDF";
    case OperatorKind::JsUdf: return "JS UDF";
    case OperatorKind::Unnest: return "Unnest";
    case OperatorKind::Merge: return "Merge";
    case OperatorKind::Update: return "Update";
    case OperatorKind::Insert: return "Insert";
    case OperatorKind::WithCte: return "WITH CTE";
    case OperatorKind::Subselect: return "Subselect";
    case OperatorKind::ArrayStruct: return "Array/Struct";
    case OperatorKind::Having: return "Having";
  }
  return "?";
}

std::string_view config_key(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Join: return "join";
    case OperatorKind::CrossJoin: return "cross_join";
    case OperatorKind::GroupBy: return "group_by";
    case OperatorKind::Distinct: return "distinct";
    case OperatorKind::OrderBy: return "order_by";
    case OperatorKind::Window: return "window";
    case OperatorKind::RegexFunction: return "regex";
    case OperatorKind::SqlUdf: return "sql_udf";
    case OperatorKind::JsUdf: return "js_udf";
    case OperatorKind::Unnest: return "unnest";
    case OperatorKind::Merge: return "merge";
    case OperatorKind::Update: return "update";
    case OperatorKind::Insert: return "insert";
    case OperatorKind::WithCte: return "with_cte";
    case OperatorKind::Subselect: return "subselect";
    case OperatorKind::ArrayStruct: return "array_struct";
    case OperatorKind::Having: return "having";
  }
  return "?";
}

std::optional<OperatorKind> operator_from_key(std::string_view key) {
  for (const auto k : kAllOperatorKinds) {
    if (config_key(k) == key) return k;
  }
  return std::nullopt;
}

OperatorCounts& OperatorCounts::operator+=(const OperatorCounts& other) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

OperatorWeights OperatorWeights::defaults() {
  OperatorWeights w;
  w.values_ = {3, 5, 2, 2, 2, 3, 4, 1, 6, 2, 4, 3, 1, 1, 2, 1, 1};
  return w;
}

void OperatorWeights::set(OperatorKind k, std::int64_t weight) {
  if (weight < 0) {
    throw Error(ErrorKind::InvalidConfig,
                "operator weight for " + std::string(config_key(k)) + " must be >= 0");
  }
  values_[static_cast<std::size_t>(k)] = weight;
}

OperatorCounts count_operators(const CleanedQuery& q) {
  const auto& t = q.tokens;
  OperatorCounts c;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::string& s = t[i].text;
    if (t[i].kind == TokenKind::Punctuation) {
      if (s == "(" && text_is(t, i + 1, "SELECT")) ++c[OperatorKind::Subselect];
      continue;
    }
    if (s == "JOIN") {
      ++c[(i > 0 && t[i - 1].text == "CROSS") ? OperatorKind::CrossJoin : OperatorKind::Join];
    } else if (s == "GROUP" && text_is(t, i + 1, "BY")) {
      ++c[OperatorKind::GroupBy];
    } else if (s == "ORDER" && text_is(t, i + 1, "BY")) {
      ++c[OperatorKind::OrderBy];
    } else if (s == "HAVING") {
      ++c[OperatorKind::Having];
    } else if (s == "DISTINCT") {
      ++c[OperatorKind::Distinct];
    } else if (s == "MERGE") {
      ++c[OperatorKind::Merge];
    } else if (s == "UPDATE") {
      ++c[OperatorKind::Update];
    } else if (s == "INSERT") {
      ++c[OperatorKind::Insert];
    } else if (s == "UNNEST") {
      ++c[OperatorKind::Unnest];
    } else if (s == "OVER" && text_is(t, i + 1, "(")) {
      ++c[OperatorKind::Window];
    } else if (s.starts_with("REGEXP_")) {
      ++c[OperatorKind::RegexFunction];
    } else if (s == "ARRAY" || s == "STRUCT") {
      ++c[OperatorKind::ArrayStruct];
    } else if (s == "WITH") {
      c[OperatorKind::WithCte] += count_cte_bindings(t, i);
    } else if (s == "CREATE") {
      if (const auto js = udf_at(t, i)) ++c[*js ? OperatorKind::JsUdf : OperatorKind::SqlUdf];
    }
  }
  return c;
}

ComplexityReport complexity_score(const CleanedQuery& q, const OperatorWeights& weights) {
  ComplexityReport r;
  r.counts = count_operators(q);
  r.weights = weights;
  for (const auto k : kAllOperatorKinds) r.score += r.contribution(k);
  return r;
}

ComplexityReport analyze(std::string_view raw_sql, const OperatorWeights& weights) {
  return complexity_score(clean_query(raw_sql), weights);
}

std::string format_report(const ComplexityReport& report) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-24s %8s %8s %12s\n", "operator", "count", "weight",
                "contribution");
  out << line;
  for (const auto k : kAllOperatorKinds) {
    std::snprintf(line, sizeof line, "%-24s %8lld %8lld %12lld\n",
                  std::string(display_name(k)).c_str(),
                  static_cast<long long>(report.counts[k]),
                  static_cast<long long>(report.weights[k]),
                  static_cast<long long>(report.contribution(k)));
    out << line;
  }
  std::snprintf(line, sizeof line, "%-24s %8s %8s %12lld\n", "total", "", "",
                static_cast<long long>(report.score));
  out << line;
  return out.str();
}

}  // namespace slotcast::sql
