#include "slotcast/sql_analyzer.hpp"

#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "slotcast/error.hpp"
#include "slotcast/synth.hpp"
#include "support/golden_queries.hpp"
#include "support/naive_oracles.hpp"

namespace slotcast::sql {
namespace {

using K = OperatorKind;

std::vector<std::string> texts(const CleanedQuery& q) {
  std::vector<std::string> out;
  for (const auto& t : q.tokens) out.push_back(t.text);
  return out;
}

TEST(CleanQuery, CollapsesQualifiedTablesAndLiterals) {
  EXPECT_EQ(clean_query("select a from `proj.ds.t` where x = 'foo'").text, "SELECT A FROM TABLE WHERE X = STR");
}

TEST(CleanQuery, EmptyInput) {
  const auto q = clean_query("");
  EXPECT_EQ(q.text, "");
  EXPECT_TRUE(q.tokens.empty());
}

TEST(CleanQuery, CollapsesWhitespaceAndNumbers) {
  EXPECT_EQ(clean_query("SELECT   1").text, "SELECT NUM");
  EXPECT_EQ(clean_query("select\n\tx,\n  3.5e2 from t").text, "SELECT X, NUM FROM T");
}

TEST(CleanQuery, StripsComments) {
  EXPECT_EQ(clean_query("select a -- join here\nfrom t /* group by */ where b=1").text,
            "SELECT A FROM T WHERE B=NUM");
}

TEST(CleanQuery, StringVariants) {
  EXPECT_EQ(clean_query(R"(select r'a\d', b"x", """tri'ple""", 'it''s', "q\"q")").text,
            "SELECT STR, STR, STR, STR, STR");
}

TEST(CleanQuery, BacktickRules) {
  EXPECT_EQ(clean_query("select * from `p.d.t`").text, "SELECT * FROM TABLE");
  EXPECT_EQ(clean_query("select * from `p`.`d`.`t`").text, "SELECT * FROM TABLE");
  EXPECT_EQ(clean_query("select * from `my-proj`.ds.t").text, "SELECT * FROM TABLE");
  EXPECT_EQ(clean_query("select `col` from t").text, "SELECT COL FROM T");
}

TEST(CleanQuery, TokenKinds) {
  const auto q = clean_query("select a, 'x' from `p.d.t`");
  ASSERT_EQ(q.tokens.size(), 6u);
  EXPECT_EQ(q.tokens[0].kind, TokenKind::Keyword);
  EXPECT_EQ(q.tokens[1].kind, TokenKind::Identifier);
  EXPECT_EQ(q.tokens[2].kind, TokenKind::Punctuation);
  EXPECT_EQ(q.tokens[3].kind, TokenKind::Placeholder);
  EXPECT_EQ(q.tokens[5].kind, TokenKind::Placeholder);
}

TEST(CleanQuery, Idempotent) {
  const std::vector<std::string> inputs = {
      "select a from `proj.ds.t` where x = 'foo'",
      "SELECT   1",
      "with a as (select 1) select * from a--c\n",
      "select x.y, f(1.5), 'a''b' from `p`.`d`.`t` as t where t.k<>2 and t.s != \"z\"",
      "STR NUM TABLE",
      "select 1a, a1, .5, 0x1F",
      "weird ``` ' unterminated",
      "/* unterminated",
  };
  for (const auto& raw : inputs) {
    const auto once = clean_query(raw);
    const auto twice = clean_query(once.text);
    EXPECT_EQ(once, twice) << raw;
  }
}

TEST(CleanQuery, IdempotentOnSyntheticQueries) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    OperatorCounts c;
    for (const auto k : kAllOperatorKinds) c[k] = static_cast<std::int64_t>(rng() % 3);
    c[K::Subselect] += c[K::WithCte];
    c[K::Update] += c[K::Merge];
    c[K::Insert] += c[K::Merge];
    const auto once = clean_query(synth::assemble_sql(c, rng()));
    EXPECT_EQ(once, clean_query(once.text));
  }
}

TEST(CleanQuery, NoLiteralsRemain) {
  const auto q = clean_query("select 'a', 42, \"b\" from t where y = 3.14");
  for (const auto& t : texts(q)) {
    EXPECT_EQ(t.find('\''), std::string::npos);
    EXPECT_EQ(t.find('"'), std::string::npos);
    EXPECT_FALSE(!t.empty() && std::isdigit(static_cast<unsigned char>(t[0])));
  }
}

TEST(CountOperators, SingleGroupBy) {
  const auto c = count_operators(clean_query("SELECT X FROM T GROUP BY X"));
  for (const auto k : kAllOperatorKinds) EXPECT_EQ(c[k], k == K::GroupBy ? 1 : 0) << display_name(k);
}

TEST(CountOperators, CrossJoinNotDoubleCounted) {
  const auto c = count_operators(clean_query("SELECT * FROM A CROSS JOIN B JOIN C ON A.X=C.X"));
  EXPECT_EQ(c[K::CrossJoin], 1);
  EXPECT_EQ(c[K::Join], 1);
}

TEST(CountOperators, KeywordsInLiteralsAndCommentsIgnored) {
  const auto c = count_operators(clean_query("select 'join group by', x -- distinct\n from t /* order by */"));
  EXPECT_EQ(c, OperatorCounts{});
}

TEST(CountOperators, CteBindingsPerBinding) {
  const auto c = count_operators(clean_query("WITH a AS (SELECT 1), b (x) AS (SELECT 2), c AS (SELECT 3) SELECT 1"));
  EXPECT_EQ(c[K::WithCte], 3);
  EXPECT_EQ(c[K::Subselect], 3);
}

TEST(CountOperators, UdfClassification) {
  const auto c = count_operators(clean_query(
      "CREATE TEMP FUNCTION f(x INT64) AS (x); CREATE OR REPLACE FUNCTION g(s STRING) RETURNS STRING "
      "LANGUAGE js AS 'return s'; CREATE TEMPORARY FUNCTION h() AS (1); CREATE TABLE t (a INT64)"));
  EXPECT_EQ(c[K::SqlUdf], 2);
  EXPECT_EQ(c[K::JsUdf], 1);
}

TEST(CountOperators, WindowNeedsParenthesis) {
  const auto c = count_operators(clean_query("SELECT SUM(x) OVER (PARTITION BY y), AVG(x) OVER w FROM t"));
  EXPECT_EQ(c[K::Window], 1);
}

TEST(ComplexityScore, WorkedExampleScoresEight) {
  const auto r = analyze(
      "SELECT region, COUNT(DISTINCT user_id) FROM events GROUP BY region "
      "UNION ALL SELECT sku, COUNT(DISTINCT order_id) FROM orders GROUP BY sku");
  EXPECT_EQ(r.counts[K::GroupBy], 2);
  EXPECT_EQ(r.counts[K::Distinct], 2);
  EXPECT_EQ(r.score, 8);
}

TEST(ComplexityScore, HandScoredGoldenSet) {
  for (const auto& g : testing::kGoldenQueries) EXPECT_EQ(analyze(g.sql).score, g.score) << g.sql;
}

TEST(ComplexityScore, NaiveRecountAgreesOnGoldenSet) {
  for (const auto& g : testing::kGoldenQueries) {
    if (g.sql.find("--") != std::string_view::npos) continue;  // the oracle does not strip comments
    const auto naive = testing::naive_operator_counts(std::string(g.sql));
    const auto c = count_operators(clean_query(g.sql));
    for (std::size_t i = 0; i < kOperatorKindCount; ++i) EXPECT_EQ(c[kAllOperatorKinds[i]], naive[i]) << g.sql;
  }
}

TEST(ComplexityScore, EmptyQueryScoresZero) { EXPECT_EQ(analyze("").score, 0); }

TEST(ComplexityScore, JsUdfPlusCrossJoinScoresEleven) {
  EXPECT_EQ(analyze("CREATE TEMP FUNCTION f(s STRING) RETURNS STRING LANGUAGE js AS 'return s'; "
                    "SELECT f(a) FROM x CROSS JOIN y")
                .score,
            11);
}

TEST(OperatorWeights, DefaultsMatchReferenceTable) {
  const auto w = OperatorWeights::defaults();
  EXPECT_EQ(w[K::Join], 3);
  EXPECT_EQ(w[K::CrossJoin], 5);
  EXPECT_EQ(w[K::GroupBy], 2);
  EXPECT_EQ(w[K::Distinct], 2);
  EXPECT_EQ(w[K::OrderBy], 2);
  EXPECT_EQ(w[K::Window], 3);
  EXPECT_EQ(w[K::RegexFunction], 4);
  EXPECT_EQ(w[K::SqlUdf], 1);
  EXPECT_EQ(w[K::JsUdf], 6);
  EXPECT_EQ(w[K::Unnest], 2);
  EXPECT_EQ(w[K::Merge], 4);
  EXPECT_EQ(w[K::Update], 3);
  EXPECT_EQ(w[K::Insert], 1);
  EXPECT_EQ(w[K::WithCte], 1);
  EXPECT_EQ(w[K::Subselect], 2);
  EXPECT_EQ(w[K::ArrayStruct], 1);
  EXPECT_EQ(w[K::Having], 1);
}

TEST(OperatorWeights, RejectsNegative) {
  auto w = OperatorWeights::defaults();
  EXPECT_THROW(w.set(K::Join, -1), Error);
  try {
    w.set(K::Join, -1);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
  }
}

TEST(OperatorKeys, RoundTrip) {
  for (const auto k : kAllOperatorKinds) EXPECT_EQ(operator_from_key(config_key(k)), k);
  EXPECT_FALSE(operator_from_key("nope").has_value());
}

OperatorCounts random_counts(std::mt19937_64& rng) {
  OperatorCounts c;
  for (const auto k : kAllOperatorKinds) c[k] = static_cast<std::int64_t>(rng() % 3);
  c[K::Subselect] += c[K::WithCte];
  c[K::Update] += c[K::Merge];
  c[K::Insert] += c[K::Merge];
  return c;
}

TEST(ComplexityProperties, Additivity) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 40; ++i) {
    const auto a = synth::assemble_sql(random_counts(rng), rng());
    const auto b = synth::assemble_sql(random_counts(rng), rng());
    EXPECT_EQ(analyze(a + ";\n" + b).score, analyze(a).score + analyze(b).score);
  }
}

TEST(ComplexityProperties, Monotonicity) {
  std::mt19937_64 rng(12);
  const std::vector<std::string> additions = {
      " JOIN u ON t.a = u.a", " CROSS JOIN v", " ORDER BY a", " GROUP BY a", " HAVING COUNT(*) > 1",
  };
  std::string q = "SELECT a, b FROM t";
  std::int64_t last = analyze(q).score;
  for (int i = 0; i < 20; ++i) {
    q += additions[rng() % additions.size()];
    const auto s = analyze(q).score;
    EXPECT_GE(s, last);
    last = s;
  }
}

TEST(ComplexityProperties, WeightZeroNeutrality) {
  std::mt19937_64 rng(13);
  for (const auto k : kAllOperatorKinds) {
    auto w = OperatorWeights::defaults();
    w.set(k, 0);
    auto c1 = random_counts(rng);
    auto c2 = c1;
    c2[k] += 2;
    if (k == K::WithCte) c2[K::Subselect] += 2;
    if (k == K::Merge) {
      c2[K::Update] += 2;
      c2[K::Insert] += 2;
    }
    const auto base = analyze(synth::assemble_sql(c1, 5), w).score;
    const auto more = analyze(synth::assemble_sql(c2, 5), w).score;
    // Coupled kinds still move their partners; subtract those by hand.
    std::int64_t coupled = 0;
    if (k == K::WithCte) coupled = 2 * w[K::Subselect];
    if (k == K::Merge) coupled = 2 * w[K::Update] + 2 * w[K::Insert];
    EXPECT_EQ(more - coupled, base) << display_name(k);
  }
}

TEST(ComplexityProperties, Deterministic) {
  std::mt19937_64 rng(3);
  const std::string q = synth::assemble_sql(random_counts(rng), 9);
  const auto a = analyze(q);
  const auto b = analyze(q);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.score, b.score);
}

TEST(FormatReport, OneLinePerOperatorThenTotal) {
  const auto text = format_report(analyze("SELECT x FROM t GROUP BY x"));
  std::size_t lines = 0;
  for (const char ch : text) lines += ch == '\n';
  EXPECT_EQ(lines, 1 + kOperatorKindCount + 1);
  EXPECT_NE(text.find("total"), std::string::npos);
  EXPECT_NE(text.find("Group By"), std::string::npos);
}

}  // namespace
}  // namespace slotcast::sql
