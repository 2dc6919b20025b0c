#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace slotcast::testing {

// Hand-scored queries. Each score was tallied by hand from the default weight
// table (Join 3, Cross Join 5, Group By 2, Distinct 2, Order By 2, Window 3,
// Regex 4, SQL UDF 1, JS UDF 6, Unnest 2, Merge 4, Update 3, Insert 1,
// WITH CTE 1, Subselect 2, Array/Struct 1, Having 1); the tally is noted on
// each entry.
struct GoldenQuery {
  std::string_view sql;
  std::int64_t score;
};

inline constexpr std::array<GoldenQuery, 20> kGoldenQueries = {{
    // nothing
    {"SELECT a, b FROM t", 0},
    // 2 group by + 2 distinct = 4 + 4
    {"SELECT region, COUNT(DISTINCT user_id) FROM events GROUP BY region "
     "UNION ALL SELECT sku, COUNT(DISTINCT order_id) FROM orders GROUP BY sku",
     8},
    // 2 join = 6
    {"SELECT * FROM a JOIN b ON a.id = b.id LEFT JOIN c ON b.k = c.k", 6},
    // cross join 5 + join 3
    {"SELECT * FROM A CROSS JOIN B JOIN C ON A.X=C.X", 8},
    // window 3 + 2 order by 4 (one inside OVER)
    {"SELECT user_id, ROW_NUMBER() OVER (PARTITION BY user_id ORDER BY ts) AS rn FROM events ORDER BY user_id", 7},
    // 2 regex = 8
    {R"(SELECT REGEXP_EXTRACT(url, r'id=(\d+)') AS id FROM logs WHERE REGEXP_CONTAINS(url, 'checkout'))", 8},
    // sql udf 1
    {"CREATE TEMP FUNCTION add_one(x INT64) AS (x + 1); SELECT add_one(v) FROM t", 1},
    // js udf 6 + cross join 5
    {"CREATE TEMP FUNCTION lower_js(s STRING) RETURNS STRING LANGUAGE js AS \"return s.toLowerCase();\"; "
     "SELECT lower_js(name) FROM users CROSS JOIN settings",
     11},
    // unnest 2
    {"SELECT id, tag FROM items, UNNEST(tags) AS tag", 2},
    // merge 4 + update 3 + insert 1
    {"MERGE dataset.target T USING dataset.source S ON T.id = S.id "
     "WHEN MATCHED THEN UPDATE SET v = S.v WHEN NOT MATCHED THEN INSERT (id, v) VALUES (S.id, S.v)",
     8},
    // update 3 + subselect 2
    {"UPDATE inventory SET qty = qty - 1 WHERE sku IN (SELECT sku FROM orders)", 5},
    // insert 1 (the SELECT is not parenthesised)
    {"INSERT INTO archive SELECT * FROM events WHERE ts < '2020-01-01'", 1},
    // 2 cte 2 + 2 subselect 4
    {"WITH a AS (SELECT 1 AS x), b AS (SELECT x FROM a) SELECT * FROM b", 6},
    // 2 nested subselect 4
    {"SELECT * FROM (SELECT id FROM (SELECT id FROM t) AS inner_q) AS outer_q", 4},
    // struct 1 + array 1
    {"SELECT STRUCT(a AS x, b AS y) AS s, ARRAY<INT64>[1, 2] AS arr FROM t", 2},
    // group by 2 + having 1 + order by 2
    {"SELECT dept, SUM(salary) FROM emp GROUP BY dept HAVING SUM(salary) > 100000 ORDER BY dept", 5},
    // keywords only in comments and literals
    {"-- JOIN in a comment\nSELECT 'GROUP BY inside string', x /* DISTINCT */ FROM t WHERE y = \"ORDER BY\"", 0},
    // distinct 2 + join 3 + group by 2 + order by 2, lower case
    {"select distinct a from t1 join t2 using (id) group by a order by a", 9},
    // one OVER ( ... ) = 3; OVER w and the WINDOW clause add nothing
    {"SELECT user_id, SUM(amount) OVER (PARTITION BY user_id), AVG(amount) OVER w FROM payments "
     "WINDOW w AS (PARTITION BY region)",
     3},
    // cte 1, subselect 2, distinct 2, regex 4, struct 1, join 3, cross join 5,
    // unnest 2, group by 2, having 1, order by 2 = 25
    {"WITH recent AS (SELECT * FROM `proj.ds.events` WHERE ts > '2024-01-01') "
     "SELECT r.user_id, COUNT(DISTINCT r.session_id), REGEXP_REPLACE(r.page, r'\\?.*', '') AS p, "
     "ARRAY_AGG(STRUCT(r.ts, r.page)) FROM recent r JOIN `proj.ds.users` u ON r.user_id = u.id "
     "CROSS JOIN UNNEST(u.tags) AS tag GROUP BY r.user_id, p HAVING COUNT(*) > 3 ORDER BY 2 DESC",
     25},
}};

}  // namespace slotcast::testing
