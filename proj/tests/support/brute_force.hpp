#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "sqlnet/executor.hpp"

namespace sqlnet::testing {

/// Straight-line filter-then-aggregate evaluator, kept apart from the
/// executor's own parsing code.
struct BruteForceResult {
  bool error = false;
  bool aggregate = false;
  std::vector<std::string> cells;  // aggregate == false
  std::vector<double> numbers;     // aggregate == true: zero or one entry
};

inline std::string oracle_normalize(const std::string& s) {
  std::string lowered;
  for (char c : s) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  std::istringstream words(lowered);
  std::string w, out;
  while (words >> w) out += (out.empty() ? "" : " ") + w;
  while (out.size() >= 2 && (out[0] == '\'' || out[0] == '"') && out.back() == out[0]) {
    out = out.substr(1, out.size() - 2);
    std::istringstream inner(out);
    std::string rebuilt;
    while (inner >> w) rebuilt += (rebuilt.empty() ? "" : " ") + w;
    out = rebuilt;
  }
  return out;
}

inline std::optional<double> oracle_number(const std::string& s) {
  static const std::regex pattern(R"(^([+-]?)(\d{1,3}(?:,\d{3})+|\d*)(?:\.(\d*))?$)");
  std::smatch m;
  if (!std::regex_match(s, m, pattern)) return std::nullopt;
  std::string whole = m[2].str(), frac = m[3].str();
  if (whole.empty() && frac.empty()) return std::nullopt;
  double v = 0;
  for (char c : whole) {
    if (c != ',') v = v * 10 + (c - '0');
  }
  double scale = 0.1;
  for (char c : frac) {
    v += (c - '0') * scale;
    scale /= 10;
  }
  return m[1].str() == "-" ? -v : v;
}

inline BruteForceResult brute_force_execute(const QuerySketch& q, const Table& t) {
  BruteForceResult r;
  for (const auto& c : q.conditions) {
    if (c.op != CompareOp::kEq && !oracle_number(oracle_normalize(c.value))) {
      r.error = true;
      return r;
    }
  }
  std::vector<std::string> kept;
  for (const auto& row : t.rows) {
    bool all = true;
    for (const auto& c : q.conditions) {
      const std::string cell = oracle_normalize(row[c.column]), value = oracle_normalize(c.value);
      const auto cn = oracle_number(cell), vn = oracle_number(value);
      bool holds;
      if (c.op == CompareOp::kEq) {
        holds = (cn && vn) ? *cn == *vn : cell == value;
      } else if (!cn) {
        holds = false;
      } else {
        holds = c.op == CompareOp::kGt ? *cn > *vn : *cn < *vn;
      }
      all = all && holds;
    }
    if (all) kept.push_back(row[q.select_column]);
  }
  if (q.agg == Aggregator::kNone) {
    r.cells = kept;
    return r;
  }
  r.aggregate = true;
  if (q.agg == Aggregator::kCount) {
    r.numbers.push_back(static_cast<double>(kept.size()));
    return r;
  }
  std::vector<double> nums;
  for (const auto& cell : kept) {
    if (auto n = oracle_number(oracle_normalize(cell))) nums.push_back(*n);
  }
  if (nums.empty()) return r;
  double acc = q.agg == Aggregator::kMax ? -INFINITY : q.agg == Aggregator::kMin ? INFINITY : 0.0;
  for (double n : nums) {
    if (q.agg == Aggregator::kMax) acc = n > acc ? n : acc;
    else if (q.agg == Aggregator::kMin) acc = n < acc ? n : acc;
    else acc += n;
  }
  if (q.agg == Aggregator::kAvg) acc /= static_cast<double>(nums.size());
  r.numbers.push_back(acc);
  return r;
}

/// True when the executor's outcome equals the brute-force result.
inline bool agrees_with_brute_force(const QuerySketch& q, const Table& t, std::string* why = nullptr) {
  const auto expected = brute_force_execute(q, t);
  const auto actual = try_execute(q, t);
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (expected.error || !actual.ok()) {
    return expected.error == !actual.ok() ? true : fail("error mismatch: " + actual.error);
  }
  const auto& values = actual.result->values;
  if (!expected.aggregate) {
    if (values.size() != expected.cells.size()) return fail("row count differs");
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto* s = std::get_if<std::string>(&values[i]);
      if (!s || *s != expected.cells[i]) return fail("cell " + std::to_string(i) + " differs");
    }
    return true;
  }
  if (values.size() != expected.numbers.size()) return fail("aggregate arity differs");
  if (values.empty()) return true;
  const auto* d = std::get_if<double>(&values[0]);
  if (!d) return fail("aggregate is not numeric");
  const double e = expected.numbers[0];
  if (std::abs(*d - e) > 1e-9 * std::max(1.0, std::abs(e))) return fail("aggregate value differs");
  return true;
}

/// Random table with at most `max_rows` rows over a small cell pool mixing
/// integers, decimals, grouped thousands, words, quotes and blanks.
inline Table random_table(std::mt19937_64& rng, std::size_t max_rows = 20) {
  static const std::vector<std::string> pool{
      "1", "2", "10", "-3", "2.5", "1,234", "1234", "0", "007", " 42 ", "3.",  ".5", "Guard", "guard",
      "Art Long", "art  long", "'Duke'", "", "n/a", "1-0", "12,34", "+8", "Forward", "99"};
  std::uniform_int_distribution<std::size_t> cols(1, 5), rows(0, max_rows), cell(0, pool.size() - 1);
  Table t;
  t.schema.table_id = "random";
  const std::size_t c = cols(rng);
  for (std::size_t i = 0; i < c; ++i) {
    t.schema.columns.push_back(ColumnDef::from_header("c" + std::to_string(i), i % 2 ? ColumnType::kReal : ColumnType::kText));
  }
  for (std::size_t r = rows(rng); r > 0; --r) {
    std::vector<std::string> row;
    for (std::size_t i = 0; i < c; ++i) row.push_back(pool[cell(rng)]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Random sketch over `t`; condition values come from the table or the pool.
inline QuerySketch random_query(std::mt19937_64& rng, const Table& t) {
  static const std::vector<std::string> extra{"5", "1,000", "guard", "'2.5'", "x", "-1", "1e3", ""};
  const std::size_t c = t.schema.column_count();
  std::uniform_int_distribution<std::size_t> col(0, c - 1), agg(0, 5), op(0, 2), conds(0, 3), coin(0, 3),
      ex(0, extra.size() - 1);
  QuerySketch q;
  q.select_column = col(rng);
  q.agg = static_cast<Aggregator>(agg(rng));
  for (std::size_t k = conds(rng); k > 0; --k) {
    Condition cond{col(rng), static_cast<CompareOp>(op(rng)), extra[ex(rng)]};
    if (!t.rows.empty() && coin(rng) != 0) {
      std::uniform_int_distribution<std::size_t> row(0, t.rows.size() - 1);
      cond.value = t.rows[row(rng)][cond.column];
    }
    q.conditions.push_back(std::move(cond));
  }
  return q;
}

}  // namespace sqlnet::testing
