#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "sqlnet/schema.hpp"
#include "sqlnet/text.hpp"

// The query sketch
//
//   SELECT $AGG $COLUMN WHERE $COLUMN $OP $VALUE (AND $COLUMN $OP $VALUE)*
//
// with set semantics for the WHERE conjunction.

namespace sqlnet {

/// Indices follow the WikiSQL release (0:NONE .. 5:AVG).
enum class Aggregator : std::uint8_t { kNone = 0, kMax = 1, kMin = 2, kCount = 3, kSum = 4, kAvg = 5 };
inline constexpr std::size_t kAggregatorCount = 6;

/// Indices follow the WikiSQL release (0:'=', 1:'>', 2:'<').
enum class CompareOp : std::uint8_t { kEq = 0, kGt = 1, kLt = 2 };
inline constexpr std::size_t kCompareOpCount = 3;

inline const char* aggregator_name(Aggregator a) {
  static constexpr std::array<const char*, kAggregatorCount> names{"", "MAX", "MIN", "COUNT", "SUM", "AVG"};
  return names.at(static_cast<std::size_t>(a));
}

inline const char* compare_op_symbol(CompareOp op) {
  static constexpr std::array<const char*, kCompareOpCount> symbols{"=", ">", "<"};
  return symbols.at(static_cast<std::size_t>(op));
}

inline std::optional<Aggregator> aggregator_from_index(long index) {
  if (index < 0 || index >= static_cast<long>(kAggregatorCount)) return std::nullopt;
  return static_cast<Aggregator>(index);
}

inline std::optional<CompareOp> compare_op_from_index(long index) {
  if (index < 0 || index >= static_cast<long>(kCompareOpCount)) return std::nullopt;
  return static_cast<CompareOp>(index);
}

struct Condition {
  std::size_t column = 0;
  CompareOp op = CompareOp::kEq;
  std::string value;

  friend bool operator==(const Condition&, const Condition&) = default;
};

struct QuerySketch {
  Aggregator agg = Aggregator::kNone;
  std::size_t select_column = 0;
  std::vector<Condition> conditions;

  friend bool operator==(const QuerySketch&, const QuerySketch&) = default;
};

namespace detail {

inline auto condition_key(const Condition& c) { return std::make_tuple(c.column, c.op, c.value); }

}  // namespace detail

/// Normalizes every value, sorts conditions by (column, op, value) and merges
/// duplicates. Idempotent.
inline QuerySketch canonicalize(const QuerySketch& sketch) {
  QuerySketch out = sketch;
  for (auto& c : out.conditions) c.value = normalize_value(c.value);
  std::sort(out.conditions.begin(), out.conditions.end(),
            [](const Condition& a, const Condition& b) { return detail::condition_key(a) < detail::condition_key(b); });
  out.conditions.erase(std::unique(out.conditions.begin(), out.conditions.end()), out.conditions.end());
  return out;
}

/// Order-insensitive comparison of the WHERE conjunctions only.
inline bool conditions_match(const QuerySketch& a, const QuerySketch& b) {
  return canonicalize(a).conditions == canonicalize(b).conditions;
}

/// Equality of canonical forms: aggregator, select column and condition set.
inline bool query_match(const QuerySketch& a, const QuerySketch& b) {
  return a.agg == b.agg && a.select_column == b.select_column && conditions_match(a, b);
}

namespace detail {

inline bool looks_numeric(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  bool digits = false, dot = false;
  for (; i < s.size(); ++i) {
    if (is_digit(s[i])) {
      digits = true;
    } else if (s[i] == '.' && !dot) {
      dot = true;
    } else {
      return false;
    }
  }
  return digits;
}

inline std::string sql_quote(std::string_view value) {
  std::string out = "'";
  for (char c : value) {
    out.push_back(c);
    if (c == '\'') out.push_back('\'');
  }
  out.push_back('\'');
  return out;
}

}  // namespace detail

/// Human-readable SQL, e.g. "SELECT COUNT(Player) FROM t WHERE No. = 42".
/// Conditions appear in canonical order; values keep their original text.
/// Values of real-typed columns that parse as numbers are left unquoted.
inline std::string to_sql_text(const QuerySketch& sketch, const TableSchema& schema, std::string_view table = "t") {
  auto column_name = [&](std::size_t index) -> const std::string& {
    if (index >= schema.column_count()) {
      throw std::out_of_range("to_sql_text: column index " + std::to_string(index) + " outside table " +
                              schema.table_id + " with " + std::to_string(schema.column_count()) + " columns");
    }
    return schema.columns[index].name;
  };
  std::ostringstream os;
  os << "SELECT ";
  if (sketch.agg == Aggregator::kNone) {
    os << column_name(sketch.select_column);
  } else {
    os << aggregator_name(sketch.agg) << '(' << column_name(sketch.select_column) << ')';
  }
  os << " FROM " << table;

  std::vector<Condition> ordered = sketch.conditions;
  std::stable_sort(ordered.begin(), ordered.end(), [](const Condition& a, const Condition& b) {
    return std::make_tuple(a.column, a.op, normalize_value(a.value)) <
           std::make_tuple(b.column, b.op, normalize_value(b.value));
  });
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const Condition& c = ordered[i];
    os << (i == 0 ? " WHERE " : " AND ") << column_name(c.column) << ' ' << compare_op_symbol(c.op) << ' ';
    const bool numeric = schema.columns[c.column].type == ColumnType::kReal && detail::looks_numeric(c.value);
    os << (numeric ? c.value : detail::sql_quote(c.value));
  }
  return os.str();
}

}  // namespace sqlnet
