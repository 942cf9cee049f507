#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sqlnet/schema.hpp"
#include "sqlnet/sketch.hpp"
#include "sqlnet/text.hpp"

namespace sqlnet {

using Cell = std::variant<std::string, double>;

/// Multiset of projected cells or a single aggregate.
struct ResultSet {
  std::vector<Cell> values;
};

class ExecutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses an optional sign, digits with optional thousands commas ("1,234"),
/// and an optional fraction. Surrounding whitespace is ignored; anything
/// else is not a number.
inline std::optional<double> parse_number(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return std::nullopt;
  text = text.substr(first, text.find_last_not_of(" \t\r\n") - first + 1);
  std::string digits;
  std::size_t i = 0;
  if (text[0] == '+' || text[0] == '-') {
    if (text[0] == '-') digits.push_back('-');
    ++i;
  }
  const std::size_t int_start = i;
  std::size_t group = 0;      // digits since the last comma
  bool saw_comma = false;
  std::size_t leading = 0;    // digits before the first comma
  while (i < text.size() && (detail::is_digit(text[i]) || text[i] == ',')) {
    if (text[i] == ',') {
      if (saw_comma ? group != 3 : (leading == 0 || leading > 3)) return std::nullopt;
      saw_comma = true;
      group = 0;
    } else {
      digits.push_back(text[i]);
      (saw_comma ? group : leading) += 1;
    }
    ++i;
  }
  if (saw_comma && group != 3) return std::nullopt;
  bool have_digits = i > int_start;
  if (i < text.size() && text[i] == '.') {
    digits.push_back('.');
    ++i;
    const std::size_t frac_start = i;
    while (i < text.size() && detail::is_digit(text[i])) digits.push_back(text[i++]);
    have_digits = have_digits || i > frac_start;
  }
  if (!have_digits || i != text.size()) return std::nullopt;
  return std::stod(digits);
}

namespace detail {

inline bool condition_holds(const Condition& cond, const std::string& cell) {
  if (cond.op == CompareOp::kEq) {
    const std::string a = normalize_value(cell);
    const std::string b = normalize_value(cond.value);
    const auto na = parse_number(a);
    const auto nb = parse_number(b);
    if (na && nb) return *na == *nb;
    return a == b;
  }
  const auto threshold = parse_number(normalize_value(cond.value));
  if (!threshold) {
    throw ExecutionError(std::string("comparison ") + compare_op_symbol(cond.op) + " with non-numeric value '" +
                         cond.value + "'");
  }
  const auto number = parse_number(normalize_value(cell));
  if (!number) return false;
  return cond.op == CompareOp::kGt ? *number > *threshold : *number < *threshold;
}

}  // namespace detail

/// Runs `sketch` over `table`: keep rows satisfying every condition, project
/// the select column, then aggregate.
///
/// EQ compares normalized text, or numbers when both sides parse. GT/LT need
/// a numeric condition value (otherwise ExecutionError) and skip rows whose
/// cell is not numeric. MAX/MIN/SUM/AVG use only numeric projected cells and
/// return an empty set when there are none; COUNT counts matching rows.
inline ResultSet execute(const QuerySketch& sketch, const Table& table) {
  const std::size_t columns = table.schema.column_count();
  if (sketch.select_column >= columns) {
    throw ExecutionError("select column " + std::to_string(sketch.select_column) + " outside table");
  }
  for (const auto& c : sketch.conditions) {
    if (c.column >= columns) throw ExecutionError("condition column " + std::to_string(c.column) + " outside table");
    if (c.op != CompareOp::kEq && !parse_number(normalize_value(c.value))) {
      throw ExecutionError(std::string("comparison ") + compare_op_symbol(c.op) + " with non-numeric value '" +
                           c.value + "'");
    }
  }

  std::vector<const std::string*> projected;
  for (const auto& row : table.rows) {
    const bool keep = std::all_of(sketch.conditions.begin(), sketch.conditions.end(),
                                  [&](const Condition& c) { return detail::condition_holds(c, row[c.column]); });
    if (keep) projected.push_back(&row[sketch.select_column]);
  }

  ResultSet result;
  switch (sketch.agg) {
    case Aggregator::kNone:
      for (const auto* cell : projected) result.values.emplace_back(*cell);
      return result;
    case Aggregator::kCount:
      result.values.emplace_back(static_cast<double>(projected.size()));
      return result;
    default:
      break;
  }
  std::vector<double> numbers;
  for (const auto* cell : projected) {
    if (auto n = parse_number(normalize_value(*cell))) numbers.push_back(*n);
  }
  if (numbers.empty()) return result;
  double value = 0.0;
  switch (sketch.agg) {
    case Aggregator::kMax:
      value = *std::max_element(numbers.begin(), numbers.end());
      break;
    case Aggregator::kMin:
      value = *std::min_element(numbers.begin(), numbers.end());
      break;
    case Aggregator::kSum:
    case Aggregator::kAvg:
      for (double n : numbers) value += n;
      if (sketch.agg == Aggregator::kAvg) value /= static_cast<double>(numbers.size());
      break;
    default:
      break;
  }
  result.values.emplace_back(value);
  return result;
}

/// Either a result set or the message of the ExecutionError that replaced it.
struct ExecutionOutcome {
  std::optional<ResultSet> result;
  std::string error;

  bool ok() const { return result.has_value(); }
};

inline ExecutionOutcome try_execute(const QuerySketch& sketch, const Table& table) {
  try {
    return {execute(sketch, table), {}};
  } catch (const ExecutionError& e) {
    return {std::nullopt, e.what()};
  }
}

namespace detail {

struct ComparableCell {
  bool numeric = false;
  double number = 0.0;
  std::string text;

  friend bool operator<(const ComparableCell& a, const ComparableCell& b) {
    if (a.numeric != b.numeric) return a.numeric;
    return a.numeric ? a.number < b.number : a.text < b.text;
  }
};

inline ComparableCell comparable(const Cell& cell) {
  if (const double* d = std::get_if<double>(&cell)) return {true, *d, {}};
  std::string text = normalize_value(std::get<std::string>(cell));
  if (auto n = parse_number(text)) return {true, *n, {}};
  return {false, 0.0, std::move(text)};
}

inline bool numbers_close(double a, double b) {
  if (a == b) return true;
  return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
}

}  // namespace detail

/// Multiset equality, ignoring order. Numbers match within relative 1e-9;
/// text matches after normalization.
inline bool compare_results(const ResultSet& a, const ResultSet& b) {
  if (a.values.size() != b.values.size()) return false;
  std::vector<detail::ComparableCell> left, right;
  for (const auto& c : a.values) left.push_back(detail::comparable(c));
  for (const auto& c : b.values) right.push_back(detail::comparable(c));
  std::sort(left.begin(), left.end());
  std::sort(right.begin(), right.end());
  for (std::size_t i = 0; i < left.size(); ++i) {
    if (left[i].numeric != right[i].numeric) return false;
    if (left[i].numeric ? !detail::numbers_close(left[i].number, right[i].number) : left[i].text != right[i].text) {
      return false;
    }
  }
  return true;
}

/// An execution error matches only another execution error.
inline bool compare_outcomes(const ExecutionOutcome& a, const ExecutionOutcome& b) {
  if (a.ok() != b.ok()) return false;
  return !a.ok() || compare_results(*a.result, *b.result);
}

}  // namespace sqlnet
