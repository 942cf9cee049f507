#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sqlnet/schema.hpp"
#include "sqlnet/sketch.hpp"
#include "sqlnet/text.hpp"

// Loaders for the WikiSQL line-delimited formats:
//
//   examples: {"question": str, "table_id": str,
//              "sql": {"sel": int, "agg": int, "conds": [[col, op, value], ...]}}
//   tables:   {"id": str, "header": [str], "types": ["real"|"text"], "rows": [[cell]]}

namespace sqlnet {

/// Terminal token appended to every question. The tokenizer lowercases, so
/// it can never produce this spelling from input text.
inline constexpr const char* kEndToken = "<END>";

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Question {
  std::string raw;
  std::vector<std::string> tokens;  // tokenize(raw) followed by kEndToken
  std::vector<std::pair<std::size_t, std::size_t>> offsets;  // byte ranges of the non-END tokens

  std::size_t length() const { return tokens.size(); }
  std::size_t end_position() const { return tokens.size() - 1; }

  static Question from_text(std::string raw) {
    Question q;
    for (auto& piece : tokenize_with_offsets(raw)) {
      q.tokens.push_back(std::move(piece.text));
      q.offsets.emplace_back(piece.begin, piece.end);
    }
    q.tokens.emplace_back(kEndToken);
    q.raw = std::move(raw);
    return q;
  }

  /// Source text covered by token positions [begin, end), both before END.
  std::string raw_span(std::size_t begin, std::size_t end) const {
    return raw.substr(offsets.at(begin).first, offsets.at(end - 1).second - offsets.at(begin).first);
  }
};

/// Half-open token range [begin, end) into Question::tokens.
struct ValueSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const ValueSpan&, const ValueSpan&) = default;
};

struct Example {
  std::string id;
  Question question;
  std::string table_id;
  QuerySketch truth;
  std::vector<std::optional<ValueSpan>> value_spans;  // one per truth condition
};

/// First token span of `question` (END excluded) that spells `value`.
///
/// The span's tokens joined by single spaces must equal the tokenized value
/// joined the same way; failing that, the tokens joined without separators
/// must equal the lowercased value with all whitespace removed.
inline std::optional<ValueSpan> locate_value_span(const Question& question, std::string_view value) {
  const std::string spaced = join(tokenize(value), " ");
  std::string compact;
  for (char c : to_lower(value)) {
    if (!detail::is_space(c)) compact.push_back(c);
  }
  if (compact.empty()) return std::nullopt;
  const std::size_t n = question.length() > 0 ? question.length() - 1 : 0;
  for (std::string_view sep : {std::string_view(" "), std::string_view("")}) {
    const std::string& target = sep.empty() ? compact : spaced;
    for (std::size_t begin = 0; begin < n; ++begin) {
      std::string joined;
      for (std::size_t end = begin + 1; end <= n; ++end) {
        if (end > begin + 1) joined.append(sep);
        joined.append(question.tokens[end - 1]);
        if (joined == target) return ValueSpan{begin, end};
        if (joined.size() > target.size()) break;
      }
    }
  }
  return std::nullopt;
}

namespace detail {

inline std::string json_scalar_text(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer() || j.is_number_unsigned()) return j.dump();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v == static_cast<double>(static_cast<long long>(v)) && std::abs(v) < 1e15) {
      return std::to_string(static_cast<long long>(v));
    }
    return j.dump();
  }
  if (j.is_null()) return "";
  return j.dump();
}

inline long json_index(const nlohmann::json& j, const char* what) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw DataError(std::string(what) + " is not an integer");
  return j.get<long>();
}

}  // namespace detail

inline QuerySketch parse_sql_record(const nlohmann::json& sql) {
  QuerySketch sketch;
  const long sel = detail::json_index(sql.at("sel"), "sql.sel");
  if (sel < 0) throw DataError("sql.sel is negative");
  sketch.select_column = static_cast<std::size_t>(sel);
  const auto agg = aggregator_from_index(detail::json_index(sql.at("agg"), "sql.agg"));
  if (!agg) throw DataError("sql.agg outside 0..5");
  sketch.agg = *agg;
  for (const auto& cond : sql.at("conds")) {
    if (!cond.is_array() || cond.size() != 3) throw DataError("sql.conds entry is not [column, op, value]");
    const long column = detail::json_index(cond[0], "condition column");
    if (column < 0) throw DataError("condition column is negative");
    const auto op = compare_op_from_index(detail::json_index(cond[1], "condition op"));
    if (!op) throw DataError("condition op outside 0..2");
    sketch.conditions.push_back({static_cast<std::size_t>(column), *op, detail::json_scalar_text(cond[2])});
  }
  return sketch;
}

inline nlohmann::json sql_record(const QuerySketch& sketch) {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : sketch.conditions) {
    conds.push_back({c.column, static_cast<int>(c.op), c.value});
  }
  return {{"sel", sketch.select_column}, {"agg", static_cast<int>(sketch.agg)}, {"conds", std::move(conds)}};
}

inline Example make_example(std::string id, std::string question, std::string table_id, QuerySketch truth) {
  Example ex;
  ex.id = std::move(id);
  ex.question = Question::from_text(std::move(question));
  ex.table_id = std::move(table_id);
  ex.truth = std::move(truth);
  for (const auto& c : ex.truth.conditions) ex.value_spans.push_back(locate_value_span(ex.question, c.value));
  return ex;
}

/// Parses line-delimited example records. Blank lines are skipped; record ids
/// default to the zero-based record ordinal when the record has no "id".
inline std::vector<Example> parse_examples(std::istream& in, const std::string& source = "<stream>") {
  std::vector<Example> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      std::string id = record.contains("id") ? detail::json_scalar_text(record["id"]) : std::to_string(out.size());
      out.push_back(make_example(std::move(id), record.at("question").get<std::string>(),
                                 record.at("table_id").get<std::string>(), parse_sql_record(record.at("sql"))));
    } catch (const std::exception& e) {
      throw DataError(source + ":" + std::to_string(line_number) + ": malformed example record: " + e.what());
    }
  }
  return out;
}

inline std::vector<Example> load_examples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open examples file " + path);
  return parse_examples(in, path);
}

/// Adds the tables of a line-delimited tables stream to `store`.
inline void parse_tables(std::istream& in, TableStore& store, const std::string& source = "<stream>") {
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_number) + ": ";
    Table table;
    try {
      const auto record = nlohmann::json::parse(line);
      table.schema.table_id = record.at("id").get<std::string>();
      const auto& header = record.at("header");
      const auto& types = record.at("types");
      if (header.empty()) throw DataError("table has no columns");
      if (types.size() != header.size()) throw DataError("types and header lengths differ");
      for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string type = types[i].get<std::string>();
        if (type != "real" && type != "text") throw DataError("unknown column type '" + type + "'");
        table.schema.columns.push_back(ColumnDef::from_header(
            detail::json_scalar_text(header[i]), type == "real" ? ColumnType::kReal : ColumnType::kText));
      }
      for (const auto& row : record.at("rows")) {
        if (row.size() != header.size()) {
          throw DataError("row " + std::to_string(table.rows.size()) + " has " + std::to_string(row.size()) +
                          " cells, expected " + std::to_string(header.size()));
        }
        std::vector<std::string> cells;
        for (const auto& cell : row) cells.push_back(detail::json_scalar_text(cell));
        table.rows.push_back(std::move(cells));
      }
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    } catch (const std::exception& e) {
      throw DataError(where + "malformed table record: " + e.what());
    }
    if (store.count(table.schema.table_id)) throw DataError(where + "duplicate table id " + table.schema.table_id);
    std::string id = table.schema.table_id;
    store.emplace(std::move(id), std::move(table));
  }
}

inline TableStore load_tables(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tables file " + path);
  TableStore store;
  parse_tables(in, store, path);
  return store;
}

inline void load_tables_into(const std::string& path, TableStore& store) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tables file " + path);
  parse_tables(in, store, path);
}

/// Throws DataError when the example's column indices fall outside `schema`.
inline void check_example_against(const Example& ex, const TableSchema& schema) {
  const std::size_t columns = schema.column_count();
  if (ex.truth.select_column >= columns) {
    throw DataError("example " + ex.id + ": select column " + std::to_string(ex.truth.select_column) +
                    " outside table " + schema.table_id + " (" + std::to_string(columns) + " columns)");
  }
  for (const auto& c : ex.truth.conditions) {
    if (c.column >= columns) {
      throw DataError("example " + ex.id + ": condition column " + std::to_string(c.column) + " outside table " +
                      schema.table_id + " (" + std::to_string(columns) + " columns)");
    }
  }
}

inline nlohmann::json example_record(const Example& ex) {
  return {{"id", ex.id}, {"question", ex.question.raw}, {"table_id", ex.table_id}, {"sql", sql_record(ex.truth)}};
}

inline nlohmann::json table_record(const Table& table) {
  nlohmann::json header = nlohmann::json::array(), types = nlohmann::json::array();
  for (const auto& c : table.schema.columns) {
    header.push_back(c.name);
    types.push_back(column_type_name(c.type));
  }
  return {{"id", table.schema.table_id}, {"header", header}, {"types", types}, {"rows", table.rows}};
}

}  // namespace sqlnet
