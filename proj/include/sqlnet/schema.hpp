#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqlnet/text.hpp"

namespace sqlnet {

enum class ColumnType { kReal, kText };

inline const char* column_type_name(ColumnType t) { return t == ColumnType::kReal ? "real" : "text"; }

/// Placeholder token for a header that tokenizes to nothing.
inline constexpr const char* kEmptyHeaderToken = "<EMPTY>";

struct ColumnDef {
  std::string name;  // header as written in the tables file
  std::vector<std::string> name_tokens;
  ColumnType type = ColumnType::kText;

  static ColumnDef from_header(std::string header, ColumnType type) {
    ColumnDef col;
    col.name_tokens = tokenize(header);
    if (col.name_tokens.empty()) col.name_tokens.emplace_back(kEmptyHeaderToken);
    col.name = std::move(header);
    col.type = type;
    return col;
  }
};

struct TableSchema {
  std::string table_id;
  std::vector<ColumnDef> columns;

  std::size_t column_count() const { return columns.size(); }
};

/// A schema with its row contents. Cells keep their stored text.
struct Table {
  TableSchema schema;
  std::vector<std::vector<std::string>> rows;
};

using TableStore = std::map<std::string, Table>;

}  // namespace sqlnet
