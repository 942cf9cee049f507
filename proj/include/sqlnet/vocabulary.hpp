#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "sqlnet/dataset.hpp"
#include "sqlnet/nn/tensor.hpp"
#include "sqlnet/schema.hpp"

namespace sqlnet {

/// Token to row-index map. Row 0 is the shared unknown-token row and row 1
/// is reserved for the question terminal token.
class Vocabulary {
 public:
  static constexpr std::size_t kUnknown = 0;
  static constexpr std::size_t kEnd = 1;
  static constexpr const char* kUnknownToken = "<UNK>";

  Vocabulary() {
    add(kUnknownToken);
    add(kEndToken);
  }

  explicit Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
    for (const auto& t : tokens) add(t);
  }

  std::size_t add(const std::string& token) {
    auto [it, inserted] = index_.try_emplace(token, tokens_.size());
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  std::size_t index(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnknown : it->second;
  }

  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const {
    std::vector<std::size_t> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(index(t));
    return out;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Vocabulary over every question and column-name token, in sorted order.
inline Vocabulary build_vocabulary(const std::vector<const std::vector<Example>*>& splits, const TableStore& tables) {
  std::set<std::string> seen;
  for (const auto* split : splits) {
    for (const auto& ex : *split) seen.insert(ex.question.tokens.begin(), ex.question.tokens.end());
  }
  for (const auto& [id, table] : tables) {
    for (const auto& c : table.schema.columns) seen.insert(c.name_tokens.begin(), c.name_tokens.end());
  }
  return Vocabulary(std::vector<std::string>(seen.begin(), seen.end()));
}

struct EmbeddingTable {
  Vocabulary vocab;
  nn::Tensor<double> matrix;  // |V| x dim
  bool trainable = false;
  std::size_t found = 0;      // vocabulary rows filled from the file

  std::size_t dim() const { return matrix.cols(); }
};

/// Reads "token v1 ... vd" lines. Vocabulary tokens missing from the stream
/// keep zero rows; the dimension comes from the first line, or from
/// `default_dim` when the stream is empty.
inline EmbeddingTable parse_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t default_dim,
                                       const std::string& source = "<stream>") {
  EmbeddingTable table{vocab, {}, false, 0};
  std::vector<std::vector<double>> rows(vocab.size());
  std::size_t dim = 0;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> values;
    std::string number;
    while (fields >> number) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(number, &used));
        if (used != number.size()) throw std::invalid_argument(number);
      } catch (const std::exception&) {
        throw DataError(source + ":" + std::to_string(line_number) + ": bad embedding value '" + number + "'");
      }
    }
    if (dim == 0) {
      if (values.empty()) throw DataError(source + ":" + std::to_string(line_number) + ": embedding has no values");
      dim = values.size();
    } else if (values.size() != dim) {
      throw DataError(source + ":" + std::to_string(line_number) + ": embedding has " +
                      std::to_string(values.size()) + " values, expected " + std::to_string(dim));
    }
    const std::string key = to_lower(token);
    if (!vocab.contains(key)) continue;
    auto& row = rows[vocab.index(key)];
    if (row.empty()) {
      row = std::move(values);
      ++table.found;
    }
  }
  if (dim == 0) dim = default_dim;
  if (dim == 0) throw DataError("embedding dimension unknown: empty file and no configured dimension");
  table.matrix = nn::Tensor<double>({vocab.size(), dim});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r == Vocabulary::kUnknown) continue;
    for (std::size_t c = 0; c < rows[r].size(); ++c) table.matrix.at(r, c) = rows[r][c];
  }
  return table;
}

inline EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, std::size_t default_dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings file " + path);
  return parse_embeddings(in, vocab, default_dim, path);
}

}  // namespace sqlnet
