#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqlnet/model.hpp"
#include "sqlnet/vocabulary.hpp"

// Checkpoint layout (all integers little-endian):
//
//   "SQLNETCK" u32 version
//   str   config text, one key=value per line
//   u64   vocabulary size, then one str per token
//   u64   parameter count, then per parameter:
//         str name, u32 rank, u64 dims[rank], f64 values[product(dims)]
//
// where str is a u32 byte length followed by the bytes.

namespace sqlnet {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'S', 'Q', 'L', 'N', 'E', 'T', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

inline void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void put_f64(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  put_u64(out, bits);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw CheckpointError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw CheckpointError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

inline std::string get_str(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  if (n > (1u << 30)) throw CheckpointError("checkpoint string length " + std::to_string(n) + " is implausible");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(s.size()))) throw CheckpointError("checkpoint truncated");
  return s;
}

inline double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

}  // namespace detail

/// Free-form run metadata stored beside the model configuration.
using CheckpointInfo = std::map<std::string, std::string>;

template <typename T>
void write_checkpoint(std::ostream& out, SqlNetModel<T>& model, const CheckpointInfo& info = {}) {
  const auto& cfg = model.config();
  std::ostringstream text;
  text << "hidden_size=" << cfg.hidden_size << "\nembedding_dim=" << cfg.embedding_dim
       << "\nmax_conditions=" << cfg.max_conditions << "\nmax_value_length=" << cfg.max_value_length
       << "\nwhere_formula=" << where_formula_name(cfg.where_formula) << "\n";
  for (const auto& [k, v] : info) text << k << "=" << v << "\n";

  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_str(out, text.str());
  detail::put_u64(out, model.vocab().size());
  for (const auto& t : model.vocab().tokens()) detail::put_str(out, t);
  const auto params = model.parameters();
  detail::put_u64(out, params.size());
  for (const auto* p : params) {
    detail::put_str(out, p->name);
    detail::put_u32(out, static_cast<std::uint32_t>(p->value.rank()));
    for (auto extent : p->value.shape()) detail::put_u64(out, extent);
    for (std::size_t i = 0; i < p->value.size(); ++i) detail::put_f64(out, static_cast<double>(p->value[i]));
  }
  if (!out) throw CheckpointError("checkpoint write failed");
}

template <typename T>
void save_checkpoint(const std::string& path, SqlNetModel<T>& model, const CheckpointInfo& info = {}) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  write_checkpoint(out, model, info);
}

namespace detail {

inline std::size_t config_size(const CheckpointInfo& text, const std::string& key) {
  auto it = text.find(key);
  if (it == text.end()) throw CheckpointError("checkpoint config lacks " + key);
  try {
    return static_cast<std::size_t>(std::stoull(it->second));
  } catch (const std::exception&) {
    throw CheckpointError("checkpoint config " + key + " is not a count: " + it->second);
  }
}

}  // namespace detail

/// Rebuilds the model stored in `in`. Entries of the config text other than
/// the model configuration are returned through `info`.
template <typename T>
SqlNetModel<T> read_checkpoint(std::istream& in, CheckpointInfo* info = nullptr) {
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw CheckpointError("not a checkpoint file");
  }
  const auto version = detail::get_u32(in);
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

  CheckpointInfo text;
  std::istringstream lines(detail::get_str(in));
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) text[line.substr(0, eq)] = line.substr(eq + 1);
  }
  ModelConfig cfg;
  cfg.hidden_size = detail::config_size(text, "hidden_size");
  cfg.embedding_dim = detail::config_size(text, "embedding_dim");
  cfg.max_conditions = detail::config_size(text, "max_conditions");
  cfg.max_value_length = detail::config_size(text, "max_value_length");
  const auto formula = where_formula_from_name(text["where_formula"]);
  if (!formula) throw CheckpointError("checkpoint has unknown where_formula '" + text["where_formula"] + "'");
  cfg.where_formula = *formula;

  const auto vocab_size = detail::get_u64(in);
  std::vector<std::string> tokens;
  for (std::uint64_t i = 0; i < vocab_size; ++i) tokens.push_back(detail::get_str(in));
  if (tokens.size() < 2 || tokens[Vocabulary::kUnknown] != Vocabulary::kUnknownToken ||
      tokens[Vocabulary::kEnd] != kEndToken) {
    throw CheckpointError("checkpoint vocabulary lacks the reserved rows");
  }
  SqlNetModel<T> model(cfg, Vocabulary(std::vector<std::string>(tokens.begin() + 2, tokens.end())));
  if (model.vocab().size() != tokens.size()) throw CheckpointError("checkpoint vocabulary has duplicate tokens");

  const auto count = detail::get_u64(in);
  std::size_t assigned = 0;
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::string name = detail::get_str(in);
    nn::Shape shape(detail::get_u32(in));
    for (auto& extent : shape) extent = detail::get_u64(in);
    auto* p = model.find_parameter(name);
    if (!p) throw CheckpointError("checkpoint parameter " + name + " does not belong to the model");
    if (p->value.shape() != shape) {
      throw CheckpointError("checkpoint parameter " + name + " has shape " + nn::to_string(shape) + ", model expects " +
                            nn::to_string(p->value.shape()));
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = static_cast<T>(detail::get_f64(in));
    ++assigned;
  }
  if (assigned != model.parameters().size()) throw CheckpointError("checkpoint is missing parameters");

  if (info) {
    for (const char* key : {"hidden_size", "embedding_dim", "max_conditions", "max_value_length", "where_formula"}) {
      text.erase(key);
    }
    *info = std::move(text);
  }
  return model;
}

template <typename T>
SqlNetModel<T> load_checkpoint(const std::string& path, CheckpointInfo* info = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  return read_checkpoint<T>(in, info);
}

}  // namespace sqlnet
