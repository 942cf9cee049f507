#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "sqlnet/model.hpp"
#include "sqlnet/training.hpp"

namespace sqlnet {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Model variants of the ablation: the WHERE formula and whether the word
/// embedding is ever trained.
enum class Variant { kSeq2Set, kSeq2SetColumnAttention, kSeq2SetColumnAttentionEmbedding };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kSeq2Set: return "seq2set";
    case Variant::kSeq2SetColumnAttention: return "seq2set+CA";
    case Variant::kSeq2SetColumnAttentionEmbedding: return "seq2set+CA+WE";
  }
  return "?";
}

struct RunConfig {
  std::string train_path, dev_path, test_path;
  std::string tables_path;  // comma-separated list
  std::string embeddings_path;
  std::string run_dir;      // empty: runs/<timestamp>-seed<seed>
  std::string checkpoint;   // model to load for eval/predict
  std::size_t hidden_size = 100;
  std::size_t emb_dim = 300;
  std::size_t max_conds = 4;
  std::size_t max_value_len = 10;
  double alpha = 3.0;
  double lr = 0.001;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::size_t unfreeze_epoch = 100;
  unsigned long long seed = 1;
  std::string variant = "seq2set+CA+WE";
  std::string where_formula;  // empty: implied by the variant
  std::string eval_split = "dev";
  std::string reshuffle_ratios = "0.6987,0.1044,0.1969";
  double gradcheck_tolerance = 1e-4;
  std::size_t checkpoint_every = 1;
  std::size_t eval_every = 0;  // 0: no dev evaluation during training

  using Field = std::variant<std::string RunConfig::*, std::size_t RunConfig::*, double RunConfig::*,
                             unsigned long long RunConfig::*>;

  static const std::vector<std::pair<const char*, Field>>& fields() {
    static const std::vector<std::pair<const char*, Field>> table{
        {"train_path", &RunConfig::train_path},
        {"dev_path", &RunConfig::dev_path},
        {"test_path", &RunConfig::test_path},
        {"tables_path", &RunConfig::tables_path},
        {"embeddings_path", &RunConfig::embeddings_path},
        {"run_dir", &RunConfig::run_dir},
        {"checkpoint", &RunConfig::checkpoint},
        {"hidden_size", &RunConfig::hidden_size},
        {"emb_dim", &RunConfig::emb_dim},
        {"max_conds", &RunConfig::max_conds},
        {"max_value_len", &RunConfig::max_value_len},
        {"alpha", &RunConfig::alpha},
        {"lr", &RunConfig::lr},
        {"epochs", &RunConfig::epochs},
        {"batch_size", &RunConfig::batch_size},
        {"unfreeze_epoch", &RunConfig::unfreeze_epoch},
        {"seed", &RunConfig::seed},
        {"variant", &RunConfig::variant},
        {"where_formula", &RunConfig::where_formula},
        {"eval_split", &RunConfig::eval_split},
        {"reshuffle_ratios", &RunConfig::reshuffle_ratios},
        {"gradcheck_tolerance", &RunConfig::gradcheck_tolerance},
        {"checkpoint_every", &RunConfig::checkpoint_every},
        {"eval_every", &RunConfig::eval_every},
    };
    return table;
  }

  static bool has_field(const std::string& key) {
    for (const auto& [name, f] : fields()) {
      if (key == name) return true;
    }
    return false;
  }

  void set(const std::string& key, const std::string& value) {
    for (const auto& [name, field] : fields()) {
      if (key != name) continue;
      std::visit(
          [&](auto member) {
            using V = std::remove_reference_t<decltype(this->*member)>;
            if constexpr (std::is_same_v<V, std::string>) {
              this->*member = value;
            } else {
              std::istringstream in(value);
              V parsed{};
              if (!(in >> parsed) || !(in >> std::ws).eof() || (std::is_unsigned_v<V> && value.find('-') != std::string::npos)) {
                throw ConfigError(key, "cannot parse '" + value + "'");
              }
              this->*member = parsed;
            }
          },
          field);
      return;
    }
    throw ConfigError(key, "unknown configuration key");
  }

  std::string get(const std::string& key) const {
    for (const auto& [name, field] : fields()) {
      if (key != name) continue;
      return std::visit(
          [&](auto member) {
            std::ostringstream out;
            out.precision(17);
            out << this->*member;
            return out.str();
          },
          field);
    }
    throw ConfigError(key, "unknown configuration key");
  }

  /// Fully resolved key=value text, one line per field.
  std::string resolved_text() const {
    std::string out;
    for (const auto& [name, f] : fields()) out += std::string(name) + "=" + get(name) + "\n";
    return out;
  }

  Variant parsed_variant() const {
    for (auto v : {Variant::kSeq2Set, Variant::kSeq2SetColumnAttention, Variant::kSeq2SetColumnAttentionEmbedding}) {
      if (variant == variant_name(v)) return v;
    }
    throw ConfigError("variant", "expected seq2set, seq2set+CA or seq2set+CA+WE, got '" + variant + "'");
  }

  WhereFormula parsed_where_formula() const {
    if (!where_formula.empty()) {
      auto f = where_formula_from_name(where_formula);
      if (!f) {
        throw ConfigError("where_formula",
                          "expected seq2set, column_attention or column_attention_affine, got '" + where_formula + "'");
      }
      return *f;
    }
    return parsed_variant() == Variant::kSeq2Set ? WhereFormula::kSequenceToSet : WhereFormula::kColumnAttentionAffine;
  }

  std::array<double, 3> parsed_ratios() const {
    std::array<double, 3> out{};
    std::istringstream in(reshuffle_ratios);
    std::string part;
    std::size_t n = 0;
    while (std::getline(in, part, ',')) {
      if (n == 3) throw ConfigError("reshuffle_ratios", "expected three comma-separated ratios");
      try {
        out[n++] = std::stod(part);
      } catch (const std::exception&) {
        throw ConfigError("reshuffle_ratios", "cannot parse '" + part + "'");
      }
    }
    if (n != 3) throw ConfigError("reshuffle_ratios", "expected three comma-separated ratios");
    double sum = 0.0;
    for (double r : out) {
      if (r < 0.0) throw ConfigError("reshuffle_ratios", "ratios must be non-negative");
      sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("reshuffle_ratios", "ratios must sum to 1");
    return out;
  }

  std::vector<std::string> table_paths() const {
    std::vector<std::string> out;
    std::istringstream in(tables_path);
    for (std::string part; std::getline(in, part, ',');) {
      if (!part.empty()) out.push_back(part);
    }
    return out;
  }

  void validate() const {
    if (hidden_size == 0 || hidden_size % 2 != 0) throw ConfigError("hidden_size", "must be positive and even");
    if (emb_dim == 0) throw ConfigError("emb_dim", "must be positive");
    if (max_conds == 0) throw ConfigError("max_conds", "must be positive");
    if (max_value_len == 0) throw ConfigError("max_value_len", "must be positive");
    if (!(alpha > 0.0)) throw ConfigError("alpha", "must be positive");
    if (!(lr >= 0.0)) throw ConfigError("lr", "must be non-negative");
    if (batch_size == 0) throw ConfigError("batch_size", "must be positive");
    if (!(gradcheck_tolerance > 0.0)) throw ConfigError("gradcheck_tolerance", "must be positive");
    if (eval_split != "dev" && eval_split != "test" && eval_split != "train") {
      throw ConfigError("eval_split", "expected dev, test or train");
    }
    parsed_variant();
    parsed_where_formula();
    parsed_ratios();
  }

  ModelConfig model_config() const {
    ModelConfig m;
    m.hidden_size = hidden_size;
    m.embedding_dim = emb_dim;
    m.max_conditions = max_conds;
    m.max_value_length = max_value_len;
    m.where_formula = parsed_where_formula();
    return m;
  }

  TrainConfig train_config() const {
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.unfreeze_epoch = unfreeze_epoch;
    t.train_embeddings = parsed_variant() == Variant::kSeq2SetColumnAttentionEmbedding;
    t.learning_rate = lr;
    t.alpha = alpha;
    t.seed = seed;
    return t;
  }
};

/// Applies "key=value" lines. Blank lines and lines starting with '#' are
/// skipped; keys and values are trimmed.
inline void parse_config(std::istream& in, RunConfig& config, const std::string& source = "<config>") {
  std::string line;
  std::size_t line_number = 0;
  auto trim = [](std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::string();
    return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
  };
  while (std::getline(in, line)) {
    ++line_number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, source + ":" + std::to_string(line_number) + ": expected key=value");
    }
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  RunConfig config;
  parse_config(in, config, path);
  return config;
}

}  // namespace sqlnet
