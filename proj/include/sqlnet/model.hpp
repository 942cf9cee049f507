#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sqlnet/dataset.hpp"
#include "sqlnet/nn/lstm.hpp"
#include "sqlnet/nn/ops.hpp"
#include "sqlnet/nn/tape.hpp"
#include "sqlnet/schema.hpp"
#include "sqlnet/sketch.hpp"
#include "sqlnet/vocabulary.hpp"

namespace sqlnet {

/// How the WHERE-column membership probability is computed.
enum class WhereFormula {
  kSequenceToSet,         // sigmoid(u_c.E_col + u_q.E_Q)
  kColumnAttention,       // sigmoid(u_c.E_col + u_q.E_Q|col)
  kColumnAttentionAffine  // sigmoid(u_a.tanh(U_c E_col + U_q E_Q|col))
};

inline const char* where_formula_name(WhereFormula f) {
  switch (f) {
    case WhereFormula::kSequenceToSet: return "seq2set";
    case WhereFormula::kColumnAttention: return "column_attention";
    case WhereFormula::kColumnAttentionAffine: return "column_attention_affine";
  }
  return "?";
}

inline std::optional<WhereFormula> where_formula_from_name(const std::string& name) {
  for (auto f : {WhereFormula::kSequenceToSet, WhereFormula::kColumnAttention, WhereFormula::kColumnAttentionAffine}) {
    if (name == where_formula_name(f)) return f;
  }
  return std::nullopt;
}

struct ModelConfig {
  std::size_t hidden_size = 100;  // d; each LSTM direction gets d/2
  std::size_t embedding_dim = 300;
  std::size_t max_conditions = 4;  // N
  std::size_t max_value_length = 10;
  WhereFormula where_formula = WhereFormula::kColumnAttentionAffine;
};

enum class Head : std::size_t { kWhereColumn = 0, kNumColumns, kOp, kValue, kSelectColumn, kAggregator };
inline constexpr std::size_t kHeadCount = 6;

inline const char* head_name(Head h) {
  static constexpr std::array<const char*, kHeadCount> names{"where", "num", "op", "value", "sel", "agg"};
  return names[static_cast<std::size_t>(h)];
}

/// Token indices of one question and the column names of its table.
struct EncodedInput {
  std::vector<std::size_t> question;              // ends with Vocabulary::kEnd
  std::vector<std::vector<std::size_t>> columns;  // one non-empty list per column

  std::size_t length() const { return question.size(); }
  std::size_t column_count() const { return columns.size(); }
};

inline EncodedInput encode_input(const Vocabulary& vocab, const Question& question, const TableSchema& schema) {
  EncodedInput in;
  in.question = vocab.encode(question.tokens);
  for (const auto& c : schema.columns) in.columns.push_back(vocab.encode(c.name_tokens));
  return in;
}

/// All trainable weights. Heads own separate question and column encoders;
/// only the word embedding is shared.
template <typename T>
class SqlNetModel {
 public:
  using Param = nn::Parameter<T>;

  struct Encoders {
    nn::BiLstm<T> question;
    nn::BiLstm<T> column;
    bool has_column = true;
  };

  SqlNetModel(ModelConfig config, Vocabulary vocab) : config_(config), vocab_(std::move(vocab)) {
    const std::size_t d = config_.hidden_size;
    const std::size_t e = config_.embedding_dim;
    if (d == 0 || d % 2 != 0) throw std::invalid_argument("hidden_size must be positive and even");
    if (e == 0) throw std::invalid_argument("embedding_dim must be positive");
    embedding = Param("embedding.table", nn::Tensor<T>({vocab_.size(), e}));
    end_embedding = Param("embedding.end", nn::Tensor<T>({e}));
    for (std::size_t h = 0; h < kHeadCount; ++h) {
      const std::string prefix = head_name(static_cast<Head>(h));
      encoders[h].question = nn::BiLstm<T>(prefix + ".question_lstm", e, d / 2);
      encoders[h].has_column = static_cast<Head>(h) != Head::kNumColumns;
      if (encoders[h].has_column) encoders[h].column = nn::BiLstm<T>(prefix + ".column_lstm", e, d / 2);
    }
    auto mat = [](const std::string& name, std::size_t r, std::size_t c) { return Param(name, nn::Tensor<T>({r, c})); };
    auto vec = [](const std::string& name, std::size_t n) { return Param(name, nn::Tensor<T>({n})); };

    switch (config_.where_formula) {
      case WhereFormula::kColumnAttention:
        where.attention = mat("where.attention", d, d);
        [[fallthrough]];
      case WhereFormula::kSequenceToSet:
        where.u_column = vec("where.u_column", d);
        where.u_question = vec("where.u_question", d);
        break;
      case WhereFormula::kColumnAttentionAffine:
        where.attention = mat("where.attention", d, d);
        where.u_out = vec("where.u_out", d);
        where.column_proj = mat("where.column_proj", d, d);
        where.question_proj = mat("where.question_proj", d, d);
        break;
    }
    num.attention = mat("num.attention", d, d);
    num.hidden_proj = mat("num.hidden_proj", d, d);
    num.out_proj = mat("num.out_proj", config_.max_conditions + 1, d);

    op.attention = mat("op.attention", d, d);
    op.column_proj = mat("op.column_proj", d, d);
    op.question_proj = mat("op.question_proj", d, d);
    op.out_proj = mat("op.out_proj", kCompareOpCount, d);

    value.decoder = nn::LstmWeights<T>("value.decoder", d, d);
    value.start = vec("value.start", d);
    value.u_out = vec("value.u_out", d);
    value.token_proj = mat("value.token_proj", d, d);
    value.column_proj = mat("value.column_proj", d, d);
    value.state_proj = mat("value.state_proj", d, d);

    sel.attention = mat("sel.attention", d, d);
    sel.u_out = vec("sel.u_out", d);
    sel.column_proj = mat("sel.column_proj", d, d);
    sel.question_proj = mat("sel.question_proj", d, d);

    agg.attention = mat("agg.attention", d, d);
    agg.hidden_proj = mat("agg.hidden_proj", d, d);
    agg.out_proj = mat("agg.out_proj", kAggregatorCount, d);
  }

  SqlNetModel(const SqlNetModel&) = delete;
  SqlNetModel& operator=(const SqlNetModel&) = delete;
  SqlNetModel(SqlNetModel&&) = default;
  SqlNetModel& operator=(SqlNetModel&&) = default;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }

  /// Uniform fan-in initialization; embeddings are copied from `pretrained`
  /// when given. The END row gets a random vector unless `pretrained`
  /// supplies one.
  void initialize(std::uint64_t seed, const EmbeddingTable* pretrained = nullptr) {
    std::mt19937_64 rng(seed);
    for (auto& enc : encoders) {
      enc.question.initialize(rng);
      if (enc.has_column) enc.column.initialize(rng);
    }
    value.decoder.initialize(rng);
    for (auto* p : head_parameters()) {
      nn::init_uniform(*p, p->value.rank() == 2 ? p->value.cols() : config_.hidden_size, rng);
    }
    nn::init_uniform(end_embedding, config_.embedding_dim, rng);
    embedding.value.fill(T{0});
    if (!pretrained) return;
    if (pretrained->dim() != config_.embedding_dim || pretrained->vocab.size() != vocab_.size()) {
      throw std::invalid_argument("initialize: pretrained embedding shape does not match the model");
    }
    for (std::size_t r = 0; r < vocab_.size(); ++r) {
      if (r == Vocabulary::kUnknown || r == Vocabulary::kEnd) continue;
      for (std::size_t c = 0; c < config_.embedding_dim; ++c) {
        embedding.value.at(r, c) = static_cast<T>(pretrained->matrix.at(r, c));
      }
    }
    bool end_given = false;
    for (std::size_t c = 0; c < config_.embedding_dim; ++c) end_given |= pretrained->matrix.at(Vocabulary::kEnd, c) != 0.0;
    if (end_given) {
      for (std::size_t c = 0; c < config_.embedding_dim; ++c) {
        end_embedding.value[c] = static_cast<T>(pretrained->matrix.at(Vocabulary::kEnd, c));
      }
    }
  }

  /// Every parameter, in a fixed order. Parameters of WHERE formulas other
  /// than the configured one are absent.
  std::vector<Param*> parameters() {
    std::vector<Param*> out{&embedding, &end_embedding};
    for (auto& enc : encoders) {
      for (auto* p : enc.question.parameters()) out.push_back(p);
      if (enc.has_column) {
        for (auto* p : enc.column.parameters()) out.push_back(p);
      }
    }
    for (auto* p : value.decoder.parameters()) out.push_back(p);
    for (auto* p : head_parameters()) out.push_back(p);
    return out;
  }

  /// Parameters of the scoring layers (everything except embeddings and
  /// LSTM weights).
  std::vector<Param*> head_parameters() {
    std::vector<Param*> out;
    for (auto* p : {&where.attention, &where.u_column, &where.u_question, &where.u_out, &where.column_proj,
                    &where.question_proj}) {
      if (!p->value.empty()) out.push_back(p);
    }
    for (auto* p : {&num.attention, &num.hidden_proj, &num.out_proj, &op.attention, &op.column_proj,
                    &op.question_proj, &op.out_proj, &value.start, &value.u_out, &value.token_proj,
                    &value.column_proj, &value.state_proj, &sel.attention, &sel.u_out, &sel.column_proj,
                    &sel.question_proj, &agg.attention, &agg.hidden_proj, &agg.out_proj}) {
      out.push_back(p);
    }
    return out;
  }

  Param* find_parameter(const std::string& name) {
    for (auto* p : parameters()) {
      if (p->name == name) return p;
    }
    return nullptr;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  Param embedding;      // |V| x e; row 0 is the unknown token
  Param end_embedding;  // dedicated row for the question terminal token
  std::array<Encoders, kHeadCount> encoders;

  struct {
    Param attention, u_column, u_question, u_out, column_proj, question_proj;
  } where;
  struct {
    Param attention, hidden_proj, out_proj;
  } num;
  struct {
    Param attention, column_proj, question_proj, out_proj;
  } op;
  struct {
    nn::LstmWeights<T> decoder;
    Param start, u_out, token_proj, column_proj, state_proj;
  } value;
  struct {
    Param attention, u_out, column_proj, question_proj;
  } sel;
  struct {
    Param attention, hidden_proj, out_proj;
  } agg;

  Encoders& encoder(Head h) { return encoders[static_cast<std::size_t>(h)]; }

 private:
  ModelConfig config_;
  Vocabulary vocab_;
};

/// Attention-pooled question summary conditioned on `key`:
///   v_i = key^T W H_Q^i,  w = softmax(v),  result = H_Q w
template <typename T>
struct AttentionResult {
  nn::Expr<T> context;
  nn::Expr<T> weights;
};

template <typename T>
AttentionResult<T> column_attention(nn::Expr<T> key, nn::Expr<T> question_states, nn::Expr<T> attention) {
  auto projected_key = nn::matmul_t(attention, key);
  auto scores = nn::matmul_t(question_states, projected_key);
  auto weights = nn::softmax(scores);
  return {nn::matmul(question_states, weights), weights};
}

/// State of the pointer decoder between steps.
template <typename T>
struct DecoderState {
  nn::LstmState<T> lstm;
  nn::Expr<T> next_input;
};

/// The computation for one (question, table) pair on one tape. Encodings
/// are built lazily and cached, so heads can be queried in any order.
template <typename T>
class ExampleGraph {
 public:
  using Expr = nn::Expr<T>;

  ExampleGraph(SqlNetModel<T>& model, nn::Tape<T>& tape, const EncodedInput& input)
      : model_(model), tape_(tape), input_(input) {
    if (input.question.empty()) throw std::invalid_argument("ExampleGraph: empty question");
    if (input.columns.empty()) throw std::invalid_argument("ExampleGraph: table has no columns");
    column_cache_.resize(kHeadCount, std::vector<std::optional<Expr>>(input.columns.size()));
  }

  nn::Tape<T>& tape() { return tape_; }
  const EncodedInput& input() const { return input_; }
  std::size_t column_count() const { return input_.columns.size(); }
  std::size_t question_length() const { return input_.question.size(); }

  Expr embed(std::size_t token) {
    if (token == Vocabulary::kEnd) return tape_.parameter(model_.end_embedding);
    return nn::gather_row(tape_.parameter(model_.embedding), token);
  }

  /// H_Q (d x L) and E_Q (d) of a head's question encoder.
  const nn::BiLstmOutput<T>& question(Head h) {
    auto& slot = question_cache_[static_cast<std::size_t>(h)];
    if (!slot) {
      if (question_embeddings_.empty()) {
        for (auto id : input_.question) question_embeddings_.push_back(embed(id));
      }
      slot = nn::bilstm_encode(model_.encoder(h).question, question_embeddings_);
    }
    return *slot;
  }

  /// E_col of column `c` under a head's column encoder.
  Expr column(Head h, std::size_t c) {
    if (!model_.encoder(h).has_column) throw std::logic_error(std::string("head ") + head_name(h) + " has no column encoder");
    auto& slot = column_cache_.at(static_cast<std::size_t>(h)).at(c);
    if (!slot) {
      std::vector<Expr> tokens;
      for (auto id : input_.columns[c]) tokens.push_back(embed(id));
      slot = nn::bilstm_encode(model_.encoder(h).column, tokens).summary;
    }
    return *slot;
  }

  /// Pre-sigmoid WHERE-column scores, one per column.
  Expr where_logits() {
    if (where_logits_) return *where_logits_;
    auto& w = model_.where;
    const auto& q = question(Head::kWhereColumn);
    std::vector<Expr> scores;
    for (std::size_t c = 0; c < column_count(); ++c) {
      auto e_col = column(Head::kWhereColumn, c);
      switch (model_.config().where_formula) {
        case WhereFormula::kSequenceToSet:
          scores.push_back(nn::dot(param(w.u_column), e_col) + nn::dot(param(w.u_question), q.summary));
          break;
        case WhereFormula::kColumnAttention: {
          auto ctx = column_attention(e_col, q.states, param(w.attention)).context;
          scores.push_back(nn::dot(param(w.u_column), e_col) + nn::dot(param(w.u_question), ctx));
          break;
        }
        case WhereFormula::kColumnAttentionAffine: {
          auto ctx = column_attention(e_col, q.states, param(w.attention)).context;
          auto hidden = nn::tanh(nn::matmul(param(w.column_proj), e_col) + nn::matmul(param(w.question_proj), ctx));
          scores.push_back(nn::dot(param(w.u_out), hidden));
          break;
        }
      }
    }
    where_logits_ = nn::concat(scores);
    return *where_logits_;
  }

  /// Logits over K = 0..N, from the question attended by its own summary.
  Expr num_logits() {
    if (num_logits_) return *num_logits_;
    auto& n = model_.num;
    const auto& q = question(Head::kNumColumns);
    auto self = column_attention(q.summary, q.states, param(n.attention)).context;
    num_logits_ = nn::matmul(param(n.out_proj), nn::tanh(nn::matmul(param(n.hidden_proj), self)));
    return *num_logits_;
  }

  /// Logits over {=, >, <} for column `c`.
  Expr op_logits(std::size_t c) {
    if (auto it = op_logits_.find(c); it != op_logits_.end()) return it->second;
    auto& o = model_.op;
    const auto& q = question(Head::kOp);
    auto e_col = column(Head::kOp, c);
    auto ctx = column_attention(e_col, q.states, param(o.attention)).context;
    auto hidden = nn::tanh(nn::matmul(param(o.column_proj), e_col) + nn::matmul(param(o.question_proj), ctx));
    auto logits = nn::matmul(param(o.out_proj), hidden);
    op_logits_.emplace(c, logits);
    return logits;
  }

  /// Logits over columns for the SELECT slot.
  Expr select_logits() {
    if (select_logits_) return *select_logits_;
    auto& s = model_.sel;
    const auto& q = question(Head::kSelectColumn);
    std::vector<Expr> scores;
    for (std::size_t c = 0; c < column_count(); ++c) {
      auto e_col = column(Head::kSelectColumn, c);
      auto ctx = column_attention(e_col, q.states, param(s.attention)).context;
      auto hidden = nn::tanh(nn::matmul(param(s.column_proj), e_col) + nn::matmul(param(s.question_proj), ctx));
      scores.push_back(nn::dot(param(s.u_out), hidden));
    }
    select_logits_ = nn::concat(scores);
    return *select_logits_;
  }

  /// Logits over the six aggregators given the SELECT column.
  Expr agg_logits(std::size_t c) {
    if (auto it = agg_logits_.find(c); it != agg_logits_.end()) return it->second;
    auto& a = model_.agg;
    const auto& q = question(Head::kAggregator);
    auto ctx = column_attention(column(Head::kAggregator, c), q.states, param(a.attention)).context;
    auto logits = nn::matmul(param(a.out_proj), nn::tanh(nn::matmul(param(a.hidden_proj), ctx)));
    agg_logits_.emplace(c, logits);
    return logits;
  }

  /// Decoder state before the first VALUE step.
  DecoderState<T> value_start() {
    const auto& q = question(Head::kValue);
    const std::size_t d = model_.config().hidden_size;
    return {{q.summary, tape_.constant(nn::Tensor<T>({d}))}, param(model_.value.start)};
  }

  /// One pointer step: advances the decoder and returns scores over the L
  /// question positions,
  ///   a_i = u^T tanh(U_1 H_Q^i + U_2 E_col + U_3 h).
  Expr value_step(std::size_t c, DecoderState<T>& state) {
    auto& v = model_.value;
    state.lstm = nn::lstm_step(v.decoder, state.next_input, state.lstm);
    auto hidden = nn::tanh(nn::add_to_columns(value_base(c), nn::matmul(param(v.state_proj), state.lstm.hidden)));
    return nn::matmul_t(hidden, param(v.u_out));
  }

  /// Feeds the question token at `position` as the next decoder input.
  void value_advance(DecoderState<T>& state, std::size_t position) {
    state.next_input = nn::column(question(Head::kValue).states, position);
  }

 private:
  Expr param(nn::Parameter<T>& p) { return tape_.parameter(p); }

  Expr value_base(std::size_t c) {
    if (auto it = value_base_.find(c); it != value_base_.end()) return it->second;
    auto& v = model_.value;
    const auto& q = question(Head::kValue);
    auto base = nn::add_to_columns(nn::matmul(param(v.token_proj), q.states),
                                   nn::matmul(param(v.column_proj), column(Head::kValue, c)));
    value_base_.emplace(c, base);
    return base;
  }

  SqlNetModel<T>& model_;
  nn::Tape<T>& tape_;
  const EncodedInput& input_;
  std::vector<Expr> question_embeddings_;
  std::array<std::optional<nn::BiLstmOutput<T>>, kHeadCount> question_cache_;
  std::vector<std::vector<std::optional<Expr>>> column_cache_;
  std::optional<Expr> where_logits_, num_logits_, select_logits_;
  std::map<std::size_t, Expr> op_logits_, agg_logits_, value_base_;
};

}  // namespace sqlnet
