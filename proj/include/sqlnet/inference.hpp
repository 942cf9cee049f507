#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sqlnet/dataset.hpp"
#include "sqlnet/model.hpp"
#include "sqlnet/nn/ops.hpp"
#include "sqlnet/sketch.hpp"

namespace sqlnet {

/// Index of the largest entry; ties go to the smallest index.
template <typename Range>
std::size_t argmax(const Range& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

template <typename T>
std::vector<double> to_doubles(const nn::Tensor<T>& t) {
  return {t.values().begin(), t.values().end()};
}

/// Per-column WHERE membership probabilities.
template <typename T>
std::vector<double> where_probabilities(ExampleGraph<T>& g) {
  return to_doubles(nn::sigmoid(g.where_logits()).value());
}

template <typename T>
std::vector<double> softmax_values(nn::Expr<T> logits) {
  return to_doubles(nn::softmax(logits).value());
}

/// Greedy pointer decoding for column `c`: at each step take the most
/// probable question position; stop at the END position or after
/// `max_length` emitted tokens. The END position is never returned.
template <typename T>
std::vector<std::size_t> decode_value(ExampleGraph<T>& g, std::size_t c, std::size_t max_length,
                                      std::vector<double>* first_step = nullptr) {
  const std::size_t end = g.question_length() - 1;
  std::vector<std::size_t> positions;
  auto state = g.value_start();
  for (std::size_t step = 0; step < max_length; ++step) {
    auto scores = g.value_step(c, state);
    if (step == 0 && first_step) *first_step = softmax_values(scores);
    const std::size_t pick = argmax(scores.value().values());
    if (pick == end) break;
    positions.push_back(pick);
    g.value_advance(state, pick);
  }
  return positions;
}

/// Question text for decoded positions: the raw substring when positions
/// are consecutive and ascending, otherwise the tokens joined by spaces.
inline std::string value_text(const Question& question, const std::vector<std::size_t>& positions) {
  if (positions.empty()) return {};
  bool consecutive = true;
  for (std::size_t i = 1; i < positions.size(); ++i) consecutive = consecutive && positions[i] == positions[i - 1] + 1;
  if (consecutive) return question.raw_span(positions.front(), positions.back() + 1);
  std::vector<std::string> parts;
  for (auto p : positions) parts.push_back(question.tokens.at(p));
  return join(parts, " ");
}

struct ConditionPrediction {
  std::size_t column = 0;
  double where_probability = 0.0;
  std::vector<double> op_distribution;
  std::vector<std::size_t> value_positions;
};

/// A predicted sketch plus the distributions it was read from.
struct Prediction {
  QuerySketch sketch;
  std::vector<double> select_distribution;
  std::vector<double> agg_distribution;
  std::vector<double> num_distribution;
  std::vector<double> where_probabilities;
  std::vector<ConditionPrediction> conditions;
};

/// Fills the sketch slot by slot: SELECT column, aggregator given that
/// column, K, the top-K WHERE columns (ties to the smaller index), and for
/// each an OP and a greedily decoded VALUE.
template <typename T>
Prediction infer_query(SqlNetModel<T>& model, const Question& question, const EncodedInput& input) {
  nn::Tape<T> tape(false);
  ExampleGraph<T> g(model, tape, input);
  Prediction out;
  const std::size_t columns = input.column_count();

  out.select_distribution = softmax_values(g.select_logits());
  out.sketch.select_column = argmax(out.select_distribution);
  out.agg_distribution = softmax_values(g.agg_logits(out.sketch.select_column));
  out.sketch.agg = static_cast<Aggregator>(argmax(out.agg_distribution));

  out.num_distribution = softmax_values(g.num_logits());
  const std::size_t k = std::min(argmax(out.num_distribution), columns);
  out.where_probabilities = where_probabilities(g);
  std::vector<std::size_t> order(columns);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.where_probabilities[a] > out.where_probabilities[b];
  });
  order.resize(k);
  std::sort(order.begin(), order.end());

  for (std::size_t c : order) {
    ConditionPrediction cp;
    cp.column = c;
    cp.where_probability = out.where_probabilities[c];
    cp.op_distribution = softmax_values(g.op_logits(c));
    std::vector<double> first_step;
    cp.value_positions = decode_value(g, c, model.config().max_value_length, &first_step);
    if (cp.value_positions.empty() && first_step.size() > 1) {
      // A condition needs a value: fall back to the best non-END position.
      first_step.pop_back();
      cp.value_positions.push_back(argmax(first_step));
    }
    out.sketch.conditions.push_back(
        {c, static_cast<CompareOp>(argmax(cp.op_distribution)), value_text(question, cp.value_positions)});
    out.conditions.push_back(std::move(cp));
  }
  return out;
}

// Single-head entry points. Each builds its own non-recording tape.

template <typename T>
std::vector<double> predict_where_columns(SqlNetModel<T>& model, const EncodedInput& input) {
  nn::Tape<T> tape(false);
  ExampleGraph<T> g(model, tape, input);
  return where_probabilities(g);
}

template <typename T>
std::vector<double> predict_num_columns(SqlNetModel<T>& model, const EncodedInput& input) {
  nn::Tape<T> tape(false);
  ExampleGraph<T> g(model, tape, input);
  return softmax_values(g.num_logits());
}

template <typename T>
std::vector<double> predict_op(SqlNetModel<T>& model, const EncodedInput& input, std::size_t column) {
  nn::Tape<T> tape(false);
  ExampleGraph<T> g(model, tape, input);
  return softmax_values(g.op_logits(column));
}

template <typename T>
std::vector<double> predict_select_column(SqlNetModel<T>& model, const EncodedInput& input) {
  nn::Tape<T> tape(false);
  ExampleGraph<T> g(model, tape, input);
  return softmax_values(g.select_logits());
}

template <typename T>
std::vector<double> predict_aggregator(SqlNetModel<T>& model, const EncodedInput& input, std::size_t column) {
  nn::Tape<T> tape(false);
  ExampleGraph<T> g(model, tape, input);
  return softmax_values(g.agg_logits(column));
}

template <typename T>
std::vector<std::size_t> decode_value(SqlNetModel<T>& model, const EncodedInput& input, std::size_t column,
                                      std::size_t max_length) {
  nn::Tape<T> tape(false);
  ExampleGraph<T> g(model, tape, input);
  return decode_value(g, column, max_length);
}

/// H_Q and E_Q of a head's question encoder.
template <typename T>
std::pair<nn::Tensor<T>, nn::Tensor<T>> encode_question(SqlNetModel<T>& model, Head head, const EncodedInput& input) {
  nn::Tape<T> tape(false);
  ExampleGraph<T> g(model, tape, input);
  const auto& q = g.question(head);
  return {q.states.value(), q.summary.value()};
}

/// E_col of one column under a head's column encoder.
template <typename T>
nn::Tensor<T> encode_column(SqlNetModel<T>& model, Head head, const EncodedInput& input, std::size_t column) {
  nn::Tape<T> tape(false);
  ExampleGraph<T> g(model, tape, input);
  return g.column(head, column).value();
}

}  // namespace sqlnet
