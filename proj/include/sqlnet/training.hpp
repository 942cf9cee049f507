#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "sqlnet/dataset.hpp"
#include "sqlnet/model.hpp"
#include "sqlnet/nn/adam.hpp"
#include "sqlnet/nn/ops.hpp"
#include "sqlnet/nn/tape.hpp"
#include "sqlnet/schema.hpp"
#include "sqlnet/sketch.hpp"

namespace sqlnet {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Truth conditions (with their spans) sorted by (column, op, normalized
/// value, raw value).
inline std::vector<std::size_t> canonical_condition_order(const Example& ex) {
  std::vector<std::string> keys;
  for (const auto& c : ex.truth.conditions) keys.push_back(normalize_value(c.value));
  std::vector<std::size_t> order(ex.truth.conditions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = ex.truth.conditions[a];
    const auto& cb = ex.truth.conditions[b];
    return std::tie(ca.column, ca.op, keys[a], ca.value) < std::tie(cb.column, cb.op, keys[b], cb.value);
  });
  return order;
}

}  // namespace detail

/// Weighted set loss over WHERE columns from their logits z:
///   -sum_j (alpha y_j log sigmoid(z_j) + (1 - y_j) log sigmoid(-z_j))
template <typename T>
nn::Expr<T> where_column_loss(nn::Expr<T> logits, const std::vector<bool>& in_where, T alpha) {
  nn::Tensor<T> positive(logits.shape()), negative(logits.shape());
  for (std::size_t i = 0; i < in_where.size(); ++i) {
    positive[i] = in_where[i] ? alpha : T{0};
    negative[i] = in_where[i] ? T{0} : T{1};
  }
  auto& tape = *logits.tape;
  auto terms = nn::mul(nn::log_sigmoid(logits), tape.constant(positive)) +
               nn::mul(nn::log_sigmoid(-logits), tape.constant(negative));
  return -nn::sum(terms);
}

/// Full training loss of one example: WHERE set loss, cross-entropy for
/// #col, per-condition OP and teacher-forced VALUE steps, SELECT column and
/// aggregator (conditioned on the true SELECT column). Conditions are
/// visited in canonical order so the sum does not depend on their listing.
template <typename T>
nn::Expr<T> training_loss(ExampleGraph<T>& g, const Example& ex, T alpha = T{3}) {
  const std::size_t columns = g.column_count();
  if (ex.truth.select_column >= columns) {
    throw std::out_of_range("example " + ex.id + ": select column " + std::to_string(ex.truth.select_column) +
                            " outside " + std::to_string(columns) + " columns");
  }
  std::vector<bool> in_where(columns, false);
  for (const auto& c : ex.truth.conditions) {
    if (c.column >= columns) {
      throw std::out_of_range("example " + ex.id + ": condition column " + std::to_string(c.column) + " outside " +
                              std::to_string(columns) + " columns");
    }
    in_where[c.column] = true;
  }
  const std::size_t n_max = g.num_logits().size() - 1;

  auto loss = where_column_loss(g.where_logits(), in_where, alpha);
  loss = loss + nn::cross_entropy(g.num_logits(), std::min(ex.truth.conditions.size(), n_max));

  const std::size_t end = g.question_length() - 1;
  for (std::size_t i : detail::canonical_condition_order(ex)) {
    const auto& cond = ex.truth.conditions[i];
    loss = loss + nn::cross_entropy(g.op_logits(cond.column), static_cast<std::size_t>(cond.op));
    if (i >= ex.value_spans.size() || !ex.value_spans[i]) continue;
    const ValueSpan& span = *ex.value_spans[i];
    std::vector<std::size_t> targets;
    for (std::size_t p = span.begin; p < span.end; ++p) targets.push_back(p);
    targets.push_back(end);
    auto state = g.value_start();
    for (std::size_t t : targets) {
      loss = loss + nn::cross_entropy(g.value_step(cond.column, state), t);
      if (t != end) g.value_advance(state, t);
    }
  }

  loss = loss + nn::cross_entropy(g.select_logits(), ex.truth.select_column);
  loss = loss + nn::cross_entropy(g.agg_logits(ex.truth.select_column), static_cast<std::size_t>(ex.truth.agg));
  return loss;
}

/// Loss value of one example, evaluated without recording.
template <typename T>
T training_loss(SqlNetModel<T>& model, const Example& ex, const TableSchema& schema, T alpha = T{3}) {
  const auto input = encode_input(model.vocab(), ex.question, schema);
  nn::Tape<T> tape(false);
  ExampleGraph<T> g(model, tape, input);
  return training_loss(g, ex, alpha).value().item();
}

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::size_t unfreeze_epoch = 100;  // embeddings update in epochs after this one
  bool train_embeddings = true;
  double learning_rate = 0.001;
  double alpha = 3.0;
  std::uint64_t seed = 1;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  std::size_t examples = 0;
  bool embeddings_trainable = false;
};

/// Called after every epoch; returning false stops training early.
template <typename T>
using EpochCallback = std::function<bool(const EpochRecord&, SqlNetModel<T>&)>;

/// Minibatch Adam over the mean batch loss, reshuffling every epoch.
/// The embedding table is frozen until `unfreeze_epoch` has passed (and for
/// good when `train_embeddings` is false).
template <typename T>
std::vector<EpochRecord> train(SqlNetModel<T>& model, const std::vector<Example>& examples, const TableStore& tables,
                               const TrainConfig& config, const EpochCallback<T>& on_epoch = {}) {
  if (config.batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
  std::vector<EncodedInput> inputs;
  inputs.reserve(examples.size());
  for (const auto& ex : examples) {
    auto it = tables.find(ex.table_id);
    if (it == tables.end()) throw DataError("example " + ex.id + ": unknown table " + ex.table_id);
    check_example_against(ex, it->second.schema);
    inputs.push_back(encode_input(model.vocab(), ex.question, it->second.schema));
  }

  nn::AdamState<T> adam(nn::AdamConfig{config.learning_rate});
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EpochRecord> log;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const bool embeddings = config.train_embeddings && epoch > config.unfreeze_epoch;
    model.embedding.requires_grad = embeddings;
    std::vector<nn::Parameter<T>*> trainable;
    for (auto* p : model.parameters()) {
      if (p->requires_grad) trainable.push_back(p);
    }
    std::shuffle(order.begin(), order.end(), rng);

    double total = 0.0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += config.batch_size, ++batch) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const T scale = T{1} / static_cast<T>(stop - start);
      for (auto* p : trainable) p->zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        nn::Tape<T> tape;
        ExampleGraph<T> g(model, tape, inputs[i]);
        auto loss = training_loss(g, examples[i], static_cast<T>(config.alpha));
        const double value = static_cast<double>(loss.value().item());
        if (!std::isfinite(value)) {
          std::string ids;
          for (std::size_t j = start; j < stop; ++j) ids += (j == start ? "" : ",") + examples[order[j]].id;
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch) + ", example " + examples[i].id + " (batch examples " + ids + ")");
        }
        total += value;
        tape.backward(nn::scale(loss, scale));
      }
      nn::adam_step(trainable, adam);
    }

    EpochRecord record{epoch, examples.empty() ? 0.0 : total / static_cast<double>(examples.size()), examples.size(),
                       embeddings};
    log.push_back(record);
    if (on_epoch && !on_epoch(record, model)) break;
  }
  model.embedding.requires_grad = config.train_embeddings && config.epochs > config.unfreeze_epoch;
  return log;
}

}  // namespace sqlnet
