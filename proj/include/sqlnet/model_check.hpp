#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sqlnet/dataset.hpp"
#include "sqlnet/model.hpp"
#include "sqlnet/nn/gradcheck.hpp"
#include "sqlnet/training.hpp"
#include "sqlnet/vocabulary.hpp"

namespace sqlnet {

/// A three-column table and a five-token question (six with END) whose
/// truth uses every head: SELECT with an aggregator and two conditions,
/// one with a two-token value.
struct ToyProblem {
  TableSchema schema;
  Example example;
  Vocabulary vocab;
};

inline ToyProblem toy_problem() {
  ToyProblem toy;
  toy.schema.table_id = "toy";
  toy.schema.columns = {ColumnDef::from_header("points", ColumnType::kReal),
                        ColumnDef::from_header("team name", ColumnType::kText),
                        ColumnDef::from_header("year", ColumnType::kReal)};
  QuerySketch truth;
  truth.agg = Aggregator::kMax;
  truth.select_column = 0;
  truth.conditions = {{1, CompareOp::kEq, "red sox"}, {2, CompareOp::kGt, "1990"}};
  toy.example = make_example("toy", "max points red sox 1990", "toy", truth);
  toy.vocab = Vocabulary({"1990", "max", "name", "points", "red", "sox", "team", "year"});
  return toy;
}

/// Finite-difference check of the full training loss (all six heads plus
/// embeddings) of a randomly initialized toy model.
template <typename T = double>
nn::GradCheckReport check_model_gradients(std::uint64_t seed, WhereFormula formula = WhereFormula::kColumnAttentionAffine,
                                          std::size_t hidden_size = 8, const nn::GradCheckOptions& options = {}) {
  const ToyProblem toy = toy_problem();
  ModelConfig cfg;
  cfg.hidden_size = hidden_size;
  cfg.embedding_dim = 6;
  cfg.where_formula = formula;
  SqlNetModel<T> model(cfg, toy.vocab);
  model.initialize(seed);
  std::mt19937_64 rng(seed ^ 0x5eedull);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < model.embedding.value.size(); ++i) model.embedding.value[i] = static_cast<T>(u(rng));
  const EncodedInput input = encode_input(model.vocab(), toy.example.question, toy.schema);
  return nn::grad_check<T>(
      [&](nn::Tape<T>& tape) {
        ExampleGraph<T> g(model, tape, input);
        return training_loss(g, toy.example, T{3});
      },
      model.parameters(), options);
}

}  // namespace sqlnet
