#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqlnet/dataset.hpp"
#include "sqlnet/executor.hpp"
#include "sqlnet/inference.hpp"
#include "sqlnet/model.hpp"
#include "sqlnet/sketch.hpp"

namespace sqlnet {

struct MetricCount {
  std::size_t matched = 0;
  std::size_t total = 0;

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total); }
  void add(bool hit) {
    ++total;
    matched += hit ? 1 : 0;
  }
  friend bool operator==(const MetricCount&, const MetricCount&) = default;
};

struct MetricsReport {
  MetricCount qm, ex, agg, sel, where;
  std::size_t missing_tables = 0;
  std::vector<std::string> missing_table_ids;

  std::size_t total() const { return qm.total; }
  double acc_qm() const { return qm.accuracy(); }
  double acc_ex() const { return ex.accuracy(); }
  double acc_agg() const { return agg.accuracy(); }
  double acc_sel() const { return sel.accuracy(); }
  double acc_where() const { return where.accuracy(); }

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Maps an example and its table schema to a predicted sketch.
using Predictor = std::function<QuerySketch(const Example&, const TableSchema&)>;

/// Scores `predict` on every example. A missing table fails the example on
/// every metric and is listed in the report.
inline MetricsReport evaluate_split(const Predictor& predict, const std::vector<Example>& examples,
                                    const TableStore& tables) {
  MetricsReport report;
  for (const auto& ex : examples) {
    auto it = tables.find(ex.table_id);
    if (it == tables.end()) {
      ++report.missing_tables;
      report.missing_table_ids.push_back(ex.table_id);
      for (auto* m : {&report.qm, &report.ex, &report.agg, &report.sel, &report.where}) m->add(false);
      continue;
    }
    const QuerySketch pred = predict(ex, it->second.schema);
    report.qm.add(query_match(pred, ex.truth));
    report.agg.add(pred.agg == ex.truth.agg);
    report.sel.add(pred.select_column == ex.truth.select_column);
    report.where.add(conditions_match(pred, ex.truth));
    report.ex.add(compare_outcomes(try_execute(pred, it->second), try_execute(ex.truth, it->second)));
  }
  return report;
}

template <typename T>
MetricsReport evaluate_split(SqlNetModel<T>& model, const std::vector<Example>& examples, const TableStore& tables) {
  return evaluate_split(
      [&](const Example& ex, const TableSchema& schema) {
        return infer_query(model, ex.question, encode_input(model.vocab(), ex.question, schema)).sketch;
      },
      examples, tables);
}

/// Always predicts (agg=NONE, sel=0, no conditions).
inline QuerySketch constant_baseline(const Example&, const TableSchema&) { return {}; }

namespace detail {

inline std::string format_accuracy(double v) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed << v;
  return out.str();
}

}  // namespace detail

/// Line-delimited key=value report. Logical-form accuracy is not computed.
inline std::string metrics_text(const MetricsReport& r) {
  std::ostringstream out;
  out << "total=" << r.total() << "\n";
  const std::pair<const char*, const MetricCount*> rows[] = {
      {"qm", &r.qm}, {"ex", &r.ex}, {"agg", &r.agg}, {"sel", &r.sel}, {"where", &r.where}};
  for (const auto& [name, m] : rows) {
    out << "acc_" << name << "=" << detail::format_accuracy(m->accuracy()) << "\n";
    out << "matched_" << name << "=" << m->matched << "\n";
  }
  out << "acc_lf=n/a\n";
  out << "missing_tables=" << r.missing_tables << "\n";
  return out.str();
}

inline nlohmann::json metrics_json(const MetricsReport& r) {
  nlohmann::json j;
  j["total"] = r.total();
  const std::pair<const char*, const MetricCount*> rows[] = {
      {"qm", &r.qm}, {"ex", &r.ex}, {"agg", &r.agg}, {"sel", &r.sel}, {"where", &r.where}};
  for (const auto& [name, m] : rows) {
    j[std::string("acc_") + name] = m->accuracy();
    j[std::string("matched_") + name] = m->matched;
  }
  j["missing_tables"] = r.missing_tables;
  j["missing_table_ids"] = r.missing_table_ids;
  return j;
}

struct Resplit {
  std::vector<Example> train, dev, test;
};

/// Re-partitions `examples` so that every table seen in dev or test also
/// appears in train. One randomly chosen example per table is reserved for
/// train; the rest are shuffled and dealt to dev and test up to their target
/// sizes, with the remainder going to train.
inline Resplit reshuffle_split(const std::vector<Example>& examples, const std::array<double, 3>& ratios,
                               std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r >= 0.0)) throw std::invalid_argument("reshuffle_split: ratios must be non-negative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-6) {
    throw std::invalid_argument("reshuffle_split: ratios must sum to 1");
  }
  std::mt19937_64 rng(seed);
  std::map<std::string, std::vector<std::size_t>> by_table;
  for (std::size_t i = 0; i < examples.size(); ++i) by_table[examples[i].table_id].push_back(i);

  std::vector<std::size_t> train, rest;
  for (auto& [id, members] : by_table) {
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    const std::size_t keep = pick(rng);
    for (std::size_t k = 0; k < members.size(); ++k) (k == keep ? train : rest).push_back(members[k]);
  }
  std::shuffle(rest.begin(), rest.end(), rng);

  const auto n = static_cast<double>(examples.size());
  const auto dev_target = std::min(rest.size(), static_cast<std::size_t>(std::llround(ratios[1] * n)));
  const auto test_target =
      std::min(rest.size() - dev_target, static_cast<std::size_t>(std::llround(ratios[2] * n)));

  Resplit out;
  for (std::size_t k = 0; k < rest.size(); ++k) {
    const std::size_t i = rest[k];
    if (k < dev_target) {
      out.dev.push_back(examples[i]);
    } else if (k < dev_target + test_target) {
      out.test.push_back(examples[i]);
    } else {
      train.push_back(i);
    }
  }
  std::sort(train.begin(), train.end());
  for (auto i : train) out.train.push_back(examples[i]);
  return out;
}

}  // namespace sqlnet
