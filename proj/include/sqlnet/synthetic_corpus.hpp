#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sqlnet/dataset.hpp"
#include "sqlnet/schema.hpp"
#include "sqlnet/sketch.hpp"

// Deterministic WikiSQL-shaped fixtures: random tables over a pool of
// column kinds and template questions whose WHERE values are copied from
// table cells. Used by tests and the sqlnet-synth tool when no real corpus
// is at hand.

namespace sqlnet {

namespace detail {

struct ColumnKind {
  const char* name;
  ColumnType type;
  std::vector<std::string> values;  // text pool; empty for real columns
  int low = 0, high = 0;            // range for real columns
};

inline const std::vector<ColumnKind>& column_kinds() {
  static const std::vector<ColumnKind> kinds{
      {"Player", ColumnType::kText,
       {"Art Long", "Antonio Lang", "Voshon Lenard", "Martin Lewis", "Brad Lohaus", "John Smith", "Carlos Rivera",
        "Mike James", "Tony Parker", "Ray Allen", "Paul Pierce", "Kevin Martin", "Dan Gadzuric", "Sam Mack"}},
      {"Nationality", ColumnType::kText,
       {"United States", "Canada", "France", "Spain", "Brazil", "Nigeria", "Italy", "Australia", "Serbia"}},
      {"Position", ColumnType::kText, {"Guard", "Forward", "Center", "Guard-Forward", "Forward-Center", "Point Guard"}},
      {"School/Club Team", ColumnType::kText,
       {"Duke", "Cincinnati", "Iowa", "Minnesota", "Butler", "Kansas", "Arizona", "Michigan State", "Georgetown"}},
      {"Team", ColumnType::kText,
       {"Boston", "Chicago", "Denver", "Houston", "Miami", "Orlando", "Phoenix", "Utah", "Toronto", "Atlanta"}},
      {"Opponent", ColumnType::kText,
       {"Dallas", "Detroit", "Memphis", "Portland", "Seattle", "Milwaukee", "Cleveland", "Sacramento"}},
      {"Venue", ColumnType::kText,
       {"Wembley", "Old Trafford", "Anfield", "Hampden Park", "Villa Park", "Goodison Park", "Ibrox"}},
      {"Country", ColumnType::kText, {"England", "Scotland", "Wales", "Ireland", "Germany", "Japan", "Mexico", "Chile"}},
      {"Director", ColumnType::kText,
       {"Ridley Scott", "Ang Lee", "Sofia Coppola", "Peter Jackson", "Jane Campion", "Wim Wenders", "Spike Lee"}},
      {"Party", ColumnType::kText, {"Democratic", "Republican", "Labour", "Conservative", "Green", "Liberal"}},
      {"Result", ColumnType::kText, {"Won", "Lost", "Draw", "Retired", "Re-elected"}},
      {"Surface", ColumnType::kText, {"Clay", "Grass", "Hard", "Carpet"}},
      {"Network", ColumnType::kText, {"NBC", "CBS", "ABC", "Fox", "HBO", "BBC One"}},
      {"Genre", ColumnType::kText, {"Drama", "Comedy", "Thriller", "Documentary", "Animation", "Western"}},
      {"No.", ColumnType::kReal, {}, 1, 55},
      {"Points", ColumnType::kReal, {}, 0, 120},
      {"Rebounds", ColumnType::kReal, {}, 0, 30},
      {"Assists", ColumnType::kReal, {}, 0, 20},
      {"Year", ColumnType::kReal, {}, 1950, 2016},
      {"Attendance", ColumnType::kReal, {}, 1000, 90000},
      {"Rank", ColumnType::kReal, {}, 1, 40},
      {"Goals", ColumnType::kReal, {}, 0, 60},
      {"Wins", ColumnType::kReal, {}, 0, 82},
      {"Losses", ColumnType::kReal, {}, 0, 82},
      {"Episode", ColumnType::kReal, {}, 1, 200},
      {"Votes", ColumnType::kReal, {}, 500, 99000},
      {"Seats", ColumnType::kReal, {}, 0, 350},
      {"Height (cm)", ColumnType::kReal, {}, 160, 230},
  };
  return kinds;
}

template <typename Rng>
std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

template <typename Rng>
const std::string& choose(Rng& rng, const std::vector<std::string>& options) {
  return options[uniform_index(rng, options.size())];
}

inline std::string lower_name(const ColumnDef& c) { return sqlnet::to_lower(c.name); }

}  // namespace detail

struct SyntheticCorpus {
  TableStore tables;
  std::vector<Example> examples;
};

/// Random table with 5 to 7 columns (at least two real, the first text) and
/// 6 to 12 rows.
template <typename Rng>
Table synthetic_table(const std::string& id, Rng& rng) {
  const auto& kinds = detail::column_kinds();
  std::vector<std::size_t> text_kinds, real_kinds;
  for (std::size_t i = 0; i < kinds.size(); ++i) (kinds[i].type == ColumnType::kText ? text_kinds : real_kinds).push_back(i);
  std::shuffle(text_kinds.begin(), text_kinds.end(), rng);
  std::shuffle(real_kinds.begin(), real_kinds.end(), rng);

  const std::size_t width = 5 + detail::uniform_index(rng, 3);
  const std::size_t reals = 2 + detail::uniform_index(rng, width - 3);
  std::vector<std::size_t> tail(text_kinds.begin() + 1, text_kinds.begin() + (width - reals));
  tail.insert(tail.end(), real_kinds.begin(), real_kinds.begin() + reals);
  std::shuffle(tail.begin(), tail.end(), rng);
  std::vector<std::size_t> chosen{text_kinds.front()};
  chosen.insert(chosen.end(), tail.begin(), tail.end());

  Table table;
  table.schema.table_id = id;
  for (auto k : chosen) table.schema.columns.push_back(ColumnDef::from_header(kinds[k].name, kinds[k].type));
  const std::size_t rows = 6 + detail::uniform_index(rng, 7);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> row;
    for (auto k : chosen) {
      const auto& kind = kinds[k];
      if (kind.type == ColumnType::kText) {
        row.push_back(detail::choose(rng, kind.values));
      } else {
        row.push_back(std::to_string(std::uniform_int_distribution<int>(kind.low, kind.high)(rng)));
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// One templated question over `table`. The number of conditions is 0, 1, 2
/// or 3 with probabilities 0.10, 0.55, 0.25, 0.10.
template <typename Rng>
Example synthetic_example(const std::string& id, const Table& table, Rng& rng) {
  const auto& cols = table.schema.columns;
  std::vector<std::size_t> real_cols;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c].type == ColumnType::kReal) real_cols.push_back(c);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  QuerySketch truth;
  const double a = unit(rng);
  if (a < 0.70 || real_cols.empty()) {
    truth.agg = Aggregator::kNone;
  } else if (a < 0.78) {
    truth.agg = Aggregator::kCount;
  } else {
    truth.agg = static_cast<Aggregator>(std::array<int, 4>{1, 2, 4, 5}[detail::uniform_index(rng, 4)]);
  }
  const bool numeric_agg = truth.agg != Aggregator::kNone && truth.agg != Aggregator::kCount;
  truth.select_column = numeric_agg ? real_cols[detail::uniform_index(rng, real_cols.size())]
                                    : detail::uniform_index(rng, cols.size());

  const double n = unit(rng);
  const std::size_t wanted = n < 0.10 ? 0 : n < 0.65 ? 1 : n < 0.90 ? 2 : 3;
  std::vector<std::size_t> candidates;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c != truth.select_column) candidates.push_back(c);
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const auto& row = table.rows[detail::uniform_index(rng, table.rows.size())];
  for (std::size_t k = 0; k < wanted && k < candidates.size(); ++k) {
    const std::size_t c = candidates[k];
    CompareOp op = CompareOp::kEq;
    if (cols[c].type == ColumnType::kReal) {
      const double o = unit(rng);
      op = o < 0.6 ? CompareOp::kEq : o < 0.8 ? CompareOp::kGt : CompareOp::kLt;
    }
    truth.conditions.push_back({c, op, row[c]});
  }

  static const std::vector<std::string> none{"what is the ", "which ", "name the ", "tell me the "};
  static const std::vector<std::string> count{"how many ", "what is the number of "};
  static const std::vector<std::string> max{"what is the highest ", "what is the largest "};
  static const std::vector<std::string> min{"what is the lowest ", "what is the smallest "};
  static const std::vector<std::string> sum{"what is the total ", "what is the sum of "};
  static const std::vector<std::string> avg{"what is the average "};
  static const std::vector<std::string> eq{"when the {c} is {v}", "for {c} {v}", "with a {c} of {v}",
                                           "where {c} is {v}"};
  static const std::vector<std::string> gt{"when the {c} is greater than {v}", "with {c} more than {v}",
                                           "where {c} is over {v}"};
  static const std::vector<std::string> lt{"when the {c} is less than {v}", "with {c} fewer than {v}",
                                           "where {c} is under {v}"};
  const std::vector<std::string>* lead = &none;
  switch (truth.agg) {
    case Aggregator::kCount: lead = &count; break;
    case Aggregator::kMax: lead = &max; break;
    case Aggregator::kMin: lead = &min; break;
    case Aggregator::kSum: lead = &sum; break;
    case Aggregator::kAvg: lead = &avg; break;
    default: break;
  }
  std::string question = detail::choose(rng, *lead) + detail::lower_name(cols[truth.select_column]);
  for (std::size_t k = 0; k < truth.conditions.size(); ++k) {
    const auto& cond = truth.conditions[k];
    const auto& pool = cond.op == CompareOp::kEq ? eq : cond.op == CompareOp::kGt ? gt : lt;
    std::string phrase = detail::choose(rng, pool);
    phrase.replace(phrase.find("{c}"), 3, detail::lower_name(cols[cond.column]));
    phrase.replace(phrase.find("{v}"), 3, cond.value);
    question += (k == 0 ? " " : " and ") + phrase;
  }
  question += "?";
  question[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(question[0])));
  return make_example(id, std::move(question), table.schema.table_id, std::move(truth));
}

/// `table_count` tables named "<prefix>-t<i>" with `per_table` examples each.
inline SyntheticCorpus synthetic_corpus(const std::string& prefix, std::size_t table_count, std::size_t per_table,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SyntheticCorpus corpus;
  for (std::size_t t = 0; t < table_count; ++t) {
    Table table = synthetic_table(prefix + "-t" + std::to_string(t), rng);
    for (std::size_t k = 0; k < per_table; ++k) {
      corpus.examples.push_back(synthetic_example(prefix + "-" + std::to_string(t) + "-" + std::to_string(k), table, rng));
    }
    std::string id = table.schema.table_id;
    corpus.tables.emplace(std::move(id), std::move(table));
  }
  return corpus;
}

/// FNV-1a, used to derive a per-token seed.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Vector of `dim` values in [-1, 1] determined by the token alone.
inline std::vector<double> synthetic_embedding(const std::string& token, std::size_t dim) {
  std::mt19937_64 rng(fnv1a(token));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = u(rng);
  return v;
}

/// Writes one "token v1 ... vd" line per token.
inline void write_synthetic_embeddings(std::ostream& out, const std::set<std::string>& tokens, std::size_t dim) {
  out.precision(6);
  for (const auto& t : tokens) {
    out << t;
    for (double x : synthetic_embedding(t, dim)) out << ' ' << x;
    out << '\n';
  }
}

/// Every token of the questions and column names of `corpora`.
inline std::set<std::string> corpus_tokens(const std::vector<const SyntheticCorpus*>& corpora) {
  std::set<std::string> tokens;
  for (const auto* c : corpora) {
    for (const auto& ex : c->examples) {
      for (const auto& t : ex.question.tokens) {
        if (t != kEndToken) tokens.insert(t);
      }
    }
    for (const auto& [id, table] : c->tables) {
      for (const auto& col : table.schema.columns) tokens.insert(col.name_tokens.begin(), col.name_tokens.end());
    }
  }
  return tokens;
}

/// Five players of a Toronto roster, the canonical single-condition fixture.
inline Table roster_table() {
  Table t;
  t.schema.table_id = "roster";
  const std::pair<const char*, ColumnType> header[] = {
      {"Player", ColumnType::kText},   {"No.", ColumnType::kReal},
      {"Nationality", ColumnType::kText}, {"Position", ColumnType::kText},
      {"Years in Toronto", ColumnType::kText}, {"School/Club Team", ColumnType::kText}};
  for (const auto& [name, type] : header) t.schema.columns.push_back(ColumnDef::from_header(name, type));
  t.rows = {
      {"Antonio Lang", "21", "United States", "Guard-Forward", "1999-2000", "Duke"},
      {"Voshon Lenard", "2", "United States", "Guard", "2002-03", "Minnesota"},
      {"Martin Lewis", "32, 44", "United States", "Guard-Forward", "1996-97", "Butler CC (KS)"},
      {"Brad Lohaus", "33", "United States", "Forward-Center", "1996", "Iowa"},
      {"Art Long", "42", "United States", "Forward-Center", "2002-03", "Cincinnati"},
  };
  return t;
}

/// "Who is the player that wears number 42?" with
/// SELECT Player WHERE No. = 42.
inline Example roster_example() {
  QuerySketch truth;
  truth.agg = Aggregator::kNone;
  truth.select_column = 0;
  truth.conditions.push_back({1, CompareOp::kEq, "42"});
  return make_example("roster", "Who is the player that wears number 42?", "roster", std::move(truth));
}

}  // namespace sqlnet
