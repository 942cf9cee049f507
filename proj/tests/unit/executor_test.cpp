#include <gtest/gtest.h>

#include <random>

#include "sqlnet/executor.hpp"
#include "sqlnet/synthetic_corpus.hpp"
#include "support/brute_force.hpp"

using namespace sqlnet;

namespace {

ResultSet strings(std::initializer_list<const char*> cells) {
  ResultSet r;
  for (const char* c : cells) r.values.emplace_back(std::string(c));
  return r;
}

ResultSet numbers(std::initializer_list<double> cells) {
  ResultSet r;
  for (double c : cells) r.values.emplace_back(c);
  return r;
}

}  // namespace

TEST(Execute, RosterLookup) {
  auto result = execute(roster_example().truth, roster_table());
  EXPECT_TRUE(compare_results(result, strings({"Art Long"})));
}

TEST(Execute, CountGuards) {
  QuerySketch q;
  q.agg = Aggregator::kCount;
  q.conditions = {{3, CompareOp::kEq, "'Guard'"}};
  auto result = execute(q, roster_table());
  EXPECT_TRUE(compare_results(result, numbers({1})));
}

TEST(Execute, NumericComparisons) {
  const auto table = roster_table();
  QuerySketch q;
  q.conditions = {{1, CompareOp::kGt, "30"}};
  // "32, 44" is not a number, so Martin Lewis never satisfies > or <.
  EXPECT_TRUE(compare_results(execute(q, table), strings({"Brad Lohaus", "Art Long"})));
  q.conditions = {{1, CompareOp::kLt, "30"}};
  EXPECT_TRUE(compare_results(execute(q, table), strings({"Antonio Lang", "Voshon Lenard"})));
  q.agg = Aggregator::kSum;
  q.select_column = 1;
  q.conditions.clear();
  EXPECT_TRUE(compare_results(execute(q, table), numbers({21 + 2 + 33 + 42})));
  q.agg = Aggregator::kAvg;
  EXPECT_TRUE(compare_results(execute(q, table), numbers({98.0 / 4})));
  q.agg = Aggregator::kMax;
  EXPECT_TRUE(compare_results(execute(q, table), numbers({42})));
}

TEST(Execute, EmptyTable) {
  Table empty;
  empty.schema = roster_table().schema;
  QuerySketch q;
  q.conditions = {{1, CompareOp::kEq, "42"}};
  EXPECT_TRUE(execute(q, empty).values.empty());
  q.agg = Aggregator::kCount;
  EXPECT_TRUE(compare_results(execute(q, empty), numbers({0})));
  q.agg = Aggregator::kMin;
  EXPECT_TRUE(execute(q, empty).values.empty());
}

TEST(Execute, NonNumericComparisonValueIsAnError) {
  QuerySketch q;
  q.conditions = {{1, CompareOp::kGt, "forty"}};
  EXPECT_THROW(execute(q, roster_table()), ExecutionError);
  EXPECT_FALSE(try_execute(q, roster_table()).ok());
}

TEST(Execute, OutOfRangeColumnIsAnError) {
  QuerySketch q;
  q.select_column = 6;
  EXPECT_THROW(execute(q, roster_table()), ExecutionError);
}

TEST(ParseNumber, AcceptedAndRejectedForms) {
  EXPECT_EQ(parse_number("42"), 42.0);
  EXPECT_EQ(parse_number(" -2.5 "), -2.5);
  EXPECT_EQ(parse_number("1,234"), 1234.0);
  EXPECT_EQ(parse_number("1,234,567.5"), 1234567.5);
  EXPECT_EQ(parse_number(".5"), 0.5);
  EXPECT_EQ(parse_number("+7"), 7.0);
  for (const char* bad : {"", "-", ".", "32, 44", "12,34", "1234,567", "1e3", "4a", "1-0", ",123"}) {
    EXPECT_FALSE(parse_number(bad)) << bad;
  }
}

TEST(CompareResults, Examples) {
  EXPECT_TRUE(compare_results(strings({"Art Long"}), strings({"art long"})));
  EXPECT_TRUE(compare_results(numbers({1, 2}), numbers({2, 1})));
  EXPECT_FALSE(compare_results(numbers({1}), numbers({1, 1})));
  EXPECT_TRUE(compare_results(strings({"42"}), numbers({42})));
  EXPECT_FALSE(compare_results(strings({"a"}), strings({"b"})));
  EXPECT_TRUE(compare_results(ResultSet{}, ResultSet{}));
  EXPECT_FALSE(compare_results(ResultSet{}, numbers({0})));
}

TEST(CompareOutcomes, ErrorsMatchOnlyErrors) {
  ExecutionOutcome err{std::nullopt, "bad"}, ok{numbers({1}), {}};
  EXPECT_TRUE(compare_outcomes(err, err));
  EXPECT_FALSE(compare_outcomes(err, ok));
  EXPECT_TRUE(compare_outcomes(ok, ok));
}

TEST(ExecuteProperty, AgreesWithBruteForce) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto table = sqlnet::testing::random_table(rng);
    const auto query = sqlnet::testing::random_query(rng, table);
    std::string why;
    EXPECT_TRUE(sqlnet::testing::agrees_with_brute_force(query, table, &why)) << "trial " << trial << ": " << why;
  }
}

TEST(ExecuteProperty, AddingConditionsNeverGrowsResult) {
  std::mt19937_64 rng(78);
  for (int trial = 0; trial < 500; ++trial) {
    const auto table = sqlnet::testing::random_table(rng);
    auto query = sqlnet::testing::random_query(rng, table);
    query.agg = Aggregator::kNone;
    auto before = try_execute(query, table);
    auto extra = sqlnet::testing::random_query(rng, table);
    for (const auto& c : extra.conditions) query.conditions.push_back(c);
    auto after = try_execute(query, table);
    if (before.ok() && after.ok()) EXPECT_LE(after.result->values.size(), before.result->values.size());
  }
}

TEST(ExecuteProperty, AverageTimesCountOfNumericCellsIsSum) {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 500; ++trial) {
    const auto table = sqlnet::testing::random_table(rng);
    auto query = sqlnet::testing::random_query(rng, table);
    query.agg = Aggregator::kNone;
    auto rows = try_execute(query, table);
    if (!rows.ok()) continue;
    std::size_t numeric = 0;
    for (const auto& v : rows.result->values) numeric += parse_number(normalize_value(std::get<std::string>(v))) ? 1 : 0;
    query.agg = Aggregator::kAvg;
    auto avg = execute(query, table);
    query.agg = Aggregator::kSum;
    auto sum = execute(query, table);
    if (numeric == 0) {
      EXPECT_TRUE(avg.values.empty());
      EXPECT_TRUE(sum.values.empty());
      continue;
    }
    EXPECT_NEAR(std::get<double>(avg.values[0]) * numeric, std::get<double>(sum.values[0]), 1e-9 * (1 + numeric * 1e4));
  }
}

TEST(ExecuteProperty, QueryMatchImpliesEqualResults) {
  std::mt19937_64 rng(80);
  for (int trial = 0; trial < 500; ++trial) {
    const auto table = sqlnet::testing::random_table(rng);
    auto a = sqlnet::testing::random_query(rng, table);
    auto b = a;
    std::shuffle(b.conditions.begin(), b.conditions.end(), rng);
    if (!b.conditions.empty()) b.conditions.push_back(b.conditions.front());
    for (auto& c : b.conditions) c.value = "  " + c.value;
    ASSERT_TRUE(query_match(a, b));
    EXPECT_TRUE(compare_outcomes(try_execute(a, table), try_execute(b, table)));
  }
}
