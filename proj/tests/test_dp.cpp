#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "advcontract/dp.hpp"

using namespace advc;
using namespace advc::dp;

namespace {

Dataset ages(int rows) {
  std::vector<std::vector<double>> data;
  for (int r = 0; r < rows; ++r) data.push_back({static_cast<double>(20 + r % 50), static_cast<double>(r % 2)});
  return Dataset({"age", "flag"}, data, {{0.0, 100.0}, {0.0, 1.0}});
}

double sample_std(const std::vector<double>& v, double centre) {
  double s = 0.0;
  for (double x : v) s += (x - centre) * (x - centre);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

TEST(Dataset, LoadsCsvWithBounds) {
  std::istringstream data("age,income\n30,1000\n45, 2500\n");
  std::istringstream bounds("column,lo,hi\nage,0,120\nincome,0,10000\n");
  auto ds = load_dataset(data, bounds);
  EXPECT_EQ(ds.rows(), 2u);
  EXPECT_EQ(ds.sum(ds.column("income")), 3500.0);
  EXPECT_THROW(ds.column("height"), UnknownColumn);
}

TEST(Dataset, RejectsBadInput) {
  std::istringstream out_of_bounds("age\n130\n"), b1("age,0,120\n");
  EXPECT_THROW(load_dataset(out_of_bounds, b1), BadDataset);
  std::istringstream empty("age\n"), b2("age,0,120\n");
  EXPECT_THROW(load_dataset(empty, b2), BadDataset);
  std::istringstream missing("age,height\n1,2\n"), b3("age,0,120\n");
  EXPECT_THROW(load_dataset(missing, b3), BadDataset);
}

TEST(Query, Sensitivities) {
  auto ds = ages(100);
  EXPECT_EQ(evaluate(parse_query("count", "", 1.0), ds).sensitivity, 1.0);
  EXPECT_EQ(evaluate(parse_query("sum", "age", 1.0), ds).sensitivity, 100.0);
  EXPECT_EQ(evaluate(parse_query("mean", "age", 1.0), ds).sensitivity, 1.0);
  EXPECT_EQ(evaluate(parse_query("count", "", 1.0), ds).value, 100.0);
}

TEST(Answer, HugeEpsilonIsNearlyExact) {
  auto ds = ages(100);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    BudgetLedger ledger{"b", 2e6, {}};
    auto q = parse_query("sum", "age", 1e6);
    const double truth = evaluate(q, ds).value;
    EXPECT_LT(std::abs(answer_query(ledger, q, ds, seed) - truth), 1e-3 * 100.0);
  }
}

TEST(Answer, CountNoiseStandardDeviation) {
  auto ds = ages(100);
  std::vector<double> noise;
  for (std::uint64_t seed = 0; seed < 100'000; ++seed) {
    BudgetLedger ledger{"b", 1.0, {}};
    noise.push_back(answer_query(ledger, parse_query("count", "", 1.0), ds, seed) - 100.0);
  }
  EXPECT_NEAR(sample_std(noise, 0.0), std::sqrt(2.0), 0.05 * std::sqrt(2.0));
}

TEST(Answer, SameSeedSameAnswer) {
  auto ds = ages(100);
  BudgetLedger a{"a", 1.0, {}}, b{"b", 1.0, {}};
  auto q = parse_query("mean", "age", 0.5);
  EXPECT_EQ(answer_query(a, q, ds, 99), answer_query(b, q, ds, 99));
}

TEST(Answer, OneQueryPerType) {
  auto ds = ages(100);
  BudgetLedger ledger{"b", 1.0, {}};
  answer_query(ledger, parse_query("count", "", 0.2), ds, 1);
  EXPECT_THROW(answer_query(ledger, parse_query("count", "", 0.2), ds, 2), DuplicateQueryType);
  EXPECT_NO_THROW(answer_query(ledger, parse_query("sum", "age", 0.2), ds, 3));
  EXPECT_NO_THROW(answer_query(ledger, parse_query("sum", "flag", 0.2), ds, 4));
  EXPECT_NEAR(ledger.spent(), 0.6, 1e-15);
}

TEST(Answer, FailedQueriesLeaveLedgerUntouched) {
  auto ds = ages(100);
  BudgetLedger ledger{"b", 0.5, {}};
  EXPECT_THROW(answer_query(ledger, parse_query("count", "", 0.6), ds, 1), BudgetExceeded);
  EXPECT_THROW(answer_query(ledger, parse_query("sum", "height", 0.1), ds, 1), UnknownColumn);
  EXPECT_THROW(answer_query(ledger, parse_query("count", "", 0.0), ds, 1), DomainError);
  EXPECT_TRUE(ledger.consumed.empty());
}

TEST(Answer, LedgerNeverOverspends) {
  auto ds = ages(50);
  SplitMix64 rng(8);
  const char* kinds[] = {"count", "sum", "mean"};
  const char* cols[] = {"age", "flag"};
  for (int trial = 0; trial < 500; ++trial) {
    BudgetLedger ledger{"b", 0.05 + 0.95 * rng.uniform(), {}};
    for (int step = 0; step < 8; ++step) {
      auto q = parse_query(kinds[rng() % 3], cols[rng() % 2], 0.01 + 0.4 * rng.uniform());
      const auto before = ledger.consumed;
      try {
        answer_query(ledger, q, ds, rng());
      } catch (const Error&) {
        EXPECT_EQ(ledger.consumed, before);
      }
      EXPECT_LE(ledger.spent(), ledger.purchased + 1e-12);
      std::map<std::string, int> seen;
      for (const auto& [key, _] : ledger.consumed) EXPECT_EQ(++seen[key], 1);
    }
  }
}

TEST(Answer, NeighbouringDatasetsRatio) {
  // Count with eps = ln 2: per-bin probabilities on neighbours differ by at
  // most a factor of 2, up to sampling slack.
  const double eps = std::log(2.0);
  auto d1 = ages(100);
  auto d2 = d1.without_row(0);
  const int draws = 1'000'000;
  std::map<long, long> h1, h2;
  for (int s = 0; s < draws; ++s) {
    BudgetLedger l1{"a", 1.0, {}}, l2{"b", 1.0, {}};
    h1[std::lround(std::floor(answer_query(l1, parse_query("count", "", eps), d1, s)))]++;
    h2[std::lround(std::floor(answer_query(l2, parse_query("count", "", eps), d2, s)))]++;
  }
  int checked = 0;
  for (const auto& [bin, c1] : h1) {
    const long c2 = h2.count(bin) ? h2[bin] : 0;
    if (c1 < 1000 || c2 < 1000) continue;
    ++checked;
    const double p1 = static_cast<double>(c1) / draws, p2 = static_cast<double>(c2) / draws;
    const double slack1 = 4.0 * std::sqrt(p1 / draws), slack2 = 4.0 * std::sqrt(p2 / draws);
    EXPECT_LE(p1, std::exp(eps) * (p2 + slack2) + slack1) << "bin " << bin;
    EXPECT_LE(p2, std::exp(eps) * (p1 + slack1) + slack2) << "bin " << bin;
  }
  EXPECT_GE(checked, 5);
}

TEST(Engine, JournalReplayRestoresLedgers) {
  const auto path = std::filesystem::temp_directory_path() / "advc_test_journal.jsonl";
  std::filesystem::remove(path);
  {
    QueryEngine e(ages(20));
    e.attach_journal(path.string());
    e.purchase("alice", 0.8);
    e.purchase("bob", 0.3);
    e.ask("alice", parse_query("count", "", 0.25), 1);
    e.ask("alice", parse_query("mean", "age", 0.25), 2);
    EXPECT_THROW(e.ask("bob", parse_query("count", "", 0.5), 3), BudgetExceeded);
  }
  QueryEngine replay(ages(20));
  replay.attach_journal(path.string());
  auto alice = replay.ledger("alice");
  ASSERT_TRUE(alice);
  EXPECT_NEAR(alice->spent(), 0.5, 1e-15);
  EXPECT_EQ(alice->consumed.count("mean(age)"), 1u);
  EXPECT_TRUE(replay.ledger("bob")->consumed.empty());
  EXPECT_THROW(replay.ask("alice", parse_query("count", "", 0.1), 4), DuplicateQueryType);
  std::filesystem::remove(path);
}

TEST(Engine, PurchaseRules) {
  QueryEngine e(ages(10));
  EXPECT_THROW(e.purchase("x", 1.5), DomainError);
  e.purchase("x", 1.0);
  EXPECT_THROW(e.purchase("x", 0.5), Error);
  EXPECT_THROW(e.ask("nobody", parse_query("count", "", 0.1), 1), Error);
}
