#include <cmath>

#include <gtest/gtest.h>

#include "advcontract/adv.hpp"
#include "advcontract/presets.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

using namespace advc;

namespace {

const double kLn2Over5 = std::log(2.0) / 5.0;

ContractMenu analytic_two_type_menu(double gamma) {
  const double p1 = 0.75;
  const double p2 = p1 + 2.0 * (1.0 - std::exp(-5.0)) - 2.0 * (1.0 - std::exp(-5.0 * kLn2Over5));
  return ContractMenu({{p1, kLn2Over5, 0.0}, {p2, 1.0, 0.0}}, gamma);
}

}  // namespace

TEST(BestResponse, OptOutWhenEveryGainIsNegative) {
  auto m = presets::reference_market(2);
  ContractMenu menu({{5.0, 0.1, 0.0}, {20.0, 1.0, 0.0}}, 0.0);
  auto br = adversary_best_response(menu, m);
  EXPECT_EQ(br.z, 0);
  EXPECT_EQ(br.utility, 0.0);
}

TEST(BestResponse, SingleContract) {
  MarketModel m = presets::reference_market(1);
  ContractMenu menu({{1.0, 1.0, 0.0}}, 0.0);
  auto br = adversary_best_response(menu, m);
  EXPECT_EQ(br.z, 1);
  EXPECT_NEAR(br.utility, 6.0 * (std::exp(1.0) - 1.0) - 1.0, 1e-12);
  EXPECT_NEAR(br.utility, 9.3097, 5e-5);
}

TEST(BestResponse, PicksLargerGain) {
  auto m = presets::reference_market(2);
  ContractMenu menu({{1.0, 0.5, 0.0}, {2.0, 1.0, 0.0}}, 0.0);
  EXPECT_NEAR(adversary_gain(m, menu.at(1)), 2.8923, 5e-5);
  EXPECT_NEAR(adversary_gain(m, menu.at(2)), 8.3097, 5e-5);
  EXPECT_EQ(adversary_best_response(menu, m).z, 2);
}

TEST(BestResponse, ZeroGainMeansOptOut) {
  auto m = presets::reference_market(1);
  const double c = m.cost(0.5);
  ContractMenu menu({{c, 0.5, 0.0}}, 0.0);
  EXPECT_EQ(adversary_best_response(menu, m).z, 0);
}

TEST(RealizedRevenue, NoAdversaryMass) {
  auto m = presets::reference_market(2);
  auto menu = analytic_two_type_menu(0.0);
  for (int z = 0; z <= 2; ++z) EXPECT_DOUBLE_EQ(realized_revenue(menu, z, m), honest_revenue(menu.effective_prices(), m));
}

TEST(RealizedRevenue, OptOutScalesHonestTerm) {
  auto m = presets::reference_market(2, 0.25, 0.0);
  auto menu = analytic_two_type_menu(0.0);
  EXPECT_DOUBLE_EQ(realized_revenue(menu, 0, m), 0.75 * honest_revenue(menu.effective_prices(), m));
  EXPECT_THROW(realized_revenue(menu, 3, m), DomainError);
}

TEST(RealizedRevenue, TwoTypeMenuUnderAttack) {
  auto m = presets::reference_market(2, 0.1, 0.1);
  auto menu = analytic_two_type_menu(0.1);
  EXPECT_NEAR(adversary_gain(m, menu.at(1)), 0.1422, 5e-5);
  EXPECT_NEAR(adversary_gain(m, menu.at(2)), 8.573, 5e-4);
  EXPECT_EQ(adversary_best_response(menu, m).z, 2);
  EXPECT_NEAR(realized_revenue(menu, m), 0.2616, 5e-4);
  EXPECT_NEAR(realized_revenue(menu, m), advc::testing::revenue_by_definition(m, menu.contracts()), 1e-12);
}

TEST(FineAtCap, SteadyRevenueTight) {
  auto m = presets::reference_market(2, 0.0, 0.1);
  std::vector<double> pp{0.75};
  m.q = {1.0};
  m.benefits.resize(1);
  auto s = fine_at_cap(pp, m);
  EXPECT_NEAR(s[0], 7.125, 1e-12);
  std::vector<double> eps{0.2};
  auto menu = menu_at_cap(eps, pp, m);
  EXPECT_NEAR(menu.at(1).p, 0.0375, 1e-12);
  EXPECT_NEAR(menu.at(1).p, (1.0 - m.phi) * 0.75, 1e-12);
}

TEST(FineAtCap, GammaOneAndZero) {
  auto m = presets::reference_market(1, 0.0, 1.0);
  std::vector<double> pp{2.0};
  EXPECT_NEAR(fine_at_cap(pp, m)[0], m.phi * 2.0, 1e-15);
  m.gamma = 0.0;
  EXPECT_EQ(fine_at_cap(pp, m)[0], m.s_max);
  m.s_max = 1.0;
  m.gamma = 0.01;
  EXPECT_EQ(fine_at_cap(pp, m)[0], 1.0);
  m.gamma = 1.5;
  EXPECT_THROW(fine_at_cap(pp, m), DomainError);
}

TEST(SolveAdvExact, NoAdversaryMatchesNonAdversarialRevenue) {
  auto m = presets::reference_market(3, 0.0, 0.4, 21);
  auto adv = solve_adv_exact(m);
  auto nonadv = solve_nonadv(m);
  EXPECT_NEAR(adv.revenue_adv, nonadv.revenue_star, 1e-12);
  for (int i = 1; i <= 3; ++i) EXPECT_NEAR(adv.menu.effective_price(i), nonadv.menu.effective_price(i), 1e-12);
}

TEST(SolveAdvExact, UnboundedLossInstance) {
  auto m = presets::unbounded_loss_market(0.5, 0.5, 0.4);
  auto adv = solve_adv_exact(m);
  EXPECT_EQ(adv.eps_index, (std::vector<int>{0, 0}));
  EXPECT_LE(std::abs(adv.revenue_adv), 1e-7);
  auto pa = price_of_adversary(m);
  EXPECT_TRUE(pa.unbounded);
  EXPECT_TRUE(std::isinf(pa.value));
}

TEST(SolveAdvExact, MatchesTwoTypeBruteForce) {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    auto m = advc::testing::random_model(rng, 2, 21);
    auto adv = solve_adv_exact(m);
    auto o = advc::testing::brute_force_adv_two_types(m);
    EXPECT_NEAR(adv.revenue_adv, o.objective, 1e-9) << "trial " << trial;
  }
}

TEST(SolveAdvExact, WorkerCountDoesNotChangeResult) {
  auto m = presets::reference_market(4, 0.3, 0.5, 21);
  auto one = solve_adv_exact(m, {.workers = 1});
  auto four = solve_adv_exact(m, {.workers = 4});
  EXPECT_EQ(one.eps_index, four.eps_index);
  EXPECT_EQ(one.revenue_adv, four.revenue_adv);
}

TEST(SolveAdvExact, NodeCapReportsBudget) {
  auto m = presets::reference_market(6, 0.3, 0.5, 21);
  auto capped = solve_adv_exact(m, {.node_cap = 100});
  EXPECT_TRUE(capped.budget_exceeded);
  auto full = solve_adv_exact(m);
  EXPECT_FALSE(full.budget_exceeded);
  EXPECT_GE(full.revenue_adv, capped.revenue_adv - 1e-12);
}

TEST(PoAdv, NoAdversaryIsOne) {
  auto m = presets::reference_market(3, 0.0, 0.3, 21);
  auto pa = price_of_adversary(m);
  EXPECT_FALSE(pa.unbounded);
  EXPECT_NEAR(pa.value, 1.0, 1e-12);
}

TEST(PoAdv, RisesWithGammaAndRho) {
  double prev_rho = 0.0;
  for (double rho : {0.1, 0.2, 0.3}) {
    auto pa = price_of_adversary(presets::reference_market(4, rho, 0.5, 21));
    EXPECT_GE(pa.value, prev_rho - 1e-12);
    prev_rho = pa.value;
  }
  double prev_gamma = 0.0;
  for (double gamma : {0.1, 0.3, 0.5, 0.7}) {
    auto pa = price_of_adversary(presets::reference_market(4, 0.2, gamma, 21));
    EXPECT_GE(pa.value, prev_gamma - 1e-12);
    prev_gamma = pa.value;
  }
}

TEST(PoAdv, NonAdversarialMenuUnderAttack) {
  auto m = presets::reference_market(10, 0.1, 0.3);
  auto nonadv = solve_nonadv(m);
  auto pa = price_of_adversary(m, nonadv.menu);
  EXPECT_GT(pa.value, 1.0);
  EXPECT_FALSE(pa.unbounded);
}
