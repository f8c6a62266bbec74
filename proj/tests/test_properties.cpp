// Randomised structural properties of the solvers.

#include <cmath>

#include <gtest/gtest.h>

#include "advcontract/adv.hpp"
#include "advcontract/approx.hpp"
#include "advcontract/presets.hpp"
#include "support/instances.hpp"

using namespace advc;
using advc::testing::random_model;

TEST(Properties, EvaluationIsDeterministic) {
  auto m = presets::reference_market(10);
  for (int i = 1; i <= 10; ++i) {
    for (double e : {0.0, 0.123456789, 0.5, 1.0}) EXPECT_EQ(eval_benefit(m.benefit(i), e), eval_benefit(m.benefit(i), e));
  }
}

TEST(Properties, ReferenceFamilyStaysValidOnFinerGrid) {
  for (int grid : {101, 1001}) {
    auto m = presets::reference_market(10, 0.0, 0.0, grid);
    EXPECT_TRUE(validate_model(m).valid()) << "grid " << grid << "\n" << validate_model(m).summary();
  }
}

TEST(Properties, NonAdvTightness) {
  SplitMix64 rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = random_model(rng, 1 + trial % 5, 31);
    auto s = solve_nonadv(m);
    const auto& p = s.menu.effective_prices();
    EXPECT_NEAR(m.benefit(1)(s.eps_star[0]), p[0], 1e-9);
    for (int i = 1; i < m.n(); ++i) {
      const auto& b = m.benefit(i + 1);
      EXPECT_NEAR(b(s.eps_star[i]) - p[i], b(s.eps_star[i - 1]) - p[i - 1], 1e-9);
      EXPECT_GE(s.eps_star[i], s.eps_star[i - 1]);
    }
    auto r = check_menu(s.menu, m);
    EXPECT_TRUE(r.valid()) << r.summary();
  }
}

TEST(Properties, HigherTypesPreferHigherContracts) {
  SplitMix64 rng(405);
  for (int trial = 0; trial < 60; ++trial) {
    auto m = random_model(rng, 4, 31);
    auto s = solve_nonadv(m);
    const auto& c = s.menu.contracts();
    for (int i = 1; i <= 4; ++i) {
      for (int j = 1; j < i; ++j) {
        for (int k = 1; k < j; ++k) {
          EXPECT_GE(m.benefit(i)(c[j - 1].eps) - c[j - 1].p, m.benefit(i)(c[k - 1].eps) - c[k - 1].p - 1e-9);
        }
      }
    }
  }
}

TEST(Properties, PriceCurveIsConcaveOnEachSegment) {
  SplitMix64 rng(406);
  for (int trial = 0; trial < 40; ++trial) {
    auto m = random_model(rng, 3, 41);
    auto s = solve_nonadv(m);
    double lo = 0.0;
    for (int i = 0; i <= m.n(); ++i) {
      const double hi = i < m.n() ? s.eps_star[static_cast<std::size_t>(i)] : 1.0;
      for (int k = 0; k < 20 && hi - lo > 1e-9; ++k) {
        const double a = lo + (hi - lo) * k / 20.0, b = lo + (hi - lo) * (k + 1) / 20.0;
        const double mid = price_contract_value(s, m, 0.5 * (a + b));
        EXPECT_GE(mid, 0.5 * (price_contract_value(s, m, a) + price_contract_value(s, m, b)) - 1e-12);
      }
      lo = hi;
    }
  }
}

TEST(Properties, FineAtCapNeverLosesRevenue) {
  SplitMix64 rng(407);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = random_model(rng, 3, 21);
    auto s = solve_nonadv(m);
    const auto& pp = s.menu.effective_prices();
    auto capped = menu_at_cap(s.eps_star, pp, m);
    const double best = realized_revenue(capped, m);
    const auto cap = fine_at_cap(pp, m);
    std::vector<Contract> cs;
    for (int i = 0; i < m.n(); ++i) {
      const double fine = cap[static_cast<std::size_t>(i)] * rng.uniform();
      cs.push_back({pp[static_cast<std::size_t>(i)] - m.gamma * fine, s.eps_star[static_cast<std::size_t>(i)], fine});
    }
    const double other = realized_revenue(ContractMenu(cs, m.gamma), m);
    if (m.gamma < 1.0) {
      EXPECT_GE(best, other - 1e-12) << "trial " << trial;
    } else {
      EXPECT_NEAR(best, other, 1e-12);
    }
  }
}

TEST(Properties, AdversarySpecificContractNeverHelps) {
  SplitMix64 rng(408);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = random_model(rng, 2, 21);
    auto sol = solve_adv_exact(m);
    const auto br = adversary_best_response(sol.menu, m);
    const double honest = (1.0 - m.rho) * honest_revenue(sol.menu.effective_prices(), m);
    // A contract aimed only at the adversary, at least as attractive to it.
    const double e = rng.uniform();
    const double fine = 5.0 * rng.uniform();
    const double price = m.cost(e) - fine - br.utility - rng.uniform();
    const Contract extra{price, e, fine};
    ASSERT_GE(adversary_gain(m, extra), br.utility);
    const double with_extra = honest + m.rho * -adversary_gain(m, extra);
    EXPECT_LE(with_extra, sol.revenue_adv + 1e-12) << "trial " << trial;
  }
}

TEST(Properties, ExactSolverOutputIsFeasibleAndPoAdvAtLeastOne) {
  SplitMix64 rng(409);
  for (int trial = 0; trial < 60; ++trial) {
    auto m = random_model(rng, 1 + trial % 3, 21);
    auto sol = solve_adv_exact(m);
    auto r = check_menu(sol.menu, m);
    EXPECT_TRUE(r.valid()) << r.summary();
    auto pa = poadv_from(solve_nonadv(m).revenue_star, sol.revenue_adv, m.rho);
    if (!pa.unbounded) EXPECT_GE(pa.value, 1.0 - 1e-12);
  }
}

TEST(Properties, IntermediateKeepsEffectivePrices) {
  SplitMix64 rng(410);
  int seen = 0;
  for (int trial = 0; trial < 400 && seen < 25; ++trial) {
    auto m = random_model(rng, 4, 21);
    ApproxOutcome out;
    try {
      out = approx_contracts(m);
    } catch (const Error&) {
      continue;
    }
    if (out.branch != ApproxBranch::kIntermediateNew) continue;
    ++seen;
    for (int i = out.inter->k + 1; i <= m.n(); ++i) {
      const int safe = out.assignment[static_cast<std::size_t>(i - 1)];
      EXPECT_NEAR(out.menu->effective_price(i), out.nonadv.menu.at(safe).p, 1e-12);
    }
    EXPECT_LE(adversary_best_response(*out.menu, m).utility, out.cost_class.delta + 1e-7);
  }
  EXPECT_GE(seen, 5);
}

TEST(Properties, ApproxOutputsSatisfyHonestConstraints) {
  SplitMix64 rng(411);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = random_model(rng, 1 + trial % 4, 21);
    ApproxOutcome out;
    try {
      out = approx_contracts(m);
    } catch (const ClassificationError&) {
      continue;
    }
    if (!out.menu) continue;
    if (out.branch == ApproxBranch::kHigh) {
      EXPECT_GE(honest_utility(m, out.chosen, out.menu->at(out.chosen)), -1e-7);
    } else {
      auto r = check_menu(*out.menu, m, false);
      EXPECT_TRUE(r.valid()) << "trial " << trial << "\n" << r.summary();
    }
  }
}
