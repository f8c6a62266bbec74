#pragma once

// Random valid market models for property and oracle tests.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "advcontract/model.hpp"
#include "advcontract/rng.hpp"

namespace advc::testing {

inline double draw(SplitMix64& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

// Concave increasing piecewise-linear knots with h(0) = 0.
inline Knots random_concave_knots(SplitMix64& rng, int count, double scale) {
  Knots k;
  for (int j = 0; j < count; ++j) k.x.push_back(static_cast<double>(j) / (count - 1));
  std::vector<double> slopes;
  for (int j = 0; j + 1 < count; ++j) slopes.push_back(draw(rng, 0.0, scale));
  std::sort(slopes.rbegin(), slopes.rend());
  k.y.push_back(0.0);
  for (int j = 0; j + 1 < count; ++j) {
    k.y.push_back(k.y.back() + slopes[static_cast<std::size_t>(j)] * (k.x[j + 1] - k.x[j]));
  }
  return k;
}

inline std::vector<BenefitFunction> random_benefits(SplitMix64& rng, int n) {
  std::vector<BenefitFunction> out;
  const int family = static_cast<int>(rng() % 4);
  switch (family) {
    case 0: {  // c * i * (1 - exp(-K eps / i))
      const double c = draw(rng, 0.5, 2.0), K = draw(rng, 2.0, 20.0);
      for (int i = 1; i <= n; ++i) out.push_back(BenefitFunction::saturating_exp(c * i, K / i, i));
      break;
    }
    case 1: {
      double a = 0.0;
      for (int i = 1; i <= n; ++i) {
        a += draw(rng, 0.2, 2.0);
        out.push_back(BenefitFunction::log1p(a, i));
      }
      break;
    }
    case 2: {
      const double beta = draw(rng, 0.3, 1.0);
      double a = 0.0;
      for (int i = 1; i <= n; ++i) {
        a += draw(rng, 0.2, 2.0);
        out.push_back(BenefitFunction::power(a, beta, i));
      }
      break;
    }
    default: {  // b_i = sum_{j <= i} h_j with h_j concave increasing
      const int count = 6;
      Knots acc;
      for (int i = 1; i <= n; ++i) {
        Knots h = random_concave_knots(rng, count, 3.0);
        if (acc.x.empty()) {
          acc = h;
        } else {
          for (std::size_t j = 0; j < acc.y.size(); ++j) acc.y[j] += h.y[j];
        }
        out.push_back(BenefitFunction::tabulated(acc, i));
      }
      break;
    }
  }
  return out;
}

inline AdversaryCost random_cost(SplitMix64& rng) {
  if (rng() % 4 == 0) {
    // Convex increasing knots with C(0) = 0.
    Knots k;
    const int count = 6;
    std::vector<double> slopes;
    for (int j = 0; j + 1 < count; ++j) slopes.push_back(draw(rng, 0.0, 12.0));
    std::sort(slopes.begin(), slopes.end());
    for (int j = 0; j < count; ++j) k.x.push_back(static_cast<double>(j) / (count - 1));
    k.y.push_back(0.0);
    for (int j = 0; j + 1 < count; ++j) k.y.push_back(k.y.back() + slopes[j] * (k.x[j + 1] - k.x[j]));
    return AdversaryCost::tabulated(k);
  }
  return AdversaryCost::exp_scaled(draw(rng, 0.3, 15.0));
}

inline MarketModel random_model(SplitMix64& rng, int n, int grid_m) {
  MarketModel m;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    m.q.push_back(draw(rng, 0.1, 1.0));
    total += m.q.back();
  }
  for (auto& x : m.q) x /= total;
  m.benefits = random_benefits(rng, n);
  m.cost = random_cost(rng);
  m.rho = draw(rng, 0.0, 0.6);
  m.gamma = draw(rng, 0.0, 1.0);
  m.phi = draw(rng, 0.5, 1.0);
  m.grid_m = grid_m;
  m.s_max = draw(rng, 1.0, 100.0);
  if (!validate_model(m).valid()) {
    throw std::logic_error("random_model produced an invalid model:\n" + validate_model(m).summary());
  }
  return m;
}

}  // namespace advc::testing
