#pragma once

#include <vector>

#include "advcontract/model.hpp"

namespace advc::presets {

/// n types with b_i(eps) = i (1 - exp(-10 eps / i)), C(eps) = 6 (e^eps - 1),
/// uniform shares and phi = 0.95.
inline MarketModel reference_market(int n, double rho = 0.0, double gamma = 0.0,
                                    int grid_m = 101) {
  MarketModel m;
  m.q.assign(static_cast<std::size_t>(n), 1.0 / n);
  for (int i = 1; i <= n; ++i) {
    m.benefits.push_back(BenefitFunction::saturating_exp(i, 10.0 / i, i));
  }
  m.cost = AdversaryCost::exp_scaled(6.0);
  m.rho = rho;
  m.gamma = gamma;
  m.phi = 0.95;
  m.grid_m = grid_m;
  return m;
}

/// Two types b_L = ln(1 + eps), b_H = 2 ln(1 + eps) (share q for L) and an
/// adversary with C(eps) = (10 / rho + 2 (1 - gamma) / (rho gamma)) (e^eps - 1).
/// No menu earns positive revenue against this adversary.
inline MarketModel unbounded_loss_market(double rho, double gamma, double q_low,
                                         int grid_m = 101) {
  MarketModel m;
  m.q = {q_low, 1.0 - q_low};
  m.benefits = {BenefitFunction::log1p(1.0, 1), BenefitFunction::log1p(2.0, 2)};
  m.cost = AdversaryCost::exp_scaled(10.0 / rho + 2.0 * (1.0 - gamma) / (rho * gamma));
  m.rho = rho;
  m.gamma = gamma;
  m.phi = 0.95;
  m.grid_m = grid_m;
  return m;
}

}  // namespace advc::presets
