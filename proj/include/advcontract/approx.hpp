#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "advcontract/adv.hpp"
#include "advcontract/errors.hpp"
#include "advcontract/model.hpp"
#include "advcontract/nonadv.hpp"

namespace advc {

enum class CostKind { kHigh, kLow, kIntermediate };

inline std::string_view to_string(CostKind k) {
  switch (k) {
    case CostKind::kHigh: return "High";
    case CostKind::kLow: return "Low";
    case CostKind::kIntermediate: return "Intermediate";
  }
  return "?";
}

/// Position of C relative to the price-contract curve P.
struct CostClass {
  CostKind kind = CostKind::kLow;
  double eps_m = 0.0;  // last crossing, Intermediate only
  double delta = 0.0;  // max_{eps < eps_m} C - P on the grid, Intermediate only
};

inline constexpr double kCrossingTolerance = 1e-7;
inline constexpr double kPriceFloor = 1e-9;

/// Sign pattern of C - P on the grid (eps = 0 excluded). A run of two or more
/// grid points with |C - P| <= 1e-7 is reported as a ClassificationError.
inline CostClass classify_cost(const NonAdvSolution& sol, const AdversaryCost& cost,
                               const MarketModel& m) {
  const auto& grid = sol.curve.grid;
  const auto& curve = sol.curve.values;
  const std::size_t size = grid.size();
  std::vector<double> d(size);
  std::vector<int> sign(size, 0);
  for (std::size_t k = 0; k < size; ++k) {
    d[k] = cost(grid[k]) - curve[k];
    if (k == 0) continue;
    sign[k] = d[k] > kCrossingTolerance ? 1 : (d[k] < -kCrossingTolerance ? -1 : 0);
  }
  bool pos = false, neg = false;
  for (std::size_t k = 1; k < size; ++k) {
    if (sign[k] == 0 && (k + 1 < size && sign[k + 1] == 0)) {
      throw ClassificationError("C - P vanishes on an interval near eps=" + std::to_string(grid[k]));
    }
    pos = pos || sign[k] > 0;
    neg = neg || sign[k] < 0;
  }
  if (!pos && !neg) throw ClassificationError("C - P vanishes on the whole grid");

  CostClass out;
  if (pos && !neg) {
    out.kind = CostKind::kHigh;
    return out;
  }
  if (neg && !pos) {
    out.kind = CostKind::kLow;
    return out;
  }

  out.kind = CostKind::kIntermediate;
  // Last pair of consecutive signed grid points with opposite signs.
  std::size_t a = 0, b = 0, prev = 0;
  for (std::size_t k = 1; k < size; ++k) {
    if (sign[k] == 0) continue;
    if (prev != 0 && sign[prev] != sign[k]) {
      a = prev;
      b = k;
    }
    prev = k;
  }
  auto gap = [&](double e) { return cost(e) - price_contract_value(sol, m, e); };
  double lo = grid[a], hi = grid[b];
  const double lo_sign = static_cast<double>(sign[a]);
  // Start from the chord root, then bisect.
  double x = lo + (hi - lo) * d[a] / (d[a] - d[b]);
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  if (gap(x) * lo_sign > 0.0) {
    lo = x;
  } else {
    hi = x;
  }
  while (hi - lo > 1e-10) {
    double mid = 0.5 * (lo + hi);
    if (gap(mid) * lo_sign > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.eps_m = 0.5 * (lo + hi);
  out.delta = 0.0;  // includes eps = 0, where C - P = 0
  for (std::size_t k = 0; k < size && grid[k] < out.eps_m; ++k) out.delta = std::max(out.delta, d[k]);
  return out;
}

inline CostClass classify_cost(const NonAdvSolution& sol, const MarketModel& m) {
  return classify_cost(sol, m.cost, m);
}

/// A zero-fine contract (p, eps, 0) re-priced as (p - gamma s, eps, s) with the
/// least fine s that caps the adversary's gain at delta.
struct SlackContract {
  Contract base;
  double s = 0.0;
  double new_price = 0.0;
  double delta = 0.0;
  double lambda = 0.0;

  Contract contract() const { return {new_price, base.eps, s}; }
};

/// s = max(0, (C(eps) - p - delta) / (1 - gamma)); feasible iff the new price
/// stays >= lambda and >= (1 - phi) p and s <= s_max.
inline std::optional<SlackContract> make_slack_contract(const Contract& contract, double delta,
                                                        double lambda, const MarketModel& m) {
  constexpr double eps_tol = 1e-12;
  const double excess = m.cost(contract.eps) - contract.p - delta;
  double s = 0.0;
  if (excess > eps_tol) {
    if (m.gamma >= 1.0) return std::nullopt;  // a fine cannot lower the gain
    s = excess / (1.0 - m.gamma);
  }
  if (s > m.s_max) return std::nullopt;
  const double new_price = contract.p - m.gamma * s;
  if (new_price < lambda - eps_tol) return std::nullopt;
  if (new_price < (1.0 - m.phi) * contract.p - eps_tol) return std::nullopt;
  return SlackContract{contract, s, new_price, delta, lambda};
}

/// Result of the Intermediate-C construction.
struct InterCResult {
  ContractMenu menu;
  std::vector<int> assignment;  // source non-adversarial contract per type
  int k = 0;                    // highest type with eps*_K <= eps_M (0 if none)
  std::vector<int> safe_set;    // E_{>=K}
  double r_hat = 0.0;
  double r_star = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool returned_original = false;
  // Clipping alpha and beta at zero would have picked the other branch.
  bool interpretation_conflict = false;
};

/// Types above K move to the best Delta-slack p*_K-priced contract among
/// types >= K; types up to K keep their contracts. The original menu is kept
/// when it earns more against the adversary.
inline InterCResult inter_c_app(const NonAdvSolution& nonadv, const CostClass& cls,
                                const MarketModel& m) {
  if (cls.kind != CostKind::kIntermediate) throw Error("inter_c_app: cost class is not Intermediate");
  const int n = m.n();
  const auto& orig = nonadv.menu;
  InterCResult out;
  out.r_star = nonadv.revenue_star;

  for (int i = 1; i <= n; ++i) {
    if (orig.at(i).eps <= cls.eps_m) out.k = i;
  }
  const int K = out.k;
  const double lambda = K > 0 ? orig.at(K).p : kPriceFloor;

  std::vector<std::optional<SlackContract>> slack(static_cast<std::size_t>(n) + 1);
  for (int k = std::max(K, 1); k <= n; ++k) {
    slack[static_cast<std::size_t>(k)] = make_slack_contract(orig.at(k), cls.delta, lambda, m);
    if (slack[static_cast<std::size_t>(k)]) out.safe_set.push_back(k);
  }
  if (K > 0 && (out.safe_set.empty() || out.safe_set.front() != K)) {
    throw Error("inter_c_app: contract K is not Delta-slack p*_K-priced");
  }

  out.alpha = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= n; ++i) out.alpha = std::max(out.alpha, m.cost(orig.at(i).eps) - orig.at(i).p);

  if (out.safe_set.empty()) {
    // Only reachable with K = 0: nothing to move types onto.
    out.menu = orig;
    for (int i = 1; i <= n; ++i) out.assignment.push_back(i);
    out.r_hat = out.r_star;
    out.beta = out.alpha;
    out.returned_original = true;
    return out;
  }

  std::vector<Contract> contracts;
  std::vector<int> assignment;
  out.beta = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= K; ++i) {
    contracts.push_back(orig.at(i));
    assignment.push_back(i);
    out.r_hat += m.share(i) * orig.at(i).p;
    out.beta = std::max(out.beta, m.cost(orig.at(i).eps) - orig.at(i).p);
  }
  for (int i = K + 1; i <= n; ++i) {
    // Among near-ties for type i, the seller takes the higher price.
    double best = -std::numeric_limits<double>::infinity();
    for (int k : out.safe_set) best = std::max(best, m.benefit(i)(orig.at(k).eps) - orig.at(k).p);
    int safe = 0;
    for (int k : out.safe_set) {
      double u = m.benefit(i)(orig.at(k).eps) - orig.at(k).p;
      if (u >= best - m.tol.shape && (safe == 0 || orig.at(k).p > orig.at(safe).p)) safe = k;
    }
    const auto& sc = *slack[static_cast<std::size_t>(safe)];
    contracts.push_back(sc.contract());
    assignment.push_back(safe);
    out.r_hat += m.share(i) * orig.at(safe).p;
    out.beta = std::max(out.beta, adversary_gain(m, sc.contract()));
  }

  const double keep = (1.0 - m.rho) * out.r_star - m.rho * out.alpha;
  const double swap = (1.0 - m.rho) * out.r_hat - m.rho * out.beta;
  out.returned_original = keep > swap;
  const double keep_clipped = (1.0 - m.rho) * out.r_star - m.rho * std::max(0.0, out.alpha);
  const double swap_clipped = (1.0 - m.rho) * out.r_hat - m.rho * std::max(0.0, out.beta);
  out.interpretation_conflict = (keep_clipped > swap_clipped) != out.returned_original;

  if (out.returned_original) {
    out.menu = orig;
    out.assignment.clear();
    for (int i = 1; i <= n; ++i) out.assignment.push_back(i);
  } else {
    out.menu = ContractMenu(std::move(contracts), m.gamma);
    out.assignment = std::move(assignment);
  }
  return out;
}

enum class ApproxBranch { kLow, kHigh, kSolveAdvCase, kIntermediateNew, kIntermediateOriginal };

inline std::string_view to_string(ApproxBranch b) {
  switch (b) {
    case ApproxBranch::kLow: return "low";
    case ApproxBranch::kHigh: return "high";
    case ApproxBranch::kSolveAdvCase: return "solve_adv_case";
    case ApproxBranch::kIntermediateNew: return "intermediate_new";
    case ApproxBranch::kIntermediateOriginal: return "intermediate_original";
  }
  return "?";
}

struct ApproxOutcome {
  ApproxBranch branch = ApproxBranch::kLow;
  CostClass cost_class;
  NonAdvSolution nonadv;
  std::optional<ContractMenu> menu;  // empty for kSolveAdvCase
  std::vector<int> assignment;
  // High branch: chosen source contract and the price it certifies.
  int chosen = 0;
  double lambda = 0.0;
  std::optional<InterCResult> inter;
  double revenue = 0.0;  // market revenue of the returned menu

  bool solve_adv_case() const { return branch == ApproxBranch::kSolveAdvCase; }
};

/// Approximate adversarial menu from a non-adversarial solution.
inline ApproxOutcome approx_contracts(const MarketModel& m, NonAdvSolution nonadv) {
  ApproxOutcome out;
  out.cost_class = classify_cost(nonadv, m);
  const int n = m.n();

  switch (out.cost_class.kind) {
    case CostKind::kLow: {
      out.branch = ApproxBranch::kLow;
      out.menu = nonadv.menu;
      for (int i = 1; i <= n; ++i) out.assignment.push_back(i);
      break;
    }
    case CostKind::kHigh: {
      std::optional<SlackContract> pick;
      for (int k = 1; k <= n; ++k) {
        auto sc = make_slack_contract(nonadv.menu.at(k), 0.0, kPriceFloor, m);
        if (sc && (!pick || sc->base.p > pick->base.p)) {
          pick = sc;
          out.chosen = k;
        }
      }
      if (!pick) {
        out.branch = ApproxBranch::kSolveAdvCase;
        break;
      }
      out.branch = ApproxBranch::kHigh;
      out.lambda = pick->new_price;
      out.menu = ContractMenu(std::vector<Contract>(static_cast<std::size_t>(n), pick->contract()), m.gamma);
      out.assignment.assign(static_cast<std::size_t>(n), out.chosen);
      break;
    }
    case CostKind::kIntermediate: {
      auto r = inter_c_app(nonadv, out.cost_class, m);
      out.branch = r.returned_original ? ApproxBranch::kIntermediateOriginal : ApproxBranch::kIntermediateNew;
      out.menu = r.menu;
      out.assignment = r.assignment;
      out.inter = std::move(r);
      break;
    }
  }

  if (out.menu) {
    if (out.branch == ApproxBranch::kHigh) {
      const int j = out.chosen;
      if (honest_utility(m, j, out.menu->at(j)) < -m.tol.feasibility) {
        throw Error("approx_contracts: no honest type buys the single High-C contract");
      }
    } else {
      auto report = check_menu(*out.menu, m, /*require_monotone=*/false);
      if (!report.valid()) throw Error("approx_contracts: output violates honest IR/IC/SR:\n" + report.summary());
    }
    out.revenue = market_revenue(*out.menu, m);
  }
  out.nonadv = std::move(nonadv);
  return out;
}

inline ApproxOutcome approx_contracts(const MarketModel& m) { return approx_contracts(m, solve_nonadv(m)); }

/// Measured PoAdv of the approximate menu; nullopt when the algorithm defers
/// to the exact solver.
inline std::optional<PoAdvResult> approx_poadv(const ApproxOutcome& out, const MarketModel& m) {
  if (!out.menu) return std::nullopt;
  return poadv_from(out.nonadv.revenue_star, out.revenue, m.rho);
}

/// Guaranteed PoAdv ceiling for the returned menu. Low: 1. High:
/// R* / (lambda min q). Intermediate: R* / max(R_K - Delta rho / (1 - rho),
/// R* - alpha rho / (1 - rho)), infinite when that denominator is <= 0.
inline std::optional<double> poadv_bound(const ApproxOutcome& out, const MarketModel& m) {
  const double r_star = out.nonadv.revenue_star;
  switch (out.branch) {
    case ApproxBranch::kLow: return 1.0;
    case ApproxBranch::kSolveAdvCase: return std::nullopt;
    case ApproxBranch::kHigh: {
      const double q_min = *std::min_element(m.q.begin(), m.q.end());
      return r_star / (out.lambda * q_min);
    }
    case ApproxBranch::kIntermediateNew:
    case ApproxBranch::kIntermediateOriginal: {
      const auto& r = *out.inter;
      const double w = m.rho / (1.0 - m.rho);
      // The adversary opts out rather than take a loss, so alpha enters as
      // max(alpha, 0). With no safe contract only the original menu exists.
      const double keep = r.r_star - std::max(r.alpha, 0.0) * w;
      const double denom = r.safe_set.empty() ? keep : std::max(r.r_hat - out.cost_class.delta * w, keep);
      if (denom <= 0.0) return std::numeric_limits<double>::infinity();
      return r_star / denom;
    }
  }
  return std::nullopt;
}

}  // namespace advc
