#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "advcontract/errors.hpp"
#include "advcontract/model.hpp"

namespace advc {

/// A function sampled on an increasing eps grid.
struct CurveTable {
  std::vector<double> grid;
  std::vector<double> values;
};

struct NonAdvSolution {
  std::vector<int> eps_index;  // grid index per type
  std::vector<double> eps_star;
  ContractMenu menu;  // all fines zero
  double revenue_star = 0.0;
  CurveTable curve;
};

struct NonAdvOptions {
  // Golden-section search inside the winning grid cell (parametric families only).
  bool refine = false;
};

/// Q_{>=i} for i = 1..n+1, stored at index i; Q_{>=n+1} = 0.
inline std::vector<double> tail_shares(const MarketModel& m) {
  std::vector<double> tail(static_cast<std::size_t>(m.n()) + 2, 0.0);
  for (int i = m.n(); i >= 1; --i) {
    tail[static_cast<std::size_t>(i)] = tail[static_cast<std::size_t>(i) + 1] + m.share(i);
  }
  return tail;
}

/// Prices that make IR_1 and every IC_{i+1,i} tight for a monotone eps vector:
/// p'_1 = b_1(eps_1), p'_i = p'_{i-1} + b_i(eps_i) - b_i(eps_{i-1}).
inline std::vector<double> effective_prices(std::span<const double> eps,
                                            const MarketModel& m) {
  if (static_cast<int>(eps.size()) != m.n()) {
    throw DomainError("effective_prices: need one privacy level per type");
  }
  std::vector<double> p(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    check_privacy_level(eps[i]);
    if (i > 0 && eps[i] < eps[i - 1]) {
      throw DomainError("effective_prices: privacy levels must be non-decreasing");
    }
    const auto& b = m.benefits[i];
    p[i] = i == 0 ? b(eps[0]) : p[i - 1] + b(eps[i]) - b(eps[i - 1]);
  }
  return p;
}

/// Sum_i q_i p'_i, accumulated in type order.
inline double honest_revenue(std::span<const double> p_prime, const MarketModel& m) {
  double r = 0.0;
  for (std::size_t i = 0; i < p_prime.size(); ++i) r += m.q[i] * p_prime[i];
  return r;
}

/// Per-type share of the revenue once prices follow effective_prices:
/// g_i(eps) = Q_{>=i} b_i(eps) - Q_{>=i+1} b_{i+1}(eps).
inline double virtual_value(int i, double eps, const MarketModel& m) {
  if (i < 1 || i > m.n()) {
    throw DomainError("virtual_value: type index " + std::to_string(i) + " out of range");
  }
  check_privacy_level(eps);
  auto tail = tail_shares(m);
  double v = tail[static_cast<std::size_t>(i)] * m.benefit(i)(eps);
  if (i < m.n()) v -= tail[static_cast<std::size_t>(i) + 1] * m.benefit(i + 1)(eps);
  return v;
}

/// Continuous evaluation of the price-contract curve P through (eps*_i, p*_i).
/// Segment i (between eps*_{i-1} and eps*_i) is parallel to b_i; beyond eps*_n
/// the curve continues parallel to b_n.
inline double price_contract_value(const NonAdvSolution& sol, const MarketModel& m,
                                   double eps) {
  const int n = m.n();
  const auto& p = sol.menu.effective_prices();
  for (int i = 1; i <= n; ++i) {
    if (eps <= sol.eps_star[static_cast<std::size_t>(i - 1)]) {
      if (i == 1) return m.benefit(1)(eps);
      const double lo = sol.eps_star[static_cast<std::size_t>(i - 2)];
      return p[static_cast<std::size_t>(i - 2)] + m.benefit(i)(eps) - m.benefit(i)(lo);
    }
  }
  const double top = sol.eps_star.back();
  return p.back() + m.benefit(n)(eps) - m.benefit(n)(top);
}

inline CurveTable price_contract_curve(const NonAdvSolution& sol, const MarketModel& m) {
  CurveTable t;
  t.grid = m.grid();
  t.values.reserve(t.grid.size());
  for (double e : t.grid) t.values.push_back(price_contract_value(sol, m, e));
  return t;
}

namespace detail {

inline int argmax_first(std::span<const double> v) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(v.size()); ++k) {
    if (v[static_cast<std::size_t>(k)] > v[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

// Virtual values on the grid: g[i-1][k].
inline std::vector<std::vector<double>> virtual_value_table(const MarketModel& m,
                                                            const GridTables& t) {
  const auto tail = tail_shares(m);
  std::vector<std::vector<double>> g(static_cast<std::size_t>(m.n()));
  for (int i = 1; i <= m.n(); ++i) {
    auto& row = g[static_cast<std::size_t>(i - 1)];
    row.resize(t.eps.size());
    for (std::size_t k = 0; k < t.eps.size(); ++k) {
      double v = tail[static_cast<std::size_t>(i)] * t.benefit(i, static_cast<int>(k));
      if (i < m.n()) v -= tail[static_cast<std::size_t>(i) + 1] * t.benefit(i + 1, static_cast<int>(k));
      row[k] = v;
    }
  }
  return g;
}

struct Pool {
  int first = 0;  // 0-based type indices, inclusive
  int last = 0;
  std::vector<double> value;  // pooled sum of g over the run
  int k = 0;
};

// Golden-section maximisation of a unimodal-in-cell function on [lo, hi].
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol = 1e-12) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Optimal non-adversarial menu: per-type grid argmax of the virtual values,
/// then adjacent runs that break monotonicity are pooled and re-maximised
/// jointly (pool adjacent violators). Fines are zero.
inline NonAdvSolution solve_nonadv(const MarketModel& m, const NonAdvOptions& opt = {}) {
  require_valid(m);
  const GridTables t(m);
  const auto g = detail::virtual_value_table(m, t);

  std::vector<detail::Pool> pools;
  for (int i = 0; i < m.n(); ++i) {
    detail::Pool p{i, i, g[static_cast<std::size_t>(i)], 0};
    p.k = detail::argmax_first(p.value);
    pools.push_back(std::move(p));
    while (pools.size() >= 2 && pools.back().k < pools[pools.size() - 2].k) {
      detail::Pool top = std::move(pools.back());
      pools.pop_back();
      auto& below = pools.back();
      for (std::size_t k = 0; k < below.value.size(); ++k) below.value[k] += top.value[k];
      below.last = top.last;
      below.k = detail::argmax_first(below.value);
    }
  }

  NonAdvSolution sol;
  sol.eps_index.resize(static_cast<std::size_t>(m.n()));
  sol.eps_star.resize(static_cast<std::size_t>(m.n()));
  double floor = 0.0;
  for (const auto& p : pools) {
    double e = t.eps[static_cast<std::size_t>(p.k)];
    const bool parametric = [&] {
      for (int i = p.first; i <= p.last; ++i) {
        if (!m.benefits[static_cast<std::size_t>(i)].parametric()) return false;
        if (i + 1 < m.n() && !m.benefits[static_cast<std::size_t>(i) + 1].parametric()) return false;
      }
      return true;
    }();
    if (opt.refine && parametric) {
      auto pooled = [&](double x) {
        double v = 0.0;
        for (int i = p.first; i <= p.last; ++i) v += virtual_value(i + 1, x, m);
        return v;
      };
      double lo = std::max(floor, t.eps[static_cast<std::size_t>(std::max(p.k - 1, 0))]);
      double hi = t.eps[static_cast<std::size_t>(std::min(p.k + 1, m.grid_m - 1))];
      if (lo < hi) {
        double x = detail::golden_max(pooled, lo, hi);
        if (pooled(x) > pooled(e) && x >= floor) e = x;
      }
    }
    floor = std::max(floor, e);
    for (int i = p.first; i <= p.last; ++i) {
      sol.eps_index[static_cast<std::size_t>(i)] = p.k;
      sol.eps_star[static_cast<std::size_t>(i)] = e;
    }
  }

  const auto prices = effective_prices(sol.eps_star, m);
  std::vector<Contract> contracts;
  contracts.reserve(prices.size());
  for (std::size_t i = 0; i < prices.size(); ++i) {
    contracts.push_back({prices[i], sol.eps_star[i], 0.0});
  }
  sol.menu = ContractMenu(std::move(contracts), m.gamma);
  sol.revenue_star = honest_revenue(sol.menu.effective_prices(), m);
  sol.curve = price_contract_curve(sol, m);
  return sol;
}

}  // namespace advc
