#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "advcontract/errors.hpp"
#include "advcontract/functions.hpp"

namespace advc {

struct Tolerances {
  double shape = 1e-9;        // monotonicity / concavity / ordering checks
  double feasibility = 1e-7;  // IR, IC, SR checks on menus

  bool operator==(const Tolerances&) const = default;
};

/// A single-bundle market: n honest types, one adversarial type.
struct MarketModel {
  std::vector<double> q;  // honest type shares, sum to 1
  double rho = 0.0;       // adversary fraction in [0, 1)
  double gamma = 0.0;     // attack probability in [0, 1]
  double phi = 1.0;       // steady-revenue parameter in (0, 1]
  std::vector<BenefitFunction> benefits;
  AdversaryCost cost;
  int grid_m = 101;
  double s_max = 1e6;
  Tolerances tol;
  std::uint64_t rng_seed = 0;

  bool operator==(const MarketModel&) const = default;

  int n() const { return static_cast<int>(q.size()); }

  /// i-th point of the uniform grid on [0, 1], both endpoints included.
  double grid_point(int k) const {
    if (k == grid_m - 1) return 1.0;
    return static_cast<double>(k) / static_cast<double>(grid_m - 1);
  }

  std::vector<double> grid() const {
    std::vector<double> g(static_cast<std::size_t>(grid_m));
    for (int k = 0; k < grid_m; ++k) g[static_cast<std::size_t>(k)] = grid_point(k);
    return g;
  }

  /// Benefit of honest type i (1-based).
  const BenefitFunction& benefit(int i) const {
    return benefits[static_cast<std::size_t>(i - 1)];
  }
  double share(int i) const { return q[static_cast<std::size_t>(i - 1)]; }
};

/// Benefit and cost values sampled once on the model grid.
struct GridTables {
  std::vector<double> eps;
  std::vector<std::vector<double>> b;  // b[i-1][k]
  std::vector<double> c;

  explicit GridTables(const MarketModel& m) : eps(m.grid()) {
    b.resize(static_cast<std::size_t>(m.n()));
    for (int i = 1; i <= m.n(); ++i) {
      auto& row = b[static_cast<std::size_t>(i - 1)];
      row.reserve(eps.size());
      for (double e : eps) row.push_back(m.benefit(i)(e));
    }
    c.reserve(eps.size());
    for (double e : eps) c.push_back(m.cost(e));
  }

  double benefit(int i, int k) const {
    return b[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)];
  }
  double cost(int k) const { return c[static_cast<std::size_t>(k)]; }
};

struct Contract {
  double p = 0.0;    // price
  double eps = 0.0;  // privacy level
  double s = 0.0;    // post-hoc fine

  bool operator==(const Contract&) const = default;

  double effective_price(double gamma) const { return p + gamma * s; }
};

/// p >= (1 - phi) (p + gamma s), with slack `tol`.
inline bool steady_revenue_ok(const Contract& c, const MarketModel& m,
                              double tol) {
  return c.p >= (1.0 - m.phi) * c.effective_price(m.gamma) - tol;
}

/// One contract per honest type plus the cached effective prices p + gamma s.
class ContractMenu {
 public:
  ContractMenu() = default;
  ContractMenu(std::vector<Contract> contracts, double gamma)
      : contracts_(std::move(contracts)) {
    effective_.reserve(contracts_.size());
    for (const auto& c : contracts_) effective_.push_back(c.effective_price(gamma));
  }

  int size() const { return static_cast<int>(contracts_.size()); }
  const std::vector<Contract>& contracts() const { return contracts_; }
  const std::vector<double>& effective_prices() const { return effective_; }

  /// Contract of type i (1-based).
  const Contract& at(int i) const { return contracts_[static_cast<std::size_t>(i - 1)]; }
  double effective_price(int i) const { return effective_[static_cast<std::size_t>(i - 1)]; }

  bool operator==(const ContractMenu&) const = default;

 private:
  std::vector<Contract> contracts_;
  std::vector<double> effective_;
};

/// Expected utility of honest type i for contract c: b_i(eps) - p - gamma s.
inline double honest_utility(const MarketModel& m, int i, const Contract& c) {
  return m.benefit(i)(c.eps) - c.p - m.gamma * c.s;
}

/// Adversary utility C(eps) - p - s.
inline double adversary_gain(const MarketModel& m, const Contract& c) {
  return m.cost(c.eps) - c.p - c.s;
}

struct Violation {
  std::string what;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool valid() const { return violations.empty(); }
  void add(std::string what, std::string detail) {
    violations.push_back({std::move(what), std::move(detail)});
  }
  std::string summary() const {
    std::ostringstream os;
    for (const auto& v : violations) os << v.what << ": " << v.detail << "\n";
    return os.str();
  }
};

namespace detail {

inline std::string at_grid(double e) {
  std::ostringstream os;
  os.precision(17);
  os << "eps=" << e;
  return os.str();
}

inline std::string pair_at(double a, double b) {
  std::ostringstream os;
  os.precision(17);
  os << "eps=" << a << ",eps'=" << b;
  return os.str();
}

// Knot layout for tabulated functions: starts at 0, ends at 1, strictly increasing.
inline void check_knots(const Knots& k, const std::string& who,
                        ValidationReport& r) {
  if (k.x.size() < 2 || k.x.size() != k.y.size()) {
    r.add("knots", who + ": need >= 2 knots with matching x/y lengths");
    return;
  }
  if (k.x.front() != 0.0 || k.x.back() != 1.0) {
    r.add("knots", who + ": knots must span [0, 1]");
  }
  for (std::size_t j = 1; j < k.x.size(); ++j) {
    if (!(k.x[j] > k.x[j - 1])) {
      r.add("knots", who + ": knot abscissae not strictly increasing");
      return;
    }
  }
}

// Knot-level concavity (sign = +1) or convexity (sign = -1): slopes monotone.
inline void check_knot_shape(const Knots& k, double sign, double tol,
                             const std::string& what, const std::string& who,
                             ValidationReport& r) {
  for (std::size_t j = 1; j + 1 < k.x.size(); ++j) {
    double left = (k.y[j] - k.y[j - 1]) / (k.x[j] - k.x[j - 1]);
    double right = (k.y[j + 1] - k.y[j]) / (k.x[j + 1] - k.x[j]);
    if (sign * (left - right) < -tol) {
      r.add(what, who + " at knot " + at_grid(k.x[j]));
      return;
    }
  }
}

// Midpoint test on every symmetric grid pair (k-d, k+d).
inline void check_grid_shape(const std::vector<double>& eps,
                             const std::vector<double>& v, double sign,
                             double tol, const std::string& what,
                             const std::string& who, ValidationReport& r) {
  const int m = static_cast<int>(v.size());
  for (int k = 1; k + 1 < m; ++k) {
    for (int d = 1; k - d >= 0 && k + d < m; ++d) {
      double mid = v[static_cast<std::size_t>(k)];
      double chord = 0.5 * (v[static_cast<std::size_t>(k - d)] + v[static_cast<std::size_t>(k + d)]);
      if (sign * (mid - chord) < -tol) {
        r.add(what, who + " at " + pair_at(eps[static_cast<std::size_t>(k - d)], eps[static_cast<std::size_t>(k + d)]));
        return;
      }
    }
  }
}

}  // namespace detail

/// Checks every modelling assumption and reports all violations found.
inline ValidationReport validate_model(const MarketModel& m) {
  ValidationReport r;
  const double tol = m.tol.shape;

  if (m.q.empty()) r.add("n", "need at least one honest type");
  if (m.benefits.size() != m.q.size()) {
    r.add("n", "benefit count " + std::to_string(m.benefits.size()) +
                   " != share count " + std::to_string(m.q.size()));
  }
  if (m.grid_m < 11) r.add("grid_m", "grid_m must be >= 11");
  if (!(m.s_max > 0.0)) r.add("s_max", "s_max must be > 0");
  if (!(m.rho >= 0.0 && m.rho < 1.0)) r.add("rho", "rho must lie in [0, 1)");
  if (!(m.gamma >= 0.0 && m.gamma <= 1.0)) r.add("gamma", "gamma must lie in [0, 1]");
  if (!(m.phi > 0.0 && m.phi <= 1.0)) r.add("phi", "phi must lie in (0, 1]");

  double total = 0.0;
  for (std::size_t i = 0; i < m.q.size(); ++i) {
    if (!(m.q[i] > 0.0)) r.add("simplex", "q[" + std::to_string(i + 1) + "] must be > 0");
    total += m.q[i];
  }
  if (!m.q.empty() && std::abs(total - 1.0) > 1e-9) {
    std::ostringstream os;
    os.precision(17);
    os << "shares sum to " << total;
    r.add("simplex", os.str());
  }
  if (!r.valid()) return r;  // grid checks below need a consistent shape

  const auto eps = m.grid();
  std::vector<std::vector<double>> b(m.benefits.size());
  for (std::size_t i = 0; i < m.benefits.size(); ++i) {
    const auto& f = m.benefits[i];
    const std::string who = "b" + std::to_string(i + 1);
    if (f.family == BenefitFamily::kTabulated) {
      detail::check_knots(f.knots, who, r);
      if (!r.valid()) return r;
    }
    if (f.family == BenefitFamily::kPower && !(f.exponent > 0.0 && f.exponent <= 1.0)) {
      r.add("parameter", who + ": power exponent must lie in (0, 1]");
    }
    for (double e : eps) b[i].push_back(f(e));
    double b0 = f(0.0);
    if (std::abs(b0) > (f.parametric() ? 0.0 : 1e-12)) r.add("b(0)=0", who);
    double run_max = b[i].front();
    for (std::size_t k = 1; k < eps.size(); ++k) {
      if (b[i][k] < run_max - tol) {
        r.add("monotone", who + " decreases at " + detail::at_grid(eps[k]));
        break;
      }
      run_max = std::max(run_max, b[i][k]);
    }
    if (f.family == BenefitFamily::kTabulated) {
      detail::check_knot_shape(f.knots, 1.0, tol, "concave", who, r);
    } else {
      detail::check_grid_shape(eps, b[i], 1.0, tol, "concave", who, r);
    }
  }

  // Cost: C(0) = 0, increasing, convex.
  {
    const auto& c = m.cost;
    if (c.family == CostFamily::kTabulated) {
      detail::check_knots(c.knots, "C", r);
      if (!r.valid()) return r;
    }
    if (c.family == CostFamily::kExpScaled && !(c.scale > 0.0)) {
      r.add("parameter", "C: scale must be > 0");
    }
    if (std::abs(c(0.0)) > 1e-12) r.add("C(0)=0", "C");
    std::vector<double> cv;
    for (double e : eps) cv.push_back(c(e));
    for (std::size_t k = 1; k < eps.size(); ++k) {
      if (cv[k] < cv[k - 1] - tol) {
        r.add("monotone", "C decreases at " + detail::at_grid(eps[k]));
        break;
      }
    }
    if (c.family == CostFamily::kTabulated) {
      detail::check_knot_shape(c.knots, -1.0, tol, "convex", "C", r);
    } else {
      detail::check_grid_shape(eps, cv, -1.0, tol, "convex", "C", r);
    }
  }

  // Type ordering and increasing differences between adjacent types. ID for
  // all pairs eps < eps' is equivalent to h = b_{i+1} - b_i never dropping
  // below its running maximum.
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    const std::string who = "b" + std::to_string(i + 1) + "/b" + std::to_string(i + 2);
    for (std::size_t k = 0; k < eps.size(); ++k) {
      if (b[i][k] > b[i + 1][k] + tol) {
        r.add("type ordering", who + " at " + detail::at_grid(eps[k]));
        break;
      }
    }
    double best = b[i + 1][0] - b[i][0];
    std::size_t arg = 0;
    for (std::size_t k = 1; k < eps.size(); ++k) {
      double h = b[i + 1][k] - b[i][k];
      if (h < best - tol) {
        r.add("increasing differences", who + " at " + detail::pair_at(eps[arg], eps[k]));
        break;
      }
      if (h > best) {
        best = h;
        arg = k;
      }
    }
  }
  return r;
}

inline void require_valid(const MarketModel& m) {
  auto r = validate_model(m);
  if (!r.valid()) throw InvalidModel("invalid model:\n" + r.summary());
}

/// Honest-side constraint check for a menu: monotone eps, IR, IC, SR.
inline ValidationReport check_menu(const ContractMenu& menu, const MarketModel& m,
                                   bool require_monotone = true) {
  ValidationReport r;
  const double tol = m.tol.feasibility;
  if (menu.size() != m.n()) {
    r.add("menu size", std::to_string(menu.size()) + " != n");
    return r;
  }
  for (int i = 1; i <= m.n(); ++i) {
    const auto& c = menu.at(i);
    if (c.p < -tol || c.s < -tol) r.add("sign", "type " + std::to_string(i));
    if (require_monotone && i > 1 && c.eps < menu.at(i - 1).eps) {
      r.add("monotone", "eps_" + std::to_string(i) + " < eps_" + std::to_string(i - 1));
    }
    if (!steady_revenue_ok(c, m, tol)) r.add("SR", "type " + std::to_string(i));
    double own = honest_utility(m, i, c);
    if (own < -tol) r.add("IR", "type " + std::to_string(i));
    for (int j = 1; j <= m.n(); ++j) {
      if (j == i) continue;
      if (own < honest_utility(m, i, menu.at(j)) - tol) {
        r.add("IC", std::to_string(i) + " prefers " + std::to_string(j));
      }
    }
  }
  return r;
}

}  // namespace advc
