#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "advcontract/errors.hpp"

namespace advc {

/// Piecewise-linear function given by knots on [0, 1].
struct Knots {
  std::vector<double> x;
  std::vector<double> y;

  bool operator==(const Knots&) const = default;

  double eval(double eps) const {
    // Knot layout is checked by validate_model; here we only need a bracket.
    if (x.empty()) return 0.0;
    if (eps <= x.front()) return y.front();
    if (eps >= x.back()) return y.back();
    auto hi = std::upper_bound(x.begin(), x.end(), eps);
    std::size_t j = static_cast<std::size_t>(hi - x.begin());
    double t = (eps - x[j - 1]) / (x[j] - x[j - 1]);
    return y[j - 1] + t * (y[j] - y[j - 1]);
  }
};

inline void check_privacy_level(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw DomainError("privacy level " + std::to_string(eps) +
                      " outside [0, 1]");
  }
}

enum class BenefitFamily { kScaledSaturatingExp, kLog1p, kPower, kTabulated };

inline std::string_view to_string(BenefitFamily f) {
  switch (f) {
    case BenefitFamily::kScaledSaturatingExp: return "scaled_saturating_exp";
    case BenefitFamily::kLog1p: return "log1p";
    case BenefitFamily::kPower: return "power";
    case BenefitFamily::kTabulated: return "tabulated";
  }
  return "?";
}

/// Honest buyer benefit b(eps) on [0, 1].
///
///   scaled_saturating_exp: a * (1 - exp(-k * eps))
///   log1p:                 a * ln(1 + eps)
///   power:                 a * eps^beta,  beta in (0, 1]
///   tabulated:             linear interpolation between knots
struct BenefitFunction {
  BenefitFamily family = BenefitFamily::kScaledSaturatingExp;
  double scale = 1.0;
  double rate = 1.0;      // k, saturating family only
  double exponent = 1.0;  // beta, power family only
  Knots knots;            // tabulated family only
  int type_index = 1;

  bool operator==(const BenefitFunction&) const = default;

  static BenefitFunction saturating_exp(double a, double k, int type_index = 1) {
    BenefitFunction f;
    f.family = BenefitFamily::kScaledSaturatingExp;
    f.scale = a;
    f.rate = k;
    f.type_index = type_index;
    return f;
  }
  static BenefitFunction log1p(double a, int type_index = 1) {
    BenefitFunction f;
    f.family = BenefitFamily::kLog1p;
    f.scale = a;
    f.type_index = type_index;
    return f;
  }
  static BenefitFunction power(double a, double beta, int type_index = 1) {
    BenefitFunction f;
    f.family = BenefitFamily::kPower;
    f.scale = a;
    f.exponent = beta;
    f.type_index = type_index;
    return f;
  }
  static BenefitFunction tabulated(Knots k, int type_index = 1) {
    BenefitFunction f;
    f.family = BenefitFamily::kTabulated;
    f.knots = std::move(k);
    f.type_index = type_index;
    return f;
  }

  bool parametric() const { return family != BenefitFamily::kTabulated; }

  /// Evaluation without the domain check; callers guarantee eps in [0, 1].
  double operator()(double eps) const {
    switch (family) {
      case BenefitFamily::kScaledSaturatingExp:
        return scale * (1.0 - std::exp(-rate * eps));
      case BenefitFamily::kLog1p:
        return scale * std::log1p(eps);
      case BenefitFamily::kPower:
        return eps == 0.0 ? 0.0 : scale * std::pow(eps, exponent);
      case BenefitFamily::kTabulated:
        return knots.eval(eps);
    }
    return 0.0;
  }
};

enum class CostFamily { kExpScaled, kTabulated };

inline std::string_view to_string(CostFamily f) {
  return f == CostFamily::kExpScaled ? "exp_scaled" : "tabulated";
}

/// Adversary attack value C(eps): scale * (e^eps - 1) or tabulated.
struct AdversaryCost {
  CostFamily family = CostFamily::kExpScaled;
  double scale = 1.0;
  Knots knots;

  bool operator==(const AdversaryCost&) const = default;

  static AdversaryCost exp_scaled(double k) {
    AdversaryCost c;
    c.scale = k;
    return c;
  }
  static AdversaryCost tabulated(Knots k) {
    AdversaryCost c;
    c.family = CostFamily::kTabulated;
    c.knots = std::move(k);
    return c;
  }

  double operator()(double eps) const {
    if (family == CostFamily::kExpScaled) return scale * std::expm1(eps);
    return knots.eval(eps);
  }
};

inline double eval_benefit(const BenefitFunction& f, double eps) {
  check_privacy_level(eps);
  return f(eps);
}

inline double eval_cost(const AdversaryCost& c, double eps) {
  check_privacy_level(eps);
  return c(eps);
}

}  // namespace advc
