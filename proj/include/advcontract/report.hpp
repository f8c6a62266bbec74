#pragma once

// CSV emission. Every file starts with a "# schema: advc.<kind>/<version>"
// line followed by a header row; numbers use the shortest round-trip form so
// identical inputs give byte-identical files.

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "advcontract/adv.hpp"
#include "advcontract/approx.hpp"
#include "advcontract/model.hpp"
#include "advcontract/nonadv.hpp"
#include "advcontract/sim.hpp"

namespace advc::csv {

inline std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string poadv(const PoAdvResult& r) { return r.unbounded ? "inf" : num(r.value); }

inline void preamble(std::ostream& os, std::string_view kind, std::string_view header) {
  os << "# schema: advc." << kind << "/1\n" << header << "\n";
}

/// type_index,eps,price,fine,effective_price
inline void menu_rows(std::ostream& os, const ContractMenu& menu) {
  preamble(os, "menu", "type_index,eps,price,fine,effective_price");
  for (int i = 1; i <= menu.size(); ++i) {
    const auto& c = menu.at(i);
    os << i << ',' << num(c.eps) << ',' << num(c.p) << ',' << num(c.s) << ',' << num(menu.effective_price(i)) << '\n';
  }
}

inline void curve_rows(std::ostream& os, const CurveTable& curve) {
  preamble(os, "curve", "eps,P");
  for (std::size_t k = 0; k < curve.grid.size(); ++k) os << num(curve.grid[k]) << ',' << num(curve.values[k]) << '\n';
}

inline void nonadv_summary(std::ostream& os, const NonAdvSolution& sol) {
  preamble(os, "nonadv_summary", "revenue_star");
  os << num(sol.revenue_star) << '\n';
}

/// Per-type rows followed by one summary row (Z, R*_A, PoAdv).
inline void adv_rows(std::ostream& os, const AdvSolution& sol, const PoAdvResult& pa) {
  menu_rows(os, sol.menu);
  os << "# summary\nz,revenue_adv,honest_term,adversary_term,poadv,nodes,budget_exceeded\n";
  os << sol.z << ',' << num(sol.revenue_adv) << ',' << num(sol.honest_revenue) << ',' << num(sol.adversary_term) << ','
     << poadv(pa) << ',' << sol.nodes << ',' << (sol.budget_exceeded ? 1 : 0) << '\n';
}

inline void approx_rows(std::ostream& os, const ApproxOutcome& out, const MarketModel& m) {
  preamble(os, "approx_class", "kind,eps_m,delta,branch");
  os << to_string(out.cost_class.kind) << ',' << num(out.cost_class.eps_m) << ',' << num(out.cost_class.delta) << ','
     << to_string(out.branch) << '\n';
  if (!out.menu) return;
  os << "# assignment\ntype_index,source_contract,eps,price,fine,effective_price\n";
  for (int i = 1; i <= m.n(); ++i) {
    const auto& c = out.menu->at(i);
    os << i << ',' << out.assignment[static_cast<std::size_t>(i - 1)] << ',' << num(c.eps) << ',' << num(c.p) << ','
       << num(c.s) << ',' << num(out.menu->effective_price(i)) << '\n';
  }
  const auto pa = approx_poadv(out, m);
  const auto bound = poadv_bound(out, m);
  os << "# summary\nrevenue,poadv,bound,k,alpha,beta,r_hat,interpretation_conflict\n";
  os << num(out.revenue) << ',' << poadv(*pa) << ',' << (bound ? num(*bound) : std::string("none")) << ',';
  if (out.inter) {
    os << out.inter->k << ',' << num(out.inter->alpha) << ',' << num(out.inter->beta) << ',' << num(out.inter->r_hat)
       << ',' << (out.inter->interpretation_conflict ? 1 : 0) << '\n';
  } else {
    os << ",,,,\n";
  }
}

/// One row per true type (0 = adversary).
inline void sim_rows(std::ostream& os, const SimReport& r, std::uint64_t samples) {
  preamble(os, "simulation", "true_type,share_drawn,modal_choice,mean_payment");
  for (std::size_t t = 0; t < r.histogram.size(); ++t) {
    const int type = static_cast<int>(t);
    os << type << ',' << num(static_cast<double>(r.drawn(type)) / static_cast<double>(samples)) << ','
       << r.modal_choice(type) << ',' << num(r.mean_payment(type)) << '\n';
  }
  os << "# summary\nempirical_revenue,std_error,adversary_choice\n";
  os << num(r.empirical_revenue) << ',' << num(r.std_error) << ',' << r.adversary_choice_mode << '\n';
}

}  // namespace advc::csv
