#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include "advcontract/errors.hpp"
#include "advcontract/model.hpp"
#include "advcontract/nonadv.hpp"

namespace advc {

struct BestResponse {
  int z = 0;  // 0 = opt out
  double utility = 0.0;
};

/// The adversary's utility-maximising contract. Opting out (utility 0) wins
/// exact ties, then the smaller index.
inline BestResponse adversary_best_response(const ContractMenu& menu, const MarketModel& m) {
  BestResponse br;
  for (int i = 1; i <= menu.size(); ++i) {
    double u = adversary_gain(m, menu.at(i));
    if (u > br.utility) br = {i, u};
  }
  return br;
}

/// (1 - rho) sum q_i (p_i + gamma s_i) + rho (p_Z + s_Z - C(eps_Z)), the second
/// term vanishing for Z = 0.
inline double realized_revenue(const ContractMenu& menu, int z, const MarketModel& m) {
  if (z < 0 || z > menu.size()) throw DomainError("realized_revenue: Z out of range");
  double r = (1.0 - m.rho) * honest_revenue(menu.effective_prices(), m);
  if (z > 0) r += m.rho * -adversary_gain(m, menu.at(z));
  return r;
}

inline double realized_revenue(const ContractMenu& menu, const MarketModel& m) {
  return realized_revenue(menu, adversary_best_response(menu, m).z, m);
}

/// Contract honest type i picks from `menu` (0 = opt out). Its own slot wins
/// whenever it is within the feasibility tolerance of the best alternative;
/// otherwise the smallest best index.
inline int honest_choice(const ContractMenu& menu, const MarketModel& m, int i) {
  const double tol = m.tol.feasibility;
  double best = 0.0;
  int arg = 0;
  for (int j = 1; j <= menu.size(); ++j) {
    double u = honest_utility(m, i, menu.at(j));
    if (u > best) {
      best = u;
      arg = j;
    }
  }
  if (i <= menu.size() && honest_utility(m, i, menu.at(i)) >= best - tol) return i;
  return arg;
}

/// Revenue when every honest type best-responds (possibly opting out) and the
/// adversary best-responds; equals realized_revenue for IR/IC menus.
inline double market_revenue(const ContractMenu& menu, const MarketModel& m) {
  double honest = 0.0;
  for (int i = 1; i <= m.n(); ++i) {
    int j = honest_choice(menu, m, i);
    if (j > 0) honest += m.share(i) * menu.effective_price(j);
  }
  const auto br = adversary_best_response(menu, m);
  double r = (1.0 - m.rho) * honest;
  if (br.z > 0) r += m.rho * -adversary_gain(m, menu.at(br.z));
  return r;
}

/// Largest fine the SR constraint allows, s_i = min(s_max, phi p'_i / gamma);
/// s_max when gamma = 0.
inline std::vector<double> fine_at_cap(std::span<const double> p_prime, const MarketModel& m) {
  if (m.gamma > 1.0 || m.gamma < 0.0) throw DomainError("fine_at_cap: gamma must lie in [0, 1]");
  std::vector<double> s;
  s.reserve(p_prime.size());
  for (double p : p_prime) {
    s.push_back(m.gamma > 0.0 ? std::min(m.s_max, m.phi * p / m.gamma) : m.s_max);
  }
  return s;
}

/// Menu with prices p_i = p'_i - gamma s_i and fines at cap.
inline ContractMenu menu_at_cap(std::span<const double> eps, std::span<const double> p_prime,
                                const MarketModel& m) {
  const auto s = fine_at_cap(p_prime, m);
  std::vector<Contract> cs;
  cs.reserve(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    cs.push_back({p_prime[i] - m.gamma * s[i], eps[i], s[i]});
  }
  return ContractMenu(std::move(cs), m.gamma);
}

struct AdvSolution {
  ContractMenu menu;
  std::vector<int> eps_index;
  int z = 0;
  double revenue_adv = 0.0;
  double honest_revenue = 0.0;  // (1 - rho) sum q_i p'_i
  double adversary_term = 0.0;
  std::uint64_t nodes = 0;
  bool budget_exceeded = false;
};

struct AdvOptions {
  std::uint64_t node_cap = 50'000'000;
  int workers = 1;
};

namespace detail {

// Depth-first enumeration of monotone grid vectors with prices pinned to the
// tight IR/IC recursion and fines at cap. The bound at a node is
// (1 - rho)(sum of virtual values so far + best monotone completion)
// - rho max(0, adversary gain so far); the gain term can only grow deeper.
class ExactSearch {
 public:
  ExactSearch(const MarketModel& m, const GridTables& t, std::atomic<std::uint64_t>& nodes,
              std::uint64_t cap)
      : m_(m), t_(t), n_(m.n()), grid_(m.grid_m), nodes_(nodes), cap_(cap) {
    const auto g = virtual_value_table(m, t);
    // completion_[i][k]: best sum_{j>=i} g_j over monotone tails starting at >= k.
    completion_.assign(static_cast<std::size_t>(n_) + 1, std::vector<double>(static_cast<std::size_t>(grid_), 0.0));
    for (int i = n_ - 1; i >= 0; --i) {
      double best = -std::numeric_limits<double>::infinity();
      for (int k = grid_ - 1; k >= 0; --k) {
        best = std::max(best, g[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] +
                                  completion_[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(k)]);
        completion_[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = best;
      }
    }
    g_ = g;
    idx_.assign(static_cast<std::size_t>(n_), 0);
  }

  // Objective of a complete index vector, by the same arithmetic as the search.
  double evaluate(const std::vector<int>& idx) const {
    double p_prev = 0.0, honest = 0.0, gain = 0.0;
    for (int i = 0; i < n_; ++i) {
      Step s = step(i, idx[static_cast<std::size_t>(i)], i == 0 ? 0 : idx[static_cast<std::size_t>(i) - 1], p_prev);
      honest += m_.q[static_cast<std::size_t>(i)] * s.p_prime;
      gain = std::max(gain, s.gain);
      p_prev = s.p_prime;
    }
    return (1.0 - m_.rho) * honest - m_.rho * gain;
  }

  void seed(double objective, std::vector<int> idx) {
    best_ = objective;
    best_idx_ = std::move(idx);
    have_vector_ = false;  // the seed only prunes; canonical ties still win
  }

  void run(int first_lo, int first_hi) {
    for (int k = first_lo; k < first_hi && !stopped_; ++k) visit(0, k, 0.0, 0.0, 0.0, 0.0);
  }

  bool found() const { return have_vector_; }
  double best() const { return best_; }
  const std::vector<int>& best_idx() const { return best_idx_; }
  bool stopped() const { return stopped_; }

 private:
  struct Step {
    double p_prime;
    double gain;
  };

  Step step(int i, int k, int k_prev, double p_prev) const {
    const double b_now = t_.benefit(i + 1, k);
    const double pp = i == 0 ? b_now : p_prev + b_now - t_.benefit(i + 1, k_prev);
    const double s = m_.gamma > 0.0 ? std::min(m_.s_max, m_.phi * pp / m_.gamma) : m_.s_max;
    const double price = pp - m_.gamma * s;
    return {pp, t_.cost(k) - price - s};
  }

  bool lex_less(const std::vector<int>& a, const std::vector<int>& b) const {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }

  void visit(int i, int k, double p_prev, double honest, double vsum, double gain) {
    if (stopped_) return;
    if (nodes_.fetch_add(1, std::memory_order_relaxed) >= cap_) {
      stopped_ = true;
      return;
    }
    const int k_prev = i == 0 ? 0 : idx_[static_cast<std::size_t>(i) - 1];
    const Step s = step(i, k, k_prev, p_prev);
    idx_[static_cast<std::size_t>(i)] = k;
    const double h = honest + m_.q[static_cast<std::size_t>(i)] * s.p_prime;
    const double v = vsum + g_[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    const double gmax = std::max(gain, s.gain);

    if (i + 1 == n_) {
      const double obj = (1.0 - m_.rho) * h - m_.rho * gmax;
      if (obj > best_ || (obj == best_ && (!have_vector_ || lex_less(idx_, best_idx_)))) {
        best_ = obj;
        best_idx_ = idx_;
        have_vector_ = true;
      }
      return;
    }
    const double bound = (1.0 - m_.rho) * (v + completion_[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(k)]) -
                         m_.rho * gmax;
    if (bound < best_ - 1e-12 * (1.0 + std::abs(best_))) return;
    for (int next = k; next < grid_ && !stopped_; ++next) visit(i + 1, next, s.p_prime, h, v, gmax);
  }

  const MarketModel& m_;
  const GridTables& t_;
  int n_;
  int grid_;
  std::atomic<std::uint64_t>& nodes_;
  std::uint64_t cap_;
  std::vector<std::vector<double>> g_;
  std::vector<std::vector<double>> completion_;
  std::vector<int> idx_;
  std::vector<int> best_idx_;
  double best_ = -std::numeric_limits<double>::infinity();
  bool have_vector_ = false;
  bool stopped_ = false;
};

}  // namespace detail

/// Builds the full solution record for a monotone grid index vector.
inline AdvSolution adv_solution_for(const std::vector<int>& idx, const MarketModel& m) {
  AdvSolution out;
  out.eps_index = idx;
  std::vector<double> eps;
  for (int k : idx) eps.push_back(m.grid_point(k));
  const auto pp = effective_prices(eps, m);
  out.menu = menu_at_cap(eps, pp, m);
  const auto br = adversary_best_response(out.menu, m);
  out.z = br.z;
  out.honest_revenue = (1.0 - m.rho) * honest_revenue(out.menu.effective_prices(), m);
  out.adversary_term = br.z == 0 ? 0.0 : m.rho * -adversary_gain(m, out.menu.at(br.z));
  out.revenue_adv = realized_revenue(out.menu, br.z, m);
  return out;
}

/// Exact optimum over menus in reduced form (tight IR_1 / IC_{i+1,i} prices,
/// monotone eps on the grid, fines at the SR cap) by branch and bound. Ties go
/// to the lexicographically smallest eps vector regardless of worker count.
inline AdvSolution solve_adv_exact(const MarketModel& m, const AdvOptions& opt = {}) {
  require_valid(m);
  const GridTables t(m);
  const auto nonadv = solve_nonadv(m);
  std::atomic<std::uint64_t> nodes{0};

  const int workers = std::max(1, std::min(opt.workers, m.grid_m));
  std::vector<detail::ExactSearch> searches;
  searches.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) searches.emplace_back(m, t, nodes, opt.node_cap);
  const double seed = searches.front().evaluate(nonadv.eps_index);
  for (auto& s : searches) s.seed(seed, nonadv.eps_index);

  // Worker w takes a contiguous block of first-coordinate values.
  auto range = [&](int w) {
    const int lo = static_cast<int>(static_cast<long long>(m.grid_m) * w / workers);
    const int hi = static_cast<int>(static_cast<long long>(m.grid_m) * (w + 1) / workers);
    return std::pair{lo, hi};
  };
  if (workers == 1) {
    searches.front().run(0, m.grid_m);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        auto [lo, hi] = range(w);
        searches[static_cast<std::size_t>(w)].run(lo, hi);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Workers are ordered by first coordinate, so the first maximiser is canonical.
  const detail::ExactSearch* winner = nullptr;
  bool stopped = false;
  for (const auto& s : searches) {
    stopped = stopped || s.stopped();
    if (s.found() && (winner == nullptr || s.best() > winner->best())) winner = &s;
  }
  AdvSolution out = adv_solution_for(winner ? winner->best_idx() : nonadv.eps_index, m);
  out.nodes = nodes.load();
  out.budget_exceeded = stopped;
  return out;
}

/// (1 - rho) R* / R*_A; unbounded when R*_A <= 0.
struct PoAdvResult {
  double value = 1.0;
  bool unbounded = false;
  double r_star = 0.0;
  double r_adv_star = 0.0;
};

inline PoAdvResult poadv_from(double r_star, double r_adv, double rho) {
  PoAdvResult r;
  r.r_star = r_star;
  r.r_adv_star = r_adv;
  if (r_adv <= 0.0) {
    r.unbounded = true;
    r.value = std::numeric_limits<double>::infinity();
  } else {
    r.value = (1.0 - rho) * r_star / r_adv;
  }
  return r;
}

/// PoAdv of the exact adversarial optimum.
inline PoAdvResult price_of_adversary(const MarketModel& m, const AdvOptions& opt = {}) {
  const auto nonadv = solve_nonadv(m);
  const auto adv = solve_adv_exact(m, opt);
  return poadv_from(nonadv.revenue_star, adv.revenue_adv, m.rho);
}

/// PoAdv when a given menu is offered in the adversarial market.
inline PoAdvResult price_of_adversary(const MarketModel& m, const ContractMenu& menu) {
  const auto nonadv = solve_nonadv(m);
  return poadv_from(nonadv.revenue_star, realized_revenue(menu, m), m.rho);
}

}  // namespace advc
