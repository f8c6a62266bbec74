#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "advcontract/adv.hpp"
#include "advcontract/errors.hpp"
#include "advcontract/model.hpp"
#include "advcontract/rng.hpp"

namespace advc {

struct SimConfig {
  std::uint64_t samples = 100'000;
  std::uint64_t seed = 0;
  ContractMenu menu;
  MarketModel model;
  int workers = 1;
};

struct SimReport {
  double empirical_revenue = 0.0;  // per-buyer average
  double std_error = 0.0;
  // histogram[t][c]: buyers of true type t (0 = adversary) that chose c (0 = opt out).
  std::vector<std::vector<std::uint64_t>> histogram;
  int adversary_choice_mode = 0;
  std::vector<double> payment_total;  // per true type, what the seller booked

  std::uint64_t drawn(int type) const {
    std::uint64_t s = 0;
    for (auto c : histogram[static_cast<std::size_t>(type)]) s += c;
    return s;
  }
  int modal_choice(int type) const {
    const auto& row = histogram[static_cast<std::size_t>(type)];
    return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  double mean_payment(int type) const {
    auto d = drawn(type);
    return d == 0 ? 0.0 : payment_total[static_cast<std::size_t>(type)] / static_cast<double>(d);
  }
};

namespace detail {

inline void check_sim_menu(const ContractMenu& menu, const MarketModel& m) {
  if (menu.size() != m.n()) throw InvalidModel("simulate: menu size does not match the model");
  for (const auto& c : menu.contracts()) {
    if (!(c.eps >= 0.0 && c.eps <= 1.0) || c.p < -m.tol.feasibility || c.s < -m.tol.feasibility) {
      throw InvalidModel("simulate: contract outside its domain");
    }
  }
}

struct Chunk {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::vector<std::vector<std::uint64_t>> histogram;
  std::vector<double> payment;
};

}  // namespace detail

/// Monte Carlo market: each buyer is the adversary with probability rho, else
/// honest type i with probability (1 - rho) q_i. Honest buyers choose by
/// expected utility and pay the fine when the attack event fires; the
/// adversary best-responds with opt-out on ties. Buyer k draws from substream
/// k, and chunks are reduced in a fixed order, so the report is bit-identical
/// for a given seed whatever the worker count.
inline SimReport simulate(const SimConfig& cfg) {
  const auto& m = cfg.model;
  const auto& menu = cfg.menu;
  if (cfg.samples < 1) throw InvalidModel("simulate: need at least one buyer");
  require_valid(m);
  detail::check_sim_menu(menu, m);

  const int n = m.n();
  std::vector<int> choice(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) choice[static_cast<std::size_t>(i)] = honest_choice(menu, m, i);
  const auto adv = adversary_best_response(menu, m);
  const double adv_booked = adv.z == 0 ? 0.0 : -adversary_gain(m, menu.at(adv.z));
  std::vector<double> cumulative;
  double acc = 0.0;
  for (double q : m.q) cumulative.push_back(acc += q);

  constexpr std::uint64_t kChunk = 8192;
  const std::uint64_t chunks = (cfg.samples + kChunk - 1) / kChunk;
  std::vector<detail::Chunk> parts(chunks);
  const SplitMix64 root(cfg.seed);

  auto run_chunk = [&](std::uint64_t c) {
    auto& part = parts[c];
    part.histogram.assign(static_cast<std::size_t>(n) + 1, std::vector<std::uint64_t>(static_cast<std::size_t>(n) + 1, 0));
    part.payment.assign(static_cast<std::size_t>(n) + 1, 0.0);
    const std::uint64_t end = std::min(cfg.samples, (c + 1) * kChunk);
    for (std::uint64_t b = c * kChunk; b < end; ++b) {
      SplitMix64 rng = root.split(b);
      double booked = 0.0;
      int type = 0, picked = 0;
      if (rng.uniform() < m.rho) {
        picked = adv.z;
        booked = adv_booked;
      } else {
        const double u = rng.uniform() * acc;
        type = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin()) + 1;
        type = std::min(type, n);
        picked = choice[static_cast<std::size_t>(type)];
        if (picked > 0) {
          const auto& c = menu.at(picked);
          booked = c.p;
          if (rng.uniform() < m.gamma) booked += c.s;
        }
      }
      part.histogram[static_cast<std::size_t>(type)][static_cast<std::size_t>(picked)] += 1;
      part.payment[static_cast<std::size_t>(type)] += booked;
      part.sum += booked;
      part.sum_sq += booked * booked;
    }
  };

  const int workers = std::max(1, cfg.workers);
  if (workers == 1 || chunks == 1) {
    for (std::uint64_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t c = static_cast<std::uint64_t>(w); c < chunks; c += static_cast<std::uint64_t>(workers)) run_chunk(c);
      });
    }
    for (auto& t : pool) t.join();
  }

  SimReport r;
  r.histogram.assign(static_cast<std::size_t>(n) + 1, std::vector<std::uint64_t>(static_cast<std::size_t>(n) + 1, 0));
  r.payment_total.assign(static_cast<std::size_t>(n) + 1, 0.0);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& part : parts) {
    sum += part.sum;
    sum_sq += part.sum_sq;
    for (std::size_t t = 0; t < part.histogram.size(); ++t) {
      r.payment_total[t] += part.payment[t];
      for (std::size_t c = 0; c < part.histogram[t].size(); ++c) r.histogram[t][c] += part.histogram[t][c];
    }
  }
  const double count = static_cast<double>(cfg.samples);
  r.empirical_revenue = sum / count;
  const double var = cfg.samples > 1 ? std::max(0.0, (sum_sq - sum * sum / count) / (count - 1.0)) : 0.0;
  r.std_error = std::sqrt(var / count);
  r.adversary_choice_mode = adv.z;
  return r;
}

struct IcRow {
  int type = 0;
  int chosen = 0;  // 0 = opt out
  double own_utility = 0.0;
  double best_utility = 0.0;  // over opt-out and every contract
  bool ok = true;             // chose its own slot
};

/// Which contract each honest type picks from the menu, flagging types that
/// leave their own slot (including opting out).
inline std::vector<IcRow> check_ic_empirically(const ContractMenu& menu, const MarketModel& m) {
  std::vector<IcRow> rows;
  for (int i = 1; i <= m.n(); ++i) {
    IcRow row;
    row.type = i;
    row.chosen = honest_choice(menu, m, i);
    row.own_utility = honest_utility(m, i, menu.at(i));
    row.best_utility = 0.0;
    for (int j = 1; j <= menu.size(); ++j) row.best_utility = std::max(row.best_utility, honest_utility(m, i, menu.at(j)));
    row.ok = row.chosen == i;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace advc
