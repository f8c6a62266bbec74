// advc: command-line front end for the advcontract library.
//
// Exit codes: 0 ok, 1 malformed input or conflicting flags, 2 validation
// failure, 3 search budget exceeded.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "advcontract/advcontract.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 1;
constexpr int kInvalid = 2;
constexpr int kBudget = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int grid_m = 0;
  std::uint64_t node_cap = advc::AdvOptions{}.node_cap;
  bool node_cap_set = false;
  std::string gamma_list;
  std::string rho_list;
  std::string solver = "exact";
  std::uint64_t samples = 200'000;
  std::string n_list = "2,3,4,5,6,7";
  int repeats = 5;
  std::string data, bounds, journal;
};

int workers_from_env() {
  const char* v = std::getenv("ADVC_WORKERS");
  if (v == nullptr || *v == '\0') return 1;
  int w = std::atoi(v);
  if (w < 1) throw UsageError("ADVC_WORKERS must be a positive integer");
  return w;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    std::istringstream is(cell);
    T v{};
    if (!(is >> v) || !is.eof()) throw UsageError(std::string("bad value in ") + what + ": " + cell);
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string(what) + " is empty");
  return out;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot write " + path);
    }
  }
  std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

advc::MarketModel load(const Flags& f) {
  if (f.scenario.empty()) throw UsageError("--scenario is required");
  auto m = advc::load_scenario_file(f.scenario);
  if (f.grid_m > 0) m.grid_m = f.grid_m;
  if (f.seed_set) m.rng_seed = f.seed;
  return m;
}

// Returns kInvalid (after printing the report) if the model is not usable.
int check_model(const advc::MarketModel& m) {
  auto report = advc::validate_model(m);
  if (report.valid()) return kOk;
  std::cerr << "invalid model:\n" << report.summary();
  return kInvalid;
}

void require_exact_for_node_cap(const Flags& f) {
  if (f.node_cap_set && f.solver != "exact") throw UsageError("--node-cap only applies to --solver exact");
}

void require_solver(const std::string& s) {
  if (s != "exact" && s != "approx" && s != "nonadv-menu") {
    throw UsageError("--solver must be exact, approx or nonadv-menu");
  }
}

advc::AdvOptions adv_options(const Flags& f) {
  advc::AdvOptions o;
  o.node_cap = f.node_cap;
  o.workers = workers_from_env();
  return o;
}

// Revenue, PoAdv and a short tag for one solver on one model.
struct Evaluation {
  double r_star = 0.0;
  double revenue = 0.0;
  advc::PoAdvResult poadv;
  std::string branch;
  bool budget_exceeded = false;
  advc::ContractMenu menu;
};

Evaluation evaluate(const advc::MarketModel& m, const std::string& solver, const advc::AdvOptions& opt) {
  Evaluation e;
  const auto nonadv = advc::solve_nonadv(m);
  e.r_star = nonadv.revenue_star;
  if (solver == "nonadv-menu") {
    e.menu = nonadv.menu;
    e.revenue = advc::market_revenue(nonadv.menu, m);
    e.branch = "nonadv";
  } else if (solver == "approx") {
    auto out = advc::approx_contracts(m, nonadv);
    e.branch = std::string(advc::to_string(out.branch));
    if (out.menu) {
      e.menu = *out.menu;
      e.revenue = out.revenue;
    } else {
      auto adv = advc::solve_adv_exact(m, opt);
      e.menu = adv.menu;
      e.revenue = adv.revenue_adv;
      e.budget_exceeded = adv.budget_exceeded;
    }
  } else {
    auto adv = advc::solve_adv_exact(m, opt);
    e.menu = adv.menu;
    e.revenue = adv.revenue_adv;
    e.branch = "exact";
    e.budget_exceeded = adv.budget_exceeded;
  }
  e.poadv = advc::poadv_from(e.r_star, e.revenue, m.rho);
  return e;
}

int cmd_validate(const Flags& f) {
  auto m = load(f);
  auto report = advc::validate_model(m);
  Output out(f.out);
  advc::csv::preamble(out.os(), "validation", "check,detail");
  for (const auto& v : report.violations) out.os() << v.what << ",\"" << v.detail << "\"\n";
  return report.valid() ? kOk : kInvalid;
}

int cmd_solve_nonadv(const Flags& f) {
  auto m = load(f);
  if (int rc = check_model(m)) return rc;
  auto sol = advc::solve_nonadv(m);
  Output out(f.out);
  advc::csv::menu_rows(out.os(), sol.menu);
  out.os() << "# summary\nrevenue_star\n" << advc::csv::num(sol.revenue_star) << '\n';
  return kOk;
}

int cmd_solve_adv(const Flags& f) {
  auto m = load(f);
  if (int rc = check_model(m)) return rc;
  auto sol = advc::solve_adv_exact(m, adv_options(f));
  const auto nonadv = advc::solve_nonadv(m);
  Output out(f.out);
  advc::csv::adv_rows(out.os(), sol, advc::poadv_from(nonadv.revenue_star, sol.revenue_adv, m.rho));
  if (sol.budget_exceeded) {
    std::cerr << "node cap reached; the reported menu is the best found so far\n";
    return kBudget;
  }
  return kOk;
}

int cmd_approx(const Flags& f) {
  auto m = load(f);
  if (int rc = check_model(m)) return rc;
  auto outcome = advc::approx_contracts(m);
  Output out(f.out);
  advc::csv::approx_rows(out.os(), outcome, m);
  return kOk;
}

int cmd_poadv(const Flags& f) {
  require_solver(f.solver);
  require_exact_for_node_cap(f);
  auto m = load(f);
  if (int rc = check_model(m)) return rc;
  auto e = evaluate(m, f.solver, adv_options(f));
  Output out(f.out);
  advc::csv::preamble(out.os(), "poadv", "solver,branch,gamma,rho,r_star,revenue,poadv");
  out.os() << f.solver << ',' << e.branch << ',' << advc::csv::num(m.gamma) << ',' << advc::csv::num(m.rho) << ','
           << advc::csv::num(e.r_star) << ',' << advc::csv::num(e.revenue) << ',' << advc::csv::poadv(e.poadv) << '\n';
  return e.budget_exceeded ? kBudget : kOk;
}

int cmd_sweep(const Flags& f) {
  require_solver(f.solver);
  require_exact_for_node_cap(f);
  auto base = load(f);
  const auto gammas = f.gamma_list.empty() ? std::vector<double>{base.gamma} : parse_list<double>(f.gamma_list, "--gamma-list");
  const auto rhos = f.rho_list.empty() ? std::vector<double>{base.rho} : parse_list<double>(f.rho_list, "--rho-list");
  for (double g : gammas) {
    if (!(g >= 0.0 && g < 1.0)) throw UsageError("--gamma-list values must lie in [0, 1)");
  }
  for (double r : rhos) {
    if (!(r >= 0.0 && r < 1.0)) throw UsageError("--rho-list values must lie in [0, 1)");
  }

  struct Point {
    double gamma, rho;
    Evaluation e;
    std::string error;
  };
  std::vector<Point> points;
  for (double g : gammas) {
    for (double r : rhos) points.push_back({g, r, {}, {}});
  }
  if (int rc = check_model(base)) return rc;

  auto opt = adv_options(f);
  const int workers = std::max(1, std::min<int>(opt.workers, static_cast<int>(points.size())));
  opt.workers = 1;  // parallelism is across grid points
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      auto m = base;
      m.gamma = points[k].gamma;
      m.rho = points[k].rho;
      try {
        points[k].e = evaluate(m, f.solver, opt);
      } catch (const std::exception& ex) {
        points[k].error = ex.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  Output out(f.out);
  advc::csv::preamble(out.os(), "sweep", "gamma,rho,solver,branch,r_star,revenue,poadv");
  bool budget = false;
  for (const auto& p : points) {
    if (!p.error.empty()) throw std::runtime_error("sweep point failed: " + p.error);
    budget = budget || p.e.budget_exceeded;
    out.os() << advc::csv::num(p.gamma) << ',' << advc::csv::num(p.rho) << ',' << f.solver << ',' << p.e.branch << ','
             << advc::csv::num(p.e.r_star) << ',' << advc::csv::num(p.e.revenue) << ',' << advc::csv::poadv(p.e.poadv)
             << '\n';
  }
  return budget ? kBudget : kOk;
}

int cmd_simulate(const Flags& f) {
  require_solver(f.solver);
  require_exact_for_node_cap(f);
  auto m = load(f);
  if (int rc = check_model(m)) return rc;
  if (f.samples < 1) throw UsageError("--samples must be at least 1");
  auto e = evaluate(m, f.solver, adv_options(f));
  advc::SimConfig cfg;
  cfg.samples = f.samples;
  cfg.seed = m.rng_seed;
  cfg.menu = e.menu;
  cfg.model = m;
  cfg.workers = workers_from_env();
  auto report = advc::simulate(cfg);
  Output out(f.out);
  advc::csv::sim_rows(out.os(), report, cfg.samples);
  out.os() << "# analytic\nrealized_revenue\n" << advc::csv::num(advc::market_revenue(e.menu, m)) << '\n';
  return e.budget_exceeded ? kBudget : kOk;
}

template <class F>
double best_ms(int repeats, F&& fn) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

int cmd_bench(const Flags& f) {
  const auto ns = parse_list<int>(f.n_list, "--n-list");
  double gamma = 0.5, rho = 0.3;
  if (!f.scenario.empty()) {
    auto m = load(f);
    gamma = m.gamma;
    rho = m.rho;
  }
  if (!f.gamma_list.empty()) {
    auto g = parse_list<double>(f.gamma_list, "--gamma-list");
    if (g.size() != 1) throw UsageError("bench takes a single --gamma-list value");
    gamma = g.front();
  }
  if (!f.rho_list.empty()) {
    auto r = parse_list<double>(f.rho_list, "--rho-list");
    if (r.size() != 1) throw UsageError("bench takes a single --rho-list value");
    rho = r.front();
  }
  const int grid_m = f.grid_m > 0 ? f.grid_m : 21;
  if (f.repeats < 1) throw UsageError("--repeats must be at least 1");
  auto opt = adv_options(f);

  Output out(f.out);
  advc::csv::preamble(out.os(), "bench", "n,wall_ms_nonadv,wall_ms_exact,wall_ms_approx");
  bool budget = false;
  for (int n : ns) {
    if (n < 1) throw UsageError("--n-list values must be positive");
    const auto m = advc::presets::reference_market(n, rho, gamma, grid_m);
    const double t_nonadv = best_ms(f.repeats, [&] { (void)advc::solve_nonadv(m); });
    const double t_exact = best_ms(f.repeats, [&] { budget = advc::solve_adv_exact(m, opt).budget_exceeded || budget; });
    const double t_approx = best_ms(f.repeats, [&] { (void)advc::approx_contracts(m); });
    out.os() << n << ',' << advc::csv::num(t_nonadv) << ',' << advc::csv::num(t_exact) << ','
             << advc::csv::num(t_approx) << '\n';
  }
  return budget ? kBudget : kOk;
}

// JSON-lines server: one request per stdin line, one response per stdout line.
//   {"op":"purchase","buyer":"b1","eps":0.8}
//   {"op":"query","buyer":"b1","kind":"sum","column":"age","eps":0.3,"seed":7}
//   {"op":"ledger","buyer":"b1"}
int cmd_dp_serve(const Flags& f) {
  if (f.data.empty() || f.bounds.empty()) throw UsageError("dp-serve needs --data and --bounds");
  std::ifstream data(f.data), bounds(f.bounds);
  if (!data || !bounds) throw UsageError("cannot read dataset or bounds file");
  advc::dp::QueryEngine engine(advc::dp::load_dataset(data, bounds));
  if (!f.journal.empty()) engine.attach_journal(f.journal);

  std::uint64_t counter = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    nlohmann::json reply;
    try {
      const auto req = nlohmann::json::parse(line);
      const auto op = req.at("op").get<std::string>();
      const auto buyer = req.at("buyer").get<std::string>();
      if (op == "purchase") {
        engine.purchase(buyer, req.at("eps").get<double>());
        reply = {{"ok", true}};
      } else if (op == "query") {
        const auto q = advc::dp::parse_query(req.at("kind").get<std::string>(), req.value("column", std::string()),
                                             req.at("eps").get<double>());
        const std::uint64_t seed = req.value("seed", advc::SplitMix64(f.seed).split(counter)());
        reply = {{"ok", true}, {"answer", engine.ask(buyer, q, seed)}};
      } else if (op == "ledger") {
        auto l = engine.ledger(buyer);
        if (!l) throw advc::Error("buyer " + buyer + " holds no bundle");
        reply = {{"ok", true}, {"purchased", l->purchased}, {"spent", l->spent()}, {"consumed", l->consumed}};
      } else {
        throw advc::Error("unknown op: " + op);
      }
    } catch (const advc::dp::BudgetExceeded& e) {
      reply = {{"ok", false}, {"error", "budget_exceeded"}, {"message", e.what()}};
    } catch (const advc::dp::DuplicateQueryType& e) {
      reply = {{"ok", false}, {"error", "duplicate_query_type"}, {"message", e.what()}};
    } catch (const advc::dp::UnknownColumn& e) {
      reply = {{"ok", false}, {"error", "unknown_column"}, {"message", e.what()}};
    } catch (const std::exception& e) {
      reply = {{"ok", false}, {"error", "bad_request"}, {"message", e.what()}};
    }
    ++counter;
    std::cout << reply.dump() << '\n' << std::flush;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contract menus for data marketplaces with adversarial buyers"};
  app.require_subcommand(1);
  Flags f;

  auto scenario = [&](CLI::App* c) { c->add_option("--scenario", f.scenario, "Scenario JSON file")->required(); };
  auto common = [&](CLI::App* c) {
    c->add_option("--out", f.out, "Output CSV path (default stdout)");
    c->add_option("--grid-m", f.grid_m, "Override the privacy grid size")->check(CLI::Range(11, 1'000'000));
  };
  auto node_cap = [&](CLI::App* c) {
    c->add_option("--node-cap", f.node_cap, "Branch-and-bound node budget")->each([&](const std::string&) {
      f.node_cap_set = true;
    });
  };
  auto solver = [&](CLI::App* c) {
    c->add_option("--solver", f.solver, "exact | approx | nonadv-menu");
  };
  auto seed = [&](CLI::App* c) {
    c->add_option("--seed", f.seed, "RNG seed")->each([&](const std::string&) { f.seed_set = true; });
  };

  auto* validate = app.add_subcommand("validate", "Check a scenario against the model assumptions");
  scenario(validate);
  common(validate);

  auto* nonadv = app.add_subcommand("solve-nonadv", "Optimal menu without adversaries");
  scenario(nonadv);
  common(nonadv);

  auto* adv = app.add_subcommand("solve-adv", "Exact optimal menu with adversaries");
  scenario(adv);
  common(adv);
  node_cap(adv);

  auto* approx = app.add_subcommand("approx", "Cost classification and approximate menu");
  scenario(approx);
  common(approx);

  auto* poadv = app.add_subcommand("poadv", "Price of Adversary for one scenario");
  scenario(poadv);
  common(poadv);
  node_cap(poadv);
  solver(poadv);

  auto* sweep = app.add_subcommand("sweep", "PoAdv over a (gamma, rho) grid");
  scenario(sweep);
  common(sweep);
  node_cap(sweep);
  solver(sweep);
  sweep->add_option("--gamma-list", f.gamma_list, "Comma-separated attack probabilities");
  sweep->add_option("--rho-list", f.rho_list, "Comma-separated adversary fractions");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo market for a solved menu");
  scenario(sim);
  common(sim);
  node_cap(sim);
  solver(sim);
  seed(sim);
  sim->add_option("--samples", f.samples, "Number of buyers");

  auto* bench = app.add_subcommand("bench", "Wall time of the three solvers on the reference family");
  bench->add_option("--scenario", f.scenario, "Take gamma and rho from this scenario");
  common(bench);
  node_cap(bench);
  bench->add_option("--n-list", f.n_list, "Comma-separated type counts");
  bench->add_option("--gamma-list", f.gamma_list, "Single attack probability");
  bench->add_option("--rho-list", f.rho_list, "Single adversary fraction");
  bench->add_option("--repeats", f.repeats, "Runs per measurement; the fastest is reported");

  auto* dp = app.add_subcommand("dp-serve", "Answer JSON-lines DP query requests from stdin");
  dp->add_option("--data", f.data, "Dataset CSV with header row")->required();
  dp->add_option("--bounds", f.bounds, "Bounds CSV: column,lo,hi")->required();
  dp->add_option("--journal", f.journal, "Append-only ledger journal");
  seed(dp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kBadInput;
  }

  try {
    if (*validate) return cmd_validate(f);
    if (*nonadv) return cmd_solve_nonadv(f);
    if (*adv) return cmd_solve_adv(f);
    if (*approx) return cmd_approx(f);
    if (*poadv) return cmd_poadv(f);
    if (*sweep) return cmd_sweep(f);
    if (*sim) return cmd_simulate(f);
    if (*bench) return cmd_bench(f);
    if (*dp) return cmd_dp_serve(f);
  } catch (const advc::InvalidModel& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  } catch (const advc::MalformedScenario& e) {
    std::cerr << e.what() << '\n';
    return kBadInput;
  } catch (const UsageError& e) {
    std::cerr << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kOk;
}
