#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "advcontract/errors.hpp"
#include "advcontract/model.hpp"

namespace advc {

/// Scenario documents are JSON objects; doubles are written in shortest
/// round-trip form, so load -> save -> load reproduces the model exactly.
inline constexpr const char* kScenarioSchema = "advcontract.scenario/1";

namespace detail {

inline nlohmann::json knots_to_json(const Knots& k) { return {{"x", k.x}, {"y", k.y}}; }

inline Knots knots_from_json(const nlohmann::json& j) {
  Knots k;
  k.x = j.at("x").get<std::vector<double>>();
  k.y = j.at("y").get<std::vector<double>>();
  return k;
}

inline nlohmann::json benefit_to_json(const BenefitFunction& f) {
  nlohmann::json j{{"family", std::string(to_string(f.family))}, {"type_index", f.type_index}};
  switch (f.family) {
    case BenefitFamily::kScaledSaturatingExp:
      j["scale"] = f.scale;
      j["rate"] = f.rate;
      break;
    case BenefitFamily::kLog1p:
      j["scale"] = f.scale;
      break;
    case BenefitFamily::kPower:
      j["scale"] = f.scale;
      j["exponent"] = f.exponent;
      break;
    case BenefitFamily::kTabulated:
      j["knots"] = knots_to_json(f.knots);
      break;
  }
  return j;
}

inline BenefitFunction benefit_from_json(const nlohmann::json& j, int position) {
  const auto family = j.at("family").get<std::string>();
  const int idx = j.value("type_index", position);
  if (family == "scaled_saturating_exp") {
    return BenefitFunction::saturating_exp(j.at("scale").get<double>(), j.at("rate").get<double>(), idx);
  }
  if (family == "log1p") return BenefitFunction::log1p(j.at("scale").get<double>(), idx);
  if (family == "power") {
    return BenefitFunction::power(j.at("scale").get<double>(), j.at("exponent").get<double>(), idx);
  }
  if (family == "tabulated") return BenefitFunction::tabulated(knots_from_json(j.at("knots")), idx);
  throw MalformedScenario("unknown benefit family: " + family);
}

inline nlohmann::json cost_to_json(const AdversaryCost& c) {
  if (c.family == CostFamily::kExpScaled) return {{"family", "exp_scaled"}, {"scale", c.scale}};
  return {{"family", "tabulated"}, {"knots", knots_to_json(c.knots)}};
}

inline AdversaryCost cost_from_json(const nlohmann::json& j) {
  const auto family = j.at("family").get<std::string>();
  if (family == "exp_scaled") return AdversaryCost::exp_scaled(j.at("scale").get<double>());
  if (family == "tabulated") return AdversaryCost::tabulated(knots_from_json(j.at("knots")));
  throw MalformedScenario("unknown cost family: " + family);
}

}  // namespace detail

inline nlohmann::json scenario_to_json(const MarketModel& m) {
  nlohmann::json benefits = nlohmann::json::array();
  for (const auto& f : m.benefits) benefits.push_back(detail::benefit_to_json(f));
  return {
      {"schema", kScenarioSchema},
      {"n", m.n()},
      {"q", m.q},
      {"rho", m.rho},
      {"gamma", m.gamma},
      {"phi", m.phi},
      {"benefits", benefits},
      {"cost", detail::cost_to_json(m.cost)},
      {"grid_m", m.grid_m},
      {"s_max", m.s_max},
      {"tolerances", {{"shape", m.tol.shape}, {"feasibility", m.tol.feasibility}}},
      {"rng_seed", m.rng_seed},
  };
}

inline MarketModel scenario_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("schema") && j.at("schema").get<std::string>() != kScenarioSchema) {
      throw MalformedScenario("unsupported schema " + j.at("schema").get<std::string>());
    }
    MarketModel m;
    m.q = j.at("q").get<std::vector<double>>();
    const int n = j.value("n", static_cast<int>(m.q.size()));
    if (n != static_cast<int>(m.q.size())) throw MalformedScenario("n does not match the length of q");
    m.rho = j.at("rho").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.phi = j.at("phi").get<double>();
    const auto& benefits = j.at("benefits");
    if (!benefits.is_array() || static_cast<int>(benefits.size()) != n) {
      throw MalformedScenario("benefits must list one function per type");
    }
    for (std::size_t i = 0; i < benefits.size(); ++i) {
      m.benefits.push_back(detail::benefit_from_json(benefits[i], static_cast<int>(i) + 1));
    }
    m.cost = detail::cost_from_json(j.at("cost"));
    m.grid_m = j.value("grid_m", m.grid_m);
    m.s_max = j.value("s_max", m.s_max);
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      m.tol.shape = t.value("shape", m.tol.shape);
      m.tol.feasibility = t.value("feasibility", m.tol.feasibility);
    }
    m.rng_seed = j.value("rng_seed", m.rng_seed);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedScenario(std::string("malformed scenario: ") + e.what());
  }
}

inline std::string save_scenario(const MarketModel& m) { return scenario_to_json(m).dump(2) + "\n"; }

inline MarketModel load_scenario(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedScenario(std::string("scenario is not valid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

inline MarketModel load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedScenario("cannot read scenario " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

}  // namespace advc
