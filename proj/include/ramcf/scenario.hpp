#pragma once

// Scenario files: one JSON object per run, the single source of truth for
// what gets built and evaluated.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ramcf/continued_fraction.hpp"
#include "ramcf/irrational_construction.hpp"
#include "ramcf/rational_construction.hpp"

namespace ramcf {

enum class ScenarioMode { Constant, Gill, Rational, Irrational, Explicit };
std::string to_string(ScenarioMode mode);
ScenarioMode parse_scenario_mode(const std::string& text);

// Real-valued fields are kept as the decimal or "p/q" text they were given in,
// so a scenario round-trips exactly and is re-read at the run's precision.
struct Scenario {
  ScenarioMode mode = ScenarioMode::Constant;
  std::string name;

  // constant, gill, explicit (optional reference limit)
  std::optional<std::string> a;
  std::string rule = "0";           // gill
  std::vector<std::string> values;  // explicit

  // rational
  long p = 1;
  long q = 3;
  std::string repeller = "auto";
  std::string t_rule = "harmonic";
  std::vector<std::string> r_values;  // custom rule, explicit list
  std::optional<std::string> r_rule;  // custom rule, e.g. "1/i" evaluated at i = r + 1
  std::optional<std::string> t_scale;

  // irrational
  irrational::RhoSpec rho = irrational::RhoSpec::golden();
  std::size_t stages = 3;
  std::optional<std::size_t> r_max;
  std::size_t n_cap = 1'000'000;
  std::optional<std::string> tail_threshold = std::string("1e-7");

  // evaluation
  std::size_t max_n = 30000;
  std::string threshold = "1e-6";
  std::size_t windows = 5;
  std::size_t max_period = 24;

  long precision_bits = 256;
  std::uint64_t seed = 0;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);

/// Evaluation settings read at the current working precision.
EvalConfig eval_config(const Scenario& s);
/// Options for the rational construction, read at the current precision.
rational::BuildOptions rational_options(const Scenario& s);
irrational::IrrationalParams irrational_params(const Scenario& s);

}  // namespace ramcf
