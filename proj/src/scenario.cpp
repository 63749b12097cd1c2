#include "ramcf/scenario.hpp"

#include <fstream>
#include <set>

namespace ramcf {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidScenario, what); }

std::string number_text(const json& v, const std::string& key) {
  if (v.is_string()) {
    const auto text = v.get<std::string>();
    try {
      (void)Real(std::string_view(text));
    } catch (const std::exception&) {
      invalid("'" + key + "' is not a number: " + text);
    }
    return text;
  }
  if (v.is_number()) return v.dump();
  invalid("'" + key + "' must be a number or a numeric string");
}

template <typename T>
T integer_field(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) invalid("'" + key + "' must be an integer");
  if constexpr (std::is_unsigned_v<T>) {
    if (v.get<long long>() < 0) invalid("'" + key + "' must be non-negative");
  }
  return v.get<T>();
}

std::vector<std::string> number_list(const json& v, const std::string& key) {
  if (!v.is_array()) invalid("'" + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& x : v) out.push_back(number_text(x, key));
  return out;
}

const std::set<std::string>& allowed_keys(ScenarioMode mode) {
  static const std::set<std::string> common{"mode", "name", "max_n", "threshold", "windows", "max_period",
                                            "precision_bits", "seed"};
  static const auto with = [](std::initializer_list<std::string> extra) {
    std::set<std::string> out = common;
    out.insert(extra.begin(), extra.end());
    return out;
  };
  static const std::set<std::string> constant = with({"a"});
  static const std::set<std::string> gill = with({"a", "rule"});
  static const std::set<std::string> expl = with({"values", "a"});
  static const std::set<std::string> rational = with({"p", "q", "R", "t_rule", "r_values", "t_scale"});
  static const std::set<std::string> irrational = with({"rho", "stages", "r_max", "N_cap", "tail_threshold"});
  switch (mode) {
    case ScenarioMode::Constant: return constant;
    case ScenarioMode::Gill: return gill;
    case ScenarioMode::Explicit: return expl;
    case ScenarioMode::Rational: return rational;
    case ScenarioMode::Irrational: return irrational;
  }
  return common;
}

json rho_to_json(const irrational::RhoSpec& rho) {
  if (rho.form == irrational::RhoSpec::Form::Literal) return {{"form", "literal"}, {"digits", rho.digits}};
  return {{"form", "quadratic"}, {"p", rho.quadratic.p}, {"q", rho.quadratic.q}, {"d", rho.quadratic.d}};
}

irrational::RhoSpec rho_from_json(const json& j) {
  if (!j.is_object() || !j.contains("form")) invalid("'rho' must be an object with a 'form'");
  irrational::RhoSpec rho;
  const auto form = j.at("form").get<std::string>();
  if (form == "quadratic") {
    for (const auto& [key, value] : j.items()) {
      if (key != "form" && key != "p" && key != "q" && key != "d") invalid("unknown rho key '" + key + "'");
    }
    rho.form = irrational::RhoSpec::Form::Quadratic;
    rho.quadratic = {integer_field<long long>(j, "p", 0), integer_field<long long>(j, "q", 1),
                     integer_field<long long>(j, "d", 0)};
    if (rho.quadratic.q == 0 || rho.quadratic.d < 0) invalid("rho needs q != 0 and d >= 0");
  } else if (form == "literal") {
    for (const auto& [key, value] : j.items()) {
      if (key != "form" && key != "digits") invalid("unknown rho key '" + key + "'");
    }
    rho.form = irrational::RhoSpec::Form::Literal;
    if (!j.contains("digits") || !j.at("digits").is_string()) invalid("literal rho needs 'digits'");
    rho.digits = j.at("digits").get<std::string>();
  } else {
    invalid("unknown rho form '" + form + "'");
  }
  return rho;
}

}  // namespace

std::string to_string(ScenarioMode mode) {
  switch (mode) {
    case ScenarioMode::Constant: return "constant";
    case ScenarioMode::Gill: return "gill";
    case ScenarioMode::Rational: return "rational";
    case ScenarioMode::Irrational: return "irrational";
    case ScenarioMode::Explicit: return "explicit";
  }
  return "constant";
}

ScenarioMode parse_scenario_mode(const std::string& text) {
  for (auto m : {ScenarioMode::Constant, ScenarioMode::Gill, ScenarioMode::Rational, ScenarioMode::Irrational,
                 ScenarioMode::Explicit}) {
    if (to_string(m) == text) return m;
  }
  invalid("unknown mode '" + text + "'");
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) invalid("scenario must be a JSON object");
  if (!j.contains("mode") || !j.at("mode").is_string()) invalid("scenario needs a string 'mode'");
  Scenario s;
  s.mode = parse_scenario_mode(j.at("mode").get<std::string>());
  const auto& keys = allowed_keys(s.mode);
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) invalid("unknown key '" + key + "' for mode " + to_string(s.mode));
  }
  if (j.contains("name")) s.name = j.at("name").get<std::string>();
  if (j.contains("a")) s.a = number_text(j.at("a"), "a");
  s.max_n = integer_field<std::size_t>(j, "max_n", s.max_n);
  if (j.contains("threshold")) s.threshold = number_text(j.at("threshold"), "threshold");
  s.windows = integer_field<std::size_t>(j, "windows", s.windows);
  s.max_period = integer_field<std::size_t>(j, "max_period", s.max_period);
  s.precision_bits = integer_field<long>(j, "precision_bits", s.precision_bits);
  if (s.precision_bits < kMinPrecisionBits) invalid("precision_bits must be >= " + std::to_string(kMinPrecisionBits));
  s.seed = integer_field<std::uint64_t>(j, "seed", s.seed);

  switch (s.mode) {
    case ScenarioMode::Constant:
    case ScenarioMode::Gill:
      if (!s.a) invalid(to_string(s.mode) + " scenario needs 'a'");
      if (j.contains("rule")) s.rule = PerturbationRule::parse(j.at("rule").get<std::string>()).to_string();
      break;
    case ScenarioMode::Explicit:
      if (!j.contains("values")) invalid("explicit scenario needs 'values'");
      s.values = number_list(j.at("values"), "values");
      if (s.values.empty()) invalid("explicit scenario needs at least one value");
      break;
    case ScenarioMode::Rational:
      s.p = integer_field<long>(j, "p", s.p);
      s.q = integer_field<long>(j, "q", s.q);
      if (j.contains("R")) s.repeller = j.at("R").is_string() && j.at("R") == "auto" ? "auto" : number_text(j.at("R"), "R");
      if (j.contains("t_rule")) s.t_rule = rational::to_string(rational::parse_t_rule(j.at("t_rule").get<std::string>()));
      if (j.contains("r_values")) {
        const auto& rv = j.at("r_values");
        if (rv.is_string()) {
          s.r_rule = PerturbationRule::parse(rv.get<std::string>()).to_string();
        } else {
          s.r_values = number_list(rv, "r_values");
        }
      }
      if (j.contains("t_scale")) s.t_scale = number_text(j.at("t_scale"), "t_scale");
      if (s.t_rule == "custom" && s.r_values.empty() && !s.r_rule) invalid("custom t_rule needs 'r_values'");
      break;
    case ScenarioMode::Irrational:
      if (!j.contains("rho")) invalid("irrational scenario needs 'rho'");
      s.rho = rho_from_json(j.at("rho"));
      s.stages = integer_field<std::size_t>(j, "stages", s.stages);
      if (j.contains("r_max") && !(j.at("r_max").is_string() && j.at("r_max") == "auto")) {
        s.r_max = integer_field<std::size_t>(j, "r_max", 0);
      }
      s.n_cap = integer_field<std::size_t>(j, "N_cap", s.n_cap);
      if (j.contains("tail_threshold")) {
        const auto& tt = j.at("tail_threshold");
        s.tail_threshold = tt.is_null() ? std::nullopt : std::optional<std::string>(number_text(tt, "tail_threshold"));
      }
      break;
  }
  return s;
}

json to_json(const Scenario& s) {
  json j;
  j["mode"] = to_string(s.mode);
  if (!s.name.empty()) j["name"] = s.name;
  switch (s.mode) {
    case ScenarioMode::Constant: j["a"] = *s.a; break;
    case ScenarioMode::Gill:
      j["a"] = *s.a;
      j["rule"] = s.rule;
      break;
    case ScenarioMode::Explicit:
      j["values"] = s.values;
      if (s.a) j["a"] = *s.a;
      break;
    case ScenarioMode::Rational:
      j["p"] = s.p;
      j["q"] = s.q;
      j["R"] = s.repeller;
      j["t_rule"] = s.t_rule;
      if (s.r_rule) {
        j["r_values"] = *s.r_rule;
      } else if (!s.r_values.empty()) {
        j["r_values"] = s.r_values;
      }
      if (s.t_scale) j["t_scale"] = *s.t_scale;
      break;
    case ScenarioMode::Irrational:
      j["rho"] = rho_to_json(s.rho);
      j["stages"] = s.stages;
      j["r_max"] = s.r_max ? json(*s.r_max) : json("auto");
      j["N_cap"] = s.n_cap;
      j["tail_threshold"] = s.tail_threshold ? json(*s.tail_threshold) : json(nullptr);
      break;
  }
  j["max_n"] = s.max_n;
  j["threshold"] = s.threshold;
  j["windows"] = s.windows;
  j["max_period"] = s.max_period;
  j["precision_bits"] = s.precision_bits;
  j["seed"] = s.seed;
  return j;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open scenario file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    invalid("scenario " + path + " is not valid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

EvalConfig eval_config(const Scenario& s) {
  EvalConfig c;
  c.max_n = s.max_n;
  c.conv_threshold = Real(std::string_view(s.threshold));
  c.windows = s.windows;
  c.max_period = s.max_period;
  return c;
}

rational::BuildOptions rational_options(const Scenario& s) {
  rational::BuildOptions o;
  if (s.repeller != "auto") o.repeller = Point(Real(std::string_view(s.repeller)));
  o.rule = rational::parse_t_rule(s.t_rule);
  if (s.r_rule) {
    const auto rule = PerturbationRule::parse(*s.r_rule);
    const std::size_t blocks = (s.max_n + static_cast<std::size_t>(s.q) - 1) / static_cast<std::size_t>(s.q);
    for (std::size_t r = 0; r < blocks; ++r) o.r_values.push_back(rule(r + 1));
  } else {
    for (const auto& v : s.r_values) o.r_values.emplace_back(std::string_view(v));
  }
  if (s.t_scale) o.t_scale = Real(std::string_view(*s.t_scale));
  o.seed = s.seed;
  return o;
}

irrational::IrrationalParams irrational_params(const Scenario& s) {
  irrational::IrrationalParams p;
  p.rho = s.rho;
  p.stages = s.stages;
  p.r_max = s.r_max;
  p.n_cap = s.n_cap;
  p.seed = s.seed;
  if (s.tail_threshold) {
    p.tail_threshold = Real(std::string_view(*s.tail_threshold));
  } else {
    p.tail_threshold.reset();
  }
  return p;
}

}  // namespace ramcf
