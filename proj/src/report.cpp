#include "ramcf/report.hpp"

#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ramcf {

using nlohmann::json;

namespace {

json point_json(const std::optional<Point>& x) { return x ? json(point_text(*x)) : json(nullptr); }

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string host_name() {
  char buf[256] = {};
  if (gethostname(buf, sizeof buf - 1) != 0) return "unknown";
  return buf;
}

// r = 0, 1, 3, 7, ... and the last index.
std::vector<std::size_t> sample_indices(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < n; r = 2 * r + 1) out.push_back(r);
  if (n > 0 && out.back() != n - 1) out.push_back(n - 1);
  return out;
}

std::size_t certified_stages(const Scenario& s, const rational::RationalRotationParams& params) {
  std::size_t n = s.max_n / static_cast<std::size_t>(s.q);
  if (auto blocks = params.block_count()) n = std::min(n, *blocks);
  return std::max<std::size_t>(n, 10);
}

SumProfile deviation_profile(const CoefficientSource& src, const Real& a, std::size_t n) {
  const GillProfile g = gill_check(src, a, n);
  SumProfile p;
  p.summable = g.summable;
  for (std::size_t i = 1; i <= n; i *= 2) p.checkpoints.emplace_back(i, g.partial_sums[i - 1]);
  if (n > 0 && p.checkpoints.back().first != n) p.checkpoints.emplace_back(n, g.partial_sums[n - 1]);
  return p;
}

json lemma_json(const rational::LemmaSolution& l) {
  return {{"c1", l.c1.str()},
          {"c2", l.c2.str()},
          {"attractor", point_text(l.attractor)},
          {"repeller", point_text(l.repeller)},
          {"slope", l.slope.str()}};
}

json rational_header(const rational::RationalRotationParams& params) {
  return {{"kind", "rational"},
          {"p", params.p},
          {"q", params.q},
          {"a", params.a.str()},
          {"t_rule", rational::to_string(params.rule)},
          {"t_scale", params.t_scale.str()},
          {"lemma", lemma_json(params.lemma)}};
}

}  // namespace

std::string point_text(const Point& x) { return x.is_infinite() ? "inf" : x.value().str(); }

json to_json(const ConvergenceReport& r) {
  json windows = json::array();
  for (const auto& w : r.windows) windows.push_back({{"first", w.first}, {"last", w.last}, {"diameter", w.diameter.str()}});
  json cauchy = json::array();
  for (const auto& c : r.cauchy_profile) cauchy.push_back({{"from_n", c.from_n}, {"sup_distance", c.sup_distance.str()}});
  json subs = json::array();
  for (const auto& x : r.sub_limits) subs.push_back(point_text(x));
  return {{"verdict", to_string(r.verdict)},
          {"period", r.period},
          {"limit", point_json(r.limit_estimate)},
          {"sub_limits", subs},
          {"windows", windows},
          {"cauchy_profile", cauchy}};
}

json certificate_json(const rational::RationalRotationParams& params, const rational::ConstructionCertificate& cert) {
  json j = rational_header(params);
  j["passed"] = cert.passed();
  j["error"] = nullptr;
  j["num_stages"] = cert.stages.size();
  j["all_hyperbolic"] = cert.all_hyperbolic;
  j["fixed_points_converge"] = cert.fixed_points_converge;
  j["t_rule_divergent"] = cert.t_rule_divergent;
  j["product_diverges"] = cert.product_diverges;
  j["slope_fit_ok"] = cert.slope_fit_ok;
  j["slope_fit_error"] = cert.slope_fit_error.str();
  j["tail_start"] = cert.tail_start;
  j["max_attractor_gap"] = cert.max_attractor_gap.str();
  j["max_repeller_gap"] = cert.max_repeller_gap.str();
  j["log_multiplier_sum"] = cert.log_multiplier_sums.empty() ? "0" : cert.log_multiplier_sums.back().str();
  json stages = json::array();
  for (std::size_t r : sample_indices(cert.stages.size())) {
    const auto& st = cert.stages[r];
    stages.push_back({{"r", st.r},
                      {"t", st.t.str()},
                      {"alpha", st.alpha.str()},
                      {"beta", st.beta.str()},
                      {"attractor", point_text(st.attractor)},
                      {"repeller", point_text(st.repeller)},
                      {"multiplier", st.multiplier.str()},
                      {"log_multiplier_sum", cert.log_multiplier_sums[r].str()}});
  }
  j["stages"] = stages;
  return j;
}

json certificate_json(const irrational::Construction& c, const irrational::IrrationalCertificate& cert) {
  json stages = json::array();
  const auto& seq = c.sequence;
  for (std::size_t k = 0; k < seq.stages.size(); ++k) {
    const auto& st = seq.stages[k];
    stages.push_back({{"n", st.n},
                      {"p", st.p},
                      {"q", st.q},
                      {"a_tilde", st.a_tilde.str()},
                      {"t", st.t.str()},
                      {"alpha", st.alpha.str()},
                      {"beta", st.beta.str()},
                      {"attractor", point_text(st.attractor)},
                      {"repeller", point_text(st.repeller)},
                      {"multiplier", st.multiplier.str()},
                      {"N", st.power},
                      {"schedule_N", st.schedule_power},
                      {"r_max", st.r_max},
                      {"m_points", st.m_points.size()},
                      {"m_distance", st.m_distance.str()},
                      {"block_end", seq.boundaries[k + 1]}});
  }
  json schedule = json::array();
  for (const auto& r : c.schedule) {
    schedule.push_back(
        {{"k", r.k}, {"N", r.power}, {"diameter", r.diameter.str()}, {"bound", r.bound.str()}, {"ok", r.ok}});
  }
  json cauchy = json::array();
  for (const auto& r : cert.cauchy) {
    cauchy.push_back({{"k", r.k},
                      {"n_k", r.n_k},
                      {"samples", r.samples},
                      {"worst_m", r.worst_m},
                      {"max_distance", r.max_distance.str()},
                      {"bound", r.bound.str()},
                      {"theta_distance", r.theta_distance.str()},
                      {"theta_bound", r.theta_bound.str()},
                      {"ok", r.ok}});
  }
  const auto& la = c.lookahead;
  return {{"kind", "irrational"},
          {"passed", cert.passed()},
          {"error", nullptr},
          {"rho", c.params.rho.describe()},
          {"all_hyperbolic", cert.all_hyperbolic},
          {"margins_ok", cert.margins_ok},
          {"schedule_ok", cert.schedule_ok},
          {"cauchy_ok", cert.cauchy_ok},
          {"cauchy_error", cert.cauchy_error.empty() ? json(nullptr) : json(cert.cauchy_error)},
          {"stages", stages},
          {"lookahead",
           {{"n", la.n}, {"p", la.p}, {"q", la.q}, {"a_tilde", la.a_tilde.str()}, {"repeller", point_text(la.repeller)},
            {"multiplier", la.multiplier.str()}}},
          {"schedule", schedule},
          {"cauchy", cauchy}};
}

RunArtifact run(const Scenario& s) {
  const auto t0 = std::chrono::steady_clock::now();
  RunArtifact art;
  art.started_at = utc_now();
  art.scenario = s;
  art.precision_bits = s.precision_bits;
  PrecisionScope scope(s.precision_bits);
  try {
    EvalConfig config = eval_config(s);
    std::optional<CoefficientSource> src;
    switch (s.mode) {
      case ScenarioMode::Constant:
        art.limit_a = Real(std::string_view(*s.a));
        src = CoefficientSource::constant(*art.limit_a);
        break;
      case ScenarioMode::Gill:
        art.limit_a = Real(std::string_view(*s.a));
        src = CoefficientSource::gill_perturbed(*art.limit_a, PerturbationRule::parse(s.rule));
        break;
      case ScenarioMode::Explicit: {
        std::vector<Real> values;
        for (const auto& v : s.values) values.emplace_back(std::string_view(v));
        if (s.a) art.limit_a = Real(std::string_view(*s.a));
        config.max_n = std::min(config.max_n, values.size());
        src = CoefficientSource::explicit_list(std::move(values));
        break;
      }
      case ScenarioMode::Rational: {
        const auto params = rational::make_params(s.p, s.q, rational_options(s));
        art.limit_a = params.a;
        src = rational::build_sequence(params);
        if (auto len = src->length()) config.max_n = std::min(config.max_n, *len);
        try {
          const auto cert = rational::certify(params, certified_stages(s, params));
          art.certificate = certificate_json(params, cert);
          art.certificate_passed = cert.passed();
        } catch (const Error& e) {
          if (e.code() != ErrorCode::StageNotHyperbolic) throw;
          json j = rational_header(params);
          j["passed"] = false;
          j["error"] = e.what();
          art.certificate = j;
        }
        break;
      }
      case ScenarioMode::Irrational: {
        const auto c = irrational::construct(irrational_params(s));
        art.limit_a = rho_inverse(s.rho.value());
        src = c.sequence.source;
        config.max_n = c.sequence.boundaries.back();
        const auto cert = irrational::certify(c);
        art.certificate = certificate_json(c, cert);
        art.certificate_passed = cert.passed();
        break;
      }
    }
    art.trace = convergent_trace(*src, config.max_n, Method::Composition);
    art.report = evaluate_trace(art.trace, config);
    art.coefficients = src->prefix(std::min(kCoefficientPrefix, config.max_n));
    if (art.limit_a) art.deviation_profile = deviation_profile(*src, *art.limit_a, config.max_n);
  } catch (const Error& e) {
    const std::string label = s.name.empty() ? to_string(s.mode) : s.name + " (" + to_string(s.mode) + ")";
    throw Error(e.code(), "scenario " + label + ": " + e.detail());
  }
  art.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return art;
}

bool construction_succeeded(const RunArtifact& artifact) {
  return artifact.report.verdict == Verdict::Converged && artifact.certificate && artifact.certificate_passed;
}

json report_json(const RunArtifact& art) {
  json coeffs = json::array();
  for (const auto& c : art.coefficients) coeffs.push_back(c.str());
  json profile = nullptr;
  if (art.deviation_profile) {
    json cps = json::array();
    for (const auto& [n, sum] : art.deviation_profile->checkpoints) cps.push_back({{"n", n}, {"sum", sum.str()}});
    profile = {{"checkpoints", cps}, {"summable", art.deviation_profile->summable}};
  }
  json report = to_json(art.report);
  report["n"] = art.trace.values.size();
  return {{"scenario", to_json(art.scenario)},
          {"environment", {{"precision_bits", art.precision_bits}, {"version", RAMCF_VERSION}}},
          {"coefficients", coeffs},
          {"limit_a", art.limit_a ? json(art.limit_a->str()) : json(nullptr)},
          {"report", report},
          {"deviation_profile", profile},
          {"certificate", art.certificate ? *art.certificate : json(nullptr)}};
}

json meta_json(const RunArtifact& art) {
  return {{"started_at", art.started_at}, {"wall_clock_seconds", art.wall_clock_seconds}, {"host", host_name()}};
}

void write_trace_csv(std::ostream& out, const ConvergentTrace& trace) {
  out << "n,tau_real,cayley_angle\n";
  for (std::size_t k = 0; k < trace.values.size(); ++k) {
    out << trace.indices[k] << ',' << point_text(trace.values[k]) << ',' << cayley_angle(trace.values[k]).str() << '\n';
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

void write_artifacts(const RunArtifact& art, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    PrecisionScope scope(art.precision_bits);
    std::ofstream csv(out_dir / "trace.csv");
    if (!csv) throw Error(ErrorCode::InvalidArgument, "cannot write " + (out_dir / "trace.csv").string());
    write_trace_csv(csv, art.trace);
  }
  write_json(report_json(art), out_dir / "report.json");
  if (art.certificate) write_json(*art.certificate, out_dir / "certificate.json");
  write_json(meta_json(art), out_dir / "run_meta.json");
}

json compare(const std::vector<json>& reports) {
  if (reports.size() < 2) throw Error(ErrorCode::InvalidArgument, "compare needs at least two reports");
  json rows = json::array();
  json profiles = json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const json& r = reports[i];
    try {
      const json& sc = r.at("scenario");
      const std::string mode = sc.at("mode");
      const std::string name = sc.contains("name") ? sc.at("name").get<std::string>() : mode + "#" + std::to_string(i + 1);
      const json& rep = r.at("report");
      const json& dev = r.at("deviation_profile");
      const json& cert = r.at("certificate");
      json row = {{"name", name},
                  {"mode", mode},
                  {"verdict", rep.at("verdict")},
                  {"period", rep.at("period")},
                  {"limit", rep.at("limit")},
                  {"sub_limits", rep.at("sub_limits")},
                  {"deviation_sum", dev.is_null() ? json(nullptr) : dev.at("checkpoints").back().at("sum")},
                  {"deviation_summable", dev.is_null() ? json(nullptr) : dev.at("summable")},
                  {"log_multiplier_sum", cert.is_object() && cert.contains("log_multiplier_sum")
                                             ? cert.at("log_multiplier_sum")
                                             : json(nullptr)},
                  {"certificate", cert.is_null() ? "none" : (cert.at("passed").get<bool>() ? "passed" : "failed")}};
      rows.push_back(row);
      json log_profile = json::array();
      if (cert.is_object() && cert.contains("stages") && cert.value("kind", "") == "rational") {
        for (const auto& st : cert.at("stages")) {
          log_profile.push_back({{"r", st.at("r")}, {"sum", st.at("log_multiplier_sum")}});
        }
      }
      profiles.push_back({{"name", name},
                          {"deviation", dev.is_null() ? json::array() : dev.at("checkpoints")},
                          {"log_multiplier", log_profile}});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, "report " + std::to_string(i + 1) + " is malformed: " + e.what());
    }
  }
  return {{"rows", rows}, {"profiles", profiles}};
}

std::string comparison_csv(const json& comparison) {
  std::ostringstream out;
  out << "name,mode,verdict,period,limit,deviation_sum,deviation_summable,log_multiplier_sum,certificate\n";
  auto cell = [](const json& v) -> std::string {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  };
  for (const auto& row : comparison.at("rows")) {
    out << cell(row.at("name")) << ',' << cell(row.at("mode")) << ',' << cell(row.at("verdict")) << ','
        << cell(row.at("period")) << ',' << cell(row.at("limit")) << ',' << cell(row.at("deviation_sum")) << ','
        << cell(row.at("deviation_summable")) << ',' << cell(row.at("log_multiplier_sum")) << ','
        << cell(row.at("certificate")) << '\n';
  }
  return out.str();
}

}  // namespace ramcf
