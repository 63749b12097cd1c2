// ramcf: evaluate continued fractions and build convergent examples.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "ramcf/report.hpp"

namespace {

using namespace ramcf;
using nlohmann::json;

enum Exit : int { kOk = 0, kError = 1, kUndecided = 2, kCertificate = 3, kUsage = 64 };

struct Globals {
  std::optional<long> precision_bits;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "ramcf_out";
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

long env_precision() {
  const char* env = std::getenv("RAMCF_PRECISION_BITS");
  if (env == nullptr || *env == '\0') return 256;
  char* end = nullptr;
  const long bits = std::strtol(env, &end, 10);
  if (*end != '\0' || bits < kMinPrecisionBits) {
    throw UsageError("RAMCF_PRECISION_BITS must be an integer >= " + std::to_string(kMinPrecisionBits));
  }
  return bits;
}

// Flag beats the scenario file, which beats the environment.
void apply_globals(Scenario& s, const Globals& g, bool from_file) {
  if (g.precision_bits) {
    s.precision_bits = *g.precision_bits;
  } else if (!from_file) {
    s.precision_bits = env_precision();
  }
  if (g.seed) s.seed = *g.seed;
}

long working_bits(const Globals& g) { return g.precision_bits ? *g.precision_bits : env_precision(); }

std::vector<std::string> read_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::vector<std::string> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    for (const auto& v : json::parse(text)) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    return out;
  }
  std::istringstream words(text);
  for (std::string w; words >> w;) {
    if (w.front() == '#') {
      std::getline(words, w);
      continue;
    }
    out.push_back(w);
  }
  return out;
}

std::string verdict_line(const RunArtifact& art) {
  std::ostringstream out;
  PrecisionScope scope(art.precision_bits);
  out << "verdict: " << to_string(art.report.verdict);
  if (art.report.verdict == Verdict::DivergedPeriodic) out << " (period " << art.report.period << ")";
  if (art.report.limit_estimate) out << ", limit " << point_text(*art.report.limit_estimate);
  if (!art.report.windows.empty()) out << ", final window diameter " << art.report.windows.back().diameter.str(6);
  return out.str();
}

int eval_exit(const RunArtifact& art) { return art.report.verdict == Verdict::Undecided ? kUndecided : kOk; }

RunArtifact run_and_write(const Scenario& s, const std::filesystem::path& dir) {
  RunArtifact art = run(s);
  write_artifacts(art, dir);
  std::cout << verdict_line(art) << "\nartifacts: " << dir.string() << "\n";
  return art;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized continued fractions -a1/(1 - a2/(1 - ...)): evaluation, rotation numbers, "
               "and convergent sequences with elliptic limits."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", RAMCF_VERSION);
  Globals g;
  long precision_flag = 0;
  std::uint64_t seed_flag = 0;
  auto* precision_opt = app.add_option("--precision-bits", precision_flag,
                                       "Mantissa precision in bits (default 256, or RAMCF_PRECISION_BITS)")
                            ->check(CLI::Range(kMinPrecisionBits, 1L << 20));
  auto* seed_opt = app.add_option("--seed", seed_flag, "Seed for repeller selection (default 0)");
  app.add_option("--out-dir", g.out_dir, "Directory for artifacts")->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a continued fraction and write trace.csv + report.json");
  std::string eval_scenario, eval_explicit, eval_constant, eval_threshold;
  std::size_t eval_max_n = 0, eval_windows = 0;
  auto* e_sc = eval->add_option("--scenario", eval_scenario, "Scenario JSON file")->check(CLI::ExistingFile);
  auto* e_c = eval->add_option("--constant", eval_constant, "Constant coefficient a_i = A");
  auto* e_x = eval->add_option("--explicit", eval_explicit, "File of coefficients (JSON array or whitespace separated)")
                  ->check(CLI::ExistingFile);
  e_sc->excludes(e_c)->excludes(e_x);
  e_c->excludes(e_x);
  auto* e_n = eval->add_option("--max-n", eval_max_n, "Number of convergents (default 30000)");
  auto* e_t = eval->add_option("--threshold", eval_threshold, "Convergence threshold on window diameters (default 1e-6)");
  auto* e_w = eval->add_option("--windows", eval_windows, "Number of tail windows (default 5)");

  // rho
  auto* rho = app.add_subcommand("rho", "Rotation number of T_a, or its inverse");
  std::string rho_a, rho_inv;
  auto* r_a = rho->add_option("--a", rho_a, "Coefficient a > 1/4");
  auto* r_i = rho->add_option("--inverse", rho_inv, "Rotation number in (0, 1/2)");
  r_a->excludes(r_i);
  std::size_t rho_digits = 0;
  rho->add_option("--digits", rho_digits, "Significant digits to print (default: all)");

  // classify
  auto* cls = app.add_subcommand("classify", "Classify a Moebius map given by a matrix or as T_b^n");
  std::vector<std::string> cls_matrix;
  std::string cls_t;
  std::uint64_t cls_power = 1;
  auto* c_m = cls->add_option("--matrix", cls_matrix, "Entries m11 m12 m21 m22")->expected(4);
  auto* c_t = cls->add_option("--t-map", cls_t, "Use T_b for this b > 0");
  c_m->excludes(c_t);
  cls->add_option("--power", cls_power, "Classify the n-th power")->capture_default_str();

  // construct
  auto* cons = app.add_subcommand("construct", "Build, evaluate and certify a convergent example");
  std::string cons_mode, cons_scenario;
  cons->add_option("--mode", cons_mode, "rational or irrational")->required()->check(CLI::IsMember({"rational", "irrational"}));
  cons->add_option("--scenario", cons_scenario, "Scenario JSON file (defaults: p/q = 1/3 or golden rho)")
      ->check(CLI::ExistingFile);

  // gill
  auto* gill = app.add_subcommand("gill", "Partial sums of |a_i - a| and the verdict of the fraction");
  std::string gill_a, gill_rule = "0";
  std::size_t gill_max_n = 30000;
  long gill_lemma_q = 0;
  gill->add_option("--a", gill_a, "Limit a")->required();
  gill->add_option("--rule", gill_rule, "Perturbation: 0, 2^-i, 1/i, 1/i^k, optionally scale*rule")->capture_default_str();
  gill->add_option("--max-n", gill_max_n, "Number of terms")->capture_default_str();
  gill->add_option("--lemma-q", gill_lemma_q,
                   "Apply the rule only on residues 1, 2 mod q through the lemma coefficients (needs rho(a) = p/q)");

  // compare
  auto* cmp = app.add_subcommand("compare", "Tabulate report.json files side by side");
  std::vector<std::string> cmp_files;
  cmp->add_option("reports", cmp_files, "report.json files")->required()->check(CLI::ExistingFile);

  // batch
  auto* batch = app.add_subcommand("batch", "Run several scenario files");
  std::vector<std::string> batch_files;
  unsigned batch_jobs = 1;
  batch->add_option("scenarios", batch_files, "Scenario JSON files")->required()->check(CLI::ExistingFile);
  batch->add_option("--jobs", batch_jobs, "Parallel runs")->capture_default_str()->check(CLI::Range(1U, 256U));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (*precision_opt) g.precision_bits = precision_flag;
  if (*seed_opt) g.seed = seed_flag;

  try {
    if (*eval) {
      Scenario s;
      bool from_file = false;
      if (*e_sc) {
        s = load_scenario(eval_scenario);
        from_file = true;
      } else if (*e_c) {
        s.mode = ScenarioMode::Constant;
        s.a = eval_constant;
      } else if (*e_x) {
        s.mode = ScenarioMode::Explicit;
        s.values = read_values(eval_explicit);
        if (s.values.empty()) throw UsageError("--explicit file holds no coefficients");
      } else {
        throw UsageError("eval needs exactly one of --scenario, --constant, --explicit");
      }
      if (*e_n) s.max_n = eval_max_n;
      if (*e_t) s.threshold = eval_threshold;
      if (*e_w) s.windows = eval_windows;
      apply_globals(s, g, from_file);
      s = scenario_from_json(to_json(s));  // validates flag-built scenarios the same way as files
      return eval_exit(run_and_write(s, g.out_dir));
    }

    if (*rho) {
      if (!*r_a && !*r_i) throw UsageError("rho needs --a or --inverse");
      PrecisionScope scope(working_bits(g));
      const Real value = *r_a ? rotation_number(Real(std::string_view(rho_a))) : rho_inverse(Real(std::string_view(rho_inv)));
      std::cout << (rho_digits > 0 ? value.str(rho_digits) : value.str()) << "\n";
      return kOk;
    }

    if (*cls) {
      if (!*c_m && !*c_t) throw UsageError("classify needs --matrix or --t-map");
      PrecisionScope scope(working_bits(g));
      Map m = *c_t ? t_map(Real(std::string_view(cls_t)))
                   : Map::from_entries(Real(std::string_view(cls_matrix[0])), Real(std::string_view(cls_matrix[1])),
                                       Real(std::string_view(cls_matrix[2])), Real(std::string_view(cls_matrix[3])));
      m = power(m, cls_power);
      const auto c = classify(m);
      json out = {{"class", class_name(c)},
                  {"trace", m.trace().str()},
                  {"matrix", {m.m11().str(), m.m12().str(), m.m21().str(), m.m22().str()}}};
      if (const auto* h = std::get_if<HyperbolicClass<Real>>(&c)) {
        out["attractor"] = point_text(h->attractor);
        out["repeller"] = point_text(h->repeller);
        out["multiplier"] = h->multiplier.str();
      } else if (const auto* el = std::get_if<EllipticClass<Real>>(&c)) {
        out["rotation_number"] = el->rotation_number.str();
      }
      std::cout << out.dump(2) << "\n";
      return kOk;
    }

    if (*cons) {
      Scenario s;
      bool from_file = false;
      if (!cons_scenario.empty()) {
        s = load_scenario(cons_scenario);
        from_file = true;
        if (to_string(s.mode) != cons_mode) {
          throw UsageError("--mode " + cons_mode + " does not match scenario mode " + to_string(s.mode));
        }
      } else {
        s.mode = parse_scenario_mode(cons_mode);
      }
      apply_globals(s, g, from_file);
      const RunArtifact art = run_and_write(s, g.out_dir);
      if (construction_succeeded(art)) {
        std::cout << "certificate: passed\n";
        return kOk;
      }
      const json diag = {{"verdict", to_string(art.report.verdict)},
                         {"certificate", art.certificate ? *art.certificate : json(nullptr)}};
      write_json(diag, std::filesystem::path(g.out_dir) / "diagnostic.json");
      std::cout << "certificate: failed (see " << (std::filesystem::path(g.out_dir) / "diagnostic.json").string()
                << ")\n";
      return kCertificate;
    }

    if (*gill) {
      Scenario s;
      s.max_n = gill_max_n;
      if (gill_lemma_q > 0) {
        PrecisionScope scope(working_bits(g));
        const Real rho_a = rotation_number(Real(std::string_view(gill_a)));
        const long p = (rho_a * Real(gill_lemma_q) + Real("0.5")).to_long();
        if (abs(Real(p) / Real(gill_lemma_q) - rho_a) > precision_tolerance<Real>(20)) {
          throw Error(ErrorCode::InvalidArgument, "rho(" + gill_a + ") is not a fraction with denominator " +
                                                      std::to_string(gill_lemma_q));
        }
        s.mode = ScenarioMode::Rational;
        s.p = p;
        s.q = gill_lemma_q;
        s.t_rule = "custom";
        s.r_rule = PerturbationRule::parse(gill_rule).to_string();
      } else {
        s.mode = ScenarioMode::Gill;
        s.a = gill_a;
        s.rule = PerturbationRule::parse(gill_rule).to_string();
      }
      apply_globals(s, g, false);
      const RunArtifact art = run_and_write(s, g.out_dir);
      if (art.deviation_profile) {
        PrecisionScope scope(art.precision_bits);
        std::cout << "sum |a_i - a| up to n = " << art.deviation_profile->checkpoints.back().first << ": "
                  << art.deviation_profile->checkpoints.back().second.str(10)
                  << (art.deviation_profile->summable ? " (summable)" : " (not summable)") << "\n";
      }
      return eval_exit(art);
    }

    if (*cmp) {
      if (cmp_files.size() < 2) throw UsageError("compare needs at least two report files");
      std::vector<json> reports;
      for (const auto& f : cmp_files) reports.push_back(read_json(f));
      const json table = compare(reports);
      std::filesystem::create_directories(g.out_dir);
      write_json(table, std::filesystem::path(g.out_dir) / "comparison.json");
      const std::string csv = comparison_csv(table);
      std::ofstream(std::filesystem::path(g.out_dir) / "comparison.csv") << csv;
      std::cout << csv;
      return kOk;
    }

    if (*batch) {
      std::vector<Scenario> scenarios;
      for (const auto& f : batch_files) {
        scenarios.push_back(load_scenario(f));
        apply_globals(scenarios.back(), g, true);
      }
      std::vector<int> codes(scenarios.size(), kOk);
      std::vector<std::string> messages(scenarios.size());
      std::vector<std::filesystem::path> dirs;
      for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const std::string stem = std::filesystem::path(batch_files[i]).stem().string();
        dirs.push_back(std::filesystem::path(g.out_dir) / (std::to_string(i + 1) + "_" + stem));
      }
      std::mutex lock;
      std::size_t next = 0;
      auto worker = [&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard guard(lock);
            if (next == scenarios.size()) return;
            i = next++;
          }
          try {
            const RunArtifact art = run(scenarios[i]);
            write_artifacts(art, dirs[i]);
            codes[i] = eval_exit(art);
            if (art.certificate && !art.certificate_passed) codes[i] = kCertificate;
            messages[i] = verdict_line(art);
          } catch (const std::exception& e) {
            codes[i] = kError;
            messages[i] = std::string("error: ") + e.what();
          }
        }
      };
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < std::min<std::size_t>(batch_jobs, scenarios.size()); ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      int worst = kOk;
      for (std::size_t i = 0; i < scenarios.size(); ++i) {
        std::cout << batch_files[i] << ": " << messages[i] << " -> " << dirs[i].string() << "\n";
        worst = std::max(worst, codes[i]);
      }
      return worst;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kUsage;
}
