#pragma once

// Running scenarios end to end and writing their artifacts:
// trace.csv, report.json, certificate.json, run_meta.json.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ramcf/scenario.hpp"

namespace ramcf {

inline constexpr std::size_t kCoefficientPrefix = 100;

/// Σ_{i<=n} |a_i - a| sampled at n = 1, 2, 4, ... and at the last index.
struct SumProfile {
  std::vector<std::pair<std::size_t, Real>> checkpoints;
  bool summable = true;
};

struct RunArtifact {
  Scenario scenario;
  long precision_bits = 256;
  std::vector<Real> coefficients;  // first kCoefficientPrefix values
  std::optional<Real> limit_a;     // declared limit of the coefficients
  ConvergentTrace trace;
  ConvergenceReport report;
  std::optional<SumProfile> deviation_profile;
  std::optional<nlohmann::json> certificate;
  bool certificate_passed = false;
  // Kept out of report.json so it can be compared byte for byte.
  std::string started_at;
  double wall_clock_seconds = 0;
};

/// Builds the source, evaluates, certifies where a construction is involved.
RunArtifact run(const Scenario& scenario);

/// Exit status for a construct run: verdict Converged and certificate passed.
bool construction_succeeded(const RunArtifact& artifact);

std::string point_text(const Point& x);
nlohmann::json to_json(const ConvergenceReport& report);
nlohmann::json certificate_json(const rational::RationalRotationParams& params,
                                const rational::ConstructionCertificate& cert);
nlohmann::json certificate_json(const irrational::Construction& c, const irrational::IrrationalCertificate& cert);

/// Deterministic part of the artifact.
nlohmann::json report_json(const RunArtifact& artifact);
nlohmann::json meta_json(const RunArtifact& artifact);

void write_trace_csv(std::ostream& out, const ConvergentTrace& trace);
/// Writes trace.csv, report.json, run_meta.json and, if present, certificate.json.
void write_artifacts(const RunArtifact& artifact, const std::filesystem::path& out_dir);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// Side-by-side table of report.json documents.
nlohmann::json compare(const std::vector<nlohmann::json>& reports);
std::string comparison_csv(const nlohmann::json& comparison);

}  // namespace ramcf
