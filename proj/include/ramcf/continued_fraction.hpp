#pragma once

// Convergents of -a1/(1 - a2/(1 - a3/(1 - ...))) and numerical
// convergence / divergence diagnostics.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ramcf/moebius.hpp"
#include "ramcf/real.hpp"

namespace ramcf {

using Point = BoundaryPoint<Real>;
using Map = MoebiusMap<Real>;

/// Perturbation profile for Gill-type sequences a_i = a + scale * f(i).
struct PerturbationRule {
  enum class Kind { Zero, Geometric, Harmonic, Power };
  Kind kind = Kind::Zero;
  Real scale = Real(1);
  long exponent = 1;  // Power: f(i) = i^-exponent; Geometric: f(i) = 2^-i

  Real operator()(std::size_t i) const;

  /// Accepts "0", "2^-i", "1/i", "1/i^k", optionally prefixed by "<scale>*".
  static PerturbationRule parse(const std::string& text);
  std::string to_string() const;
};

/// Deterministic stream a_1, a_2, ... of positive coefficients.
class CoefficientSource {
 public:
  enum class Kind { Constant, ExplicitList, GillPerturbed, RationalConstruction, IrrationalConstruction };
  using Generator = std::function<Real(std::size_t)>;

  static CoefficientSource constant(const Real& a);
  static CoefficientSource explicit_list(std::vector<Real> values);
  static CoefficientSource gill_perturbed(const Real& a, PerturbationRule rule);
  /// Wraps a pure generator; `length` bounds the available indices.
  static CoefficientSource from_generator(Kind kind, std::optional<Real> limit, std::optional<std::size_t> length,
                                          Generator generator);

  /// a_i for i >= 1. Throws OutOfRange past the end, NonPositiveCoefficient for a_i <= 0.
  Real coefficient(std::size_t i) const;
  std::vector<Real> prefix(std::size_t n) const;

  Kind kind() const noexcept { return kind_; }
  const std::optional<Real>& declared_limit() const noexcept { return limit_; }
  const std::optional<std::size_t>& length() const noexcept { return length_; }

 private:
  CoefficientSource(Kind kind, std::optional<Real> limit, std::optional<std::size_t> length,
                    std::shared_ptr<const Generator> generator)
      : kind_(kind), limit_(std::move(limit)), length_(length), generator_(std::move(generator)) {}

  Kind kind_;
  std::optional<Real> limit_;
  std::optional<std::size_t> length_;
  std::shared_ptr<const Generator> generator_;
};

std::string to_string(CoefficientSource::Kind kind);

enum class Method { Recurrence, Composition };

/// τ_{indices[k]} = values[k].
struct ConvergentTrace {
  std::vector<std::size_t> indices;
  std::vector<Point> values;
  Method method = Method::Composition;
};

/// τ_n = T_{a_1} ∘ ... ∘ T_{a_n}(0).
Point convergent_by_composition(const CoefficientSource& src, std::size_t n);
/// τ_n = p_n / q_n from the three-term recurrence.
Point convergent_by_recurrence(const CoefficientSource& src, std::size_t n);
/// τ_1 .. τ_n in one pass.
ConvergentTrace convergent_trace(const CoefficientSource& src, std::size_t n, Method method = Method::Composition);

struct EvalConfig {
  std::size_t max_n = 30000;
  Real conv_threshold = Real("1e-6");
  std::size_t windows = 5;
  std::size_t max_period = 24;
};

enum class Verdict { Converged, DivergedPeriodic, Undecided };
std::string to_string(Verdict v);

struct WindowStat {
  std::size_t first;  // inclusive convergent index
  std::size_t last;   // inclusive
  Real diameter;
};

struct CauchyPoint {
  std::size_t from_n;
  Real sup_distance;  // diameter of {τ_m : m >= from_n}
};

struct ConvergenceReport {
  Verdict verdict = Verdict::Undecided;
  std::size_t period = 0;  // set for DivergedPeriodic
  std::optional<Point> limit_estimate;
  std::vector<Point> sub_limits;
  std::vector<WindowStat> windows;
  std::vector<CauchyPoint> cauchy_profile;
};

/// Windowed-diameter verdict over the second half of τ_1..τ_max_n.
ConvergenceReport evaluate(const CoefficientSource& src, const EvalConfig& config);
ConvergenceReport evaluate_trace(const ConvergentTrace& trace, const EvalConfig& config);

/// Smallest p <= max_period whose residue subsequences each settle (tail
/// diameter < threshold) with pairwise separated limits.
std::optional<std::size_t> detect_periodicity(const ConvergentTrace& trace, std::size_t max_period,
                                              const Real& threshold);

/// Cauchy-condensation test: ratio of the last two complete dyadic block
/// sums of the non-negative terms is below 0.9.
bool summable_heuristic(std::span<const Real> terms);

struct GillProfile {
  std::vector<Real> partial_sums;  // S_1 .. S_N
  bool summable = true;
};

/// S_N = Σ_{i<=N} |a_i - a|.
GillProfile gill_check(const CoefficientSource& src, const Real& a, std::size_t n);

}  // namespace ramcf
