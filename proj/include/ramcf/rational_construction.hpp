#pragma once

// Convergent continued fractions with limit a, ρ(a) = p/q, built from
// hyperbolic perturbations of T_a^q = Id in the slots qr+1, qr+2.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ramcf/continued_fraction.hpp"

namespace ramcf::rational {

/// Linear parameter families α(t) = a + c1 t, β(t) = a + c2 t for which
/// T_α∘T_β∘T_a^(q-2) is hyperbolic with repeller `repeller` for small t > 0.
struct LemmaSolution {
  Real c1;
  Real c2;
  Point attractor = Point(Real(0));
  Point repeller = Point::infinity();
  Real slope;  // dμ/dt at t = 0, negative; coefficients are scaled so |slope| ≈ 1
};

struct SlopeEstimate {
  Real value;            // Richardson value from steps 1e-4, 1e-5
  Real coarse;           // Richardson value from steps 1e-3, 1e-4
  Real relative_spread;  // |value - coarse| / |value|
};

enum class TRule { Harmonic, Geometric, Custom };
std::string to_string(TRule rule);
TRule parse_t_rule(const std::string& text);

struct RationalRotationParams {
  long p = 1;
  long q = 3;
  Real a;
  LemmaSolution lemma;
  TRule rule = TRule::Harmonic;
  Real t_scale = Real(1);
  std::vector<Real> r_values;  // Custom rule: t_r = t_scale * r_values[r]

  /// t_r: t_scale/(r+1), t_scale 2^-r, or t_scale r_values[r].
  Real t(std::size_t r) const;
  Real alpha(std::size_t r) const { return a + lemma.c1 * t(r); }
  Real beta(std::size_t r) const { return a + lemma.c2 * t(r); }
  /// Number of blocks the rule can supply (unbounded for the closed-form rules).
  std::optional<std::size_t> block_count() const;
};

/// {T_a^l(0) : l = 0..q-1} in orbit order.
std::vector<Point> orbit_of_zero(const Real& a, long q);

/// ∂/∂α of T_α∘T_β∘T_a^(q-2) at α = β = a: x / a (chart u = 1/x at ∞).
Real vector_field_v1(const Real& a, const Point& x);
/// ∂/∂β of the same family: -x (a + x) / a^2, the push-forward of v1 by T_a.
Real vector_field_v2(const Real& a, const Point& x);

/// T_α ∘ T_β ∘ T_a^(q-2).
Map family_map(const Real& a, long q, const Real& alpha, const Real& beta);
/// Central difference of the family in α (which = 1) or β (which = 2) at x.
Real field_by_difference(const Real& a, long q, int which, const Point& x, const Real& h);

LemmaSolution solve_lemma(const Real& a, long q, const Point& repeller);
SlopeEstimate multiplier_slope(const Real& a, long q, const LemmaSolution& lemma);

/// Seeded pick of a repeller in (-a, 0), where both perturbations are
/// positive, at chordal distance >= margin from C_a ∪ {0, ∞} ∪ extra.
Point choose_R(const Real& a, long q, const Real& margin, std::uint64_t seed,
               std::span<const Point> extra_forbidden = {});

/// Largest t_scale = start / 2^k keeping the first coefficients positive and
/// the probed stage maps hyperbolic.
Real select_t_scale(const Real& a, long q, const LemmaSolution& lemma, TRule rule, std::span<const Real> r_values,
                    const Real& start = Real(4));

struct BuildOptions {
  std::optional<Point> repeller;  // chosen by choose_R when absent
  TRule rule = TRule::Harmonic;
  std::vector<Real> r_values;
  std::optional<Real> t_scale;  // selected by select_t_scale when absent
  Real margin = Real("0.05");
  std::uint64_t seed = 0;
};

/// Full parameter set for ρ = p/q: a, repeller, lemma solution, t-rule.
RationalRotationParams make_params(long p, long q, const BuildOptions& options);

/// a_i = a off residues 1, 2 mod q; a_{qr+1} = α_r, a_{qr+2} = β_r.
CoefficientSource build_sequence(const RationalRotationParams& params);

/// ψ_r = T_{α_r} ∘ T_{β_r} ∘ T_a^(q-2).
Map stage_map(const RationalRotationParams& params, std::size_t r);

struct StageRecord {
  std::size_t r;
  Real t;
  Real alpha;
  Real beta;
  Point attractor = Point(Real(0));
  Point repeller = Point::infinity();
  Real multiplier;
};

struct ConstructionCertificate {
  std::vector<StageRecord> stages;
  std::vector<Real> log_multiplier_sums;  // Σ_{j<=r} -ln μ_j
  std::size_t tail_start = 0;
  Real max_attractor_gap;  // over r >= tail_start, chordal to the lemma attractor
  Real max_repeller_gap;
  Real slope_fit_error;  // max relative error of -ln μ_r vs |s| t_r over the last 10%
  bool all_hyperbolic = false;
  bool fixed_points_converge = false;
  bool t_rule_divergent = false;
  bool product_diverges = false;
  bool slope_fit_ok = false;

  bool passed() const {
    return all_hyperbolic && fixed_points_converge && product_diverges && slope_fit_ok;
  }
};

inline constexpr double kMultiplierSumThreshold = 5.0;

/// Classifies ψ_0 .. ψ_{num_stages-1}; throws StageNotHyperbolic(r).
ConstructionCertificate certify(const RationalRotationParams& params, std::size_t num_stages);

}  // namespace ramcf::rational
