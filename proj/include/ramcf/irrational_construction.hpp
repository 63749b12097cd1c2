#pragma once

// Nested block construction for an irrational rotation number: stages built
// from rational approximations p_n/q_n, avoidance sets M_n, block powers N_n.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ramcf/rational_construction.hpp"

namespace ramcf::irrational {

/// (p + sqrt(d)) / q with integer p, q != 0 and d >= 0. A perfect square d
/// makes the value rational.
struct QuadraticForm {
  long long p = 0;
  long long q = 1;
  long long d = 0;
};

struct RhoSpec {
  enum class Form { Quadratic, Literal };
  Form form = Form::Quadratic;
  QuadraticForm quadratic;
  std::string digits;  // Literal: decimal expansion, read at >= 512 bits

  static RhoSpec golden() { return RhoSpec{Form::Quadratic, {-3, -2, 5}, {}}; }
  Real value() const;
  std::string describe() const;
};

struct Approximation {
  long long p;
  long long q;
  Real a;  // rho_inverse(p/q)
};

/// Partial quotients of rho, exact for the quadratic form; stops early for
/// rational input.
std::vector<long long> partial_quotients(const RhoSpec& rho, std::size_t count);

/// First `count` convergents p/q < 1/2 with q >= 3, q strictly increasing.
std::vector<Approximation> rational_approximations(const RhoSpec& rho, std::size_t count);

struct IrrationalParams {
  RhoSpec rho = RhoSpec::golden();
  std::size_t stages = 3;
  std::optional<std::size_t> r_max;  // auto from the next stage's multiplier
  std::size_t n_cap = 1'000'000;
  std::uint64_t seed = 0;
  Real t_initial = Real("0.01");
  Real orbit_margin = Real("0.05");
  Real m_margin = Real("0.02");
  // Extends the last block until its M-image is this tight, so the finite
  // trace settles well below the schedule bound. Off when empty.
  std::optional<Real> tail_threshold = Real("1e-7");
};

struct StageData {
  std::size_t n = 0;  // 1-based stage index
  long long p = 0;
  long long q = 0;
  Real a_tilde;
  Real t;
  Real alpha;
  Real beta;
  Map psi;
  std::vector<Map> psi_partial;  // ψ_{n,l}, l = 0 .. q-1
  Point attractor = Point(Real(0));
  Point repeller = Point::infinity();
  Real multiplier;
  std::size_t power = 0;           // N_n used in the layout
  std::size_t schedule_power = 0;  // minimal N_n meeting the diameter schedule
  std::vector<Point> m_points;  // empty for the look-ahead stage
  std::size_t r_max = 0;
  Real m_distance;  // min chordal distance from the repeller to m_points
};

/// r_max = ceil(ln(10^3) / (-ln μ)).
std::size_t auto_r_max(const Real& multiplier);

/// {A, ψ_l(A), 0, ψ^r ψ_l(0) : r <= r_max} of the next stage plus the orbit
/// {T_ã^l(A)}, deduplicated.
std::vector<Point> build_M(const StageData& next, std::size_t r_max);

/// Fills ψ_n and its partial products for a given repeller; t halves from
/// t_initial until ψ_n is hyperbolic with the lemma orientation.
StageData build_stage(std::size_t n, const Approximation& approx, const Point& repeller, const Real& t_initial);

/// Smallest N <= n_cap with diam(theta_prefix ψ^N (points)) < bound.
std::size_t choose_N(std::size_t k, const Map& theta_prefix, const Map& psi, const std::vector<Point>& points,
                     const Real& bound, std::size_t n_cap);

struct NestedSequence {
  std::vector<StageData> stages;       // the K certified stages
  std::vector<std::size_t> boundaries;  // n_0 = 0, n_1, .., n_K
  std::vector<Map> thetas;              // θ_0 = Id, θ_k = θ_{k-1} ψ_k^{N_k}
  CoefficientSource source = CoefficientSource::explicit_list({});
};

/// Lays out N_k periods of (α_k, β_k, ã_k, ..) per block.
NestedSequence assemble(std::vector<StageData> stages);

struct ScheduleRow {
  std::size_t k;
  std::size_t power;
  Real diameter;  // diam θ_k(M_k)
  Real bound;     // 2^-k
  bool ok;
};

struct CauchyRow {
  std::size_t k;
  std::size_t n_k;
  std::size_t samples;
  std::size_t worst_m;
  Real max_distance;  // max dist(τ_{n_k}, τ_m) over m in (n_k, n_K]
  Real bound;         // 2^-(k-2)
  Real theta_distance;  // max dist(θ_k(0), θ_s(0)) over s > k
  Real theta_bound;     // 2^-(k-1)
  bool ok;
};

/// Checks every m in (n_k, n_K] for k <= max_k. Throws CauchyViolation.
std::vector<CauchyRow> verify_cauchy(const NestedSequence& seq, std::size_t max_k);

struct Construction {
  IrrationalParams params;
  std::vector<Approximation> approximations;  // K + 1 entries
  StageData lookahead;                        // stage K + 1, used only for M_K
  NestedSequence sequence;
  std::vector<ScheduleRow> schedule;
};

/// Back-to-front stage construction, then forward choice of N_k.
Construction construct(const IrrationalParams& params);

struct IrrationalCertificate {
  std::vector<CauchyRow> cauchy;
  std::string cauchy_error;
  bool all_hyperbolic = false;
  bool margins_ok = false;
  bool schedule_ok = false;
  bool cauchy_ok = false;

  bool passed() const { return all_hyperbolic && margins_ok && schedule_ok && cauchy_ok; }
};

IrrationalCertificate certify(const Construction& c);

}  // namespace ramcf::irrational
