#include "ramcf/rational_construction.hpp"

#include <numeric>
#include <random>

namespace ramcf::rational {

namespace {

// Closeness below which two boundary points are treated as equal.
Real coincidence_tolerance() { return default_class_tolerance<Real>(); }

bool near_any(const Point& x, std::span<const Point> set, const Real& radius) {
  for (const auto& y : set) {
    if (chordal_distance(x, y) < radius) return true;
  }
  return false;
}

Real chart_value(const Point& y) { return y.is_infinite() ? Real(0) : Real(1) / y.value(); }

}  // namespace

std::string to_string(TRule rule) {
  switch (rule) {
    case TRule::Harmonic: return "harmonic";
    case TRule::Geometric: return "geometric";
    case TRule::Custom: return "custom";
  }
  return "harmonic";
}

TRule parse_t_rule(const std::string& text) {
  if (text == "harmonic") return TRule::Harmonic;
  if (text == "geometric") return TRule::Geometric;
  if (text == "custom") return TRule::Custom;
  throw Error(ErrorCode::InvalidArgument, "unknown t_rule '" + text + "'");
}

Real RationalRotationParams::t(std::size_t r) const {
  switch (rule) {
    case TRule::Harmonic: return t_scale / Real(r + 1);
    case TRule::Geometric: return ldexp(t_scale, -static_cast<long>(r));
    case TRule::Custom:
      if (r >= r_values.size()) {
        throw Error(ErrorCode::OutOfRange, "no r-value for block " + std::to_string(r));
      }
      return t_scale * r_values[r];
  }
  return Real(0);
}

std::optional<std::size_t> RationalRotationParams::block_count() const {
  if (rule == TRule::Custom) return r_values.size();
  return std::nullopt;
}

std::vector<Point> orbit_of_zero(const Real& a, long q) {
  if (q < 1) throw Error(ErrorCode::InvalidArgument, "orbit length must be positive");
  const Map ta = t_map(a);
  std::vector<Point> orbit{Point(Real(0))};
  for (long l = 1; l < q; ++l) orbit.push_back(apply_boundary(ta, orbit.back()));
  const Real tol = coincidence_tolerance();
  if (chordal_distance(apply_boundary(ta, orbit.back()), orbit.front()) > tol) {
    throw Error(ErrorCode::NotPeriodic, "T_a^q(0) does not return to 0");
  }
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    for (std::size_t j = i + 1; j < orbit.size(); ++j) {
      if (chordal_distance(orbit[i], orbit[j]) <= tol) {
        throw Error(ErrorCode::NotPeriodic, "orbit of 0 has period smaller than q");
      }
    }
  }
  return orbit;
}

Real vector_field_v1(const Real& a, const Point& x) {
  // In the chart u = 1/x the field reads -u/a, which vanishes at u = 0.
  if (x.is_infinite()) return Real(0);
  return x.value() / a;
}

Real vector_field_v2(const Real& a, const Point& x) {
  // In the chart u = 1/x the field reads (a u + 1)/a^2.
  if (x.is_infinite()) return Real(1) / (a * a);
  return -x.value() * (a + x.value()) / (a * a);
}

Map family_map(const Real& a, long q, const Real& alpha, const Real& beta) {
  if (q < 2) throw Error(ErrorCode::InvalidArgument, "family needs q >= 2");
  return compose(compose(t_map(alpha), t_map(beta)), power(t_map(a), static_cast<std::uint64_t>(q - 2)));
}

Real field_by_difference(const Real& a, long q, int which, const Point& x, const Real& h) {
  const Map plus = which == 1 ? family_map(a, q, a + h, a) : family_map(a, q, a, a + h);
  const Map minus = which == 1 ? family_map(a, q, a - h, a) : family_map(a, q, a, a - h);
  const Point yp = apply_boundary(plus, x);
  const Point ym = apply_boundary(minus, x);
  if (x.is_infinite()) return (chart_value(yp) - chart_value(ym)) / (Real(2) * h);
  if (yp.is_infinite() || ym.is_infinite()) {
    throw Error(ErrorCode::InvalidArgument, "difference step crosses the pole");
  }
  return (yp.value() - ym.value()) / (Real(2) * h);
}

SlopeEstimate multiplier_slope(const Real& a, long q, const LemmaSolution& lemma) {
  const Real steps[3] = {Real("1e-3"), Real("1e-4"), Real("1e-5")};
  Real quotients[3];
  for (int k = 0; k < 3; ++k) {
    const Real& h = steps[k];
    const Map psi = family_map(a, q, a + lemma.c1 * h, a + lemma.c2 * h);
    const auto cls = classify(psi);
    if (!is_hyperbolic(cls)) {
      throw Error(ErrorCode::DegenerateSlope, "perturbed family is not hyperbolic at t = " + h.str(3));
    }
    const auto& hyp = std::get<HyperbolicClass<Real>>(cls);
    if (chordal_distance(hyp.attractor, lemma.attractor) > chordal_distance(hyp.attractor, lemma.repeller)) {
      throw Error(ErrorCode::WrongOrientation, "the lemma attractor repels for t > 0");
    }
    quotients[k] = (hyp.multiplier - Real(1)) / h;
  }
  // First-order Richardson extrapolation of D(h) = s + c h.
  auto extrapolate = [&](int i, int j) {
    return (steps[i] * quotients[j] - steps[j] * quotients[i]) / (steps[i] - steps[j]);
  };
  SlopeEstimate est{extrapolate(1, 2), extrapolate(0, 1), Real(0)};
  if (abs(est.value) < Real("1e-6")) {
    throw Error(ErrorCode::DegenerateSlope, "multiplier slope vanishes: " + est.value.str(6));
  }
  if (est.value > Real(0)) throw Error(ErrorCode::WrongOrientation, "multiplier grows for t > 0");
  est.relative_spread = abs(est.value - est.coarse) / abs(est.value);
  return est;
}

LemmaSolution solve_lemma(const Real& a, long q, const Point& repeller) {
  const auto orbit = orbit_of_zero(a, q);
  if (near_any(repeller, orbit, coincidence_tolerance())) {
    throw Error(ErrorCode::RInOrbit, "repeller lies on the T_a-orbit of 0");
  }
  const Real v1 = vector_field_v1(a, repeller);
  const Real v2 = vector_field_v2(a, repeller);

  // The closed forms are used only after they agree with the family itself.
  const Real h = ldexp(Real(1), -(working_precision() / 4));
  const Real fd1 = field_by_difference(a, q, 1, repeller, h);
  const Real fd2 = field_by_difference(a, q, 2, repeller, h);
  const Real check_tol("1e-6");
  if (abs(fd1 - v1) > check_tol * max(Real(1), abs(v1)) || abs(fd2 - v2) > check_tol * max(Real(1), abs(v2))) {
    throw Error(ErrorCode::InvalidArgument, "closed-form fields disagree with finite differences");
  }

  // v = c1 v1 + c2 v2 vanishes at the repeller.
  Real c1 = v2;
  Real c2 = -v1;
  if (abs(c1) <= coincidence_tolerance() && abs(c2) <= coincidence_tolerance()) {
    throw Error(ErrorCode::ExceptionalR, "v1 and v2 both vanish at the repeller");
  }
  // v(x) = qa x^2 + qb x with qa = -c2/a^2 and qb = (c1 - c2)/a; zeros 0 and -qb/qa.
  auto derivative = [&](const Real& c1v, const Real& c2v, const Real& x) {
    return Real(-2) * c2v * x / (a * a) + (c1v - c2v) / a;
  };
  Point attractor = Point(Real(0));
  if (repeller.is_finite() && abs(repeller.value()) <= coincidence_tolerance()) {
    throw Error(ErrorCode::ExceptionalR, "repeller coincides with the common zero 0");
  }
  if (repeller.is_infinite()) {
    // c2 = 0: v = c1 v1 with zeros 0 and ∞; in the chart at ∞, v = -c1 u / a.
    if (c1 > Real(0)) {
      c1 = -c1;
      c2 = -c2;
    }
  } else {
    const Real slope_at_r = derivative(c1, c2, repeller.value());
    if (abs(slope_at_r) <= coincidence_tolerance()) {
      throw Error(ErrorCode::ExceptionalR, "the 1-jet of v vanishes at the repeller");
    }
    if (slope_at_r < Real(0)) {
      c1 = -c1;
      c2 = -c2;
    }
  }
  // Normalise so that v'(attractor) = -1, i.e. μ(t) = 1 - t + O(t^2).
  const Real s_closed = derivative(c1, c2, Real(0));
  if (!(s_closed < Real(0))) throw Error(ErrorCode::ExceptionalR, "no attracting second zero");
  c1 /= -s_closed;
  c2 /= -s_closed;

  LemmaSolution sol{c1, c2, attractor, repeller, Real(0)};
  sol.slope = multiplier_slope(a, q, sol).value;
  return sol;
}

Point choose_R(const Real& a, long q, const Real& margin, std::uint64_t seed, std::span<const Point> extra_forbidden) {
  if (!(margin > Real(0))) throw Error(ErrorCode::InvalidArgument, "margin must be positive");
  std::vector<Point> forbidden = orbit_of_zero(a, q);
  forbidden.insert(forbidden.end(), extra_forbidden.begin(), extra_forbidden.end());
  std::mt19937_64 gen(seed);
  constexpr int kAttempts = 1000;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    // 53 random bits, mapped into the open unit interval.
    const Real u = (Real(gen() >> 11) + Real("0.5")) / ldexp(Real(1), 53);
    const Point candidate(-a * u);
    if (near_any(candidate, forbidden, margin)) continue;
    try {
      solve_lemma(a, q, candidate);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ExceptionalR || e.code() == ErrorCode::DegenerateSlope) continue;
      throw;
    }
    return candidate;
  }
  throw Error(ErrorCode::NoAdmissibleR, "no repeller keeps chordal margin " + margin.str(6));
}

namespace {

std::vector<std::size_t> probe_blocks(TRule rule, std::size_t available) {
  std::vector<std::size_t> probes;
  const std::size_t limit = rule == TRule::Harmonic ? (std::size_t{1} << 20) : rule == TRule::Geometric ? 32 : available;
  for (std::size_t r = 0; r < limit && r < available; r = 2 * r + 1) probes.push_back(r);
  return probes;
}

bool admissible(const RationalRotationParams& params, const std::vector<std::size_t>& probes) {
  const std::size_t positivity_blocks = params.rule == TRule::Custom ? params.r_values.size() : 1;
  for (std::size_t r = 0; r < positivity_blocks; ++r) {
    if (!(params.alpha(r) > Real(0)) || !(params.beta(r) > Real(0))) return false;
  }
  for (std::size_t r : probes) {
    const auto cls = classify(stage_map(params, r));
    if (!is_hyperbolic(cls)) return false;
    const auto& hyp = std::get<HyperbolicClass<Real>>(cls);
    if (chordal_distance(hyp.attractor, params.lemma.attractor) >
        chordal_distance(hyp.attractor, params.lemma.repeller)) {
      return false;
    }
  }
  return true;
}

}  // namespace

Real select_t_scale(const Real& a, long q, const LemmaSolution& lemma, TRule rule, std::span<const Real> r_values,
                    const Real& start) {
  RationalRotationParams params;
  params.a = a;
  params.q = q;
  params.lemma = lemma;
  params.rule = rule;
  params.r_values.assign(r_values.begin(), r_values.end());
  const auto probes = probe_blocks(rule, rule == TRule::Custom ? r_values.size() : std::size_t{1} << 20);
  params.t_scale = start;
  for (int halvings = 0; halvings < 64; ++halvings) {
    if (admissible(params, probes)) return params.t_scale;
    params.t_scale = params.t_scale / Real(2);
  }
  throw Error(ErrorCode::StageNotHyperbolic, "no admissible t-scale found by halving");
}

RationalRotationParams make_params(long p, long q, const BuildOptions& options) {
  if (q < 3 || p <= 0 || 2 * p >= q || std::gcd(p, q) != 1) {
    throw Error(ErrorCode::InvalidArgument, "need coprime p/q in (0, 1/2) with q >= 3");
  }
  RationalRotationParams params;
  params.p = p;
  params.q = q;
  params.a = rho_inverse(Real(p) / Real(q));
  if (!is_projective_identity(power(t_map(params.a), static_cast<std::uint64_t>(q)), precision_tolerance<Real>(20))) {
    throw Error(ErrorCode::NotPeriodic, "T_a^q is not the identity");
  }
  const Point repeller = options.repeller ? *options.repeller : choose_R(params.a, q, options.margin, options.seed);
  params.lemma = solve_lemma(params.a, q, repeller);
  params.rule = options.rule;
  params.r_values = options.r_values;
  if (params.rule == TRule::Custom && params.r_values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "custom t-rule needs r_values");
  }
  params.t_scale = options.t_scale ? *options.t_scale
                                   : select_t_scale(params.a, q, params.lemma, params.rule, params.r_values);
  return params;
}

CoefficientSource build_sequence(const RationalRotationParams& params) {
  const std::size_t checked = params.rule == TRule::Custom ? params.r_values.size() : 1;
  for (std::size_t r = 0; r < checked; ++r) {
    if (!(params.alpha(r) > Real(0)) || !(params.beta(r) > Real(0))) {
      throw Error(ErrorCode::NonPositiveCoefficient,
                  "perturbed coefficient in block " + std::to_string(r) + " is not positive; shrink t");
    }
  }
  auto shared = std::make_shared<const RationalRotationParams>(params);
  std::optional<std::size_t> length;
  if (auto blocks = params.block_count()) length = *blocks * static_cast<std::size_t>(params.q);
  return CoefficientSource::from_generator(
      CoefficientSource::Kind::RationalConstruction, params.a, length, [shared](std::size_t i) -> Real {
        const auto q = static_cast<std::size_t>(shared->q);
        const std::size_t r = (i - 1) / q;
        switch ((i - 1) % q) {
          case 0: return shared->alpha(r);
          case 1: return shared->beta(r);
          default: return shared->a;
        }
      });
}

Map stage_map(const RationalRotationParams& params, std::size_t r) {
  return family_map(params.a, params.q, params.alpha(r), params.beta(r));
}

ConstructionCertificate certify(const RationalRotationParams& params, std::size_t num_stages) {
  if (num_stages < 10) throw Error(ErrorCode::InvalidArgument, "certificate needs at least 10 stages");
  ConstructionCertificate cert;
  cert.stages.reserve(num_stages);
  cert.log_multiplier_sums.reserve(num_stages);
  const Map base = power(t_map(params.a), static_cast<std::uint64_t>(params.q - 2));
  std::vector<Real> neg_logs;
  Real sum(0);
  for (std::size_t r = 0; r < num_stages; ++r) {
    const Real t = params.t(r);
    const Real alpha = params.a + params.lemma.c1 * t;
    const Real beta = params.a + params.lemma.c2 * t;
    const auto cls = classify(compose(compose(t_map(alpha), t_map(beta)), base));
    if (!is_hyperbolic(cls)) {
      throw Error(ErrorCode::StageNotHyperbolic,
                  "stage " + std::to_string(r) + " is " + class_name(cls) + " (t = " + t.str(6) + ")");
    }
    auto hyp = std::get<HyperbolicClass<Real>>(cls);
    neg_logs.push_back(-log(hyp.multiplier));
    sum += neg_logs.back();
    cert.log_multiplier_sums.push_back(sum);
    cert.stages.push_back({r, t, alpha, beta, std::move(hyp.attractor), std::move(hyp.repeller), hyp.multiplier});
  }
  cert.all_hyperbolic = true;

  cert.tail_start = std::min<std::size_t>(50, num_stages / 2);
  cert.max_attractor_gap = Real(0);
  cert.max_repeller_gap = Real(0);
  bool monotone = true;
  Real prev_a("inf"), prev_r("inf");
  const Real floor_tol = precision_tolerance<Real>(40);
  for (std::size_t r = cert.tail_start; r < num_stages; ++r) {
    const Real ga = chordal_distance(cert.stages[r].attractor, params.lemma.attractor);
    const Real gr = chordal_distance(cert.stages[r].repeller, params.lemma.repeller);
    cert.max_attractor_gap = max(cert.max_attractor_gap, ga);
    cert.max_repeller_gap = max(cert.max_repeller_gap, gr);
    // Sampled at dyadic offsets: the gaps should not grow along the tail.
    if (((r - cert.tail_start + 1) & (r - cert.tail_start)) == 0) {
      monotone = monotone && (ga <= prev_a || ga <= floor_tol) && (gr <= prev_r || gr <= floor_tol);
      prev_a = ga;
      prev_r = gr;
    }
  }
  cert.fixed_points_converge = monotone && cert.max_attractor_gap < Real("1e-2") && cert.max_repeller_gap < Real("1e-2");

  const Real s = abs(params.lemma.slope);
  cert.slope_fit_error = Real(0);
  for (std::size_t r = num_stages - std::max<std::size_t>(1, num_stages / 10); r < num_stages; ++r) {
    const Real predicted = s * cert.stages[r].t;
    cert.slope_fit_error = max(cert.slope_fit_error, abs(neg_logs[r] - predicted) / predicted);
  }
  cert.slope_fit_ok = cert.slope_fit_error < Real("0.2");

  switch (params.rule) {
    case TRule::Harmonic: cert.t_rule_divergent = true; break;
    case TRule::Geometric: cert.t_rule_divergent = false; break;
    case TRule::Custom: cert.t_rule_divergent = !summable_heuristic(params.r_values); break;
  }
  cert.product_diverges =
      cert.t_rule_divergent && !summable_heuristic(neg_logs) && sum > Real(kMultiplierSumThreshold);
  return cert;
}

}  // namespace ramcf::rational
