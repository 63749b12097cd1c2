#include "ramcf/irrational_construction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ramcf::irrational {

namespace {

constexpr long kLiteralBits = 512;

long long isqrt(long long d) {
  auto s = static_cast<long long>(std::sqrt(static_cast<long double>(d)));
  while (s * s > d) --s;
  while ((s + 1) * (s + 1) <= d) ++s;
  return s;
}

long long floor_div(long long num, long long den) {
  long long q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

long long checked_mul(long long x, long long y) {
  long long out = 0;
  if (__builtin_mul_overflow(x, y, &out)) throw Error(ErrorCode::OutOfRange, "continued fraction overflows 64 bits");
  return out;
}

long long checked_add(long long x, long long y) {
  long long out = 0;
  if (__builtin_add_overflow(x, y, &out)) throw Error(ErrorCode::OutOfRange, "continued fraction overflows 64 bits");
  return out;
}

std::vector<long long> quotients_rational(long long num, long long den, std::size_t count) {
  std::vector<long long> out;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  while (den != 0 && out.size() < count) {
    const long long a = floor_div(num, den);
    out.push_back(a);
    const long long rem = num - a * den;
    num = den;
    den = rem;
  }
  return out;
}

std::vector<long long> quotients_quadratic(QuadraticForm f, std::size_t count) {
  // Keep q | d - p^2 so every complete quotient stays of the form (p + sqrt d)/q.
  if ((f.d - f.p * f.p) % f.q != 0) {
    const long long aq = f.q < 0 ? -f.q : f.q;
    f.p = checked_mul(f.p, aq);
    f.d = checked_mul(checked_mul(f.d, aq), aq);
    f.q = checked_mul(f.q, aq);
  }
  const long long s = isqrt(f.d);
  std::vector<long long> out;
  while (out.size() < count) {
    // floor((p + sqrt d)/q) for irrational sqrt d.
    const long long a = f.q > 0 ? floor_div(f.p + s, f.q) : floor_div(-f.p - s - 1, -f.q);
    out.push_back(a);
    const long long p_next = checked_add(checked_mul(a, f.q), -f.p);
    f.q = (f.d - checked_mul(p_next, p_next)) / f.q;
    f.p = p_next;
  }
  return out;
}

std::vector<long long> quotients_literal(const std::string& digits, std::size_t count) {
  PrecisionScope scope(std::max(kLiteralBits, working_precision()));
  Real x{std::string_view(digits)};
  std::size_t significant = 0;
  for (char c : digits) {
    if (c >= '0' && c <= '9') ++significant;
    if (c == 'e' || c == 'E') break;
  }
  // Convergent denominators are trusted while k^2 stays well below the
  // resolution of both the literal and the working precision.
  const double log2_limit =
      std::min(static_cast<double>(working_precision()) / 2 - 8, 3.3219 * static_cast<double>(significant) / 2 - 4);
  std::vector<long long> out;
  long long k_prev = 0, k = 1;
  while (out.size() < count) {
    const Real fl = floor(x);
    const long long a = fl.to_long();
    const long long k_next = checked_add(checked_mul(a, k), k_prev);
    if (!out.empty() && std::log2(static_cast<double>(k_next)) > log2_limit) break;
    out.push_back(a);
    k_prev = k;
    k = k_next;
    const Real frac = x - fl;
    if (frac.is_zero()) break;
    x = Real(1) / frac;
  }
  return out;
}

Real min_distance(const Point& x, const std::vector<Point>& set) {
  Real best = Real::pi();
  for (const auto& y : set) best = min(best, chordal_distance(x, y));
  return best;
}

std::vector<Point> dedupe(std::vector<Point> points) {
  if (points.size() < 2) return points;
  const Real tol = default_class_tolerance<Real>();
  std::vector<std::pair<Real, std::size_t>> keyed;
  keyed.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) keyed.emplace_back(cayley_angle(points[i]), i);
  std::sort(keyed.begin(), keyed.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  std::vector<Point> out;
  Real last = keyed.front().first;
  out.push_back(points[keyed.front().second]);
  for (std::size_t i = 1; i < keyed.size(); ++i) {
    if (keyed[i].first - last > tol) {
      out.push_back(points[keyed[i].second]);
      last = keyed[i].first;
    }
  }
  // Angles wrap at 2π.
  const Real wrap = Real(2) * Real::pi() - cayley_angle(out.back()) + cayley_angle(out.front());
  if (out.size() > 1 && wrap <= tol) out.pop_back();
  return out;
}

Real image_diameter(const Map& m, const std::vector<Point>& points) {
  std::vector<Point> images;
  images.reserve(points.size());
  for (const auto& x : points) images.push_back(apply_boundary(m, x));
  return chordal_diameter<Real>(images);
}

}  // namespace

Real RhoSpec::value() const {
  if (form == Form::Literal) return Real(std::string_view(digits));
  if (quadratic.q == 0 || quadratic.d < 0) throw Error(ErrorCode::InvalidArgument, "bad quadratic form");
  return (Real(quadratic.p) + sqrt(Real(quadratic.d))) / Real(quadratic.q);
}

std::string RhoSpec::describe() const {
  if (form == Form::Literal) return digits;
  return "(" + std::to_string(quadratic.p) + " + sqrt(" + std::to_string(quadratic.d) + "))/" +
         std::to_string(quadratic.q);
}

std::vector<long long> partial_quotients(const RhoSpec& rho, std::size_t count) {
  if (rho.form == RhoSpec::Form::Literal) return quotients_literal(rho.digits, count);
  const QuadraticForm& f = rho.quadratic;
  if (f.q == 0 || f.d < 0) throw Error(ErrorCode::InvalidArgument, "quadratic form needs q != 0 and d >= 0");
  const long long s = isqrt(f.d);
  if (s * s == f.d) return quotients_rational(f.p + s, f.q, count);
  return quotients_quadratic(f, count);
}

std::vector<Approximation> rational_approximations(const RhoSpec& rho, std::size_t count) {
  const Real value = rho.value();
  if (!(value > Real(0)) || !(value < Real("0.5"))) {
    throw Error(ErrorCode::OutOfRange, "rotation number must lie in (0, 1/2), got " + value.str(10));
  }
  const auto quotients = partial_quotients(rho, count + 64);
  std::vector<Approximation> out;
  long long h_prev = 0, h = 1, k_prev = 1, k = 0;
  for (long long a : quotients) {
    const long long h_next = checked_add(checked_mul(a, h), h_prev);
    const long long k_next = checked_add(checked_mul(a, k), k_prev);
    h_prev = h;
    k_prev = k;
    h = h_next;
    k = k_next;
    const bool usable = h > 0 && k >= 3 && 2 * h < k && (out.empty() || k > out.back().q);
    if (usable) out.push_back({h, k, rho_inverse(Real(h) / Real(k))});
    if (out.size() == count) return out;
  }
  throw Error(ErrorCode::NotEnoughConvergents, "only " + std::to_string(out.size()) + " usable convergents of " +
                                                   rho.describe() + ", " + std::to_string(count) + " requested");
}

std::size_t auto_r_max(const Real& multiplier) {
  if (!(multiplier > Real(0)) || !(multiplier < Real(1))) {
    throw Error(ErrorCode::NotHyperbolic, "multiplier outside (0, 1)");
  }
  const Real r = log(Real(1000)) / -log(multiplier);
  return static_cast<std::size_t>(floor(r).to_long()) + 1;
}

std::vector<Point> build_M(const StageData& next, std::size_t r_max) {
  std::vector<Point> points{next.attractor, Point(Real(0))};
  for (const auto& partial : next.psi_partial) points.push_back(apply_boundary(partial, next.attractor));
  for (const auto& partial : next.psi_partial) {
    Point y = apply_boundary(partial, Point(Real(0)));
    for (std::size_t r = 0; r <= r_max; ++r) {
      points.push_back(y);
      y = apply_boundary(next.psi, y);
    }
  }
  const Map ta = t_map(next.a_tilde);
  Point y = next.attractor;
  for (long long l = 0; l < next.q; ++l) {
    points.push_back(y);
    y = apply_boundary(ta, y);
  }
  return dedupe(std::move(points));
}

StageData build_stage(std::size_t n, const Approximation& approx, const Point& repeller, const Real& t_initial) {
  const auto lemma = rational::solve_lemma(approx.a, approx.q, repeller);
  StageData st;
  st.n = n;
  st.p = approx.p;
  st.q = approx.q;
  st.a_tilde = approx.a;
  Real t = t_initial;
  for (int halvings = 0; halvings < 40; ++halvings, t = t / Real(2)) {
    const Real alpha = approx.a + lemma.c1 * t;
    const Real beta = approx.a + lemma.c2 * t;
    if (!(alpha > Real(0)) || !(beta > Real(0))) continue;
    const Map psi = rational::family_map(approx.a, approx.q, alpha, beta);
    const auto cls = classify(psi);
    if (!is_hyperbolic(cls)) continue;
    const auto& hyp = std::get<HyperbolicClass<Real>>(cls);
    if (chordal_distance(hyp.attractor, lemma.attractor) > chordal_distance(hyp.attractor, lemma.repeller)) continue;
    st.t = t;
    st.alpha = alpha;
    st.beta = beta;
    st.psi = psi;
    st.attractor = hyp.attractor;
    st.repeller = hyp.repeller;
    st.multiplier = hyp.multiplier;
    const Map ta = t_map(approx.a);
    st.psi_partial = {Map::identity(), t_map(alpha), compose(t_map(alpha), t_map(beta))};
    for (long long l = 3; l < approx.q; ++l) st.psi_partial.push_back(compose(st.psi_partial.back(), ta));
    return st;
  }
  throw Error(ErrorCode::StageNotHyperbolic, "stage " + std::to_string(n) + " never became hyperbolic");
}

std::size_t choose_N(std::size_t k, const Map& theta_prefix, const Map& psi, const std::vector<Point>& points,
                     const Real& bound, std::size_t n_cap) {
  auto diameter = [&](std::size_t n) { return image_diameter(compose(theta_prefix, power(psi, n)), points); };
  const Real d0 = diameter(0);
  if (d0 < bound) return 0;
  std::size_t lo = 0, hi = 1;
  while (!(diameter(hi) < bound)) {
    lo = hi;
    if (hi > n_cap / 2) {
      Real estimate(0);
      const auto cls = classify(psi);
      if (is_hyperbolic(cls)) {
        estimate = log(d0 / bound) / -log(std::get<HyperbolicClass<Real>>(cls).multiplier);
      }
      throw Error(ErrorCode::PowerCapExceeded, "stage " + std::to_string(k) + " needs N > " + std::to_string(n_cap) +
                                                   " (contraction estimate " + estimate.str(6) + ")");
    }
    hi *= 2;
  }
  // Binary search on (lo, hi], assuming the diameter decreases with N.
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (diameter(mid) < bound) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

NestedSequence assemble(std::vector<StageData> stages) {
  if (stages.empty()) throw Error(ErrorCode::InvalidArgument, "no stages to assemble");
  NestedSequence seq;
  seq.boundaries = {0};
  seq.thetas = {Map::identity()};
  for (const auto& st : stages) {
    seq.boundaries.push_back(seq.boundaries.back() + static_cast<std::size_t>(st.q) * st.power);
    seq.thetas.push_back(compose(seq.thetas.back(), power(st.psi, st.power)));
  }
  struct Block {
    std::size_t start;
    std::size_t q;
    Real alpha, beta, a;
  };
  auto blocks = std::make_shared<std::vector<Block>>();
  for (std::size_t k = 0; k < stages.size(); ++k) {
    blocks->push_back({seq.boundaries[k], static_cast<std::size_t>(stages[k].q), stages[k].alpha, stages[k].beta,
                       stages[k].a_tilde});
  }
  auto ends = std::make_shared<std::vector<std::size_t>>(seq.boundaries.begin() + 1, seq.boundaries.end());
  seq.source = CoefficientSource::from_generator(
      CoefficientSource::Kind::IrrationalConstruction, stages.back().a_tilde, seq.boundaries.back(),
      [blocks, ends](std::size_t i) -> Real {
        const auto k = static_cast<std::size_t>(std::lower_bound(ends->begin(), ends->end(), i) - ends->begin());
        const Block& b = (*blocks)[k];
        switch ((i - b.start - 1) % b.q) {
          case 0: return b.alpha;
          case 1: return b.beta;
          default: return b.a;
        }
      });
  seq.stages = std::move(stages);
  return seq;
}

std::vector<CauchyRow> verify_cauchy(const NestedSequence& seq, std::size_t max_k) {
  const std::size_t K = seq.stages.size();
  if (max_k < 1 || max_k > K) throw Error(ErrorCode::InvalidArgument, "max_k must lie in [1, K]");
  const std::size_t n_max = seq.boundaries[max_k];
  const auto trace = convergent_trace(seq.source, n_max, Method::Composition);
  auto tau = [&](std::size_t n) { return n == 0 ? Point(Real(0)) : trace.values[n - 1]; };
  std::vector<CauchyRow> rows;
  for (std::size_t k = 1; k <= max_k; ++k) {
    CauchyRow row{k, seq.boundaries[k], 0, 0, Real(0), ldexp(Real(1), 2 - static_cast<long>(k)), Real(0),
                  ldexp(Real(1), 1 - static_cast<long>(k)), true};
    const Point anchor = tau(row.n_k);
    for (std::size_t m = row.n_k + 1; m <= n_max; ++m) {
      const Real d = chordal_distance(anchor, tau(m));
      ++row.samples;
      if (d > row.max_distance) {
        row.max_distance = d;
        row.worst_m = m;
      }
    }
    const Point theta_k = apply_boundary(seq.thetas[k], Point(Real(0)));
    for (std::size_t s = k + 1; s <= max_k; ++s) {
      row.theta_distance = max(row.theta_distance, chordal_distance(theta_k, apply_boundary(seq.thetas[s], Point(Real(0)))));
    }
    row.ok = row.max_distance < row.bound && row.theta_distance < row.theta_bound;
    if (!row.ok) {
      const auto& st = seq.stages[k - 1];
      throw Error(ErrorCode::CauchyViolation,
                  "k = " + std::to_string(k) + ", m = " + std::to_string(row.worst_m) + ": distance " +
                      row.max_distance.str(6) + " vs bound " + row.bound.str(6) + " (theta distance " +
                      row.theta_distance.str(6) + "); N_k = " + std::to_string(st.power) + ", M_k truncated at r_max = " +
                      std::to_string(st.r_max) + " with " + std::to_string(st.m_points.size()) + " points");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Construction construct(const IrrationalParams& params) {
  if (params.stages < 1) throw Error(ErrorCode::InvalidArgument, "need at least one stage");
  Construction c;
  c.params = params;
  const std::size_t K = params.stages;
  c.approximations = rational_approximations(params.rho, K + 1);

  // One repeller for the look-ahead stage, kept clear of every stage's orbit
  // so earlier stages can usually reuse it.
  std::vector<std::vector<Point>> orbits;
  std::vector<Point> all_orbits;
  for (const auto& ap : c.approximations) {
    orbits.push_back(rational::orbit_of_zero(ap.a, ap.q));
    all_orbits.insert(all_orbits.end(), orbits.back().begin(), orbits.back().end());
  }
  const auto& last = c.approximations.back();
  const Point r_last = rational::choose_R(last.a, last.q, params.orbit_margin, params.seed, all_orbits);
  c.lookahead = build_stage(K + 1, last, r_last, params.t_initial);

  std::vector<StageData> stages(K);
  for (std::size_t n = K; n >= 1; --n) {
    const StageData& next = n == K ? c.lookahead : stages[n];
    const std::size_t r_max = params.r_max ? *params.r_max : auto_r_max(next.multiplier);
    std::vector<Point> m_points = build_M(next, r_max);
    const auto& ap = c.approximations[n - 1];
    std::optional<StageData> built;
    const Point& preferred = next.repeller;
    if (min_distance(preferred, orbits[n - 1]) >= params.orbit_margin &&
        min_distance(preferred, m_points) >= params.m_margin) {
      try {
        built = build_stage(n, ap, preferred, params.t_initial);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ExceptionalR && e.code() != ErrorCode::DegenerateSlope &&
            e.code() != ErrorCode::WrongOrientation && e.code() != ErrorCode::StageNotHyperbolic) {
          throw;
        }
      }
    }
    if (!built) {
      const Real margin = max(params.orbit_margin, params.m_margin);
      const Point r = rational::choose_R(ap.a, ap.q, margin, params.seed + n, m_points);
      built = build_stage(n, ap, r, params.t_initial);
    }
    built->r_max = r_max;
    built->m_distance = min_distance(built->repeller, m_points);
    built->m_points = std::move(m_points);
    stages[n - 1] = std::move(*built);
  }

  Map theta = Map::identity();
  for (std::size_t k = 1; k <= K; ++k) {
    StageData& st = stages[k - 1];
    const Real bound = ldexp(Real(1), -static_cast<long>(k));
    st.schedule_power = choose_N(k, theta, st.psi, st.m_points, bound, params.n_cap);
    st.power = st.schedule_power;
    if (k == K && params.tail_threshold) {
      const std::size_t tail = choose_N(k, theta, st.psi, st.m_points, *params.tail_threshold, params.n_cap);
      st.power = std::max(st.power, tail + tail / 4);
    }
    theta = compose(theta, power(st.psi, st.power));
    const Real diam = image_diameter(theta, st.m_points);
    c.schedule.push_back({k, st.power, diam, bound, diam < bound});
  }
  c.sequence = assemble(std::move(stages));
  return c;
}

IrrationalCertificate certify(const Construction& c) {
  IrrationalCertificate cert;
  cert.all_hyperbolic = std::all_of(c.sequence.stages.begin(), c.sequence.stages.end(),
                                    [](const StageData& st) { return is_hyperbolic(classify(st.psi)); });
  cert.margins_ok = std::all_of(c.sequence.stages.begin(), c.sequence.stages.end(),
                                [&](const StageData& st) { return st.m_distance >= c.params.m_margin; });
  cert.schedule_ok = !c.schedule.empty() &&
                     std::all_of(c.schedule.begin(), c.schedule.end(), [](const ScheduleRow& r) { return r.ok; });
  try {
    cert.cauchy = verify_cauchy(c.sequence, c.sequence.stages.size());
    cert.cauchy_ok = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::CauchyViolation) throw;
    cert.cauchy_error = e.what();
  }
  return cert;
}

}  // namespace ramcf::irrational
