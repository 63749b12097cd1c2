#include "ramcf/continued_fraction.hpp"

#include <algorithm>

namespace ramcf {

namespace {

const Point kZero = Point(Real(0));

std::vector<Real> angles_of(const std::vector<Point>& values) {
  std::vector<Real> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(cayley_angle(v));
  return out;
}

Real diameter_of(const std::vector<Real>& angles, std::size_t first, std::size_t last_exclusive) {
  return angular_diameter(std::vector<Real>(angles.begin() + static_cast<std::ptrdiff_t>(first),
                                            angles.begin() + static_cast<std::ptrdiff_t>(last_exclusive)));
}

// Keeps p_k, q_k within a moderate exponent range; scaling by 2^e is exact.
void rescale(Real& p1, Real& q1, Real& p0, Real& q0) {
  const long e = std::max({p1.exponent(), q1.exponent(), p0.exponent(), q0.exponent()});
  if (e > 4096 || e < -4096) {
    p1 = ldexp(p1, -e);
    q1 = ldexp(q1, -e);
    p0 = ldexp(p0, -e);
    q0 = ldexp(q0, -e);
  }
}

}  // namespace

Point convergent_by_composition(const CoefficientSource& src, std::size_t n) {
  Map acc;
  for (std::size_t i = 1; i <= n; ++i) acc = compose(acc, t_map(src.coefficient(i)));
  return apply_boundary(acc, kZero);
}

Point convergent_by_recurrence(const CoefficientSource& src, std::size_t n) {
  // Partial numerators -a_k, partial denominators 1: seeds p_{-1} = 1, p_0 = 0, q_{-1} = 0, q_0 = 1.
  Real p_prev(1), p(0), q_prev(0), q(1);
  for (std::size_t k = 1; k <= n; ++k) {
    const Real a = src.coefficient(k);
    Real p_next = p - a * p_prev;
    Real q_next = q - a * q_prev;
    p_prev = std::move(p);
    q_prev = std::move(q);
    p = std::move(p_next);
    q = std::move(q_next);
    rescale(p, q, p_prev, q_prev);
  }
  if (q.is_zero()) return Point::infinity();
  return Point(p / q);
}

ConvergentTrace convergent_trace(const CoefficientSource& src, std::size_t n, Method method) {
  ConvergentTrace trace;
  trace.method = method;
  trace.indices.reserve(n);
  trace.values.reserve(n);
  if (method == Method::Composition) {
    Map acc;
    for (std::size_t i = 1; i <= n; ++i) {
      acc = compose(acc, t_map(src.coefficient(i)));
      trace.indices.push_back(i);
      trace.values.push_back(apply_boundary(acc, kZero));
    }
    return trace;
  }
  Real p_prev(1), p(0), q_prev(0), q(1);
  for (std::size_t k = 1; k <= n; ++k) {
    const Real a = src.coefficient(k);
    Real p_next = p - a * p_prev;
    Real q_next = q - a * q_prev;
    p_prev = std::move(p);
    q_prev = std::move(q);
    p = std::move(p_next);
    q = std::move(q_next);
    rescale(p, q, p_prev, q_prev);
    trace.indices.push_back(k);
    trace.values.push_back(q.is_zero() ? Point::infinity() : Point(p / q));
  }
  return trace;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Converged: return "converged";
    case Verdict::DivergedPeriodic: return "diverged_periodic";
    case Verdict::Undecided: return "undecided";
  }
  return "undecided";
}

namespace {

std::optional<std::size_t> detect_periodicity_angles(const ConvergentTrace& trace, const std::vector<Real>& angles,
                                                     std::size_t max_period, const Real& threshold,
                                                     std::vector<Point>* limits) {
  const std::size_t n = trace.values.size();
  if (max_period == 0 || n < 4 * max_period) {
    throw Error(ErrorCode::InvalidArgument, "periodicity detection needs at least 4 * max_period convergents");
  }
  const std::size_t start = n - n / 4;
  const Real separation = threshold * Real(10);
  for (std::size_t p = 1; p <= max_period; ++p) {
    bool settled = true;
    std::vector<std::size_t> last_of_class(p, n);
    for (std::size_t j = 0; j < p && settled; ++j) {
      std::vector<Real> cls;
      for (std::size_t k = start; k < n; ++k) {
        if (trace.indices[k] % p == j) {
          cls.push_back(angles[k]);
          last_of_class[j] = k;
        }
      }
      settled = !cls.empty() && angular_diameter(std::move(cls)) < threshold;
    }
    if (!settled) continue;
    bool separated = true;
    for (std::size_t i = 0; i < p && separated; ++i) {
      for (std::size_t j = i + 1; j < p && separated; ++j) {
        separated = chordal_distance(trace.values[last_of_class[i]], trace.values[last_of_class[j]]) > separation;
      }
    }
    if (!separated) continue;
    if (limits != nullptr) {
      limits->clear();
      // Ordered by residue of the index modulo p.
      for (std::size_t j = 0; j < p; ++j) limits->push_back(trace.values[last_of_class[j]]);
    }
    return p;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::size_t> detect_periodicity(const ConvergentTrace& trace, std::size_t max_period,
                                              const Real& threshold) {
  return detect_periodicity_angles(trace, angles_of(trace.values), max_period, threshold, nullptr);
}

ConvergenceReport evaluate_trace(const ConvergentTrace& trace, const EvalConfig& config) {
  const std::size_t n = trace.values.size();
  if (config.windows < 3 || n < 100 * config.windows) {
    throw Error(ErrorCode::InvalidArgument, "evaluation needs windows >= 3 and max_n >= 100 * windows");
  }
  const std::vector<Real> angles = angles_of(trace.values);

  ConvergenceReport report;
  const std::size_t tail_start = n / 2;
  const std::size_t tail_len = n - tail_start;
  for (std::size_t w = 0; w < config.windows; ++w) {
    const std::size_t first = tail_start + tail_len * w / config.windows;
    const std::size_t last = tail_start + tail_len * (w + 1) / config.windows;
    report.windows.push_back({trace.indices[first], trace.indices[last - 1], diameter_of(angles, first, last)});
  }
  for (std::size_t denom : {64U, 16U, 4U, 2U}) {
    const std::size_t from = n / denom;
    report.cauchy_profile.push_back({trace.indices[from], diameter_of(angles, from, n)});
  }
  for (std::size_t denom : {4U, 8U, 16U, 32U}) {
    const std::size_t from = n - n / denom;
    report.cauchy_profile.push_back({trace.indices[from], diameter_of(angles, from, n)});
  }

  const Real floor_tol = precision_tolerance<Real>(20);
  auto non_increasing = [&](const Real& prev, const Real& next) { return next <= prev || next <= floor_tol; };
  const auto& ws = report.windows;
  const std::size_t w = ws.size();
  const bool trend = non_increasing(ws[w - 3].diameter, ws[w - 2].diameter) &&
                     non_increasing(ws[w - 2].diameter, ws[w - 1].diameter);
  if (ws[w - 1].diameter < config.conv_threshold && trend) {
    report.verdict = Verdict::Converged;
    report.period = 1;
    report.limit_estimate = trace.values.back();
    report.sub_limits = {trace.values.back()};
    return report;
  }
  std::vector<Point> limits;
  const auto period = detect_periodicity_angles(trace, angles, config.max_period, config.conv_threshold, &limits);
  if (period && *period >= 2) {
    report.verdict = Verdict::DivergedPeriodic;
    report.period = *period;
    report.sub_limits = std::move(limits);
  }
  return report;
}

ConvergenceReport evaluate(const CoefficientSource& src, const EvalConfig& config) {
  return evaluate_trace(convergent_trace(src, config.max_n, Method::Composition), config);
}

bool summable_heuristic(std::span<const Real> terms) {
  // Dyadic blocks [2^j, 2^(j+1)) over 1-based indices.
  std::vector<Real> blocks;
  for (std::size_t lo = 1; 2 * lo - 1 <= terms.size(); lo *= 2) {
    Real sum(0);
    for (std::size_t i = lo; i < 2 * lo; ++i) sum += abs(terms[i - 1]);
    blocks.push_back(sum);
  }
  if (blocks.size() < 2) return blocks.empty() || blocks.back().is_zero();
  const Real& prev = blocks[blocks.size() - 2];
  const Real& last = blocks.back();
  if (prev.is_zero()) return last.is_zero();
  return last / prev < Real("0.9");
}

GillProfile gill_check(const CoefficientSource& src, const Real& a, std::size_t n) {
  GillProfile profile;
  std::vector<Real> increments;
  increments.reserve(n);
  profile.partial_sums.reserve(n);
  Real sum(0);
  for (std::size_t i = 1; i <= n; ++i) {
    increments.push_back(abs(src.coefficient(i) - a));
    sum += increments.back();
    profile.partial_sums.push_back(sum);
  }
  profile.summable = summable_heuristic(increments);
  return profile;
}

}  // namespace ramcf
