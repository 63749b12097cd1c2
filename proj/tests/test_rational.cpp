#include <gtest/gtest.h>

#include <random>

#include "ramcf/rational_construction.hpp"

using namespace ramcf;
using namespace ramcf::rational;

namespace {

struct Triple {
  long p;
  long q;
  const char* a;
};
constexpr Triple kTriples[] = {{1, 3, "1"}, {1, 4, "0.5"}, {1, 6, "1/3"}};

Real real(const char* text) { return Real(std::string_view(text)); }

// T_α(T_β(T_a^(q-2)(x))) by pointwise iteration.
Real family_value(const Real& a, long q, const Real& alpha, const Real& beta, const Real& x) {
  Real y = x;
  auto step = [&y](const Real& b) { y = -b / (y + Real(1)); };
  for (long k = 0; k < q - 2; ++k) step(a);
  step(beta);
  step(alpha);
  return y;
}

Real central_difference(const Real& a, long q, int which, const Real& x) {
  const Real h("1e-30");
  const Real da = which == 1 ? h : Real(0);
  const Real db = which == 2 ? h : Real(0);
  return (family_value(a, q, a + da, a + db, x) - family_value(a, q, a - da, a - db, x)) / (Real(2) * h);
}

RationalRotationParams default_params(long p, long q, std::uint64_t seed = 0) {
  BuildOptions o;
  o.seed = seed;
  return make_params(p, q, o);
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Orbit, Examples) {
  const auto o1 = orbit_of_zero(Real(1), 3);
  ASSERT_EQ(o1.size(), 3u);
  EXPECT_EQ(o1[0].value(), Real(0));
  EXPECT_EQ(o1[1].value(), Real(-1));
  EXPECT_TRUE(o1[2].is_infinite());
  const auto o2 = orbit_of_zero(Real("0.5"), 4);
  ASSERT_EQ(o2.size(), 4u);
  EXPECT_EQ(o2[1].value(), Real("-0.5"));
  EXPECT_EQ(o2[2].value(), Real(-1));
  EXPECT_TRUE(o2[3].is_infinite());
  const Real third = Real(1) / Real(3);
  const auto o3 = orbit_of_zero(third, 6);
  ASSERT_EQ(o3.size(), 6u);
  const Point expected[] = {Point(Real(0)), Point(-third), Point(Real("-0.5")), Point(Real(-2) / Real(3)),
                            Point(Real(-1)), Point::infinity()};
  for (int l = 0; l < 6; ++l) EXPECT_LT(chordal_distance(o3[l], expected[l]), ldexp(Real(1), -200)) << l;
  for (std::size_t i = 0; i < o3.size(); ++i) {
    for (std::size_t j = i + 1; j < o3.size(); ++j) EXPECT_GT(chordal_distance(o3[i], o3[j]), Real("0.1"));
  }
  EXPECT_EQ(code_of([] { (void)orbit_of_zero(Real("0.7"), 3); }), ErrorCode::NotPeriodic);
}

TEST(Fields, ClosedFormsSpotValues) {
  EXPECT_EQ(vector_field_v1(Real(1), Point(Real(0))), Real(0));
  EXPECT_EQ(vector_field_v1(Real(1), Point(Real(2))), Real(2));
  EXPECT_EQ(vector_field_v1(Real(1), Point(Real(-3))), Real(-3));
  EXPECT_EQ(vector_field_v2(Real(1), Point(Real(0))), Real(0));
  EXPECT_EQ(vector_field_v2(Real(1), Point(Real(-1))), Real(0));
  EXPECT_EQ(vector_field_v2(Real(1), Point(Real(1))), Real(-2));
}

TEST(Fields, MatchIndependentFiniteDifferences) {
  PrecisionScope scope(256);
  std::mt19937_64 gen(17);
  for (const auto& tr : kTriples) {
    const Real a = real(tr.a);
    const auto orbit = orbit_of_zero(a, tr.q);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    int sampled = 0;
    while (sampled < 20) {
      const Point x(Real(u(gen)));
      bool near_pole = false;
      for (const auto& o : orbit) near_pole = near_pole || chordal_distance(o, x) < Real("0.05");
      if (near_pole) continue;
      for (int which : {1, 2}) {
        const Real closed = which == 1 ? vector_field_v1(a, x) : vector_field_v2(a, x);
        const Real fd = central_difference(a, tr.q, which, x.value());
        EXPECT_LT((abs(closed - fd) / max(abs(fd), Real("1e-12"))).to_double(), 1e-6) << tr.a << " " << which;
        // The library's own difference helper agrees as well.
        EXPECT_LT(abs(field_by_difference(a, tr.q, which, x, Real("1e-20")) - fd).to_double(), 1e-12);
      }
      ++sampled;
    }
  }
}

TEST(Fields, V2IsPushForwardOfV1) {
  const Real a("0.5");
  for (double xv : {-3.0, -0.7, 0.4, 2.0}) {
    const Point x{Real(xv)};
    const Point pre = apply_boundary(inverse(t_map(a)), x);
    const Real push = derivative_at(t_map(a), pre) * vector_field_v1(a, pre);
    EXPECT_LT(abs(push - vector_field_v2(a, x)).to_double(), 1e-60) << xv;
  }
}

TEST(Lemma, RationalExampleRTwo) {
  const auto sol = solve_lemma(Real(1), 3, Point(Real(2)));
  EXPECT_LT(abs(sol.c1 / sol.c2 - Real(3)).to_double(), 1e-60);
  EXPECT_EQ(sol.attractor.value(), Real(0));
  // v vanishes at R.
  const Real v = sol.c1 * vector_field_v1(Real(1), Point(Real(2))) + sol.c2 * vector_field_v2(Real(1), Point(Real(2)));
  EXPECT_LT(abs(v).to_double(), 1e-60);
  EXPECT_LT(sol.slope.to_double(), -1e-3);
}

TEST(Lemma, RepellerSideAndAttractorSide) {
  for (const auto& tr : kTriples) {
    const Real a = real(tr.a);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Point R = choose_R(a, tr.q, Real("0.05"), seed);
      const auto sol = solve_lemma(a, tr.q, R);
      // v(x) = c1 x/a - c2 x(a+x)/a^2, differentiated by a symmetric difference.
      auto v = [&](const Real& x) { return sol.c1 * x / a - sol.c2 * x * (a + x) / (a * a); };
      const Real h("1e-20");
      const Real d_r = (v(R.value() + h) - v(R.value() - h)) / (Real(2) * h);
      const Real d_a = (v(h) - v(-h)) / (Real(2) * h);
      EXPECT_GT(d_r, Real(0));
      EXPECT_LT(d_a, Real(0));
      EXPECT_GT(abs(sol.slope), Real("1e-6"));
    }
  }
}

TEST(Lemma, HalfWithRepellerOne) {
  const Real a("0.5");
  const auto sol = solve_lemma(a, 4, Point(Real(1)));
  EXPECT_EQ(sol.attractor.value(), Real(0));
  const Real t("1e-3");
  const auto cls = classify(family_map(a, 4, a + sol.c1 * t, a + sol.c2 * t));
  ASSERT_TRUE(is_hyperbolic(cls));
  const auto& h = std::get<HyperbolicClass<Real>>(cls);
  EXPECT_LT(chordal_distance(h.repeller, Point(Real(1))).to_double(), 1e-2);
  EXPECT_LT(chordal_distance(h.attractor, Point(Real(0))).to_double(), 1e-2);
}

TEST(Lemma, RejectsOrbitAndCommonZero) {
  EXPECT_EQ(code_of([] { (void)solve_lemma(Real(1), 3, Point(Real(-1))); }), ErrorCode::RInOrbit);
  EXPECT_EQ(code_of([] { (void)solve_lemma(Real(1), 3, Point(Real(0))); }), ErrorCode::RInOrbit);
  EXPECT_EQ(code_of([] { (void)solve_lemma(Real(1), 3, Point::infinity()); }), ErrorCode::RInOrbit);
}

TEST(Slope, RichardsonStableAndNonZero) {
  for (const auto& tr : kTriples) {
    const Real a = real(tr.a);
    const auto sol = solve_lemma(a, tr.q, choose_R(a, tr.q, Real("0.05"), 0));
    const auto est = multiplier_slope(a, tr.q, sol);
    EXPECT_GT(abs(est.value), Real("1e-3"));
    EXPECT_LT(est.relative_spread.to_double(), 0.01);
    EXPECT_LT(est.value, Real(0));
  }
}

TEST(Slope, ScalesLinearlyAndRejectsFlippedSign) {
  const Real a(1);
  auto sol = solve_lemma(a, 3, Point(Real(2)));
  const Real s = multiplier_slope(a, 3, sol).value;
  auto scaled = sol;
  scaled.c1 *= Real(2);
  scaled.c2 *= Real(2);
  EXPECT_LT(abs(multiplier_slope(a, 3, scaled).value / s - Real(2)).to_double(), 0.01);
  auto flipped = sol;
  flipped.c1 = -flipped.c1;
  flipped.c2 = -flipped.c2;
  EXPECT_EQ(code_of([&] { (void)multiplier_slope(a, 3, flipped); }), ErrorCode::WrongOrientation);
  // Direct evaluation: the flipped family expands at the lemma attractor.
  const Real t("1e-3");
  const Map psi = family_map(a, 3, a + flipped.c1 * t, a + flipped.c2 * t);
  EXPECT_GT(derivative_at(psi, Point(Real(0))), Real(1));
}

TEST(ChooseR, DeterministicWithMargin) {
  for (const auto& tr : kTriples) {
    const Real a = real(tr.a);
    const Point r1 = choose_R(a, tr.q, Real("0.05"), 42);
    const Point r2 = choose_R(a, tr.q, Real("0.05"), 42);
    EXPECT_EQ(r1.value(), r2.value());
    for (const auto& o : orbit_of_zero(a, tr.q)) EXPECT_GE(chordal_distance(r1, o), Real("0.05"));
    EXPECT_GE(chordal_distance(r1, Point::infinity()), Real("0.05"));
  }
  EXPECT_NE(choose_R(Real(1), 3, Real("0.05"), 1).value(), choose_R(Real(1), 3, Real("0.05"), 2).value());
  EXPECT_EQ(code_of([] { (void)choose_R(Real(1), 3, Real("3.2"), 0); }), ErrorCode::NoAdmissibleR);
  const Point extra(Real("-0.5"));
  const Point r = choose_R(Real(1), 3, Real("0.3"), 0, std::span<const Point>(&extra, 1));
  EXPECT_GE(chordal_distance(r, extra), Real("0.3"));
}

TEST(BuildSequence, ZeroPerturbationIsConstant) {
  BuildOptions o;
  o.rule = TRule::Custom;
  o.r_values.assign(10, Real(0));
  o.t_scale = Real(1);
  const auto params = make_params(1, 3, o);
  const auto src = build_sequence(params);
  for (std::size_t i = 1; i <= 30; ++i) EXPECT_EQ(src.coefficient(i), params.a);
  EXPECT_LT(abs(params.a - Real(1)), ldexp(Real(1), -240));
  EXPECT_TRUE(is_projective_identity(stage_map(params, 3), precision_tolerance<Real>(20)));
  EXPECT_EQ(code_of([&] { (void)certify(params, 10); }), ErrorCode::StageNotHyperbolic);
  try {
    (void)certify(params, 10);
  } catch (const Error& e) {
    EXPECT_NE(e.detail().find("stage 0 "), std::string::npos) << e.what();
  }
}

TEST(BuildSequence, UnrollsBlocks) {
  const auto params = default_params(1, 3);
  const auto src = build_sequence(params);
  for (std::size_t r = 0; r < 20; ++r) {
    const Real t = params.t_scale / Real(r + 1);
    EXPECT_EQ(src.coefficient(3 * r + 1), params.a + params.lemma.c1 * t);
    EXPECT_EQ(src.coefficient(3 * r + 2), params.a + params.lemma.c2 * t);
    EXPECT_EQ(src.coefficient(3 * r + 3), params.a);
    EXPECT_GT(src.coefficient(3 * r + 1), Real(0));
    EXPECT_GT(src.coefficient(3 * r + 2), Real(0));
  }
  EXPECT_EQ(*src.declared_limit(), params.a);
  EXPECT_EQ(src.kind(), CoefficientSource::Kind::RationalConstruction);
}

TEST(BuildSequence, RejectsNonPositiveCoefficients) {
  // At R = 2 both lemma coefficients are negative.
  BuildOptions o;
  o.repeller = Point(Real(2));
  o.t_scale = Real(1000);
  const auto params = make_params(1, 3, o);
  ASSERT_LT(params.lemma.c1, Real(0));
  EXPECT_EQ(code_of([&] { (void)build_sequence(params); }), ErrorCode::NonPositiveCoefficient);
}

TEST(StageMap, HyperbolicAndFirstOrderTrace) {
  const Real a(1);
  const auto sol = solve_lemma(a, 3, Point(Real(2)));
  const Real t("1e-3");
  EXPECT_TRUE(is_hyperbolic(classify(family_map(a, 3, a + sol.c1 * t, a + sol.c2 * t))));
  const Real tp = abs(family_map(a, 3, a + sol.c1 * t, a + sol.c2 * t).trace());
  const Real tm = abs(family_map(a, 3, a - sol.c1 * t, a - sol.c2 * t).trace());
  // |trace| - 2 is quadratic in μ - 1 and hence in t; the signed trace is first order.
  const Real sp = family_map(a, 3, a + sol.c1 * t, a + sol.c2 * t).trace();
  const Real sm = family_map(a, 3, a - sol.c1 * t, a - sol.c2 * t).trace();
  EXPECT_GT(abs(tp - tm).to_double() + abs(sp - sm).to_double(), 0.0);
}

TEST(Certify, HarmonicThousandStagesLinearRegime) {
  // t_r = 1/(r+1) with the lemma scaled to |c2| = 1, which keeps every t_r in
  // the regime where -ln μ(t) ≈ |s| t.
  BuildOptions o;
  o.t_scale = Real(1);
  auto params = make_params(1, 3, o);
  const Real scale = abs(params.lemma.c2);
  params.lemma.c1 /= scale;
  params.lemma.c2 /= scale;
  params.lemma.slope = multiplier_slope(params.a, params.q, params.lemma).value;
  const auto cert = certify(params, 1000);
  EXPECT_TRUE(cert.all_hyperbolic);
  double harmonic = 0;
  for (int r = 1; r <= 1000; ++r) harmonic += 1.0 / r;
  const double expected = std::abs(params.lemma.slope.to_double()) * harmonic;
  EXPECT_NEAR(cert.log_multiplier_sums.back().to_double() / expected, 1.0, 0.15);
}

TEST(Certify, DefaultScheduleExceedsThreshold) {
  const auto params = default_params(1, 3);
  const auto cert = certify(params, 1000);
  EXPECT_TRUE(cert.passed());
  EXPECT_GT(cert.log_multiplier_sums.back().to_double(), kMultiplierSumThreshold);
  EXPECT_LT(cert.max_attractor_gap.to_double(), 1e-2);
  EXPECT_LT(cert.max_repeller_gap.to_double(), 1e-2);
  // Tail stages follow the first-order model.
  for (std::size_t r = 900; r < 1000; ++r) {
    const Real step = cert.log_multiplier_sums[r] - cert.log_multiplier_sums[r - 1];
    EXPECT_NEAR((step / (abs(params.lemma.slope) * params.t(r))).to_double(), 1.0, 0.2);
  }
}

TEST(Certify, GeometricStaysBounded) {
  BuildOptions o;
  o.rule = TRule::Geometric;
  const auto params = make_params(1, 3, o);
  const auto cert = certify(params, 40);
  EXPECT_TRUE(cert.all_hyperbolic);
  EXPECT_FALSE(cert.t_rule_divergent);
  EXPECT_FALSE(cert.product_diverges);
  const double bound = 2.0 * std::abs(params.lemma.slope.to_double()) * params.t_scale.to_double() * 1.5;
  EXPECT_LT(cert.log_multiplier_sums.back().to_double(), bound);
  const double last = (cert.log_multiplier_sums.back() - cert.log_multiplier_sums[38]).to_double();
  EXPECT_LT(last, 1e-9);
}

TEST(Certify, NeedsTenStages) {
  const auto params = default_params(1, 3);
  EXPECT_THROW((void)certify(params, 9), Error);
}

TEST(Certify, AllTriplesPass) {
  for (const auto& tr : kTriples) {
    const auto params = default_params(tr.p, tr.q);
    const auto cert = certify(params, 1000);
    EXPECT_TRUE(cert.passed()) << tr.a;
    EXPECT_GT(cert.log_multiplier_sums.back().to_double(), 5.0) << tr.a;
    for (std::size_t r = 50; r < cert.stages.size(); ++r) {
      ASSERT_LT(chordal_distance(cert.stages[r].attractor, params.lemma.attractor).to_double(), 1e-2) << tr.a;
      ASSERT_LT(chordal_distance(cert.stages[r].repeller, params.lemma.repeller).to_double(), 1e-2) << tr.a;
    }
  }
}

TEST(UniformContraction, ComposedStagesCollapseCompactArcs) {
  const auto params = default_params(1, 3);
  const Point R = params.lemma.repeller;
  // 20 points spread over the circle, keeping 0.1 away from R.
  std::vector<Point> sample;
  const Real pi = Real::pi();
  for (int k = 0; sample.size() < 20; ++k) {
    const Real theta = Real(2) * pi * Real(k) / Real(41) - pi;
    const Point x = Point(-Real(1) / (sin(theta / Real(2)) / cos(theta / Real(2))));
    if (chordal_distance(x, R) > Real("0.1")) sample.push_back(x);
  }
  std::vector<Point> images = sample;
  Map acc;
  Real previous = chordal_diameter<Real>(images);
  for (std::size_t r = 0; r < 1000; ++r) {
    acc = compose(acc, stage_map(params, r));
    if ((r + 1) % 100 == 0) {
      for (std::size_t k = 0; k < sample.size(); ++k) images[k] = apply_boundary(acc, sample[k]);
      const Real d = chordal_diameter<Real>(images);
      EXPECT_LE(d, previous) << r;
      previous = d;
    }
  }
  EXPECT_LT(previous.to_double(), 1e-3);
}

TEST(EndToEnd, TriplesConverge) {
  EvalConfig cfg;
  cfg.max_n = 30000;
  for (const auto& tr : kTriples) {
    const auto params = default_params(tr.p, tr.q);
    const auto report = evaluate(build_sequence(params), cfg);
    EXPECT_EQ(report.verdict, Verdict::Converged) << tr.a;
    ASSERT_GE(report.windows.size(), 3u);
    EXPECT_LT(report.windows.back().diameter.to_double(), 1e-3);
  }
}

TEST(EndToEnd, ResidueSubsequencesShareOneLimit) {
  const auto params = default_params(1, 3);
  const auto trace = convergent_trace(build_sequence(params), 30000);
  const Point last = trace.values.back();
  for (std::size_t j = 0; j < 3; ++j) {
    const Point sub = trace.values[trace.values.size() - 1 - j];
    EXPECT_LT(chordal_distance(sub, last).to_double(), 10 * 1e-6) << j;
  }
}

TEST(HarmonicLayout, PerturbationIsBigOOfGivenRates) {
  BuildOptions o;
  o.rule = TRule::Custom;
  for (int i = 1; i <= 4000; ++i) o.r_values.push_back(Real(1) / Real(i));
  const auto params = make_params(1, 3, o);
  const auto src = build_sequence(params);
  const Real C = max(abs(params.lemma.c1), abs(params.lemma.c2)) * params.t_scale;
  Real worst(0);
  for (std::size_t i = 1; i <= 10000; ++i) {
    const Real dev = abs(src.coefficient(i) - params.a);
    const std::size_t residue = (i - 1) % 3;
    if (residue == 2) {
      ASSERT_TRUE(dev.is_zero()) << i;
      continue;
    }
    const std::size_t block = (i - 1) / 3;
    const Real r_i = Real(1) / Real(block + 1);
    worst = max(worst, dev / r_i);
  }
  EXPECT_LE(worst, C * (Real(1) + ldexp(Real(1), -200)));
  EXPECT_GT(worst, Real(0));
  const auto profile = gill_check(src, params.a, 9000);
  EXPECT_FALSE(profile.summable);
}
