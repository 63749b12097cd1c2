#include <gtest/gtest.h>

#include <complex>
#include <numbers>
#include <random>

#include "ramcf/moebius.hpp"

using namespace ramcf;
using std::abs;
using std::sqrt;
using Map = MoebiusMap<Real>;
using Point = BoundaryPoint<Real>;

namespace {

template <typename S>
S num(const char* text) {
  if constexpr (std::is_same_v<S, double>) {
    return std::stod(text);
  } else {
    return Real(std::string_view(text));
  }
}

template <typename S>
double dbl(const S& x) {
  if constexpr (std::is_same_v<S, double>) {
    return x;
  } else {
    return x.to_double();
  }
}

// Loose tolerance for the precision of S: 2^-(bits - 12).
template <typename S>
S tight() {
  return precision_tolerance<S>(12);
}

// Independent rotation number: T_a'(c) = a/(c+1)^2 at the interior fixed
// point is e^{±2πiρ}.
double rotation_oracle(double a) {
  using C = std::complex<long double>;
  const C c(-0.5L, std::sqrt(4.0L * a - 1.0L) / 2.0L);
  const C d = static_cast<long double>(a) / ((c + 1.0L) * (c + 1.0L));
  const long double r = std::abs(std::arg(d)) / (2.0L * std::numbers::pi_v<long double>);
  return static_cast<double>(std::min(r, 1.0L - r));
}

template <typename S>
class MoebiusTyped : public ::testing::Test {};

using Scalars = ::testing::Types<double, Real>;
TYPED_TEST_SUITE(MoebiusTyped, Scalars);

}  // namespace

TYPED_TEST(MoebiusTyped, TMapOneCyclesZeroMinusOneInfinity) {
  using S = TypeParam;
  using P = BoundaryPoint<S>;
  const auto t = t_map(S(1));
  EXPECT_EQ(dbl(apply_boundary(t, P(S(0))).value()), -1.0);
  EXPECT_TRUE(apply_boundary(t, P(S(-1))).is_infinite());
  EXPECT_EQ(dbl(apply_boundary(t, P::infinity()).value()), 0.0);
}

TYPED_TEST(MoebiusTyped, TMapRejectsNonPositive) {
  using S = TypeParam;
  for (const char* b : {"0", "-1", "-0.25"}) {
    try {
      (void)t_map(num<S>(b));
      FAIL() << b;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NonPositiveCoefficient);
    }
  }
}

TYPED_TEST(MoebiusTyped, TMapQuarterIsParabolic) {
  using S = TypeParam;
  const auto t = t_map(num<S>("0.25"));
  EXPECT_TRUE(std::holds_alternative<ParabolicClass>(classify(t)));
  // Unique fixed point -1/2.
  EXPECT_NEAR(dbl(apply_boundary(t, BoundaryPoint<S>(num<S>("-0.5"))).value()), -0.5, 1e-15);
}

TYPED_TEST(MoebiusTyped, TMapPointTwoHyperbolicFixedPoints) {
  using S = TypeParam;
  using std::sqrt;
  const auto cls = classify(t_map(num<S>("0.2")));
  ASSERT_TRUE(is_hyperbolic(cls));
  const auto& h = std::get<HyperbolicClass<S>>(cls);
  const S attractor = (S(-1) + sqrt(num<S>("0.2"))) / S(2);
  const S repeller = (S(-1) - sqrt(num<S>("0.2"))) / S(2);
  EXPECT_LE(dbl(abs(h.attractor.value() - attractor)), dbl(tight<S>()));
  EXPECT_LE(dbl(abs(h.repeller.value() - repeller)), dbl(tight<S>()));
  // a/(z+1)^2 at the attractor.
  const S oracle = num<S>("0.2") / ((attractor + S(1)) * (attractor + S(1)));
  EXPECT_LE(dbl(abs(h.multiplier - oracle)), dbl(tight<S>()));
  EXPECT_GT(dbl(h.multiplier), 0.0);
  EXPECT_LT(dbl(h.multiplier), 1.0);
  EXPECT_NEAR(dbl(h.attractor.value()), -0.27639, 1e-5);
  EXPECT_NEAR(dbl(h.repeller.value()), -0.72361, 1e-5);
}

TYPED_TEST(MoebiusTyped, ComposeIdentityAndCube) {
  using S = TypeParam;
  const auto t = t_map(num<S>("0.7"));
  EXPECT_LE(dbl(projective_distance(compose(t, MoebiusMap<S>::identity()), t)), dbl(tight<S>()));
  const auto t1 = t_map(S(1));
  EXPECT_TRUE(is_projective_identity(compose(t1, compose(t1, t1)), tight<S>()));
  EXPECT_TRUE(std::holds_alternative<IdentityClass>(classify(power(t1, 3))));
}

TYPED_TEST(MoebiusTyped, ComposeMatchesPointwiseApplication) {
  using S = TypeParam;
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> coef(0.3, 2.0);
  std::vector<S> bs;
  for (int i = 0; i < 1000; ++i) bs.push_back(S(coef(gen)));
  MoebiusMap<S> acc;
  for (const auto& b : bs) acc = compose(acc, t_map(b));
  // Pointwise: T_{b1}(T_{b2}(...T_{bn}(0))).
  BoundaryPoint<S> x(S(0));
  for (auto it = bs.rbegin(); it != bs.rend(); ++it) x = apply_boundary(t_map(*it), x);
  const double tol = std::is_same_v<S, double> ? 1e-8 : 1e-20;
  EXPECT_LT(dbl(chordal_distance(apply_boundary(acc, BoundaryPoint<S>(S(0))), x)), tol);
}

TYPED_TEST(MoebiusTyped, ComposeIsHomomorphismIncludingPoles) {
  using S = TypeParam;
  using P = BoundaryPoint<S>;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto random_map = [&] {
      for (;;) {
        const double m11 = u(gen), m12 = u(gen), m21 = u(gen), m22 = u(gen);
        if (m11 * m22 - m12 * m21 > 0.1) return MoebiusMap<S>::from_entries(S(m11), S(m12), S(m21), S(m22));
      }
    };
    const auto f = random_map();
    const auto g = random_map();
    const auto fg = compose(f, g);
    std::vector<P> xs{P(S(u(gen))), P::infinity(), P(-g.m22() / g.m21())};
    for (const auto& x : xs) {
      EXPECT_LT(dbl(chordal_distance(apply_boundary(fg, x), apply_boundary(f, apply_boundary(g, x)))), 1e-9);
    }
  }
}

TYPED_TEST(MoebiusTyped, ApplyInteriorFixesEllipticPoint) {
  using S = TypeParam;
  const HalfPlanePoint<S> i{S(0), S(1)};
  const auto id = apply_interior(MoebiusMap<S>::identity(), i);
  EXPECT_EQ(dbl(id.re), 0.0);
  EXPECT_EQ(dbl(id.im), 1.0);
  for (const char* a : {"1", "0.5", "0.3"}) {
    const auto c = fixed_point_interior(num<S>(a));
    EXPECT_EQ(dbl(c.re), -0.5);
    const auto img = apply_interior(t_map(num<S>(a)), c);
    EXPECT_LE(dbl(abs(img.re - c.re) + abs(img.im - c.im)), dbl(tight<S>())) << a;
    EXPECT_GT(dbl(img.im), 0.0);
  }
  EXPECT_NEAR(dbl(fixed_point_interior(S(1)).im), std::sqrt(3.0) / 2, 1e-15);
  EXPECT_NEAR(dbl(fixed_point_interior(num<S>("0.5")).im), 0.5, 1e-15);
  EXPECT_NEAR(dbl(fixed_point_interior(num<S>("0.3")).im), std::sqrt(0.2) / 2, 1e-15);
}

TYPED_TEST(MoebiusTyped, ApplyInteriorPoleThrows) {
  using S = TypeParam;
  try {
    (void)apply_interior(t_map(S(1)), HalfPlanePoint<S>{S(-1), S(0)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PoleOnBoundary);
  }
}

TYPED_TEST(MoebiusTyped, ClassifyTraceCriterion) {
  using S = TypeParam;
  EXPECT_TRUE(std::holds_alternative<EllipticClass<S>>(classify(t_map(S(1)))));
  EXPECT_NEAR(std::abs(dbl(t_map(S(1)).trace())), 1.0, 1e-15);
  EXPECT_TRUE(is_hyperbolic(classify(t_map(num<S>("0.2")))));
  EXPECT_NEAR(std::abs(dbl(t_map(num<S>("0.2")).trace())), 1 / std::sqrt(0.2), 1e-14);
  EXPECT_TRUE(std::holds_alternative<ParabolicClass>(classify(t_map(num<S>("0.25")))));
}

TYPED_TEST(MoebiusTyped, ClassifyGrid) {
  using S = TypeParam;
  const int n = std::is_same_v<S, double> ? 1000 : 200;
  for (int k = 1; k <= n; ++k) {
    const S b = S(k) / S(n) * S(4);  // (0, 4]
    if (dbl(abs(b - num<S>("0.25"))) < 1e-9) continue;
    const auto cls = classify(t_map(b));
    if (dbl(b) > 0.25) {
      EXPECT_TRUE(std::holds_alternative<EllipticClass<S>>(cls)) << dbl(b);
    } else {
      EXPECT_TRUE(is_hyperbolic(cls)) << dbl(b);
    }
  }
}

TYPED_TEST(MoebiusTyped, LinearMapsFixedPoints) {
  using S = TypeParam;
  const auto quarter = MoebiusMap<S>::from_entries(S(1), S(0), S(0), S(4));
  const auto h = fixed_points_hyperbolic(quarter);
  EXPECT_EQ(dbl(h.attractor.value()), 0.0);
  EXPECT_TRUE(h.repeller.is_infinite());
  EXPECT_NEAR(dbl(h.multiplier), 0.25, 1e-15);
  const auto times4 = MoebiusMap<S>::from_entries(S(4), S(0), S(0), S(1));
  const auto h2 = fixed_points_hyperbolic(times4);
  EXPECT_TRUE(h2.attractor.is_infinite());
  EXPECT_EQ(dbl(h2.repeller.value()), 0.0);
  EXPECT_NEAR(dbl(h2.multiplier), 0.25, 1e-15);
  try {
    (void)fixed_points_hyperbolic(t_map(S(1)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotHyperbolic);
  }
}

TYPED_TEST(MoebiusTyped, DerivativeBasics) {
  using S = TypeParam;
  EXPECT_EQ(dbl(derivative_at(MoebiusMap<S>::identity(), BoundaryPoint<S>(num<S>("3.5")))), 1.0);
  EXPECT_EQ(dbl(derivative_at(MoebiusMap<S>::identity(), BoundaryPoint<S>::infinity())), 1.0);
  const auto h = fixed_points_hyperbolic(t_map(num<S>("0.2")));
  const S d = derivative_at(t_map(num<S>("0.2")), h.attractor);
  EXPECT_GT(dbl(d), 0.0);
  EXPECT_LT(dbl(d), 1.0);
  try {
    (void)derivative_at(t_map(S(1)), BoundaryPoint<S>(S(-1)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PoleDerivative);
  }
}

TYPED_TEST(MoebiusTyped, RotationNumberValues) {
  using S = TypeParam;
  EXPECT_NEAR(dbl(rotation_number(S(1))), 1.0 / 3, 1e-15);
  EXPECT_NEAR(dbl(rotation_number(num<S>("0.5"))), 0.25, 1e-15);
  EXPECT_NEAR(dbl(rotation_number(S(1) / S(3))), 1.0 / 6, 1e-15);
  for (double a : {0.26, 0.3, 0.7, 1.0, 2.5, 10.0, 100.0}) {
    EXPECT_NEAR(dbl(rotation_number(S(a))), rotation_oracle(a), 1e-12) << a;
    // The classifier reads the same number off the matrix.
    const auto cls = classify(t_map(S(a)));
    const S r = std::get<EllipticClass<S>>(cls).rotation_number;
    EXPECT_NEAR(std::min(dbl(r), 1 - dbl(r)), rotation_oracle(a), 1e-12) << a;
  }
  try {
    (void)rotation_number(num<S>("0.25"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotElliptic);
  }
}

TYPED_TEST(MoebiusTyped, RotationNumberIncreasing) {
  using S = TypeParam;
  double prev = 0;
  for (int k = 1; k <= 100; ++k) {
    const double r = dbl(rotation_number(num<S>("0.25") + S(k) / S(10)));
    EXPECT_GT(r, prev);
    EXPECT_LT(r, 0.5);
    prev = r;
  }
}

TYPED_TEST(MoebiusTyped, RhoInverseRoundTrip) {
  using S = TypeParam;
  EXPECT_NEAR(dbl(rho_inverse(S(1) / S(3))), 1.0, 1e-14);
  EXPECT_NEAR(dbl(rho_inverse(num<S>("0.25"))), 0.5, 1e-15);
  EXPECT_NEAR(dbl(rho_inverse(num<S>("1e-9"))), 0.25, 1e-12);
  // 10 ulp-equivalents of the working precision; ρ is well conditioned on [0.01, 0.49].
  const S tol = precision_tolerance<S>(0) * S(10) * S(50);
  for (int k = 1; k <= 49; ++k) {
    const S rho = S(k) / S(100);
    EXPECT_LE(dbl(abs(rotation_number(rho_inverse(rho)) - rho)), dbl(tol)) << k;
  }
  for (const char* bad : {"0", "0.5", "-0.1", "0.7"}) {
    try {
      (void)rho_inverse(num<S>(bad));
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
    }
  }
}

TYPED_TEST(MoebiusTyped, RationalRotationPowersAreIdentity) {
  using S = TypeParam;
  const S tol = precision_tolerance<S>(20);
  for (long q = 3; q <= 12; ++q) {
    for (long p = 1; 2 * p < q; ++p) {
      if (std::gcd(p, q) != 1) continue;
      const auto t = t_map(rho_inverse(S(p) / S(q)));
      EXPECT_TRUE(is_projective_identity(power(t, static_cast<std::uint64_t>(q)), tol)) << p << "/" << q;
      // and no smaller power is.
      for (long k = 1; k < q; ++k) EXPECT_FALSE(is_projective_identity(power(t, static_cast<std::uint64_t>(k)), tol));
    }
  }
}

TYPED_TEST(MoebiusTyped, PowerBasics) {
  using S = TypeParam;
  EXPECT_TRUE(is_projective_identity(power(t_map(num<S>("0.7")), 0), S(0)));
  EXPECT_TRUE(is_projective_identity(power(t_map(S(1)), 3), tight<S>()));
  EXPECT_TRUE(is_projective_identity(power(t_map(num<S>("0.5")), 4), tight<S>()));
  // Repeated squaring agrees with left-to-right products.
  const auto t = t_map(num<S>("0.9"));
  MoebiusMap<S> acc;
  for (int k = 0; k < 37; ++k) acc = compose(acc, t);
  EXPECT_LE(dbl(projective_distance(acc, power(t, 37))), 1e-12);
}

TYPED_TEST(MoebiusTyped, ChordalDistance) {
  using S = TypeParam;
  using P = BoundaryPoint<S>;
  const double pi = std::numbers::pi;
  EXPECT_EQ(dbl(chordal_distance(P(S(2)), P(S(2)))), 0.0);
  EXPECT_NEAR(dbl(chordal_distance(P(S(0)), P::infinity())), pi, 1e-15);
  EXPECT_NEAR(dbl(chordal_distance(P(S(1)), P(S(-1)))), pi, 1e-15);
  EXPECT_NEAR(dbl(chordal_distance(P(S(1e12)), P::infinity())), 2e-12, 1e-20);
  // Cayley oracle in complex arithmetic.
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int k = 0; k < 200; ++k) {
    const double x = u(gen), y = u(gen), z = u(gen);
    const auto cay = [](double v) { return (std::complex<double>(v, -1)) / std::complex<double>(v, 1); };
    const double oracle = std::abs(std::arg(cay(x) / cay(y)));
    const double d = dbl(chordal_distance(P(S(x)), P(S(y))));
    EXPECT_NEAR(d, oracle, 1e-12);
    EXPECT_NEAR(d, dbl(chordal_distance(P(S(y)), P(S(x)))), 1e-15);
    EXPECT_LE(d, dbl(chordal_distance(P(S(x)), P(S(z))) + chordal_distance(P(S(z)), P(S(y)))) + 1e-12);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, pi + 1e-15);
  }
}

TYPED_TEST(MoebiusTyped, DiameterMatchesPairwise) {
  using S = TypeParam;
  using P = BoundaryPoint<S>;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<P> pts;
    const int n = 1 + trial;
    for (int k = 0; k < n; ++k) pts.push_back(P(S(u(gen) * (trial % 3 == 0 ? 0.01 : 1.0))));
    if (trial % 4 == 0) pts.push_back(P::infinity());
    double best = 0;
    for (const auto& a : pts) {
      for (const auto& b : pts) best = std::max(best, dbl(chordal_distance(a, b)));
    }
    EXPECT_NEAR(dbl(chordal_diameter<S>(pts)), best, 1e-12);
  }
}

TYPED_TEST(MoebiusTyped, HyperbolicIterationConvergesGeometrically) {
  using S = TypeParam;
  using P = BoundaryPoint<S>;
  const auto m = t_map(num<S>("0.2"));
  const auto h = fixed_points_hyperbolic(m);
  P x(S(3));
  S prev = chordal_distance(x, h.attractor);
  double ratio = 0;
  for (int k = 0; k < 25; ++k) {
    x = apply_boundary(m, x);
    const S d = chordal_distance(x, h.attractor);
    EXPECT_LT(dbl(d), dbl(prev));
    ratio = dbl(d / prev);
    prev = d;
  }
  EXPECT_NEAR(ratio, dbl(h.multiplier), 1e-5);
}

TEST(MoebiusReal, DerivativeMatchesFiniteDifferences) {
  PrecisionScope scope(128);
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int checked = 0;
  while (checked < 100) {
    const double m11 = u(gen), m12 = u(gen), m21 = u(gen), m22 = u(gen);
    if (m11 * m22 - m12 * m21 < 0.1) continue;
    const auto m = Map::from_entries(Real(m11), Real(m12), Real(m21), Real(m22));
    const Real x(u(gen));
    const Real den = m.m21() * x + m.m22();
    if (abs(den) < Real("0.05")) continue;
    const Real h("1e-8");
    const Real fp = apply_boundary(m, Point(x + h)).value();
    const Real fm = apply_boundary(m, Point(x - h)).value();
    const Real fd = (fp - fm) / (Real(2) * h);
    const Real d = derivative_at(m, Point(x));
    EXPECT_LT((abs(fd - d) / abs(d)).to_double(), 1e-6);
    ++checked;
  }
}

TEST(MoebiusReal, RotationAnchorAtHighPrecision) {
  PrecisionScope scope(256);
  EXPECT_LT(abs(rotation_number(Real(1)) - Real(1) / Real(3)).to_double(), 1e-30);
  EXPECT_TRUE(is_projective_identity(power(t_map(Real(1)), 3), ldexp(Real(1), -200)));
  EXPECT_TRUE(is_projective_identity(power(t_map(Real("0.5")), 4), ldexp(Real(1), -200)));
  EXPECT_TRUE(is_projective_identity(power(t_map(Real(1) / Real(3)), 6), ldexp(Real(1), -200)));
}

TEST(MoebiusReal, LongHyperbolicProductsStayUsable) {
  // 5000 steps of T_0.2 push the matrix entries far past 2^256.
  Map acc;
  const Map t = t_map(Real("0.2"));
  for (int k = 0; k < 5000; ++k) acc = compose(acc, t);
  const Real limit = (Real(-1) + sqrt(Real("0.2"))) / Real(2);
  EXPECT_LT(abs(apply_boundary(acc, Point(Real(0))).value() - limit).to_double(), 1e-60);
  EXPECT_TRUE(is_hyperbolic(classify(acc)));
}
