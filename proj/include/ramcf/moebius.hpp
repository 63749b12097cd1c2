#pragma once

// Möbius transformations of the closed upper half-plane H = {Im z >= 0},
// represented by real 2x2 matrices of positive determinant and acting
// projectively on the boundary circle R ∪ {∞}.

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ramcf/error.hpp"
#include "ramcf/scalar.hpp"

namespace ramcf {

/// A point of ∂H: a finite real or ∞.
template <typename Scalar>
class BoundaryPoint {
 public:
  BoundaryPoint(Scalar x) : value_(std::move(x)) {}  // NOLINT(google-explicit-constructor)
  static BoundaryPoint infinity() { return BoundaryPoint(); }

  bool is_infinite() const noexcept { return !value_.has_value(); }
  bool is_finite() const noexcept { return value_.has_value(); }
  const Scalar& value() const {
    if (!value_) throw Error(ErrorCode::InvalidArgument, "value() of the point at infinity");
    return *value_;
  }

  /// Exact equality; both infinite or equal finite values.
  friend bool operator==(const BoundaryPoint& x, const BoundaryPoint& y) {
    if (x.is_infinite() || y.is_infinite()) return x.is_infinite() == y.is_infinite();
    return *x.value_ == *y.value_;
  }

 private:
  BoundaryPoint() = default;
  std::optional<Scalar> value_;
};

template <typename Scalar>
struct HalfPlanePoint {
  Scalar re;
  Scalar im;
};

template <typename Scalar>
class MoebiusMap {
 public:
  using Matrix = Eigen::Matrix<Scalar, 2, 2>;

  MoebiusMap() : m_(Matrix::Identity()) {}

  /// x ↦ (m11 x + m12) / (m21 x + m22); requires a positive determinant.
  static MoebiusMap from_entries(const Scalar& m11, const Scalar& m12, const Scalar& m21, const Scalar& m22) {
    Matrix m;
    m << m11, m12, m21, m22;
    return MoebiusMap(m);
  }
  static MoebiusMap from_matrix(const Matrix& m) { return MoebiusMap(m); }
  static MoebiusMap identity() { return MoebiusMap(); }

  const Matrix& matrix() const noexcept { return m_; }
  const Scalar& m11() const noexcept { return m_(0, 0); }
  const Scalar& m12() const noexcept { return m_(0, 1); }
  const Scalar& m21() const noexcept { return m_(1, 0); }
  const Scalar& m22() const noexcept { return m_(1, 1); }
  Scalar trace() const { return m_(0, 0) + m_(1, 1); }
  Scalar determinant() const { return m_(0, 0) * m_(1, 1) - m_(0, 1) * m_(1, 0); }

 private:
  explicit MoebiusMap(const Matrix& m) : m_(normalized(m)) {}
  struct Unit {};
  // The product of two determinant-1 matrices already has determinant 1;
  // recomputing it would cancel catastrophically for long hyperbolic products.
  MoebiusMap(const Matrix& m, Unit) : m_(sign_normalized(m)) {}

  template <typename S>
  friend MoebiusMap<S> compose(const MoebiusMap<S>& first, const MoebiusMap<S>& second);

  // Scale to determinant 1, then make the first nonzero entry (row-major) positive.
  static Matrix normalized(const Matrix& m) {
    using std::sqrt;
    const Scalar det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    if (!(det > Scalar(0))) {
      throw Error(ErrorCode::InvalidArgument, "Möbius matrix must have positive determinant");
    }
    return sign_normalized(m / sqrt(det));
  }

  static Matrix sign_normalized(Matrix out) {
    for (Eigen::Index k = 0; k < 4; ++k) {
      const Scalar& e = out(k / 2, k % 2);
      if (e != Scalar(0)) {
        if (e < Scalar(0)) out = -out;
        break;
      }
    }
    return out;
  }

  Matrix m_;
};

struct IdentityClass {};
struct ParabolicClass {};
template <typename Scalar>
struct EllipticClass {
  Scalar rotation_number;  // in [0, 1)
};
template <typename Scalar>
struct HyperbolicClass {
  BoundaryPoint<Scalar> attractor;
  BoundaryPoint<Scalar> repeller;
  Scalar multiplier;  // derivative at the attractor, in (0, 1)
};

template <typename Scalar>
using MapClass = std::variant<IdentityClass, EllipticClass<Scalar>, ParabolicClass, HyperbolicClass<Scalar>>;

template <typename Scalar>
bool is_hyperbolic(const MapClass<Scalar>& c) {
  return std::holds_alternative<HyperbolicClass<Scalar>>(c);
}

template <typename Scalar>
std::string class_name(const MapClass<Scalar>& c) {
  switch (c.index()) {
    case 0: return "identity";
    case 1: return "elliptic";
    case 2: return "parabolic";
    default: return "hyperbolic";
  }
}

/// Default classification tolerance on | |trace| - 2 |: 2^-(precision/2).
template <typename Scalar>
Scalar default_class_tolerance() {
  return ScalarTraits<Scalar>::two_pow(-(ScalarTraits<Scalar>::precision_bits() / 2));
}

/// T_b(z) = -b / (z + 1). Only b > 0 preserves the upper half-plane.
template <typename Scalar>
MoebiusMap<Scalar> t_map(const Scalar& b) {
  if (!(b > Scalar(0))) throw Error(ErrorCode::NonPositiveCoefficient, "T_b needs b > 0");
  return MoebiusMap<Scalar>::from_entries(Scalar(0), -b, Scalar(1), Scalar(1));
}

/// first ∘ second.
template <typename Scalar>
MoebiusMap<Scalar> compose(const MoebiusMap<Scalar>& first, const MoebiusMap<Scalar>& second) {
  return MoebiusMap<Scalar>(first.matrix() * second.matrix(), typename MoebiusMap<Scalar>::Unit{});
}

template <typename Scalar>
MoebiusMap<Scalar> operator*(const MoebiusMap<Scalar>& first, const MoebiusMap<Scalar>& second) {
  return compose(first, second);
}

template <typename Scalar>
MoebiusMap<Scalar> inverse(const MoebiusMap<Scalar>& m) {
  return MoebiusMap<Scalar>::from_entries(m.m22(), -m.m12(), -m.m21(), m.m11());
}

/// n-fold composition by repeated squaring, renormalized at each product.
template <typename Scalar>
MoebiusMap<Scalar> power(const MoebiusMap<Scalar>& m, std::uint64_t n) {
  MoebiusMap<Scalar> result;
  MoebiusMap<Scalar> base = m;
  while (n > 0) {
    if (n & 1U) result = compose(result, base);
    n >>= 1U;
    if (n > 0) base = compose(base, base);
  }
  return result;
}

template <typename Scalar>
BoundaryPoint<Scalar> apply_boundary(const MoebiusMap<Scalar>& m, const BoundaryPoint<Scalar>& x) {
  if (x.is_infinite()) {
    if (m.m21() == Scalar(0)) return BoundaryPoint<Scalar>::infinity();
    return BoundaryPoint<Scalar>(m.m11() / m.m21());
  }
  const Scalar den = m.m21() * x.value() + m.m22();
  if (den == Scalar(0)) return BoundaryPoint<Scalar>::infinity();
  return BoundaryPoint<Scalar>((m.m11() * x.value() + m.m12()) / den);
}

template <typename Scalar>
HalfPlanePoint<Scalar> apply_interior(const MoebiusMap<Scalar>& m, const HalfPlanePoint<Scalar>& z) {
  const Scalar den_re = m.m21() * z.re + m.m22();
  const Scalar den_im = m.m21() * z.im;
  const Scalar den_norm = den_re * den_re + den_im * den_im;
  if (den_norm == Scalar(0)) throw Error(ErrorCode::PoleOnBoundary, "point is the pole of the map");
  const Scalar num_re = m.m11() * z.re + m.m12();
  const Scalar num_im = m.m11() * z.im;
  // Im of the image is det * Im z / |den|^2 with det = 1.
  return {(num_re * den_re + num_im * den_im) / den_norm, z.im / den_norm};
}

/// Derivative of the boundary action at x. At ∞ the chart u = 1/x is used
/// on the source side (and on the target side when ∞ is fixed).
template <typename Scalar>
Scalar derivative_at(const MoebiusMap<Scalar>& m, const BoundaryPoint<Scalar>& x) {
  // Stored matrices have determinant 1; recomputing it cancels badly for
  // long hyperbolic products.
  const Scalar det(1);
  if (x.is_infinite()) {
    if (m.m21() == Scalar(0)) return m.m22() / m.m11();
    return -det / (m.m21() * m.m21());
  }
  const Scalar den = m.m21() * x.value() + m.m22();
  if (den == Scalar(0)) throw Error(ErrorCode::PoleDerivative, "derivative requested at the pole");
  return det / (den * den);
}

/// Attractor, repeller and multiplier of a hyperbolic map.
template <typename Scalar>
HyperbolicClass<Scalar> fixed_points_hyperbolic(const MoebiusMap<Scalar>& m) {
  using std::abs;
  using std::sqrt;
  // Fixed points solve m21 x^2 + (m22 - m11) x - m12 = 0.
  const Scalar qa = m.m21();
  const Scalar qb = m.m22() - m.m11();
  const Scalar qc = -m.m12();
  const Scalar disc = qb * qb - Scalar(4) * qa * qc;
  if (!(disc > Scalar(0))) throw Error(ErrorCode::NotHyperbolic, "map has no pair of boundary fixed points");

  BoundaryPoint<Scalar> x1 = BoundaryPoint<Scalar>::infinity();
  BoundaryPoint<Scalar> x2 = BoundaryPoint<Scalar>::infinity();
  if (qa == Scalar(0)) {
    if (qb == Scalar(0)) throw Error(ErrorCode::NotHyperbolic, "map is a translation or the identity");
    x2 = BoundaryPoint<Scalar>(-qc / qb);
  } else {
    const Scalar root = sqrt(disc);
    const Scalar q = qb < Scalar(0) ? (root - qb) / Scalar(2) : -(qb + root) / Scalar(2);
    x1 = BoundaryPoint<Scalar>(q / qa);
    x2 = BoundaryPoint<Scalar>(qc / q);
  }
  // At a fixed point x, m21 x + m22 is the eigenvalue there (m11 at ∞) and the
  // derivative is its inverse square. The attractor carries the larger
  // eigenvalue; the multiplier comes from the trace, which stays accurate
  // when the repeller sits numerically on the pole.
  const auto eigen_at = [&](const BoundaryPoint<Scalar>& x) {
    return x.is_infinite() ? m.m11() : m.m21() * x.value() + m.m22();
  };
  const Scalar tr = abs(m.trace());
  const Scalar big = (tr + sqrt(tr * tr - Scalar(4))) / Scalar(2);
  const Scalar multiplier = Scalar(1) / (big * big);
  if (abs(eigen_at(x1)) > abs(eigen_at(x2))) return {x1, x2, multiplier};
  return {x2, x1, multiplier};
}

template <typename Scalar>
MapClass<Scalar> classify(const MoebiusMap<Scalar>& m, const Scalar& eps_class) {
  using std::abs;
  using std::acos;
  using std::floor;
  if (abs(m.m12()) <= eps_class && abs(m.m21()) <= eps_class && abs(m.m11() - m.m22()) <= eps_class) {
    return IdentityClass{};
  }
  const Scalar tr = m.trace();
  const Scalar excess = abs(tr) - Scalar(2);
  if (excess < -eps_class) {
    // Interior fixed point c has m21 c + m22 = tr/2 + i sgn(m21) sqrt(1 - tr^2/4);
    // the rotation number is read off M'(c) = 1 / (m21 c + m22)^2.
    const Scalar pi = ScalarTraits<Scalar>::pi();
    Scalar rho = acos(tr / Scalar(2)) / pi;
    if (m.m21() < Scalar(0)) rho = -rho;
    rho -= floor(rho);
    return EllipticClass<Scalar>{rho};
  }
  if (excess > eps_class) return fixed_points_hyperbolic(m);
  return ParabolicClass{};
}

template <typename Scalar>
MapClass<Scalar> classify(const MoebiusMap<Scalar>& m) {
  return classify(m, default_class_tolerance<Scalar>());
}

/// Elliptic fixed point c(a) = -1/2 + i sqrt(4a - 1)/2 of T_a.
template <typename Scalar>
HalfPlanePoint<Scalar> fixed_point_interior(const Scalar& a) {
  using std::sqrt;
  if (!(a * Scalar(4) > Scalar(1))) throw Error(ErrorCode::NotElliptic, "T_a is elliptic only for a > 1/4");
  return {Scalar(-1) / Scalar(2), sqrt(Scalar(4) * a - Scalar(1)) / Scalar(2)};
}

/// ρ(a) = arccos(1 / (2 sqrt a)) / π, the rotation number of T_a.
template <typename Scalar>
Scalar rotation_number(const Scalar& a) {
  using std::acos;
  using std::sqrt;
  if (!(a * Scalar(4) > Scalar(1))) throw Error(ErrorCode::NotElliptic, "rotation number needs a > 1/4");
  return acos(Scalar(1) / (Scalar(2) * sqrt(a))) / ScalarTraits<Scalar>::pi();
}

/// a = 1 / (4 cos^2(π ρ)) for ρ in (0, 1/2).
template <typename Scalar>
Scalar rho_inverse(const Scalar& rho) {
  using std::cos;
  if (!(rho > Scalar(0)) || !(rho * Scalar(2) < Scalar(1))) {
    throw Error(ErrorCode::OutOfRange, "rotation number must lie in (0, 1/2)");
  }
  const Scalar c = cos(ScalarTraits<Scalar>::pi() * rho);
  return Scalar(1) / (Scalar(4) * c * c);
}

/// Argument in [0, 2π) of the Cayley image (x - i)/(x + i); ∞ ↦ 0.
template <typename Scalar>
Scalar cayley_angle(const BoundaryPoint<Scalar>& x) {
  using std::atan2;
  if (x.is_infinite()) return Scalar(0);
  const Scalar two_pi = Scalar(2) * ScalarTraits<Scalar>::pi();
  Scalar phi = Scalar(2) * atan2(Scalar(-1), x.value()) + two_pi;
  if (!(phi < two_pi)) phi -= two_pi;
  return phi;
}

/// Arc length between Cayley images on the unit circle, in [0, π].
template <typename Scalar>
Scalar chordal_distance(const BoundaryPoint<Scalar>& x, const BoundaryPoint<Scalar>& y) {
  using std::abs;
  using std::atan2;
  if (x.is_infinite() && y.is_infinite()) return Scalar(0);
  if (x.is_infinite()) return Scalar(2) * atan2(Scalar(1), abs(y.value()));
  if (y.is_infinite()) return Scalar(2) * atan2(Scalar(1), abs(x.value()));
  // Half the arc is the angle between the vectors (x, -1) and (y, -1).
  return Scalar(2) * atan2(abs(x.value() - y.value()), abs(Scalar(1) + x.value() * y.value()));
}

/// Largest pairwise arc distance among points given by their Cayley angles.
template <typename Scalar>
Scalar angular_diameter(std::vector<Scalar> angles) {
  if (angles.size() < 2) return Scalar(0);
  const Scalar pi = ScalarTraits<Scalar>::pi();
  const Scalar two_pi = Scalar(2) * pi;
  std::sort(angles.begin(), angles.end());
  auto arc = [&](const Scalar& a, const Scalar& b) {
    using std::abs;
    Scalar d = abs(a - b);
    if (d > pi) d = two_pi - d;
    return d;
  };
  Scalar best(0);
  const std::size_t n = angles.size();
  for (std::size_t i = 0; i < n; ++i) {
    // The farthest point from angles[i] is a neighbour of its antipode.
    Scalar target = angles[i] + pi;
    if (!(target < two_pi)) target -= two_pi;
    const std::size_t j = static_cast<std::size_t>(std::lower_bound(angles.begin(), angles.end(), target) - angles.begin());
    for (std::size_t k : {j % n, (j + n - 1) % n}) {
      const Scalar d = arc(angles[i], angles[k]);
      if (d > best) best = d;
    }
  }
  return best;
}

template <typename Scalar>
Scalar chordal_diameter(std::span<const BoundaryPoint<Scalar>> points) {
  std::vector<Scalar> angles;
  angles.reserve(points.size());
  for (const auto& p : points) angles.push_back(cayley_angle(p));
  return angular_diameter(std::move(angles));
}

/// Max-entry distance between the normalized matrices of two maps, taken
/// over both projective representatives.
template <typename Scalar>
Scalar projective_distance(const MoebiusMap<Scalar>& f, const MoebiusMap<Scalar>& g) {
  using std::abs;
  Scalar plus(0);
  Scalar minus(0);
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      const Scalar dp = abs(f.matrix()(i, j) - g.matrix()(i, j));
      const Scalar dm = abs(f.matrix()(i, j) + g.matrix()(i, j));
      if (dp > plus) plus = dp;
      if (dm > minus) minus = dm;
    }
  }
  return plus < minus ? plus : minus;
}

template <typename Scalar>
bool is_projective_identity(const MoebiusMap<Scalar>& m, const Scalar& tol) {
  return projective_distance(m, MoebiusMap<Scalar>::identity()) <= tol;
}

}  // namespace ramcf
