#pragma once

#include <cmath>
#include <numbers>

#include "ramcf/real.hpp"

namespace ramcf {

/// Per-scalar constants the Möbius core needs beyond arithmetic.
template <typename Scalar>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static double pi() { return std::numbers::pi; }
  static long precision_bits() { return 53; }
  static double two_pow(long n) { return std::ldexp(1.0, static_cast<int>(n)); }
};

template <>
struct ScalarTraits<Real> {
  static Real pi() { return Real::pi(); }
  static long precision_bits() { return working_precision(); }
  static Real two_pow(long n) { return ldexp(Real(1), n); }
};

/// 2^-(precision - slack_bits): the "exact up to rounding" tolerance.
template <typename Scalar>
Scalar precision_tolerance(long slack_bits) {
  return ScalarTraits<Scalar>::two_pow(-(ScalarTraits<Scalar>::precision_bits() - slack_bits));
}

}  // namespace ramcf
