#pragma once

// Arbitrary-precision real scalar backed by MPFR.
//
// Every Real carries its own mantissa precision. Values created by
// arithmetic take the calling thread's working precision, which is set
// with PrecisionScope. Rounding is always to nearest.

#include <mpfr.h>

#include <Eigen/Core>

#include <compare>
#include <concepts>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace ramcf {

inline constexpr long kMinPrecisionBits = 64;
inline constexpr long kDefaultPrecisionBits = 256;

/// Working precision (bits) for newly created Real values on this thread.
long working_precision() noexcept;

/// Sets the working precision for the lifetime of the scope.
class PrecisionScope {
 public:
  explicit PrecisionScope(long bits);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  long saved_;
};

class Real {
 public:
  Real();
  Real(double x);  // NOLINT(google-explicit-constructor)
  template <std::integral I>
  Real(I x) : Real() {  // NOLINT(google-explicit-constructor)
    if constexpr (std::is_signed_v<I>) {
      mpfr_set_si(v_, static_cast<long>(x), MPFR_RNDN);
    } else {
      mpfr_set_ui(v_, static_cast<unsigned long>(x), MPFR_RNDN);
    }
  }
  /// Parses a decimal literal ("0.25", "-1e-3", "inf") or a ratio of
  /// integers ("1/3"). Throws std::invalid_argument on malformed input.
  explicit Real(std::string_view text);

  Real(const Real& other);
  Real(Real&& other) noexcept;
  Real& operator=(const Real& other);
  Real& operator=(Real&& other) noexcept;
  ~Real();

  static Real pi();
  static Real epsilon();  // 2^(1 - working precision)

  long precision() const noexcept { return static_cast<long>(mpfr_get_prec(v_)); }
  double to_double() const noexcept { return mpfr_get_d(v_, MPFR_RNDN); }
  long to_long() const noexcept { return mpfr_get_si(v_, MPFR_RNDZ); }
  /// Shortest decimal string that reads back to the same value at this
  /// precision, in scientific notation.
  std::string str() const;
  /// Decimal string with `digits` significant digits.
  std::string str(std::size_t digits) const;

  bool is_zero() const noexcept { return mpfr_zero_p(v_) != 0; }
  bool is_nan() const noexcept { return mpfr_nan_p(v_) != 0; }
  bool is_finite() const noexcept { return mpfr_number_p(v_) != 0; }
  int sign() const noexcept { return mpfr_sgn(v_); }
  /// Binary exponent e with 0.5 <= |x| / 2^e < 1; 0 for zero.
  long exponent() const noexcept { return is_zero() ? 0 : static_cast<long>(mpfr_get_exp(v_)); }

  mpfr_srcptr get() const noexcept { return v_; }
  mpfr_ptr get() noexcept { return v_; }

  Real& operator+=(const Real& rhs);
  Real& operator-=(const Real& rhs);
  Real& operator*=(const Real& rhs);
  Real& operator/=(const Real& rhs);

  friend Real operator-(const Real& x);
  friend Real operator+(const Real& a, const Real& b);
  friend Real operator-(const Real& a, const Real& b);
  friend Real operator*(const Real& a, const Real& b);
  friend Real operator/(const Real& a, const Real& b);

  friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend std::partial_ordering operator<=>(const Real& a, const Real& b);

 private:
  mpfr_t v_;
};

Real abs(const Real& x);
Real sqrt(const Real& x);
Real cos(const Real& x);
Real sin(const Real& x);
Real acos(const Real& x);
Real atan2(const Real& y, const Real& x);
Real log(const Real& x);
Real exp(const Real& x);
Real floor(const Real& x);
Real pow(const Real& x, long n);
/// x * 2^n, exact.
Real ldexp(const Real& x, long n);
Real min(const Real& a, const Real& b);
Real max(const Real& a, const Real& b);

std::ostream& operator<<(std::ostream& os, const Real& x);

}  // namespace ramcf

namespace Eigen {

template <>
struct NumTraits<ramcf::Real> : GenericNumTraits<ramcf::Real> {
  using Real = ramcf::Real;
  using NonInteger = ramcf::Real;
  using Nested = ramcf::Real;
  using Literal = ramcf::Real;
  enum {
    IsInteger = 0,
    IsSigned = 1,
    IsComplex = 0,
    RequireInitialization = 1,
    ReadCost = HugeCost,
    AddCost = HugeCost,
    MulCost = HugeCost
  };
  static Real epsilon() { return Real::epsilon(); }
  static Real dummy_precision() { return ramcf::ldexp(Real(1), -(ramcf::working_precision() * 7) / 8); }
  static Real highest() { return ramcf::ldexp(Real(1), 1L << 20); }
  static Real lowest() { return -highest(); }
  static int digits10() { return static_cast<int>(ramcf::working_precision() * 0.30103); }
};

}  // namespace Eigen
