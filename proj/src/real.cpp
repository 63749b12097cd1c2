#include "ramcf/real.hpp"

#include <cstdlib>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace ramcf {

namespace {

thread_local long t_precision = kDefaultPrecisionBits;

}  // namespace

long working_precision() noexcept { return t_precision; }

PrecisionScope::PrecisionScope(long bits) : saved_(t_precision) {
  if (bits < kMinPrecisionBits || bits > static_cast<long>(MPFR_PREC_MAX)) {
    throw std::invalid_argument("precision must be at least " + std::to_string(kMinPrecisionBits) +
                                " bits, got " + std::to_string(bits));
  }
  t_precision = bits;
}

PrecisionScope::~PrecisionScope() { t_precision = saved_; }

Real::Real() {
  mpfr_init2(v_, t_precision);
  mpfr_set_zero(v_, 1);
}

Real::Real(double x) {
  mpfr_init2(v_, t_precision);
  mpfr_set_d(v_, x, MPFR_RNDN);
}

Real::Real(std::string_view text) : Real() {
  std::string s(text);
  if (s == "inf" || s == "+inf") {
    mpfr_set_inf(v_, 1);
    return;
  }
  if (s == "-inf") {
    mpfr_set_inf(v_, -1);
    return;
  }
  if (auto slash = s.find('/'); slash != std::string::npos) {
    Real num(std::string_view(s).substr(0, slash));
    Real den(std::string_view(s).substr(slash + 1));
    if (den.is_zero()) throw std::invalid_argument("zero denominator in '" + s + "'");
    mpfr_div(v_, num.v_, den.v_, MPFR_RNDN);
    return;
  }
  char* end = nullptr;
  if (!s.empty()) mpfr_strtofr(v_, s.c_str(), &end, 10, MPFR_RNDN);
  if (s.empty() || end == s.c_str() || *end != '\0' || mpfr_nan_p(v_)) {
    throw std::invalid_argument("not a real number: '" + s + "'");
  }
}

Real::Real(const Real& other) {
  mpfr_init2(v_, mpfr_get_prec(other.v_));
  mpfr_set(v_, other.v_, MPFR_RNDN);
}

Real::Real(Real&& other) noexcept {
  v_[0] = other.v_[0];
  other.v_[0]._mpfr_d = nullptr;
}

Real& Real::operator=(const Real& other) {
  if (this == &other) return *this;
  if (v_[0]._mpfr_d == nullptr) {
    mpfr_init2(v_, mpfr_get_prec(other.v_));
  } else if (mpfr_get_prec(v_) != mpfr_get_prec(other.v_)) {
    mpfr_set_prec(v_, mpfr_get_prec(other.v_));
  }
  mpfr_set(v_, other.v_, MPFR_RNDN);
  return *this;
}

Real& Real::operator=(Real&& other) noexcept {
  std::swap(v_[0], other.v_[0]);
  return *this;
}

Real::~Real() {
  if (v_[0]._mpfr_d != nullptr) mpfr_clear(v_);
}

Real Real::pi() {
  Real r;
  mpfr_const_pi(r.v_, MPFR_RNDN);
  return r;
}

Real Real::epsilon() { return ldexp(Real(1), 1 - t_precision); }

std::string Real::str() const { return str(0); }

std::string Real::str(std::size_t digits) const {
  if (mpfr_nan_p(v_)) return "nan";
  if (mpfr_inf_p(v_)) return mpfr_sgn(v_) > 0 ? "inf" : "-inf";
  if (mpfr_zero_p(v_)) return "0";
  mpfr_exp_t exp10 = 0;
  std::unique_ptr<char, decltype(&mpfr_free_str)> raw(mpfr_get_str(nullptr, &exp10, 10, digits, v_, MPFR_RNDN),
                                                     &mpfr_free_str);
  std::string mant(raw.get());
  std::string out;
  if (!mant.empty() && mant.front() == '-') {
    out.push_back('-');
    mant.erase(0, 1);
  }
  // Trailing zeros carry no information.
  while (mant.size() > 1 && mant.back() == '0') mant.pop_back();
  out.push_back(mant[0]);
  if (mant.size() > 1) {
    out.push_back('.');
    out.append(mant, 1, std::string::npos);
  }
  out += "e" + std::to_string(static_cast<long>(exp10) - 1);
  return out;
}

Real& Real::operator+=(const Real& rhs) {
  mpfr_add(v_, v_, rhs.v_, MPFR_RNDN);
  return *this;
}
Real& Real::operator-=(const Real& rhs) {
  mpfr_sub(v_, v_, rhs.v_, MPFR_RNDN);
  return *this;
}
Real& Real::operator*=(const Real& rhs) {
  mpfr_mul(v_, v_, rhs.v_, MPFR_RNDN);
  return *this;
}
Real& Real::operator/=(const Real& rhs) {
  mpfr_div(v_, v_, rhs.v_, MPFR_RNDN);
  return *this;
}

Real operator-(const Real& x) {
  Real r;
  mpfr_neg(r.v_, x.v_, MPFR_RNDN);
  return r;
}
Real operator+(const Real& a, const Real& b) {
  Real r;
  mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
  return r;
}
Real operator-(const Real& a, const Real& b) {
  Real r;
  mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
  return r;
}
Real operator*(const Real& a, const Real& b) {
  Real r;
  mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
  return r;
}
Real operator/(const Real& a, const Real& b) {
  Real r;
  mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
  return r;
}

std::partial_ordering operator<=>(const Real& a, const Real& b) {
  if (mpfr_unordered_p(a.v_, b.v_)) return std::partial_ordering::unordered;
  const int c = mpfr_cmp(a.v_, b.v_);
  if (c < 0) return std::partial_ordering::less;
  if (c > 0) return std::partial_ordering::greater;
  return std::partial_ordering::equivalent;
}

#define RAMCF_UNARY(name, fn)        \
  Real name(const Real& x) {         \
    Real r;                          \
    fn(r.get(), x.get(), MPFR_RNDN); \
    return r;                        \
  }

RAMCF_UNARY(abs, mpfr_abs)
RAMCF_UNARY(sqrt, mpfr_sqrt)
RAMCF_UNARY(cos, mpfr_cos)
RAMCF_UNARY(sin, mpfr_sin)
RAMCF_UNARY(acos, mpfr_acos)
RAMCF_UNARY(log, mpfr_log)
RAMCF_UNARY(exp, mpfr_exp)

#undef RAMCF_UNARY

Real floor(const Real& x) {
  Real r;
  mpfr_floor(r.get(), x.get());
  return r;
}

Real atan2(const Real& y, const Real& x) {
  Real r;
  mpfr_atan2(r.get(), y.get(), x.get(), MPFR_RNDN);
  return r;
}

Real pow(const Real& x, long n) {
  Real r;
  mpfr_pow_si(r.get(), x.get(), n, MPFR_RNDN);
  return r;
}

Real ldexp(const Real& x, long n) {
  Real r;
  mpfr_mul_2si(r.get(), x.get(), n, MPFR_RNDN);
  return r;
}

Real min(const Real& a, const Real& b) { return b < a ? b : a; }
Real max(const Real& a, const Real& b) { return a < b ? b : a; }

std::ostream& operator<<(std::ostream& os, const Real& x) { return os << x.str(); }

}  // namespace ramcf
