#include <cctype>
#include <stdexcept>

#include "ramcf/continued_fraction.hpp"

namespace ramcf {

Real PerturbationRule::operator()(std::size_t i) const {
  switch (kind) {
    case Kind::Zero: return Real(0);
    case Kind::Geometric: return scale * ldexp(Real(1), -static_cast<long>(i));
    case Kind::Harmonic: return scale / Real(i);
    case Kind::Power: return scale / pow(Real(i), exponent);
  }
  return Real(0);
}

PerturbationRule PerturbationRule::parse(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  }
  PerturbationRule rule;
  if (auto star = s.find('*'); star != std::string::npos) {
    try {
      rule.scale = Real(std::string_view(s).substr(0, star));
    } catch (const std::invalid_argument&) {
      throw Error(ErrorCode::InvalidArgument, "bad perturbation scale in '" + text + "'");
    }
    s.erase(0, star + 1);
  }
  if (s == "0" || s == "zero") {
    rule.kind = Kind::Zero;
  } else if (s == "2^-i" || s == "geometric") {
    rule.kind = Kind::Geometric;
  } else if (s == "1/i" || s == "harmonic") {
    rule.kind = Kind::Harmonic;
  } else if (s.rfind("1/i^", 0) == 0) {
    rule.kind = Kind::Power;
    try {
      rule.exponent = std::stol(s.substr(4));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad exponent in '" + text + "'");
    }
    if (rule.exponent < 1) throw Error(ErrorCode::InvalidArgument, "exponent must be >= 1 in '" + text + "'");
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown perturbation rule '" + text + "'");
  }
  return rule;
}

std::string PerturbationRule::to_string() const {
  std::string body;
  switch (kind) {
    case Kind::Zero: return "0";
    case Kind::Geometric: body = "2^-i"; break;
    case Kind::Harmonic: body = "1/i"; break;
    case Kind::Power: body = "1/i^" + std::to_string(exponent); break;
  }
  return scale == Real(1) ? body : scale.str() + "*" + body;
}

CoefficientSource CoefficientSource::constant(const Real& a) {
  return from_generator(Kind::Constant, a, std::nullopt, [a](std::size_t) { return a; });
}

CoefficientSource CoefficientSource::explicit_list(std::vector<Real> values) {
  const std::size_t n = values.size();
  auto shared = std::make_shared<const std::vector<Real>>(std::move(values));
  return from_generator(Kind::ExplicitList, std::nullopt, n, [shared](std::size_t i) { return (*shared)[i - 1]; });
}

CoefficientSource CoefficientSource::gill_perturbed(const Real& a, PerturbationRule rule) {
  return from_generator(Kind::GillPerturbed, a, std::nullopt, [a, rule](std::size_t i) { return a + rule(i); });
}

CoefficientSource CoefficientSource::from_generator(Kind kind, std::optional<Real> limit,
                                                    std::optional<std::size_t> length, Generator generator) {
  return CoefficientSource(kind, std::move(limit), length, std::make_shared<const Generator>(std::move(generator)));
}

Real CoefficientSource::coefficient(std::size_t i) const {
  if (i == 0 || (length_ && i > *length_)) {
    throw Error(ErrorCode::OutOfRange, "coefficient index " + std::to_string(i) + " outside the source");
  }
  Real value = (*generator_)(i);
  if (!(value > Real(0))) {
    throw Error(ErrorCode::NonPositiveCoefficient,
                "a_" + std::to_string(i) + " = " + value.str(20) + " is not positive");
  }
  return value;
}

std::vector<Real> CoefficientSource::prefix(std::size_t n) const {
  std::vector<Real> out;
  out.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) out.push_back(coefficient(i));
  return out;
}

std::string to_string(CoefficientSource::Kind kind) {
  switch (kind) {
    case CoefficientSource::Kind::Constant: return "constant";
    case CoefficientSource::Kind::ExplicitList: return "explicit";
    case CoefficientSource::Kind::GillPerturbed: return "gill";
    case CoefficientSource::Kind::RationalConstruction: return "rational";
    case CoefficientSource::Kind::IrrationalConstruction: return "irrational";
  }
  return "unknown";
}

}  // namespace ramcf
