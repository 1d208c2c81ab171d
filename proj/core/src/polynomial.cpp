#include "sos/polynomial.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>
#include <system_error>

namespace sos {

std::string monomial_text(const Monomial& m) {
  std::string out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0) continue;
    if (!out.empty()) out += '*';
    out += 'x';
    out += std::to_string(i + 1);
    if (m[i] > 1) {
      out += '^';
      out += std::to_string(m[i]);
    }
  }
  return out;
}

std::string coefficient_text(double c) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), c);
  if (ec != std::errc()) throw std::runtime_error("coefficient_text: to_chars failed");
  return std::string(buf.data(), ptr);
}

std::string coefficient_text(const Rational& c) {
  const auto num = boost::multiprecision::numerator(c);
  const auto den = boost::multiprecision::denominator(c);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

namespace {

template <class C>
std::string render(const BasicPolynomial<C>& p) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : p.terms()) {
    const bool negative = CoeffTraits<C>::negative(c);
    const C magnitude = CoeffTraits<C>::abs(c);
    if (first) {
      if (negative) out += '-';
    } else {
      out += negative ? " - " : " + ";
    }
    first = false;
    if (m.is_constant()) {
      out += coefficient_text(magnitude);
    } else if (magnitude == C(1)) {
      out += monomial_text(m);
    } else {
      out += coefficient_text(magnitude);
      out += '*';
      out += monomial_text(m);
    }
  }
  return out;
}

}  // namespace

std::string canonical_text(const Polynomial& p) { return render(p); }
std::string canonical_text(const RationalPolynomial& p) { return render(p); }

Polynomial round_coefficients(const Polynomial& p, int decimals) {
  const double scale = std::pow(10.0, decimals);
  Polynomial out(p.n_vars());
  for (const auto& [m, c] : p.terms()) {
    const double scaled = c * scale;
    // Beyond 2^52 the value already has no fractional digits to round.
    if (std::fabs(scaled) >= 4503599627370496.0) {
      out.add_term(m, c);
    } else {
      out.add_term(m, std::round(scaled) / scale);
    }
  }
  return out;
}

Polynomial to_double(const RationalPolynomial& p) {
  Polynomial out(p.n_vars());
  for (const auto& [m, c] : p.terms()) out.add_term(m, c.convert_to<double>());
  return out;
}

namespace {

Rational exact_rational(double c) {
  if (!std::isfinite(c)) throw std::invalid_argument("to_rational: non-finite coefficient");
  int exp = 0;
  const double mant = std::frexp(c, &exp);  // c = mant * 2^exp, 0.5 <= |mant| < 1
  const auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  Rational r(scaled);
  const int shift = exp - 53;
  boost::multiprecision::cpp_int two_pow = 1;
  two_pow <<= std::abs(shift);
  return shift >= 0 ? Rational(r * two_pow) : Rational(r / two_pow);
}

}  // namespace

RationalPolynomial to_rational(const Polynomial& p) {
  RationalPolynomial out(p.n_vars());
  for (const auto& [m, c] : p.terms()) out.add_term(m, exact_rational(c));
  return out;
}

}  // namespace sos
