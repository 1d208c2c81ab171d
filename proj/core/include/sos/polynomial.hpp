#ifndef SOS_POLYNOMIAL_HPP
#define SOS_POLYNOMIAL_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace sos {

using Rational = boost::multiprecision::cpp_rational;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Exponent vector (multi-index) of a single monomial.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::size_t n_vars) : exponents_(n_vars, 0) {}
  explicit Monomial(std::vector<int> exponents) : exponents_(std::move(exponents)) {
    for (int e : exponents_) {
      if (e < 0) throw std::invalid_argument("Monomial: negative exponent");
    }
  }
  Monomial(std::initializer_list<int> exponents)
      : Monomial(std::vector<int>(exponents)) {}

  static Monomial unit(std::size_t n_vars, std::size_t var, int power = 1) {
    Monomial m(n_vars);
    m.exponents_.at(var) = power;
    return m;
  }

  std::size_t size() const { return exponents_.size(); }
  int operator[](std::size_t i) const { return exponents_[i]; }
  const std::vector<int>& exponents() const { return exponents_; }

  int degree() const { return std::accumulate(exponents_.begin(), exponents_.end(), 0); }
  bool is_constant() const {
    return std::all_of(exponents_.begin(), exponents_.end(), [](int e) { return e == 0; });
  }
  bool is_even() const {
    return std::all_of(exponents_.begin(), exponents_.end(), [](int e) { return e % 2 == 0; });
  }

  Monomial operator+(const Monomial& other) const {
    if (other.size() != size()) throw DimensionError("Monomial: n_vars mismatch");
    Monomial out(*this);
    for (std::size_t i = 0; i < size(); ++i) out.exponents_[i] += other.exponents_[i];
    return out;
  }
  Monomial doubled() const { return *this + *this; }

  friend bool operator==(const Monomial&, const Monomial&) = default;
  friend auto operator<=>(const Monomial& a, const Monomial& b) {
    return a.exponents_ <=> b.exponents_;
  }

 private:
  std::vector<int> exponents_;
};

// Graded-lexicographic "greater" ordering: higher total degree first, ties broken by
// comparing exponents of x1, x2, ... with larger exponents first.
struct GradedLexGreater {
  bool operator()(const Monomial& a, const Monomial& b) const {
    const int da = a.degree();
    const int db = b.degree();
    if (da != db) return da > db;
    return a.exponents() > b.exponents();
  }
};

template <class C>
struct CoeffTraits;

template <>
struct CoeffTraits<double> {
  static bool is_zero(double c) { return c == 0.0; }
  static double to_double(double c) { return c; }
  static double abs(double c) { return std::fabs(c); }
  static bool negative(double c) { return c < 0.0; }
};

template <>
struct CoeffTraits<Rational> {
  static bool is_zero(const Rational& c) { return c == 0; }
  static double to_double(const Rational& c) { return c.convert_to<double>(); }
  static Rational abs(const Rational& c) { return c < 0 ? Rational(-c) : c; }
  static bool negative(const Rational& c) { return c < 0; }
};

// Sparse multivariate polynomial: map from exponent vectors to nonzero coefficients,
// iterated in descending graded-lex order.
template <class C>
class BasicPolynomial {
 public:
  using Coefficient = C;
  using TermMap = std::map<Monomial, C, GradedLexGreater>;

  BasicPolynomial() : n_vars_(1) {}
  explicit BasicPolynomial(std::size_t n_vars) : n_vars_(n_vars) {
    if (n_vars == 0) throw std::invalid_argument("Polynomial: n_vars must be positive");
  }

  static BasicPolynomial constant(std::size_t n_vars, const C& value) {
    BasicPolynomial p(n_vars);
    p.add_term(Monomial(n_vars), value);
    return p;
  }
  static BasicPolynomial variable(std::size_t n_vars, std::size_t var) {
    BasicPolynomial p(n_vars);
    p.add_term(Monomial::unit(n_vars, var), C(1));
    return p;
  }
  static BasicPolynomial monomial(const Monomial& m, const C& coeff) {
    BasicPolynomial p(m.size());
    p.add_term(m, coeff);
    return p;
  }

  std::size_t n_vars() const { return n_vars_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  int degree() const { return terms_.empty() ? 0 : terms_.begin()->first.degree(); }
  int min_degree() const {
    int d = degree();
    for (const auto& [m, c] : terms_) d = std::min(d, m.degree());
    return d;
  }

  C coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? C(0) : it->second;
  }
  C constant_term() const { return coefficient(Monomial(n_vars_)); }

  void add_term(const Monomial& m, const C& coeff) {
    if (m.size() != n_vars_) throw DimensionError("Polynomial: monomial length differs from n_vars");
    if (CoeffTraits<C>::is_zero(coeff)) return;
    auto [it, inserted] = terms_.try_emplace(m, coeff);
    if (!inserted) {
      it->second += coeff;
      if (CoeffTraits<C>::is_zero(it->second)) terms_.erase(it);
    }
  }
  void set_term(const Monomial& m, const C& coeff) {
    if (m.size() != n_vars_) throw DimensionError("Polynomial: monomial length differs from n_vars");
    if (CoeffTraits<C>::is_zero(coeff)) {
      terms_.erase(m);
    } else {
      terms_[m] = coeff;
    }
  }

  BasicPolynomial& operator+=(const BasicPolynomial& other) {
    require_same_dim(other);
    for (const auto& [m, c] : other.terms_) add_term(m, c);
    return *this;
  }
  BasicPolynomial& operator-=(const BasicPolynomial& other) {
    require_same_dim(other);
    for (const auto& [m, c] : other.terms_) add_term(m, C(-c));
    return *this;
  }
  BasicPolynomial& operator*=(const C& scalar) {
    if (CoeffTraits<C>::is_zero(scalar)) {
      terms_.clear();
      return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= scalar;
      it = CoeffTraits<C>::is_zero(it->second) ? terms_.erase(it) : std::next(it);
    }
    return *this;
  }

  friend BasicPolynomial operator+(BasicPolynomial a, const BasicPolynomial& b) { return a += b; }
  friend BasicPolynomial operator-(BasicPolynomial a, const BasicPolynomial& b) { return a -= b; }
  friend BasicPolynomial operator*(BasicPolynomial a, const C& s) { return a *= s; }
  friend BasicPolynomial operator*(const C& s, BasicPolynomial a) { return a *= s; }
  friend BasicPolynomial operator-(BasicPolynomial a) { return a *= C(-1); }

  friend bool operator==(const BasicPolynomial& a, const BasicPolynomial& b) {
    return a.n_vars_ == b.n_vars_ && a.terms_ == b.terms_;
  }

  // Same polynomial viewed in a larger variable space.
  BasicPolynomial with_n_vars(std::size_t n) const {
    if (n < n_vars_) {
      for (const auto& [m, c] : terms_) {
        for (std::size_t i = n; i < n_vars_; ++i) {
          if (m[i] != 0) throw DimensionError("Polynomial: cannot drop a variable that is in use");
        }
      }
    }
    BasicPolynomial out(n);
    for (const auto& [m, c] : terms_) {
      std::vector<int> e(n, 0);
      for (std::size_t i = 0; i < std::min(n, n_vars_); ++i) e[i] = m[i];
      out.terms_.emplace(Monomial(std::move(e)), c);
    }
    return out;
  }

  // Indices of variables that appear in at least one term.
  std::vector<std::size_t> active_variables() const {
    std::vector<std::size_t> vars;
    for (std::size_t i = 0; i < n_vars_; ++i) {
      for (const auto& [m, c] : terms_) {
        if (m[i] != 0) {
          vars.push_back(i);
          break;
        }
      }
    }
    return vars;
  }

  bool is_homogeneous() const {
    if (terms_.empty()) return true;
    const int d = degree();
    return std::all_of(terms_.begin(), terms_.end(),
                       [d](const auto& t) { return t.first.degree() == d; });
  }

 private:
  void require_same_dim(const BasicPolynomial& other) const {
    if (other.n_vars_ != n_vars_) throw DimensionError("Polynomial: n_vars mismatch");
  }

  std::size_t n_vars_;
  TermMap terms_;
};

using Polynomial = BasicPolynomial<double>;
using RationalPolynomial = BasicPolynomial<Rational>;

// Ordered list of polynomials whose squares are summed.
template <class C>
struct BasicSquareList {
  std::vector<BasicPolynomial<C>> squares;
};
using SquareList = BasicSquareList<double>;

template <class C>
int degree(const BasicPolynomial<C>& p) {
  return p.degree();
}

template <class C>
double evaluate(const BasicPolynomial<C>& p, std::span<const double> point) {
  if (point.size() != p.n_vars()) throw DimensionError("evaluate: point length differs from n_vars");
  double sum = 0.0;
  for (const auto& [m, c] : p.terms()) {
    double term = CoeffTraits<C>::to_double(c);
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (int k = 0; k < m[i]; ++k) term *= point[i];
    }
    sum += term;
  }
  return sum;
}

template <class C>
BasicPolynomial<C> multiply(const BasicPolynomial<C>& p, const BasicPolynomial<C>& q) {
  if (p.n_vars() != q.n_vars()) throw DimensionError("multiply: n_vars mismatch");
  BasicPolynomial<C> out(p.n_vars());
  for (const auto& [mp, cp] : p.terms()) {
    for (const auto& [mq, cq] : q.terms()) out.add_term(mp + mq, cp * cq);
  }
  return out;
}

template <class C>
BasicPolynomial<C> operator*(const BasicPolynomial<C>& p, const BasicPolynomial<C>& q) {
  return multiply(p, q);
}

template <class C>
BasicPolynomial<C> power(const BasicPolynomial<C>& p, int exponent) {
  if (exponent < 0) throw std::invalid_argument("power: negative exponent");
  auto result = BasicPolynomial<C>::constant(p.n_vars(), C(1));
  auto base = p;
  while (exponent > 0) {
    if (exponent & 1) result = multiply(result, base);
    exponent >>= 1;
    if (exponent > 0) base = multiply(base, base);
  }
  return result;
}

namespace detail {

template <class C>
std::vector<std::vector<C>> binomial_rows(int max_n) {
  std::vector<std::vector<C>> rows(static_cast<std::size_t>(max_n) + 1);
  for (int n = 0; n <= max_n; ++n) {
    rows[n].assign(static_cast<std::size_t>(n) + 1, C(1));
    for (int k = 1; k < n; ++k) rows[n][k] = rows[n - 1][k - 1] + rows[n - 1][k];
  }
  return rows;
}

}  // namespace detail

// q(x) = scale * p(x + shift), expanded term by term with the binomial theorem.
template <class C>
BasicPolynomial<C> translate(const BasicPolynomial<C>& p, std::span<const C> shift, const C& scale) {
  if (shift.size() != p.n_vars()) throw DimensionError("translate: shift length differs from n_vars");
  if (!(scale > C(0))) throw std::invalid_argument("translate: scale must be positive");
  const std::size_t n = p.n_vars();
  int max_exp = 0;
  for (const auto& [m, c] : p.terms()) {
    for (std::size_t i = 0; i < n; ++i) max_exp = std::max(max_exp, m[i]);
  }
  const auto binom = detail::binomial_rows<C>(max_exp);

  // powers[i][k] = shift_i^k
  std::vector<std::vector<C>> powers(n, std::vector<C>(static_cast<std::size_t>(max_exp) + 1, C(1)));
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 1; k <= max_exp; ++k) powers[i][k] = powers[i][k - 1] * shift[i];
  }

  BasicPolynomial<C> out(n);
  for (const auto& [m, c] : p.terms()) {
    // (x_i + d_i)^{a_i} = sum_j C(a_i, j) d_i^{a_i - j} x_i^j, expanded over all variables.
    BasicPolynomial<C> expansion = BasicPolynomial<C>::constant(n, c * scale);
    for (std::size_t i = 0; i < n; ++i) {
      const int a = m[i];
      if (a == 0) continue;
      BasicPolynomial<C> factor(n);
      for (int j = 0; j <= a; ++j) {
        factor.add_term(Monomial::unit(n, i, j), binom[a][j] * powers[i][a - j]);
      }
      expansion = multiply(expansion, factor);
    }
    out += expansion;
  }
  return out;
}

template <class C>
BasicPolynomial<C> expand_squares(const BasicSquareList<C>& list) {
  if (list.squares.empty()) throw std::invalid_argument("expand_squares: empty square list");
  const std::size_t n = list.squares.front().n_vars();
  BasicPolynomial<C> out(n);
  for (const auto& q : list.squares) {
    if (q.n_vars() != n) throw DimensionError("expand_squares: mixed n_vars");
    out += multiply(q, q);
  }
  return out;
}

template <class C>
double max_abs_coefficient(const BasicPolynomial<C>& p) {
  double m = 0.0;
  for (const auto& [mono, c] : p.terms()) m = std::max(m, std::fabs(CoeffTraits<C>::to_double(c)));
  return m;
}

// Max |coefficient| of p - q over the union of supports.
template <class C>
double max_coefficient_difference(const BasicPolynomial<C>& p, const BasicPolynomial<C>& q) {
  return max_abs_coefficient(p - q);
}

// Drops terms whose |coefficient| <= tol.
inline Polynomial drop_small_terms(const Polynomial& p, double tol) {
  Polynomial out(p.n_vars());
  for (const auto& [m, c] : p.terms()) {
    if (std::fabs(c) > tol) out.add_term(m, c);
  }
  return out;
}

// Rounds each coefficient to `decimals` decimal places.
Polynomial round_coefficients(const Polynomial& p, int decimals);

Polynomial to_double(const RationalPolynomial& p);
// Exact conversion: every finite double is a dyadic rational.
RationalPolynomial to_rational(const Polynomial& p);

std::string monomial_text(const Monomial& m);
std::string coefficient_text(double c);
std::string coefficient_text(const Rational& c);

// Deterministic text form: graded-lex order, explicit `*` and `^`, shortest
// round-trip coefficients. Parses back to the same polynomial.
std::string canonical_text(const Polynomial& p);
std::string canonical_text(const RationalPolynomial& p);

}  // namespace sos

#endif  // SOS_POLYNOMIAL_HPP
