#include "sos/polynomial.hpp"

#include <random>

#include <gtest/gtest.h>

#include "sos/parser.hpp"
#include "test_util.hpp"

namespace sos {
namespace {

Polynomial random_polynomial(std::mt19937_64& gen, std::size_t n, int max_degree, int terms) {
  std::uniform_int_distribution<int> coef(-9, 9);
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::uniform_int_distribution<std::size_t> var(0, n - 1);
  Polynomial p(n);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> e(n, 0);
    for (int k = deg(gen); k > 0; --k) ++e[var(gen)];
    p.add_term(Monomial(e), coef(gen) / 4.0);
  }
  return p;
}

TEST(MonomialTest, DegreeAndOrder) {
  const Monomial a{4, 2};
  const Monomial b{2, 4};
  EXPECT_EQ(a.degree(), 6);
  EXPECT_TRUE(GradedLexGreater{}(a, b));
  EXPECT_TRUE(GradedLexGreater{}(b, Monomial({3, 2})));
  EXPECT_THROW(Monomial({1, -1}), std::invalid_argument);
  EXPECT_THROW(a + Monomial({1}), DimensionError);
}

TEST(PolynomialTest, Degree) {
  EXPECT_EQ(parse(test::kMotzkin).degree(), 6);
  EXPECT_EQ(Polynomial(3).degree(), 0);
  EXPECT_EQ(parse(test::kSquareFormExpanded).degree(), 8);
}

TEST(PolynomialTest, NoZeroCoefficientsStored) {
  Polynomial p(2);
  p.add_term(Monomial({1, 0}), 2.0);
  p.add_term(Monomial({1, 0}), -2.0);
  EXPECT_TRUE(p.is_zero());
  EXPECT_EQ(p.size(), 0u);
}

TEST(PolynomialTest, Evaluate) {
  const std::vector<double> at{-3.0, -2.0};
  EXPECT_NEAR(evaluate(parse(test::kTranslated), at), -0.18, 1e-12);
  const Polynomial m = parse(test::kMotzkin);
  EXPECT_EQ(evaluate(m, std::vector<double>{0.0, 0.0}), 1.0);
  EXPECT_EQ(evaluate(parse(test::kStep5Quartic), std::vector<double>{1.0, 1.0}), -3.0);
  EXPECT_THROW(evaluate(m, std::vector<double>{1.0}), DimensionError);
}

TEST(PolynomialTest, Multiply) {
  const Polynomial q = parse("x1 - x1*x2");
  EXPECT_EQ(multiply(q, q), parse("x1^2 - 2*x1^2*x2 + x1^2*x2^2"));
  EXPECT_EQ(multiply(q, Polynomial::constant(2, 1.0)), q);
  EXPECT_EQ(multiply(parse("x1^2 - x2^2"), parse("x1^2 + x2^2")), parse("x1^4 - x2^4"));
  EXPECT_THROW(multiply(parse("x1"), parse("x1 + x2")), DimensionError);
}

TEST(PolynomialTest, Translate) {
  // q(x) = p(x + d) with d = (-3, -2) puts the minimum of the translated quadratic at 0.
  const Polynomial p = parse(test::kTranslated);
  const std::vector<double> d{-3.0, -2.0};
  const Polynomial q = translate(p, std::span<const double>(d), 1.0);
  EXPECT_LT(max_coefficient_difference(q, parse("1.8*x1^2 + 1.2*x2^2 - 0.18")), 1e-12);

  const std::vector<double> zero{0.0, 0.0};
  EXPECT_EQ(translate(p, std::span<const double>(zero), 1.0), p);

  const std::vector<double> one{1.0};
  EXPECT_EQ(translate(parse("x^2"), std::span<const double>(one), 2.0), parse("2*x^2 + 4*x + 2"));

  const std::vector<double> bad{1.0};
  EXPECT_THROW(translate(p, std::span<const double>(bad), 1.0), DimensionError);
}

TEST(PolynomialTest, ExpandSquares) {
  SquareList list{{parse("x1 - x1*x2"), parse("x2^2 - x1^4")}};
  EXPECT_EQ(expand_squares(list), parse(test::kSquareFormExpanded));
  EXPECT_EQ(expand_squares(SquareList{{parse("x1^2 - x2^2")}}), parse("x1^4 - 2*x1^2*x2^2 + x2^4"));
  EXPECT_THROW(expand_squares(SquareList{}), std::invalid_argument);
  EXPECT_TRUE(expand_squares(SquareList{{Polynomial(2)}}).is_zero());
  EXPECT_THROW(expand_squares(SquareList{{parse("x1"), parse("x1 + x2")}}), DimensionError);
}

TEST(PolynomialTest, CanonicalText) {
  EXPECT_EQ(canonical_text(parse(test::kMotzkin)), "x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1");
  EXPECT_EQ(canonical_text(Polynomial(2)), "0");
  EXPECT_EQ(canonical_text(parse("9/4")), "2.25");
  EXPECT_EQ(canonical_text(parse("-x1 + 0.1")), "-x1 + 0.1");
}

TEST(PolynomialTest, RationalMode) {
  const RationalPolynomial p = parse_rational("1/3*x1^2 + 2/3*x1^2");
  EXPECT_EQ(p.coefficient(Monomial({2})), Rational(1));
  EXPECT_EQ(to_rational(to_double(p)), p);
}

TEST(PolynomialTest, RoundCoefficients) {
  Polynomial p(1);
  p.add_term(Monomial({1}), 0.123456);
  p.add_term(Monomial({0}), 0.00004);
  EXPECT_EQ(round_coefficients(p, 4), parse("0.1235*x1"));
}

// Property tests.

TEST(PolynomialPropertyTest, MultiplyCommutesAndDistributes) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Polynomial a = random_polynomial(gen, 3, 4, 6);
    const Polynomial b = random_polynomial(gen, 3, 4, 6);
    const Polynomial c = random_polynomial(gen, 3, 4, 6);
    // Quarter-integer coefficients keep all products exact in binary floating point.
    EXPECT_EQ(multiply(a, b), multiply(b, a));
    Polynomial bc = b;
    bc += c;
    Polynomial sum = multiply(a, b);
    sum += multiply(a, c);
    EXPECT_EQ(multiply(a, bc), sum);
  }
}

TEST(PolynomialPropertyTest, ExpandedSquaresAreNonnegative) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    SquareList list;
    for (int j = 0; j < 3; ++j) list.squares.push_back(random_polynomial(gen, 3, 3, 5));
    const Polynomial p = expand_squares(list);
    EXPECT_EQ(p.degree() % 2, 0);
    const double scale = std::max(1.0, max_abs_coefficient(p));
    for (int k = 0; k < 1000; ++k) {
      const std::vector<double> x{u(gen), u(gen), u(gen)};
      double magnitude = 0.0;
      for (const auto& [m, c] : p.terms()) {
        double t = std::fabs(c);
        for (std::size_t i = 0; i < 3; ++i) t *= std::pow(std::fabs(x[i]), m[i]);
        magnitude += t;
      }
      EXPECT_GE(evaluate(p, x), -1e-9 * std::max(scale, magnitude));
    }
  }
}

TEST(PolynomialPropertyTest, TranslateMatchesShiftedEvaluation) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Polynomial p = random_polynomial(gen, 2, 5, 8);
    const std::vector<double> d{u(gen), u(gen)};
    const double c = 0.5 + std::fabs(u(gen));
    const Polynomial q = translate(p, std::span<const double>(d), c);
    for (int k = 0; k < 20; ++k) {
      const std::vector<double> x{u(gen), u(gen)};
      const std::vector<double> xd{x[0] + d[0], x[1] + d[1]};
      const double expected = c * evaluate(p, xd);
      EXPECT_NEAR(evaluate(q, x), expected, 1e-10 * std::max(1.0, std::fabs(expected)) * 100);
    }
  }
}

TEST(PolynomialPropertyTest, CanonicalTextRoundTripsExactly) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int trial = 0; trial < 10000; ++trial) {
    Polynomial p = random_polynomial(gen, 1 + trial % 5, 6, 1 + trial % 9);
    if (trial % 2) p.add_term(Monomial(p.n_vars()), u(gen));  // arbitrary doubles
    const Polynomial back = parse(canonical_text(p), p.n_vars());
    ASSERT_EQ(back, p) << canonical_text(p);
  }
}

}  // namespace
}  // namespace sos
