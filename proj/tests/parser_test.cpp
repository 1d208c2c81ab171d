#include "sos/parser.hpp"

#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace sos {
namespace {

ParseDiagnostic diagnose(std::string_view text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.diagnostic();
  }
  ADD_FAILURE() << "no ParseError for '" << text << "'";
  return {};
}

TEST(ParserTest, Motzkin) {
  const Polynomial p = parse(test::kMotzkin);
  EXPECT_EQ(p.n_vars(), 2u);
  EXPECT_EQ(p.degree(), 6);
  EXPECT_EQ(p.coefficient(Monomial({2, 2})), -3.0);
  EXPECT_EQ(p.coefficient(Monomial({0, 0})), 1.0);
}

TEST(ParserTest, SquaredFormExpands) {
  EXPECT_EQ(parse(test::kSquareForm), expand_squares(SquareList{{parse("x1 - x1*x2"), parse("x2^2 - x1^4")}}));
}

TEST(ParserTest, ZeroAndConstants) {
  EXPECT_TRUE(parse("0").is_zero());
  EXPECT_EQ(parse("9/4").coefficient(Monomial({0})), 2.25);
  EXPECT_EQ(parse("1.5e2").coefficient(Monomial({0})), 150.0);
}

TEST(ParserTest, Juxtaposition) {
  const Polynomial q = parse(test::kQa);
  EXPECT_EQ(q.n_vars(), 3u);
  EXPECT_EQ(q, parse("x1^4*x2^2*x3^2 + x1^2*x2^4*x3^2 + x3^4 + 1 - 3*x1^2*x2^2*x3^2"));
  EXPECT_EQ(parse("2x1x2"), parse("2*x1*x2"));
}

TEST(ParserTest, NVarsHint) {
  EXPECT_EQ(parse("x1", 4).n_vars(), 4u);
  EXPECT_EQ(parse("x3", 2).n_vars(), 3u);
  EXPECT_EQ(parse("x").n_vars(), 1u);
}

TEST(ParserTest, Precedence) {
  EXPECT_EQ(parse("-x1^2"), parse("-1*x1^2"));
  EXPECT_EQ(parse("2*(x1 + 1)^2"), parse("2*x1^2 + 4*x1 + 2"));
  EXPECT_EQ(parse("x1 - (x2 - x1)"), parse("2*x1 - x2"));
}

TEST(ParserTest, Errors) {
  EXPECT_EQ(diagnose("x1 + y").byte_offset, 5u);
  // Points at the unmatched opening paren.
  EXPECT_EQ(diagnose("(x1 + 1").byte_offset, 0u);
  EXPECT_EQ(diagnose("x1*(x2 + 1").byte_offset, 3u);
  diagnose("x1)");
  diagnose("x1^1.5");
  diagnose("x1^-2");
  diagnose("x1 / x2");
  diagnose("");
  diagnose("x1 +");
  diagnose("x0");
  for (const char* bad : {"x1 + y", "(x1 + 1", "x1^1.5", ""}) {
    const auto d = diagnose(bad);
    EXPECT_LE(d.byte_offset, std::string_view(bad).size());
    EXPECT_FALSE(d.message.empty());
  }
}

TEST(ParserTest, ParseTreeKeepsSquares) {
  const ParsedExpression e = parse_expression(test::kSquareForm);
  ASSERT_EQ(e.root.kind, Expr::Kind::kSum);
  ASSERT_EQ(e.root.children.size(), 2u);
  EXPECT_EQ(e.root.children[0].kind, Expr::Kind::kPower);
  EXPECT_EQ(e.root.children[0].exponent, 2);
}

TEST(ParserTest, RationalModeIsExact) {
  const RationalPolynomial p = parse_rational("0.1*x1 + 0.2*x1");
  EXPECT_EQ(p.coefficient(Monomial({1})), Rational(3, 10));
}

TEST(ParserPropertyTest, WhitespaceInsensitive) {
  const std::string text = "x1^4*x2^2 + x1^2*x2^4 + 1 - 3*x1^2*x2^2 + (x1 - 2.5*x2)^2";
  const Polynomial expected = parse(text);
  std::mt19937_64 gen(3);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 200; ++trial) {
    std::string spaced;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if (c == ' ') continue;
      spaced += c;
      // Never split a token: only pad after an operator or bracket.
      if (std::string_view("+-*^()").find(c) != std::string_view::npos && coin(gen)) spaced += "  ";
      if (coin(gen) && i + 1 < text.size() && std::string_view("+-*^()").find(text[i + 1]) != std::string_view::npos) {
        spaced += ' ';
      }
    }
    EXPECT_EQ(parse(spaced), expected) << spaced;
  }
}

TEST(ParserPropertyTest, RationalRoundTrip) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> num(-50, 50), den(1, 12), deg(0, 4);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 4);
    RationalPolynomial p(n);
    for (int t = 0; t < 5; ++t) {
      std::vector<int> e(n);
      for (auto& v : e) v = deg(gen);
      p.add_term(Monomial(e), Rational(num(gen), den(gen)));
    }
    ASSERT_EQ(parse_rational(canonical_text(p), n), p) << canonical_text(p);
  }
}

}  // namespace
}  // namespace sos
