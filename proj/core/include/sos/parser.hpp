#ifndef SOS_PARSER_HPP
#define SOS_PARSER_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sos/polynomial.hpp"

namespace sos {

struct ParseDiagnostic {
  std::size_t byte_offset = 0;
  std::string message;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(ParseDiagnostic diagnostic);
  const ParseDiagnostic& diagnostic() const { return diagnostic_; }

 private:
  ParseDiagnostic diagnostic_;
};

// Syntax tree of a polynomial expression, kept so that structure such as an
// explicit sum of squares survives until it is inspected.
struct Expr {
  enum class Kind { kNumber, kVariable, kSum, kProduct, kNegate, kPower };

  Kind kind = Kind::kNumber;
  std::size_t offset = 0;
  double number = 0.0;      // kNumber
  Rational exact;           // kNumber, exact decimal/fraction value
  std::size_t variable = 0; // kVariable, zero-based
  int exponent = 0;         // kPower
  std::vector<Expr> children;
};

struct ParsedExpression {
  Expr root;
  std::size_t n_vars = 1;  // max variable index seen (or the hint, if larger)
};

// Grammar (whitespace-insensitive):
//   expr    := signed { ('+' | '-') signed }
//   signed  := ['+' | '-'] term
//   term    := factor { ['*'] factor }        juxtaposition multiplies
//   factor  := primary [ '^' integer ]
//   primary := number ['/' number] | variable | '(' expr ')'
//   variable:= 'x' digits | 'x'               bare x is x1
//   number  := digits ['.' digits] [('e'|'E') ['+'|'-'] digits]
ParsedExpression parse_expression(std::string_view text,
                                  std::optional<std::size_t> n_vars_hint = std::nullopt);

Polynomial to_polynomial(const Expr& expr, std::size_t n_vars);
RationalPolynomial to_rational_polynomial(const Expr& expr, std::size_t n_vars);

Polynomial parse(std::string_view text, std::optional<std::size_t> n_vars_hint = std::nullopt);
RationalPolynomial parse_rational(std::string_view text,
                                  std::optional<std::size_t> n_vars_hint = std::nullopt);

}  // namespace sos

#endif  // SOS_PARSER_HPP
