#include "sos/parser.hpp"

#include <cctype>
#include <charconv>
#include <limits>

namespace sos {

ParseError::ParseError(ParseDiagnostic diagnostic)
    : std::runtime_error("parse error at offset " + std::to_string(diagnostic.byte_offset) + ": " +
                         diagnostic.message),
      diagnostic_(std::move(diagnostic)) {}

namespace {

constexpr std::size_t kMaxVariables = 1024;
constexpr long kMaxExponent = 1000;

enum class Tok { kNumber, kVariable, kPlus, kMinus, kStar, kCaret, kSlash, kLParen, kRParen, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::size_t offset = 0;
  std::string_view text;
  std::size_t variable = 0;
};

[[noreturn]] void fail(std::size_t offset, std::string message) {
  throw ParseError(ParseDiagnostic{offset, std::move(message)});
}

Rational decimal_to_rational(std::string_view text, std::size_t offset) {
  using boost::multiprecision::cpp_int;
  cpp_int digits = 0;
  long frac_digits = 0;
  long exp10 = 0;
  std::size_t i = 0;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (ch == '.') {
      seen_point = true;
    } else if (std::isdigit(static_cast<unsigned char>(ch))) {
      digits = digits * 10 + (ch - '0');
      if (seen_point) ++frac_digits;
    } else {
      break;
    }
  }
  if (i < text.size()) {  // exponent part
    ++i;
    bool neg = false;
    if (text[i] == '+' || text[i] == '-') neg = text[i++] == '-';
    long e = 0;
    for (; i < text.size(); ++i) {
      e = e * 10 + (text[i] - '0');
      if (e > 4000) fail(offset, "numeric exponent out of range");
    }
    exp10 = neg ? -e : e;
  }
  const long net = exp10 - frac_digits;
  cpp_int pow10 = 1;
  for (long k = 0; k < std::abs(net); ++k) pow10 *= 10;
  return net >= 0 ? Rational(digits * pow10) : Rational(digits, pow10);
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) { advance(); }

  Expr parse_all() {
    if (current_.kind == Tok::kEnd) fail(0, "empty input");
    Expr root = parse_expr();
    if (current_.kind == Tok::kRParen) fail(current_.offset, "unbalanced parentheses: unexpected ')'");
    if (current_.kind != Tok::kEnd) fail(current_.offset, "unexpected token '" + std::string(current_.text) + "'");
    return root;
  }

  std::size_t max_variable() const { return max_var_; }

 private:
  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    current_ = Token{};
    current_.offset = pos_;
    if (pos_ >= text_.size()) {
      current_.kind = Tok::kEnd;
      return;
    }
    const char ch = text_[pos_];
    const std::size_t start = pos_;
    auto single = [&](Tok kind) {
      current_.kind = kind;
      current_.text = text_.substr(pos_, 1);
      ++pos_;
    };
    switch (ch) {
      case '+': single(Tok::kPlus); return;
      case '-': single(Tok::kMinus); return;
      case '*': single(Tok::kStar); return;
      case '^': single(Tok::kCaret); return;
      case '/': single(Tok::kSlash); return;
      case '(': single(Tok::kLParen); return;
      case ')': single(Tok::kRParen); return;
      default: break;
    }
    if (ch == 'x') {
      ++pos_;
      std::size_t index = 1;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        index = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          index = index * 10 + static_cast<std::size_t>(text_[pos_] - '0');
          if (index > kMaxVariables) fail(start, "variable index too large");
          ++pos_;
        }
        if (index == 0) fail(start, "variables are numbered from x1");
      }
      current_.kind = Tok::kVariable;
      current_.variable = index - 1;
      current_.text = text_.substr(start, pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      bool digits = false;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        digits = true;
      }
      if (pos_ < text_.size() && text_[pos_] == '.') {
        ++pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          ++pos_;
          digits = true;
        }
      }
      if (!digits) fail(start, "malformed number");
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        std::size_t look = pos_ + 1;
        if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
        if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
          pos_ = look;
          while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
      }
      current_.kind = Tok::kNumber;
      current_.text = text_.substr(start, pos_ - start);
      return;
    }
    fail(start, std::string("unknown token '") + ch + "'");
  }

  bool starts_primary() const {
    return current_.kind == Tok::kNumber || current_.kind == Tok::kVariable ||
           current_.kind == Tok::kLParen;
  }

  Expr parse_expr() {
    Expr sum;
    sum.kind = Expr::Kind::kSum;
    sum.offset = current_.offset;
    sum.children.push_back(parse_signed());
    while (current_.kind == Tok::kPlus || current_.kind == Tok::kMinus) {
      const bool negate = current_.kind == Tok::kMinus;
      const std::size_t off = current_.offset;
      advance();
      Expr term = parse_signed();
      if (negate) term = negated(std::move(term), off);
      sum.children.push_back(std::move(term));
    }
    if (sum.children.size() == 1) return std::move(sum.children.front());
    return sum;
  }

  static Expr negated(Expr inner, std::size_t offset) {
    Expr neg;
    neg.kind = Expr::Kind::kNegate;
    neg.offset = offset;
    neg.children.push_back(std::move(inner));
    return neg;
  }

  Expr parse_signed() {
    if (current_.kind == Tok::kMinus || current_.kind == Tok::kPlus) {
      const bool negate = current_.kind == Tok::kMinus;
      const std::size_t off = current_.offset;
      advance();
      Expr term = parse_term();
      return negate ? negated(std::move(term), off) : term;
    }
    return parse_term();
  }

  Expr parse_term() {
    Expr product;
    product.kind = Expr::Kind::kProduct;
    product.offset = current_.offset;
    product.children.push_back(parse_factor());
    while (true) {
      if (current_.kind == Tok::kStar) {
        advance();
        product.children.push_back(parse_factor());
      } else if (starts_primary()) {
        product.children.push_back(parse_factor());
      } else if (current_.kind == Tok::kSlash) {
        fail(current_.offset, "division is only supported between numeric literals");
      } else {
        break;
      }
    }
    if (product.children.size() == 1) return std::move(product.children.front());
    return product;
  }

  Expr parse_factor() {
    Expr base = parse_primary();
    if (current_.kind != Tok::kCaret) return base;
    const std::size_t caret = current_.offset;
    advance();
    if (current_.kind == Tok::kMinus) fail(current_.offset, "exponent must be nonnegative");
    if (current_.kind != Tok::kNumber) fail(current_.offset, "exponent must be an integer literal");
    const std::string_view digits = current_.text;
    for (char ch : digits) {
      if (!std::isdigit(static_cast<unsigned char>(ch))) {
        fail(current_.offset, "non-integer exponent '" + std::string(digits) + "'");
      }
    }
    long value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || value > kMaxExponent) fail(current_.offset, "exponent out of range");
    advance();
    if (current_.kind == Tok::kCaret) fail(current_.offset, "chained exponents are not supported");
    Expr pow;
    pow.kind = Expr::Kind::kPower;
    pow.offset = caret;
    pow.exponent = static_cast<int>(value);
    pow.children.push_back(std::move(base));
    return pow;
  }

  Expr parse_number() {
    Expr num;
    num.kind = Expr::Kind::kNumber;
    num.offset = current_.offset;
    const std::string_view text = current_.text;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) fail(current_.offset, "malformed number");
    num.number = value;
    num.exact = decimal_to_rational(text, current_.offset);
    advance();
    return num;
  }

  Expr parse_primary() {
    switch (current_.kind) {
      case Tok::kNumber: {
        Expr num = parse_number();
        if (current_.kind == Tok::kSlash) {
          const std::size_t slash = current_.offset;
          advance();
          if (current_.kind != Tok::kNumber) {
            fail(current_.offset, "division is only supported between numeric literals");
          }
          Expr den = parse_number();
          if (den.exact == 0) fail(slash, "division by zero");
          num.number = num.number / den.number;
          num.exact = num.exact / den.exact;
        }
        return num;
      }
      case Tok::kVariable: {
        Expr var;
        var.kind = Expr::Kind::kVariable;
        var.offset = current_.offset;
        var.variable = current_.variable;
        max_var_ = std::max(max_var_, current_.variable + 1);
        advance();
        return var;
      }
      case Tok::kLParen: {
        const std::size_t open = current_.offset;
        advance();
        if (current_.kind == Tok::kRParen) fail(current_.offset, "empty parentheses");
        if (current_.kind == Tok::kEnd) fail(open, "unbalanced parentheses: missing ')'");
        Expr inner = parse_expr();
        if (current_.kind != Tok::kRParen) {
          if (current_.kind == Tok::kEnd) fail(open, "unbalanced parentheses: missing ')'");
          fail(current_.offset, "unexpected token '" + std::string(current_.text) + "'");
        }
        advance();
        return inner;
      }
      case Tok::kRParen:
        fail(current_.offset, "unbalanced parentheses: unexpected ')'");
      case Tok::kEnd:
        fail(current_.offset, "unexpected end of input");
      default:
        fail(current_.offset, "unexpected token '" + std::string(current_.text) + "'");
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Token current_;
  std::size_t max_var_ = 0;
};

template <class C>
C literal_value(const Expr& e);
template <>
double literal_value<double>(const Expr& e) {
  return e.number;
}
template <>
Rational literal_value<Rational>(const Expr& e) {
  return e.exact;
}

template <class C>
BasicPolynomial<C> build(const Expr& e, std::size_t n) {
  switch (e.kind) {
    case Expr::Kind::kNumber:
      return BasicPolynomial<C>::constant(n, literal_value<C>(e));
    case Expr::Kind::kVariable:
      if (e.variable >= n) throw DimensionError("to_polynomial: variable index exceeds n_vars");
      return BasicPolynomial<C>::variable(n, e.variable);
    case Expr::Kind::kSum: {
      BasicPolynomial<C> out(n);
      for (const auto& child : e.children) out += build<C>(child, n);
      return out;
    }
    case Expr::Kind::kProduct: {
      auto out = BasicPolynomial<C>::constant(n, C(1));
      for (const auto& child : e.children) out = multiply(out, build<C>(child, n));
      return out;
    }
    case Expr::Kind::kNegate:
      return -build<C>(e.children.front(), n);
    case Expr::Kind::kPower:
      return power(build<C>(e.children.front(), n), e.exponent);
  }
  return BasicPolynomial<C>(n);
}

}  // namespace

ParsedExpression parse_expression(std::string_view text, std::optional<std::size_t> n_vars_hint) {
  Parser parser(text);
  ParsedExpression out;
  out.root = parser.parse_all();
  out.n_vars = std::max<std::size_t>({std::size_t{1}, parser.max_variable(), n_vars_hint.value_or(0)});
  return out;
}

Polynomial to_polynomial(const Expr& expr, std::size_t n_vars) { return build<double>(expr, n_vars); }

RationalPolynomial to_rational_polynomial(const Expr& expr, std::size_t n_vars) {
  return build<Rational>(expr, n_vars);
}

Polynomial parse(std::string_view text, std::optional<std::size_t> n_vars_hint) {
  const auto parsed = parse_expression(text, n_vars_hint);
  return to_polynomial(parsed.root, parsed.n_vars);
}

RationalPolynomial parse_rational(std::string_view text, std::optional<std::size_t> n_vars_hint) {
  const auto parsed = parse_expression(text, n_vars_hint);
  return to_rational_polynomial(parsed.root, parsed.n_vars);
}

}  // namespace sos
