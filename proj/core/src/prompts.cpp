#include "sos/prompts.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

#include "sos/dataset.hpp"

namespace sos {

namespace {

const std::string kPlain = "Please analyze if this polynomial can be expressed as a Sum of Squares (SOS)";

const std::string kSimple = R"(Step 1: Examine if the highest degree is odd or even.

Step 2: For the even highest degree d, examine the coefficients of highest-degree terms. Check for any negative values.

Step 3: Consider these special properties:
  - Properties of quadratic polynomials
  - Properties of quartic polynomials in 1-2 variables.
  - Properties of quartic homogeneous polynomials in 1-3 variables.
  - Properties of even-degree univariate polynomials.

Step 4: Try direct sum of squares representation.

Step 5: Consider matrix methods if needed.)";

const std::string kReasoning = R"(Step 1. Check the Degree: An SoS polynomial must have an even degree (i.e., its highest-degree term must have an even exponent). Any odd-degree polynomial cannot be expressed as a sum of squared polynomials. This is the simplest criterion and should always be checked first.

If the highest-degree univariate term (i.e., x_1^d, ..., x_n^d) has a negative coefficient, then the polynomial is not SoS. Otherwise, we cannot determine whether it is SoS and proceed to the next step.

Example 1: p(x) = x_1^4 - x_2^4 + x_3^4 + x_1^2 x_2^2. Since the highest-degree univariate term has a negative coefficient (namely, -x_2^4), by letting x_2 -> infinity, it is clear that p(x) becomes negative. Therefore, it is not SoS.

Example 2: p(x) = x_1^4 + x_2^4 + x_3^4 - 2 x_1^2 x_2^2 + x_1 x_2. All the highest-degree univariate terms have non-negative coefficients (i.e., x_1^4, x_2^4, x_3^4). Thus, we cannot determine whether it is SoS, and we move to the next step.

Example 3: p(x) = x_1^4 + x_2^4 - 2 x_1^2 x_2^2. This polynomial is SoS because it can be rewritten as: p(x) = (x_1^2 - x_2^2)^2. Note that a negative coefficient in the highest-degree cross term is allowed. For instance, in this case, we have the negative coefficient cross term -2 x_1^2 x_2^2. However, the highest-degree univariate terms are positive (i.e., x_1^4, x_2^4).

Step 2. Check for Non-negativity: SoS polynomials are nonnegative for all real inputs. For example, if a polynomial p(x) has a negative constant term, then p(0) < 0, proving it is not SoS. Similarly, if a horizontally translated and scaled polynomial q(x) = c p(x + d) (for any c in R and d in R^n) satisfies q(0) < 0, then p(x) cannot be SoS.

To determine whether a polynomial is nonnegative, please use the following approaches:

Constant coefficient check: If the constant coefficient is negative, then p(0) < 0. For instance, p(x) = x^4 + x^3 - 1, p(x) = x_1^2 + x_1^2 x_2^2 + x_2^4 - 0.1 are no SoS polynomials.

Grid evaluation: Try finding the minimum value of the polynomial over a selected evaluation grid. It is crucial to perform this step. Substitute multiple values of x, such as (1,0,0,...), (0,1,0,...), (0,0,1,...), etc., to check whether the polynomial evaluates to a negative value.

Leading order and dominant terms: Analyze the highest-degree terms and explore symmetries among cross terms. Evaluate the magnitude of negative coefficients relative to positive coefficients.

Finding minima: Attempt to find the local or global minimum of the polynomial to determine if it is negative.

Finding Symmetry and Translation:
Example 1: Consider a horizontally translated and scaled polynomial: p(x) = 1.8 x_1^2 + 10.8 x_1 + 1.2 x_2^2 + 4.8 x_2 + 20.82. Rewriting, p(x) = 1.8 (x_1 + 3)^2 + 1.2 (x_2 + 2)^2 - 0.18. Since p(-3, -2) < 0, the polynomial is still not SoS.

Step 3. Check for Square Form: An SoS polynomial p(x) can be written as p(x) = sum_i q_i(x)^2, where each q_i(x) is a polynomial.

Example: Consider p(x) = (x_1 - x_1 x_2)^2 + (x_2^2 - x_1^4)^2, which is an SoS polynomial. However, polynomials are sometimes given in their expanded form. For instance, the same polynomial can be written as: p(x) = -2 x_1^2 x_2 + x_1^2 + x_1^8 - 2 x_1^4 x_2^2 + x_1^2 x_2^2 + x_2^4. On the other hand, consider p(x) = (x_1 - x_1 x_2)^2 + (x_2^2 - x_1^4)^2 - 20. This polynomial is not SoS. To determine whether an expanded polynomial can be expressed in SoS form with a negative constant, one should analyze the symmetries of the terms and the structure of the cross terms.

Step 4. Check for Special Structures and Cases:
a) Any nonnegative quadratic polynomial is a sum of squares (SoS).
   Examples: p(x) = x_1^2 + x_2^2 - 2 x_1 x_2, p(x) = x_1^2 + x_2^2 + 4 x_3^2 - 3 x_2 x_3. These are SoS.
   Counterexamples: p(x) = x_1^2 + x_2^2 - 2 x_1 x_2 - 1, p(x) = x_1^2 + x_2^2 + 4 x_3^2 - 5 x_2 x_3.
b) Any nonnegative quartic polynomial in one or two variables is SoS.
   Example: p(x) = x_1^4 + 2 x_1^2 x_2 - 2 x_1^2 + x_2^2 - 2 x_2 + 1 = (x_1^2 + x_2 - 1)^2.
   Counterexample: p(x) = x_1^4 + 2 x_1^2 x_2 - 2 x_1^2 + x_2^2 - 2 x_2 = (x_1^2 + x_2 - 1)^2 - 1.
c) Any nonnegative quartic homogeneous polynomial in one, two, or three variables is SoS.
d) Any nonnegative even-degree univariate polynomial is SoS.
   Example: p(x) = x^6 + 3 x^4 + 2 x^2, which is nonnegative and SoS.
   Counterexample: p(x) = x^6 + 3 x^4 + 2 x, which takes negative values and is not SoS.
e) Any nonnegative polynomial with a quadratic term and quartic regularization is SoS.
Therefore, if a polynomial meets one of the above criteria and is nonnegative, it is an SoS polynomial. Nonnegativity can be verified by determining the global minimum, checking the descent direction, or performing a grid search.

Step 5. Check for Matrix Decomposition and Check for Symmetric Positive Definite Q: If the above checks fail, we can use the following theoretical reasoning:
a) For an even degree 2d polynomial in [x_1, ..., x_n], construct a monomial basis using canonical ordering: y* := (x_1*, ..., x_n*, (x_1*)^2, ..., x_1* x_n*, x_2* x_3*, ..., (x_1*)^(2d), ..., (x_n*)^(2d)). This vector y* has length C(n+2d, 2d).
b) Express the polynomial as p(x) = y*^T Q y*, where Q is a symmetric matrix of size C(n+2d, 2d) x C(n+2d, 2d). Note that this representation is not unique; there are multiple valid forms of Q.
c) Check whether Q is positive definite. This can be done by finding its smallest eigenvalue. If such a Q exists, then p(x) is a sum of squares (SoS). Otherwise, p(x) is very likely not SoS.
If all the above tests fail, we can try Semidefinite Programming (SDP), which is the test used by existing solvers (e.g., YALMIP) to verify whether a polynomial is SoS. For example, to determine if p(x) = x_1^4 - 4 x_1^3 x_2 + 7 x_1^2 x_2^2 - 4 x_1 x_2^3 - 4 x_1 x_2 + x_2^4 is SoS, we convert the problem to the following. We solve the SDP
  gamma* = min p = y_40 - 4 y_31 + 7 y_22 - 4 y_13 - 4 y_11 + y_04
subject to the constraint
  [ 1    y_10 y_01 | y_20 y_11 y_02 ]
  [ y_10 y_20 y_11 | y_30 y_21 y_12 ]
  [ y_01 y_11 y_02 | y_21 y_12 y_03 ]
  [ y_20 y_30 y_21 | y_40 y_31 y_22 ]  is positive semidefinite.
  [ y_11 y_21 y_12 | y_31 y_22 y_13 ]
  [ y_02 y_12 y_03 | y_22 y_13 y_04 ]
If gamma* >= 0, then p is SoS; otherwise, it is not.)";

const std::string kDirective =
    "End your response with a final line of the form \"ANSWER: SOS\" if the polynomial is a sum of squares, "
    "or \"ANSWER: NOT SOS\" if it is not.";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Parses the text after "ANSWER:" up to the end of its line.
Extracted parse_answer(std::string_view rest) {
  std::string t;
  for (char c : rest) {
    if (c == '\n' || c == '\r') break;
    const auto u = static_cast<unsigned char>(c);
    if (std::isalpha(u)) {
      t += static_cast<char>(std::toupper(u));
    } else if (!t.empty() && t.back() != ' ') {
      t += ' ';  // '_', '-', spaces and markup all separate words
    }
  }
  while (!t.empty() && t.back() == ' ') t.pop_back();
  if (t == "SOS" || t == "YES" || t == "SOS YES") return Extracted::kSos;
  if (t == "NOT SOS" || t == "NON SOS" || t == "NO" || t == "NOT SOS NO") return Extracted::kNotSos;
  return Extracted::kInvalid;
}

struct Phrase {
  std::string_view text;
  Extracted label;
};

constexpr std::array<Phrase, 14> kPhrases = {{
    {"is not sos", Extracted::kNotSos},
    {"not an sos", Extracted::kNotSos},
    {"not a sos", Extracted::kNotSos},
    {"not a sum of squares", Extracted::kNotSos},
    {"cannot be expressed as a sum of squares", Extracted::kNotSos},
    {"cannot be written as a sum of squares", Extracted::kNotSos},
    {"can not be expressed as a sum of squares", Extracted::kNotSos},
    {"is sos", Extracted::kSos},
    {"is an sos", Extracted::kSos},
    {"is a sos", Extracted::kSos},
    {"is a sum of squares", Extracted::kSos},
    {"is indeed a sum of squares", Extracted::kSos},
    {"can be expressed as a sum of squares", Extracted::kSos},
    {"can be written as a sum of squares", Extracted::kSos},
}};

}  // namespace

std::string to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::kPlain: return "plain";
    case PromptKind::kSimple: return "simple";
    case PromptKind::kReasoning: return "reasoning";
  }
  return "plain";
}

PromptKind prompt_kind_from_string(const std::string& s) {
  if (s == "plain") return PromptKind::kPlain;
  if (s == "simple") return PromptKind::kSimple;
  if (s == "reasoning") return PromptKind::kReasoning;
  throw std::invalid_argument("unknown prompt kind '" + s + "' (expected plain|simple|reasoning)");
}

const std::string& instruction_text(PromptKind kind) {
  switch (kind) {
    case PromptKind::kPlain: return kPlain;
    case PromptKind::kSimple: return kSimple;
    case PromptKind::kReasoning: return kReasoning;
  }
  return kPlain;
}

const std::string& answer_directive() { return kDirective; }

std::string render_prompt(std::string_view polynomial, PromptKind kind) {
  std::string out;
  if (kind == PromptKind::kPlain) {
    out = kPlain + ":\n\n";
  } else {
    out = kPlain + ". Use the following steps.\n\n" + instruction_text(kind) + "\n\nPolynomial:\n\n";
  }
  out += polynomial;
  out += "\n\n";
  out += kDirective;
  return out;
}

std::string render_prompt(const DatasetRecord& record, PromptKind kind) {
  return render_prompt(record.polynomial, kind);
}

std::string to_string(Extracted e) {
  switch (e) {
    case Extracted::kSos: return "sos";
    case Extracted::kNotSos: return "not_sos";
    case Extracted::kInvalid: return "invalid";
  }
  return "invalid";
}

Extracted extracted_from_string(const std::string& s) {
  if (s == "sos") return Extracted::kSos;
  if (s == "not_sos") return Extracted::kNotSos;
  if (s == "invalid") return Extracted::kInvalid;
  throw std::invalid_argument("unknown extracted label '" + s + "'");
}

Extracted extract_verdict(std::string_view response) {
  const std::string text = lower(response);

  for (auto pos = text.rfind("answer:"); pos != std::string::npos;
       pos = pos == 0 ? std::string::npos : text.rfind("answer:", pos - 1)) {
    const Extracted e = parse_answer(std::string_view(response).substr(pos + 7));
    if (e != Extracted::kInvalid) return e;
  }

  // Rightmost phrase end wins; on a tie the longer phrase.
  std::size_t best_end = 0, best_len = 0;
  Extracted best = Extracted::kInvalid;
  auto word_start = [&](std::size_t pos) { return pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1])); };
  for (const auto& ph : kPhrases) {
    auto pos = text.rfind(ph.text);
    while (pos != std::string::npos && !word_start(pos)) pos = pos == 0 ? std::string::npos : text.rfind(ph.text, pos - 1);
    if (pos == std::string::npos) continue;
    const std::size_t end = pos + ph.text.size();
    if (end > best_end || (end == best_end && ph.text.size() > best_len)) {
      best_end = end;
      best_len = ph.text.size();
      best = ph.label;
    }
  }
  return best;
}

}  // namespace sos
