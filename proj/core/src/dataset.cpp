#include "sos/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>

#include "sos/gram.hpp"
#include "sos/rng.hpp"
#include "sos/search.hpp"

namespace sos {

std::string to_string(SpecialFamily family) {
  switch (family) {
    case SpecialFamily::kQuadratic: return "quadratic";
    case SpecialFamily::kQuartic2Var: return "quartic_2var";
    case SpecialFamily::kQuarticHomog3Var: return "quartic_homog_3var";
    case SpecialFamily::kUnivariateEven: return "univariate_even";
    case SpecialFamily::kQuadQuartic: return "quad_quartic";
  }
  return "quadratic";
}

std::string to_string(GramStructure structure) {
  switch (structure) {
    case GramStructure::kDense: return "dense";
    case GramStructure::kSparse: return "sparse";
    case GramStructure::kLowRank: return "lowrank";
    case GramStructure::kIllConditioned: return "illcond";
  }
  return "dense";
}

SpecialFamily special_family_from_string(const std::string& s) {
  for (auto f : {SpecialFamily::kQuadratic, SpecialFamily::kQuartic2Var, SpecialFamily::kQuarticHomog3Var,
                 SpecialFamily::kUnivariateEven, SpecialFamily::kQuadQuartic}) {
    if (to_string(f) == s) return f;
  }
  throw std::invalid_argument("unknown special-case family '" + s + "'");
}

GramStructure gram_structure_from_string(const std::string& s) {
  for (auto g : {GramStructure::kDense, GramStructure::kSparse, GramStructure::kLowRank,
                 GramStructure::kIllConditioned}) {
    if (to_string(g) == s) return g;
  }
  throw std::invalid_argument("unknown Gram structure '" + s + "'");
}

void GenSpec::validate() const {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("GenSpec " + test_set_id + ": " + what);
  };
  if (test_set_id.empty()) fail("empty test_set_id");
  if (count < 0 || long_count < 0 || long_count > count) fail("need 0 <= long_count <= count");
  // One-variable records exist only for the univariate family.
  if (n_vars_min < 1 || n_vars_max > 10 || n_vars_min > n_vars_max) fail("n_vars range must lie in [1, 10]");
  if (degree_min < 2 || degree_max > 10 || degree_min > degree_max) fail("degree range must lie in [2, 10]");
  if (!(coef_max > 0.0)) fail("coef_max must be positive");
  if (!(sparsity > 0.0 && sparsity <= 1.0)) fail("sparsity must lie in (0, 1]");
  if (rank < 1) fail("rank must be positive");
  if (!(eigenvalue_spread >= 1.0)) fail("eigenvalue_spread must be >= 1");
  if (max_attempts < 1) fail("max_attempts must be positive");
  if (difficulty != "easy" && difficulty != "medium" && difficulty != "hard") fail("difficulty must be easy|medium|hard");
  static const std::vector<std::string> generators = {"odd_degree", "square_expanded", "square_form", "special_case",
                                                      "gram"};
  if (std::find(generators.begin(), generators.end(), generator) == generators.end()) {
    fail("unknown generator '" + generator + "'");
  }
  if (generator == "special_case" && families.empty()) fail("special_case needs at least one family");
}

nlohmann::ordered_json to_json(const GenSpec& s) {
  nlohmann::ordered_json j;
  j["test_set_id"] = s.test_set_id;
  j["description"] = s.description;
  j["difficulty"] = s.difficulty;
  j["generator"] = s.generator;
  j["negative"] = s.negative;
  if (!s.families.empty()) {
    auto fams = nlohmann::ordered_json::array();
    for (auto f : s.families) fams.push_back(to_string(f));
    j["families"] = std::move(fams);
  }
  if (s.generator == "gram") j["structure"] = to_string(s.structure);
  j["count"] = s.count;
  j["long_count"] = s.long_count;
  j["n_vars_min"] = s.n_vars_min;
  j["n_vars_max"] = s.n_vars_max;
  j["degree_min"] = s.degree_min;
  j["degree_max"] = s.degree_max;
  j["coef_max"] = s.coef_max;
  j["sparsity"] = s.sparsity;
  j["rank"] = s.rank;
  j["eigenvalue_spread"] = s.eigenvalue_spread;
  j["length_cap"] = s.length_cap;
  j["rng_seed"] = s.rng_seed;
  j["max_attempts"] = s.max_attempts;
  return j;
}

GenSpec gen_spec_from_json(const nlohmann::json& j) {
  GenSpec s;
  s.test_set_id = j.at("test_set_id").get<std::string>();
  s.description = j.value("description", "");
  s.difficulty = j.value("difficulty", "hard");
  s.generator = j.at("generator").get<std::string>();
  s.negative = j.value("negative", false);
  if (j.contains("families")) {
    for (const auto& f : j.at("families")) s.families.push_back(special_family_from_string(f.get<std::string>()));
  }
  if (j.contains("structure")) s.structure = gram_structure_from_string(j.at("structure").get<std::string>());
  s.count = j.value("count", 0);
  s.long_count = j.value("long_count", 0);
  s.n_vars_min = j.value("n_vars_min", s.n_vars_min);
  s.n_vars_max = j.value("n_vars_max", s.n_vars_max);
  s.degree_min = j.value("degree_min", s.degree_min);
  s.degree_max = j.value("degree_max", s.degree_max);
  s.coef_max = j.value("coef_max", s.coef_max);
  s.sparsity = j.value("sparsity", s.sparsity);
  s.rank = j.value("rank", s.rank);
  s.eigenvalue_spread = j.value("eigenvalue_spread", s.eigenvalue_spread);
  s.length_cap = j.value("length_cap", s.length_cap);
  s.rng_seed = j.value("rng_seed", s.rng_seed);
  s.max_attempts = j.value("max_attempts", s.max_attempts);
  s.validate();
  return s;
}

nlohmann::ordered_json to_json(const DatasetRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["test_set"] = r.test_set;
  j["polynomial"] = r.polynomial;
  j["n_vars"] = r.n_vars;
  j["degree"] = r.degree;
  j["label"] = r.label;
  j["difficulty"] = r.difficulty;
  j["length_chars"] = r.length_chars;
  j["justification"] = r.justification;
  j["provenance"] = r.provenance;
  return j;
}

DatasetRecord dataset_record_from_json(const nlohmann::json& j) {
  DatasetRecord r;
  r.id = j.at("id").get<std::string>();
  r.test_set = j.value("test_set", "");
  r.polynomial = j.at("polynomial").get<std::string>();
  r.n_vars = j.value("n_vars", std::size_t{1});
  r.degree = j.value("degree", 0);
  r.label = j.at("label").get<std::string>();
  if (r.label != "sos" && r.label != "not_sos") throw std::invalid_argument("record " + r.id + ": bad label");
  r.difficulty = j.value("difficulty", "");
  r.length_chars = j.value("length_chars", r.polynomial.size());
  r.justification = j.value("justification", "");
  if (j.contains("provenance")) r.provenance = j.at("provenance");
  return r;
}

namespace {

constexpr int kDecimals = 4;

// Uniform value on the grid {lo, lo + 10^-decimals, ..., hi}.
double decimal_value(Rng& rng, double lo, double hi, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const auto a = static_cast<long long>(std::llround(lo * scale));
  const auto b = static_cast<long long>(std::llround(hi * scale));
  const auto k = a + static_cast<long long>(rng.next() % static_cast<std::uint64_t>(b - a + 1));
  return static_cast<double>(k) / scale;
}

double signed_decimal(Rng& rng, double min_abs, double max_abs, int decimals) {
  const double v = decimal_value(rng, min_abs, max_abs, decimals);
  return rng.bernoulli(0.5) ? v : -v;
}

Monomial random_monomial(Rng& rng, std::size_t n, int degree) {
  std::vector<int> e(n, 0);
  for (int k = 0; k < degree; ++k) ++e[static_cast<std::size_t>(rng.integer(0, static_cast<int>(n) - 1))];
  return Monomial(std::move(e));
}

std::vector<Monomial> monomials_up_to(std::size_t n, int d, bool homogeneous) {
  Polynomial probe(n);
  probe.add_term(Monomial::unit(n, 0, 2 * d), 1.0);
  MonomialBasis b = monomial_basis(probe, BasisPruning::kNone);
  if (homogeneous) std::erase_if(b.entries, [d](const Monomial& m) { return m.degree() != d; });
  return b.entries;
}

Polynomial gram_expand(const Eigen::MatrixXd& Q, const std::vector<Monomial>& basis, std::size_t n) {
  MonomialBasis b;
  b.entries = basis;
  b.n_vars = n;
  return gram_polynomial(Q, b);
}

nlohmann::ordered_json point_json(const std::vector<double>& x) {
  auto a = nlohmann::ordered_json::array();
  for (double v : x) a.push_back(v);
  return a;
}

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// One candidate record; `text` is the polynomial field.
struct Candidate {
  Polynomial p;
  std::string text;
  std::string label;
  std::string justification;
  nlohmann::ordered_json provenance;
};

std::string rendered(const Polynomial& p) { return canonical_text(round_coefficients(p, kDecimals)); }

Candidate finish_expanded(Polynomial p, std::string label, std::string justification,
                          nlohmann::ordered_json provenance) {
  p = round_coefficients(p, kDecimals);
  std::string text = canonical_text(p);
  return {std::move(p), std::move(text), std::move(label), std::move(justification), std::move(provenance)};
}

// p - c with c above the estimated minimum; returns the shifted polynomial's
// witness or nullopt when rounding spoils it.
struct Shift {
  double constant = 0.0;
  std::vector<double> witness;
  double value = 0.0;
};

std::optional<Shift> negative_shift(const Polynomial& p, Rng& rng, const CheckerConfig& checker) {
  SearchPoint best;
  if (auto sq = complete_square(p)) {
    best = *sq;
  } else {
    // Any point below the shift works, so a light search is enough; long
    // polynomials carry thousands of terms.
    SearchConfig light = checker.search();
    light.max_grid_points = std::min<std::size_t>(light.max_grid_points, 2000);
    light.random_samples = std::min(light.random_samples, 300);
    light.descent_starts = std::min(light.descent_starts, 8);
    best = estimate_minimum(p, light).best;
  }
  const double delta = decimal_value(rng, 0.1, 3.0, 1);
  const double base = std::round(best.value * 1e4) / 1e4;
  Shift s;
  s.constant = std::round((base + delta) * 1e4) / 1e4;
  Polynomial shifted = round_coefficients(p - Polynomial::constant(p.n_vars(), s.constant), kDecimals);
  s.witness = best.x;
  s.value = evaluate(shifted, s.witness);
  if (!(s.value < -0.5 * delta)) return std::nullopt;
  return s;
}

bool checker_says_not_sos(const Polynomial& p, const CheckerConfig& checker, nlohmann::ordered_json& provenance,
                          std::string& justification) {
  const Verdict v = classify(p, checker);
  nlohmann::ordered_json c;
  c["label"] = to_string(v.label);
  c["deciding_step"] = v.deciding_step;
  if (v.witness) {
    c["witness"] = point_json(v.witness->point);
    c["witness_value"] = v.witness->value;
  }
  provenance["checker"] = std::move(c);
  if (!is_not_sos(v.label)) return false;
  if (v.label == Label::kNotSos && v.witness) {
    justification += " The checker found p(w) = " + format_value(v.witness->value) + " < 0 at step " +
                     std::to_string(v.deciding_step) + ".";
  } else if (v.label == Label::kNotSos) {
    justification += " The checker proves it is not SoS at step " + std::to_string(v.deciding_step) + ".";
  } else {
    justification += " No PSD Gram matrix exists numerically (checker: LIKELY_NOT_SOS).";
  }
  return true;
}

bool checker_says_sos(const Polynomial& p, const CheckerConfig& checker, nlohmann::ordered_json& provenance) {
  const Verdict v = classify(p, checker);
  provenance["checker"] = {{"label", to_string(v.label)}, {"deciding_step", v.deciding_step}};
  return v.label == Label::kSos;
}

// ---- Test Set 1 -------------------------------------------------------------

std::optional<Candidate> build_odd_degree(const GenSpec& spec, Rng& rng, bool want_long) {
  const int n = rng.integer(want_long ? std::max(spec.n_vars_min, 3) : spec.n_vars_min, spec.n_vars_max);
  std::vector<int> odd;
  for (int d = std::max(spec.degree_min, 3); d <= spec.degree_max; ++d) {
    if (d % 2 == 1 && (!want_long || d >= 5)) odd.push_back(d);
  }
  if (odd.empty()) throw std::invalid_argument("odd_degree: no odd degree in range");
  const int D = odd[static_cast<std::size_t>(rng.integer(0, static_cast<int>(odd.size()) - 1))];
  const auto nv = static_cast<std::size_t>(n);

  Polynomial p(nv);
  p.add_term(random_monomial(rng, nv, D), signed_decimal(rng, 0.1, spec.coef_max, 2));
  const std::size_t target =
      want_long ? spec.length_cap + static_cast<std::size_t>(rng.integer(1, 2000)) : 0;
  const int terms = want_long ? 100000 : rng.integer(2, 30);
  for (int k = 1; k < terms; ++k) {
    const Monomial m = random_monomial(rng, nv, rng.integer(0, D));
    if (p.coefficient(m) != 0.0) continue;
    p.add_term(m, signed_decimal(rng, 0.1, spec.coef_max, 2));
    if (want_long && k % 8 == 0 && rendered(p).size() > target) break;
    if (want_long && k > 4000) return std::nullopt;
  }
  nlohmann::ordered_json prov;
  prov["construction"] = "odd_degree";
  prov["degree"] = D;
  prov["terms"] = p.size();
  return finish_expanded(std::move(p), "not_sos",
                         "The highest total degree " + std::to_string(D) +
                             " is odd, so p(t*v) and p(-t*v) have opposite signs for large t along any direction "
                             "where the top-degree part is nonzero; p takes negative values and is not SoS.",
                         std::move(prov));
}

// ---- Test Sets 2 ------------------------------------------------------------

std::string squared_form_text(const SquareList& list);

// Long squared forms grow term by term until the squared text passes the cap.
SquareList random_square_list(const GenSpec& spec, Rng& rng, bool want_long, bool squared_form, std::size_t n) {
  const int d_lo = std::max(1, spec.degree_min / 2);
  const int d_hi = std::max(d_lo, spec.degree_max / 2);
  const int r = want_long ? rng.integer(4, 12) : rng.integer(1, 4);
  SquareList list;
  for (int j = 0; j < r; ++j) {
    const int dq = rng.integer(d_lo, d_hi);
    Polynomial q(n);
    q.add_term(random_monomial(rng, n, dq), signed_decimal(rng, 0.1, spec.coef_max, 1));
    const int extra = want_long ? rng.integer(5, 14) : rng.integer(0, 4);
    for (int k = 0; k < extra; ++k) {
      const Monomial m = random_monomial(rng, n, rng.integer(0, dq));
      if (q.coefficient(m) != 0.0) continue;
      q.add_term(m, signed_decimal(rng, 0.1, spec.coef_max, 1));
    }
    list.squares.push_back(std::move(q));
  }
  if (want_long && squared_form) {
    const std::size_t target = spec.length_cap + static_cast<std::size_t>(rng.integer(1, 1500));
    for (int guard = 0; squared_form_text(list).size() <= target && guard < 5000; ++guard) {
      auto& q = list.squares[static_cast<std::size_t>(rng.integer(0, r - 1))];
      const Monomial m = random_monomial(rng, n, rng.integer(0, q.degree()));
      if (q.coefficient(m) == 0.0) q.add_term(m, signed_decimal(rng, 0.1, spec.coef_max, 1));
    }
  }
  return list;
}

std::string squared_form_text(const SquareList& list) {
  std::string text;
  for (const auto& q : list.squares) {
    if (!text.empty()) text += " + ";
    text += "(" + canonical_text(q) + ")^2";
  }
  return text;
}

std::optional<Candidate> build_square(const GenSpec& spec, Rng& rng, bool want_long, bool expanded, bool negative,
                                      const CheckerConfig& checker) {
  const auto n = static_cast<std::size_t>(rng.integer(spec.n_vars_min, spec.n_vars_max));
  const SquareList list = random_square_list(spec, rng, want_long, !expanded, n);
  const Polynomial p = round_coefficients(expand_squares(list), kDecimals);

  nlohmann::ordered_json prov;
  prov["construction"] = expanded ? "square_expanded" : "square_form";
  auto squares = nlohmann::ordered_json::array();
  for (const auto& q : list.squares) squares.push_back(canonical_text(q));
  prov["squares"] = std::move(squares);
  const std::string r = std::to_string(list.squares.size());

  if (!negative) {
    Candidate c;
    c.p = p;
    c.text = expanded ? canonical_text(p) : squared_form_text(list);
    c.label = "sos";
    c.justification = expanded ? "Expanded form of a sum of " + r + " squares of polynomials, hence SoS."
                               : "Written explicitly as a sum of " + r + " squares, hence SoS.";
    c.provenance = std::move(prov);
    return c;
  }

  const auto shift = negative_shift(p, rng, checker);
  if (!shift) return std::nullopt;
  Candidate c;
  c.p = round_coefficients(p - Polynomial::constant(n, shift->constant), kDecimals);
  c.text = expanded ? canonical_text(c.p) : squared_form_text(list) + " - " + coefficient_text(shift->constant);
  c.label = "not_sos";
  c.justification = "A sum of " + r + " squares minus " + coefficient_text(shift->constant) +
                    ", which exceeds its minimum: p(w) = " + format_value(shift->value) +
                    " < 0, so p is not nonnegative and not SoS.";
  prov["shift"] = shift->constant;
  prov["witness"] = point_json(shift->witness);
  prov["witness_value"] = shift->value;
  c.provenance = std::move(prov);
  return c;
}

// ---- Test Sets 3.1, 3.2, 4 -------------------------------------------------

// Q = A^T A with A (k x N) on a 0.1 grid, so Q and p have exact two-decimal entries.
Eigen::MatrixXd decimal_gram(Rng& rng, int k, int N, double amplitude, double zero_probability) {
  Eigen::MatrixXd A(k, N);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < N; ++j) {
      A(i, j) = rng.bernoulli(zero_probability) ? 0.0 : signed_decimal(rng, 0.1, amplitude, 1);
    }
  }
  return A.transpose() * A;
}

struct FamilyInstance {
  Polynomial p;
  nlohmann::ordered_json provenance;
  std::string description;
};

std::optional<FamilyInstance> build_family(SpecialFamily family, const GenSpec& spec, Rng& rng) {
  FamilyInstance out;
  out.provenance["construction"] = "special_case";
  out.provenance["family"] = to_string(family);
  switch (family) {
    case SpecialFamily::kQuadratic: {
      const auto n = static_cast<std::size_t>(rng.integer(std::max(spec.n_vars_min, 2), spec.n_vars_max));
      const auto basis = monomials_up_to(n, 1, false);
      const int N = static_cast<int>(basis.size());
      const Eigen::MatrixXd Q = decimal_gram(rng, rng.integer(1, N), N, 2.0, 0.3);
      out.p = gram_expand(Q, basis, n);
      out.provenance["rank"] = Eigen::FullPivLU<Eigen::MatrixXd>(Q).rank();
      out.description = "quadratic [1; x]^T Q [1; x] with PSD Q";
      if (out.p.degree() != 2) return std::nullopt;
      break;
    }
    case SpecialFamily::kQuartic2Var: {
      const auto basis = monomials_up_to(2, 2, false);
      const Eigen::MatrixXd Q = decimal_gram(rng, rng.integer(2, 6), 6, 2.0, 0.2);
      out.p = gram_expand(Q, basis, 2);
      out.description = "bivariate quartic phi^T Q phi with PSD Q";
      if (out.p.degree() != 4) return std::nullopt;
      break;
    }
    case SpecialFamily::kQuarticHomog3Var: {
      const auto basis = monomials_up_to(3, 2, true);
      const Eigen::MatrixXd Q = decimal_gram(rng, rng.integer(2, 6), 6, 2.0, 0.2);
      out.p = gram_expand(Q, basis, 3);
      out.description = "homogeneous ternary quartic phi^T Q phi with PSD Q";
      if (out.p.degree() != 4 || out.p.active_variables().size() != 3) return std::nullopt;
      break;
    }
    case SpecialFamily::kUnivariateEven: {
      const int d = rng.integer(std::max(2, spec.degree_min / 2), std::max(2, spec.degree_max / 2));
      const auto basis = monomials_up_to(1, d, false);
      const int N = d + 1;
      const Eigen::MatrixXd Q = decimal_gram(rng, rng.integer(1, N), N, 2.0, 0.2);
      out.p = gram_expand(Q, basis, 1);
      out.description = "univariate polynomial of even degree phi^T Q phi with PSD Q";
      if (out.p.degree() != 2 * d) return std::nullopt;
      break;
    }
    case SpecialFamily::kQuadQuartic: {
      // sum_i mu_i (x_i^2 - a_i)^2 + [1; x]^T M [1; x]
      const auto n = static_cast<std::size_t>(rng.integer(std::max(spec.n_vars_min, 2), spec.n_vars_max));
      const auto basis = monomials_up_to(n, 1, false);
      const int N = static_cast<int>(basis.size());
      out.p = gram_expand(decimal_gram(rng, rng.integer(1, N), N, 1.0, 0.4), basis, n);
      for (std::size_t i = 0; i < n; ++i) {
        const double mu = decimal_value(rng, 0.1, 3.0, 1);
        const double a = decimal_value(rng, 0.0, 2.0, 1);
        out.p.add_term(Monomial::unit(n, i, 4), mu);
        out.p.add_term(Monomial::unit(n, i, 2), -2.0 * mu * a);
        out.p.add_term(Monomial(n), mu * a * a);
      }
      out.description = "quartic regularization sum_i mu_i (x_i^2 - a_i)^2 plus a PSD quadratic";
      break;
    }
  }
  out.p = round_coefficients(out.p, kDecimals);
  return out;
}

std::optional<Candidate> build_special(const GenSpec& spec, Rng& rng, int index, const CheckerConfig& checker) {
  const SpecialFamily family = spec.families[static_cast<std::size_t>(index) % spec.families.size()];
  auto inst = build_family(family, spec, rng);
  if (!inst) return std::nullopt;
  if (!spec.negative) {
    if (!checker_says_sos(inst->p, checker, inst->provenance)) return std::nullopt;
    std::string why = "Constructed as a " + inst->description + ", hence SoS.";
    return finish_expanded(std::move(inst->p), "sos", std::move(why), std::move(inst->provenance));
  }
  const auto shift = negative_shift(inst->p, rng, checker);
  if (!shift) return std::nullopt;
  Polynomial q = round_coefficients(inst->p - Polynomial::constant(inst->p.n_vars(), shift->constant), kDecimals);
  inst->provenance["shift"] = shift->constant;
  std::string why = "A " + inst->description + " shifted down by " + coefficient_text(shift->constant) +
                    ", below its minimum, so it takes negative values.";
  if (!checker_says_not_sos(q, checker, inst->provenance, why)) return std::nullopt;
  return finish_expanded(std::move(q), "not_sos", std::move(why), std::move(inst->provenance));
}

// ---- Test Sets 5.x ----------------------------------------------------------

struct Shape {
  int n;
  int d;
  bool homogeneous;
  int size;
};

std::vector<Shape> shapes_for(const GenSpec& spec, int min_size, int max_size) {
  std::vector<Shape> out;
  for (int n = std::max(spec.n_vars_min, 2); n <= spec.n_vars_max; ++n) {
    for (int d = std::max(1, (spec.degree_min + 1) / 2); 2 * d <= spec.degree_max; ++d) {
      for (bool homog : {false, true}) {
        const auto un = static_cast<std::size_t>(n);
        const auto ud = static_cast<std::size_t>(d);
        const auto size = static_cast<int>(homog ? binomial(un + ud - 1, ud) : binomial(un + ud, ud));
        if (size >= min_size && size <= max_size) out.push_back({n, d, homog, size});
      }
    }
  }
  return out;
}

Eigen::MatrixXd random_orthogonal(Rng& rng, int N) {
  Eigen::MatrixXd G(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) G(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  return qr.householderQ() * Eigen::MatrixXd::Identity(N, N);
}

Eigen::VectorXd decimal_vector(Rng& rng, int N, double amplitude, double zero_probability) {
  Eigen::VectorXd v(N);
  for (int i = 0; i < N; ++i) v(i) = rng.bernoulli(zero_probability) ? 0.0 : signed_decimal(rng, 0.1, amplitude, 1);
  return v;
}

// Basis indices k whose square 2m_k arises from the pair (k, k) only, so that
// coefficient of x^(2m_k) in phi^T Q phi is exactly Q_kk.
std::vector<int> isolated_squares(const std::vector<Monomial>& basis) {
  std::map<Monomial, int> counts;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = i; j < basis.size(); ++j) ++counts[basis[i] + basis[j]];
  }
  std::vector<int> out;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (counts.at(basis[k].doubled()) == 1) out.push_back(static_cast<int>(k));
  }
  return out;
}

Eigen::MatrixXd structured_gram(GramStructure structure, bool indefinite, const GenSpec& spec, Rng& rng,
                                const std::vector<Monomial>& basis, nlohmann::ordered_json& prov) {
  const int N = static_cast<int>(basis.size());
  switch (structure) {
    case GramStructure::kDense: {
      Eigen::MatrixXd A(N, N);
      for (int i = 0; i < N; ++i) A.row(i) = decimal_vector(rng, N, 1.0, 0.0).transpose();
      Eigen::MatrixXd Q = A.transpose() * A;
      if (indefinite) {
        // Q - w w^T with w^T Q w < |w|^4, so w is a negative direction.
        const Eigen::VectorXd w0 = decimal_vector(rng, N, 1.0, 0.0);
        const double ratio = (A * w0).squaredNorm() / std::pow(w0.squaredNorm(), 2);
        const double s = std::floor(std::sqrt(ratio)) + 1.0;
        const Eigen::VectorXd w = s * w0;
        Q -= w * w.transpose();
      }
      return Q;
    }
    case GramStructure::kSparse: {
      Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, N);
      int nonzero = 0;
      for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j) {
          if (!rng.bernoulli(spec.sparsity)) continue;
          Q(i, j) = Q(j, i) = signed_decimal(rng, 0.1, 2.0, 1);
          nonzero += 2;
        }
      }
      // Diagonal dominance makes Q positive definite.
      for (int i = 0; i < N; ++i) Q(i, i) = Q.row(i).cwiseAbs().sum() + decimal_value(rng, 0.1, 2.0, 1);
      if (indefinite) {
        // A negative Q_kk at an isolated square puts a negative coefficient on a vertex
        // of the Newton polytope. Elsewhere another Gram matrix is often PSD.
        const auto candidates = isolated_squares(basis);
        const int k = candidates[static_cast<std::size_t>(rng.integer(0, static_cast<int>(candidates.size()) - 1))];
        Q(k, k) = -decimal_value(rng, 0.1, 2.0, 1);
        prov["negative_diagonal"] = monomial_text(basis[static_cast<std::size_t>(k)]);
      }
      prov["offdiagonal_density"] = N > 1 ? static_cast<double>(nonzero) / (static_cast<double>(N) * (N - 1)) : 0.0;
      return Q;
    }
    case GramStructure::kLowRank: {
      const int r = std::min(spec.rank, N);
      Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, N);
      for (int k = 0; k < r; ++k) {
        const Eigen::VectorXd v = decimal_vector(rng, N, 1.0, 0.2);
        if (indefinite && k == r - 1) {
          Q -= v * v.transpose();
        } else {
          Q += v * v.transpose();
        }
      }
      return Q;
    }
    case GramStructure::kIllConditioned: {
      const Eigen::MatrixXd U = random_orthogonal(rng, N);
      Eigen::VectorXd lambda(N);
      for (int i = 0; i < N; ++i) {
        lambda(i) = N == 1 ? 1.0 : std::pow(spec.eigenvalue_spread, static_cast<double>(i) / (N - 1));
      }
      if (indefinite) {
        const int k = rng.integer(N / 2, N - 1);
        lambda(k) = -lambda(k);
      }
      return U * lambda.asDiagonal() * U.transpose();
    }
  }
  return Eigen::MatrixXd::Zero(N, N);
}

std::optional<Candidate> build_gram(const GenSpec& spec, Rng& rng, bool want_long, GramStructure structure,
                                    bool indefinite, const CheckerConfig& checker) {
  int lo = 3, hi = 28;
  if (want_long) {
    lo = 28;
    hi = 66;
  }
  if (structure == GramStructure::kSparse) {
    lo = want_long ? 45 : 3;
    hi = want_long ? 120 : 45;
  } else if (structure == GramStructure::kIllConditioned && want_long) {
    lo = 21;
    hi = 56;
  }
  const auto shapes = shapes_for(spec, lo, hi);
  if (shapes.empty()) throw std::invalid_argument("gram: no basis shape fits the n_vars/degree ranges");
  const Shape shape = shapes[static_cast<std::size_t>(rng.integer(0, static_cast<int>(shapes.size()) - 1))];
  const auto n = static_cast<std::size_t>(shape.n);
  const auto basis = monomials_up_to(n, shape.d, shape.homogeneous);
  const int N = static_cast<int>(basis.size());

  nlohmann::ordered_json prov;
  prov["construction"] = "gram";
  prov["structure"] = to_string(structure);
  prov["psd"] = !indefinite;
  prov["half_degree"] = shape.d;
  prov["homogeneous"] = shape.homogeneous;
  prov["basis_size"] = N;
  const Eigen::MatrixXd Q = structured_gram(structure, indefinite, spec, rng, basis, prov);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double top = std::max(std::fabs(ev(0)), std::fabs(ev(N - 1)));
  prov["spectrum"] = {{"min", ev(0)},
                      {"max", ev(N - 1)},
                      {"negative", (ev.array() < -1e-9 * top).count()},
                      {"rank", (ev.array().abs() > 1e-9 * top).count()}};

  Polynomial p = round_coefficients(gram_expand(Q, basis, n), kDecimals);
  if (p.degree() != 2 * shape.d) return std::nullopt;
  const std::size_t length = canonical_text(p).size();
  if (want_long ? length <= spec.length_cap : length > spec.length_cap) return std::nullopt;

  const std::string kind = to_string(structure);
  if (!indefinite) {
    return finish_expanded(std::move(p), "sos",
                           "p = phi^T Q phi over " + std::to_string(N) + " monomials with " + kind +
                               " positive semidefinite Q (eigenvalues " + format_value(ev(0)) + " to " +
                               format_value(ev(N - 1)) + "), hence SoS.",
                           std::move(prov));
  }
  std::string why = "p = phi^T Q phi with " + kind + " indefinite Q (min eigenvalue " + format_value(ev(0)) + ").";
  if (!checker_says_not_sos(p, checker, prov, why)) return std::nullopt;
  return finish_expanded(std::move(p), "not_sos", std::move(why), std::move(prov));
}

// ---- Driver -----------------------------------------------------------------

struct Recipe {
  enum class Kind { kOddDegree, kSquare, kSpecial, kGram } kind = Kind::kOddDegree;
  bool expanded = true;
  bool negative = false;
  GramStructure structure = GramStructure::kDense;
};

Recipe recipe_for(const GenSpec& spec) {
  Recipe r;
  r.negative = spec.negative;
  if (spec.generator == "odd_degree") {
    r.kind = Recipe::Kind::kOddDegree;
  } else if (spec.generator == "square_expanded" || spec.generator == "square_form") {
    r.kind = Recipe::Kind::kSquare;
    r.expanded = spec.generator == "square_expanded";
  } else if (spec.generator == "special_case") {
    r.kind = Recipe::Kind::kSpecial;
  } else {
    r.kind = Recipe::Kind::kGram;
    r.structure = spec.structure;
  }
  return r;
}

std::string record_id(const GenSpec& spec, int index) {
  std::ostringstream os;
  os << spec.test_set_id << '-';
  os.width(4);
  os.fill('0');
  os << index;
  return os.str();
}

// Long records are the last long_count indices of a set.
bool is_long(const GenSpec& spec, int index) { return index >= spec.count - spec.long_count; }

std::optional<DatasetRecord> produce(const GenSpec& spec, const Recipe& recipe, int index,
                                     const CheckerConfig& checker, std::string& error) {
  const bool want_long = is_long(spec, index);
  Rng rng(derive_seed(spec.rng_seed, {hash_string(spec.test_set_id), static_cast<std::uint64_t>(index)}));
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    std::optional<Candidate> c;
    switch (recipe.kind) {
      case Recipe::Kind::kOddDegree: c = build_odd_degree(spec, rng, want_long); break;
      case Recipe::Kind::kSquare: c = build_square(spec, rng, want_long, recipe.expanded, recipe.negative, checker); break;
      case Recipe::Kind::kSpecial: c = build_special(spec, rng, index, checker); break;
      case Recipe::Kind::kGram: c = build_gram(spec, rng, want_long, recipe.structure, recipe.negative, checker); break;
    }
    if (!c) continue;
    const bool long_text = c->text.size() > spec.length_cap;
    if (long_text != want_long) continue;
    DatasetRecord r;
    r.id = record_id(spec, index);
    r.test_set = spec.test_set_id;
    r.polynomial = std::move(c->text);
    r.n_vars = c->p.n_vars();
    r.degree = c->p.degree();
    r.label = std::move(c->label);
    r.difficulty = spec.difficulty;
    r.length_chars = r.polynomial.size();
    r.justification = std::move(c->justification);
    c->provenance["attempts"] = attempt + 1;
    r.provenance = std::move(c->provenance);
    return r;
  }
  error = "no acceptable record after " + std::to_string(spec.max_attempts) + " attempts";
  return std::nullopt;
}

struct Task {
  const GenSpec* spec;
  Recipe recipe;
  int index;
};

GenerationResult run_tasks(const std::vector<Task>& tasks, const GenerationOptions& options) {
  std::vector<std::optional<DatasetRecord>> slots(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      try {
        slots[t] = produce(*tasks[t].spec, tasks[t].recipe, tasks[t].index, options.checker, errors[t]);
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
    }
  };
  unsigned threads = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(tasks.size(), 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  GenerationResult result;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (slots[t]) {
      result.records.push_back(std::move(*slots[t]));
    } else {
      result.failures.push_back({tasks[t].spec->test_set_id, tasks[t].index, errors[t]});
    }
  }
  return result;
}

GenerationResult run_one(const GenSpec& spec, const Recipe& recipe, const GenerationOptions& options) {
  spec.validate();
  std::vector<Task> tasks;
  for (int i = 0; i < spec.count; ++i) tasks.push_back({&spec, recipe, i});
  return run_tasks(tasks, options);
}

}  // namespace

GenerationResult gen_odd_degree(const GenSpec& spec, const GenerationOptions& options) {
  Recipe r;
  r.kind = Recipe::Kind::kOddDegree;
  return run_one(spec, r, options);
}

GenerationResult gen_square_form(const GenSpec& spec, bool expanded, bool negative_shift,
                                 const GenerationOptions& options) {
  Recipe r;
  r.kind = Recipe::Kind::kSquare;
  r.expanded = expanded;
  r.negative = negative_shift;
  return run_one(spec, r, options);
}

GenerationResult gen_special_case(const GenSpec& spec, const GenerationOptions& options) {
  Recipe r;
  r.kind = Recipe::Kind::kSpecial;
  r.negative = spec.negative;
  return run_one(spec, r, options);
}

GenerationResult gen_from_gram(const GenSpec& spec, GramStructure structure, bool indefinite,
                               const GenerationOptions& options) {
  Recipe r;
  r.kind = Recipe::Kind::kGram;
  r.structure = structure;
  r.negative = indefinite;
  return run_one(spec, r, options);
}

std::vector<GenSpec> table3_manifest(std::uint64_t seed) {
  auto make = [seed](std::string id, std::string description, std::string difficulty, std::string generator,
                     bool negative, int count, int long_count) {
    GenSpec s;
    s.test_set_id = std::move(id);
    s.description = std::move(description);
    s.difficulty = std::move(difficulty);
    s.generator = std::move(generator);
    s.negative = negative;
    s.count = count;
    s.long_count = long_count;
    s.rng_seed = seed;
    return s;
  };
  std::vector<GenSpec> m;
  m.push_back(make("1", "Odd Degree Polynomial", "easy", "odd_degree", true, 200, 50));
  m.push_back(make("2a", "SoS (Expanded Form)", "hard", "square_expanded", false, 120, 51));
  m.push_back(make("2b", "Negative (Expanded Form)", "hard", "square_expanded", true, 63, 40));
  m.push_back(make("2.1a", "SoS (Squared Form)", "easy", "square_form", false, 120, 15));
  m.push_back(make("2.1b", "Negative (Squared Form)", "easy", "square_form", true, 63, 25));

  auto special = [&](std::string id, std::string description, bool negative, std::vector<SpecialFamily> families,
                     int nmin, int nmax, int dmin, int dmax) {
    GenSpec s = make(std::move(id), std::move(description), "medium", "special_case", negative, 100, 0);
    s.families = std::move(families);
    s.n_vars_min = nmin;
    s.n_vars_max = nmax;
    s.degree_min = dmin;
    s.degree_max = dmax;
    s.coef_max = 2.0;
    m.push_back(std::move(s));
  };
  special("3.1a", "Nonnegative Quadratic", false, {SpecialFamily::kQuadratic}, 2, 10, 2, 2);
  special("3.1b", "Negative Quadratic", true, {SpecialFamily::kQuadratic}, 2, 10, 2, 2);
  special("3.2a", "Nonnegative Quartic with 2 variables", false, {SpecialFamily::kQuartic2Var}, 2, 2, 4, 4);
  special("3.2b", "Negative Quartic with 2 variables", true, {SpecialFamily::kQuartic2Var}, 2, 2, 4, 4);
  const std::vector<SpecialFamily> step4 = {SpecialFamily::kQuarticHomog3Var, SpecialFamily::kUnivariateEven,
                                            SpecialFamily::kQuadQuartic};
  special("4a", "Nonnegative Quadratic Quartic", false, step4, 1, 10, 4, 10);
  special("4b", "Negative Quartic", true, step4, 1, 10, 4, 10);

  auto gram = [&](std::string id, std::string description, bool negative, GramStructure structure, int count,
                  int long_count) {
    GenSpec s = make(std::move(id), std::move(description), "hard", "gram", negative, count, long_count);
    s.structure = structure;
    m.push_back(std::move(s));
  };
  gram("5.1a", "PSD Q", false, GramStructure::kDense, 96, 16);
  gram("5.1b", "Non-PD Q", true, GramStructure::kDense, 96, 16);
  gram("5.2a", "PSD Sparse Q (Sparsity 0.1)", false, GramStructure::kSparse, 72, 16);
  gram("5.2b", "Non-PD Sparse Q (Sparsity 0.1)", true, GramStructure::kSparse, 72, 16);
  gram("5.3a", "PSD Low Rank Q (rank 3)", false, GramStructure::kLowRank, 60, 18);
  gram("5.3b", "Non-PD Low Rank Q (rank 3)", true, GramStructure::kLowRank, 40, 12);
  gram("5.4a", "PSD Ill-Conditioned Q (lambda = 1 - 1e12)", false, GramStructure::kIllConditioned, 35, 15);
  gram("5.4b", "Non-PD Ill-Conditioned Q", true, GramStructure::kIllConditioned, 70, 30);
  return m;
}

nlohmann::ordered_json manifest_to_json(const std::vector<GenSpec>& manifest) {
  nlohmann::ordered_json j;
  auto sets = nlohmann::ordered_json::array();
  for (const auto& s : manifest) sets.push_back(to_json(s));
  j["sets"] = std::move(sets);
  return j;
}

std::vector<GenSpec> manifest_from_json(const nlohmann::json& j) {
  std::vector<GenSpec> out;
  for (const auto& s : j.at("sets")) out.push_back(gen_spec_from_json(s));
  return out;
}

GenerationResult generate_suite(const std::vector<GenSpec>& manifest, const GenerationOptions& options) {
  std::vector<Task> tasks;
  for (const auto& spec : manifest) {
    spec.validate();
    const Recipe recipe = recipe_for(spec);
    for (int i = 0; i < spec.count; ++i) tasks.push_back({&spec, recipe, i});
  }
  return run_tasks(tasks, options);
}

void write_jsonl(std::ostream& out, const std::vector<DatasetRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

void write_jsonl(const std::filesystem::path& path, const std::vector<DatasetRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_jsonl(out, records);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<DatasetRecord> read_jsonl(std::istream& in) {
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(dataset_record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<DatasetRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_jsonl(in);
}

std::string summary_markdown(const std::vector<GenSpec>& manifest, const GenerationResult& result) {
  std::ostringstream os;
  os << "| Test set | Description | Difficulty | Records | SoS | Not SoS | <= cap | > cap | Mean length | Max length |\n";
  os << "|---|---|---|---:|---:|---:|---:|---:|---:|---:|\n";
  std::size_t total = 0, total_sos = 0, total_short = 0;
  for (const auto& spec : manifest) {
    std::size_t n = 0, sos = 0, short_count = 0, max_len = 0, sum_len = 0;
    for (const auto& r : result.records) {
      if (r.test_set != spec.test_set_id) continue;
      ++n;
      sos += r.label == "sos";
      short_count += r.length_chars <= spec.length_cap;
      max_len = std::max(max_len, r.length_chars);
      sum_len += r.length_chars;
    }
    total += n;
    total_sos += sos;
    total_short += short_count;
    os << "| " << spec.test_set_id << " | " << spec.description << " | " << spec.difficulty << " | " << n << " | "
       << sos << " | " << n - sos << " | " << short_count << " | " << n - short_count << " | "
       << (n == 0 ? 0 : sum_len / n) << " | " << max_len << " |\n";
  }
  os << "| Total | | | " << total << " | " << total_sos << " | " << total - total_sos << " | " << total_short
     << " | " << total - total_short << " | | |\n\n";
  os.precision(3);
  os << "Label balance: " << total_sos << " SoS of " << total << " records ("
     << (total == 0 ? 0.0 : 100.0 * static_cast<double>(total_sos) / static_cast<double>(total)) << "%).\n";
  if (!result.failures.empty()) {
    os << "\nFailures:\n\n";
    for (const auto& f : result.failures) os << "- " << f.test_set << " #" << f.index << ": " << f.message << "\n";
  }
  return os.str();
}

}  // namespace sos
