#include "sos/checker.hpp"

#include "sos/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sos {

void CheckerConfig::validate() const {
  if (!(grid_radius > 0.0)) throw std::invalid_argument("CheckerConfig: grid_radius must be positive");
  if (grid_values_per_axis < 1 || random_samples < 1 || descent_starts < 1 || descent_steps < 1) {
    throw std::invalid_argument("CheckerConfig: counts must be at least 1");
  }
  if (!(negativity_tol > 0.0) || !(certificate_tol > 0.0) || !(gram.res_tol > 0.0) || !(gram.eig_tol > 0.0)) {
    throw std::invalid_argument("CheckerConfig: tolerances must be positive");
  }
  if (intensified_factor < 1) throw std::invalid_argument("CheckerConfig: intensified_factor must be at least 1");
}

SearchConfig CheckerConfig::search() const {
  SearchConfig s;
  s.radius = grid_radius;
  s.values_per_axis = grid_values_per_axis;
  s.random_samples = random_samples;
  s.descent_starts = descent_starts;
  s.descent_steps = descent_steps;
  s.seed = rng_seed;
  return s;
}

std::string to_string(Decision decision) {
  switch (decision) {
    case Decision::kProvesNotSos: return "PROVES_NOT_SOS";
    case Decision::kProvesSos: return "PROVES_SOS";
    case Decision::kInconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

std::string to_string(Label label) {
  switch (label) {
    case Label::kSos: return "SOS";
    case Label::kNotSos: return "NOT_SOS";
    case Label::kLikelyNotSos: return "LIKELY_NOT_SOS";
    case Label::kUnknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::string to_string(SpecialClass special) {
  switch (special) {
    case SpecialClass::kNone: return "none";
    case SpecialClass::kQuadratic: return "quadratic";
    case SpecialClass::kQuartic2Var: return "quartic_2var";
    case SpecialClass::kHomogeneousQuartic3Var: return "quartic_homog_3var";
    case SpecialClass::kUnivariateEven: return "univariate_even";
  }
  return "none";
}

namespace {

double coefficient_scale(const Polynomial& p) { return std::max(1.0, max_abs_coefficient(p)); }

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

StepOutcome proves_not_sos(int step, SearchPoint point, std::string note) {
  StepOutcome out;
  out.step_id = step;
  out.decision = Decision::kProvesNotSos;
  out.witness = Witness{std::move(point.x), point.value};
  out.note = std::move(note);
  return out;
}

// Accepts a search point as a witness if it clears the threshold.
std::optional<SearchPoint> accept_witness(const Polynomial& p, std::optional<SearchPoint> candidate, double tol) {
  if (!candidate) return std::nullopt;
  if (candidate->value < -witness_threshold(p, candidate->x, tol)) return candidate;
  return std::nullopt;
}

}  // namespace

double witness_threshold(const Polynomial& p, std::span<const double> x, double negativity_tol) {
  const CompiledPolynomial f(p);
  const double rounding = 1e3 * std::numeric_limits<double>::epsilon() * f.magnitude(x);
  return std::max(negativity_tol * coefficient_scale(p), rounding);
}

StepOutcome step1_degree(const Polynomial& p, const CheckerConfig& config) {
  StepOutcome out;
  out.step_id = 1;
  if (p.is_zero()) {
    out.decision = Decision::kProvesSos;
    out.certificate = SosCertificate{SquareList{{Polynomial(p.n_vars())}}, 0.0};
    out.note = "zero polynomial";
    return out;
  }
  const int deg = p.degree();
  if (deg % 2 != 0) {
    out.decision = Decision::kProvesNotSos;
    out.note = "odd degree " + std::to_string(deg);
    return out;
  }
  const std::size_t n = p.n_vars();
  const CompiledPolynomial f(p);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = p.coefficient(Monomial::unit(n, i, deg));
    if (c >= 0.0) continue;
    const std::string note = "negative leading coefficient " + format_double(c) + " on x" + std::to_string(i + 1) +
                             "^" + std::to_string(deg);
    std::vector<double> axis(n, 0.0);
    axis[i] = 1.0;
    auto hit = accept_witness(p, march(f, axis, -config.negativity_tol * coefficient_scale(p)),
                              config.negativity_tol);
    if (hit) return proves_not_sos(1, std::move(*hit), note);
    out.decision = Decision::kProvesNotSos;
    out.note = note;
    return out;
  }
  out.note = "even degree " + std::to_string(deg) + ", no negative leading univariate term";
  return out;
}

StepOutcome step2_negativity_search(const Polynomial& p, const CheckerConfig& config) {
  const double stop = -config.negativity_tol * coefficient_scale(p);
  const MinimumEstimate est = estimate_minimum(p, config.search(), stop);
  if (accept_witness(p, est.best, config.negativity_tol)) {
    return proves_not_sos(2, est.best, "negative value found by " + est.stage);
  }
  StepOutcome out;
  out.step_id = 2;
  out.note = "minimum estimate " + format_double(est.best.value) + " (" + est.stage + ")";
  return out;
}

namespace {

StepOutcome quadratic_case(const Polynomial& p, const CheckerConfig& config) {
  StepOutcome out;
  out.step_id = 3;
  out.special_class = SpecialClass::kQuadratic;
  out.equivalence = true;

  // p(x) = [1; x]^T M [1; x]
  const std::size_t n = p.n_vars();
  const auto dim = static_cast<Eigen::Index>(n + 1);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& [m, c] : p.terms()) {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < m[i]; ++k) idx.push_back(static_cast<Eigen::Index>(i + 1));
    }
    while (idx.size() < 2) idx.push_back(0);
    if (idx[0] == idx[1]) {
      M(idx[0], idx[0]) += c;
    } else {
      M(idx[0], idx[1]) += 0.5 * c;
      M(idx[1], idx[0]) += 0.5 * c;
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
  const double scale = coefficient_scale(p);
  const double min_eig = eig.eigenvalues()(0);

  if (min_eig >= -config.gram.eig_tol * scale) {
    SosCertificate cert;
    for (Eigen::Index k = dim - 1; k >= 0; --k) {
      const double lambda = eig.eigenvalues()(k);
      if (lambda <= config.gram.eig_tol * scale) break;
      const double root = std::sqrt(lambda);
      Polynomial q(n);
      q.add_term(Monomial(n), root * eig.eigenvectors()(0, k));
      for (std::size_t i = 0; i < n; ++i) {
        q.add_term(Monomial::unit(n, i), root * eig.eigenvectors()(static_cast<Eigen::Index>(i + 1), k));
      }
      cert.squares.squares.push_back(std::move(q));
    }
    if (cert.squares.squares.empty()) cert.squares.squares.emplace_back(n);
    cert.reconstruction_residual = verify_certificate(p, cert);
    if (cert.reconstruction_residual <= config.certificate_tol * scale) {
      out.decision = Decision::kProvesSos;
      out.note = "quadratic: augmented matrix PSD, min eigenvalue " + format_double(min_eig);
      out.certificate = std::move(cert);
      return out;
    }
    out.note = "quadratic: augmented matrix PSD but certificate residual too large";
    return out;
  }

  // Negative eigenvalue: the eigenvector v gives p(v_x / v_0) = lambda / v_0^2 < 0,
  // or a direction of negative curvature when v_0 vanishes.
  const Eigen::VectorXd v = eig.eigenvectors().col(0);
  const CompiledPolynomial f(p);
  const double below = -config.negativity_tol * scale;
  std::optional<SearchPoint> candidate;
  if (std::fabs(v(0)) > 1e-9 * v.norm()) {
    SearchPoint pt;
    for (std::size_t i = 0; i < n; ++i) pt.x.push_back(v(static_cast<Eigen::Index>(i + 1)) / v(0));
    pt.value = f(pt.x);
    candidate = pt;
  }
  if (!accept_witness(p, candidate, config.negativity_tol)) {
    std::vector<double> dir(n);
    for (std::size_t i = 0; i < n; ++i) dir[i] = v(static_cast<Eigen::Index>(i + 1));
    candidate = march(f, dir, below);
    if (!candidate) {
      for (double& d : dir) d = -d;
      candidate = march(f, dir, below);
    }
  }
  if (auto hit = accept_witness(p, candidate, config.negativity_tol)) {
    return proves_not_sos(3, std::move(*hit),
                          "quadratic: augmented matrix has eigenvalue " + format_double(min_eig));
  }
  out.note = "quadratic: augmented matrix eigenvalue " + format_double(min_eig) + " but no witness cleared the threshold";
  return out;
}

// sum_i mu_i x_i^4 (mu_i > 0) plus terms of degree <= 2.
bool is_quadratic_plus_quartic_regularization(const Polynomial& p) {
  if (p.degree() != 4) return false;
  for (const auto& [m, c] : p.terms()) {
    const int d = m.degree();
    if (d == 3) return false;
    if (d == 4) {
      const auto nonzero = std::count_if(m.exponents().begin(), m.exponents().end(), [](int e) { return e != 0; });
      if (nonzero != 1 || c <= 0.0) return false;
    }
  }
  return true;
}

}  // namespace

StepOutcome step3_special_case(const Polynomial& p, const CheckerConfig& config) {
  const int deg = p.degree();
  if (deg <= 2) return quadratic_case(p, config);

  StepOutcome out;
  out.step_id = 3;
  const std::size_t active = p.active_variables().size();
  if (active == 1 && deg % 2 == 0) {
    out.special_class = SpecialClass::kUnivariateEven;
  } else if (deg == 4 && active <= 2) {
    out.special_class = SpecialClass::kQuartic2Var;
  } else if (deg == 4 && active <= 3 && p.is_homogeneous()) {
    out.special_class = SpecialClass::kHomogeneousQuartic3Var;
  }
  out.equivalence = out.special_class != SpecialClass::kNone;
  if (out.equivalence) {
    out.note = to_string(out.special_class) + ": nonnegative iff SoS";
  } else {
    out.note = "no special case";
  }
  if (is_quadratic_plus_quartic_regularization(p)) out.note += "; quadratic plus quartic regularization (advisory)";
  return out;
}

namespace {

struct SquareTerm {
  double coefficient = 1.0;
  Polynomial root;
};

// Matches c * prod_k b_k^(2 e_k) with c a nonnegative literal.
std::optional<SquareTerm> match_square_term(const Expr& e, std::size_t n_vars) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::kNumber:
      return SquareTerm{e.number, Polynomial::constant(n_vars, 1.0)};
    case K::kPower: {
      if (e.exponent % 2 != 0) return std::nullopt;
      const Polynomial base = to_polynomial(e.children.front(), n_vars);
      return SquareTerm{1.0, power(base, e.exponent / 2)};
    }
    case K::kProduct: {
      SquareTerm acc{1.0, Polynomial::constant(n_vars, 1.0)};
      for (const auto& factor : e.children) {
        auto sub = match_square_term(factor, n_vars);
        if (!sub) return std::nullopt;
        acc.coefficient *= sub->coefficient;
        acc.root = multiply(acc.root, sub->root);
      }
      return acc;
    }
    default:
      return std::nullopt;
  }
}

bool collect_squares(const Expr& e, std::size_t n_vars, std::vector<SquareTerm>& out) {
  if (e.kind == Expr::Kind::kSum) {
    for (const auto& child : e.children) {
      if (!collect_squares(child, n_vars, out)) return false;
    }
    return true;
  }
  auto term = match_square_term(e, n_vars);
  if (!term || term->coefficient < 0.0) return false;
  out.push_back(std::move(*term));
  return true;
}

}  // namespace

StepOutcome step4_square_form(const Expr& source, std::size_t n_vars, const CheckerConfig& config) {
  StepOutcome out;
  out.step_id = 4;
  std::vector<SquareTerm> terms;
  if (!collect_squares(source, n_vars, terms) || terms.empty()) {
    out.note = "input is not an explicit sum of squares";
    return out;
  }
  SosCertificate cert;
  for (auto& t : terms) {
    if (t.coefficient == 0.0) continue;
    cert.squares.squares.push_back(t.root * std::sqrt(t.coefficient));
  }
  if (cert.squares.squares.empty()) cert.squares.squares.emplace_back(n_vars);
  const Polynomial p = to_polynomial(source, n_vars);
  cert.reconstruction_residual = verify_certificate(p, cert);
  if (cert.reconstruction_residual > config.certificate_tol * coefficient_scale(p)) {
    out.note = "square form did not reproduce the expanded polynomial";
    return out;
  }
  out.decision = Decision::kProvesSos;
  out.note = "explicit sum of " + std::to_string(cert.squares.squares.size()) + " squares";
  out.certificate = std::move(cert);
  return out;
}

StepOutcome step5_gram(const Polynomial& p, const CheckerConfig& config) {
  StepOutcome out;
  out.step_id = 5;
  MonomialBasis basis;
  try {
    basis = monomial_basis(p);
  } catch (const OddDegreeError& e) {
    out.note = e.what();
    return out;
  }
  if (basis.size() > config.max_basis_size) {
    out.note = "basis size " + std::to_string(basis.size()) + " exceeds limit";
    return out;
  }
  GramSystem system;
  try {
    system = build_gram_system(p, basis);
  } catch (const UnreachableSupportError& e) {
    out.gram_status = GramStatus::kInfeasibleNumeric;
    out.note = std::string("infeasible: ") + e.what();
    return out;
  }
  const GramResult result = solve_psd_feasibility(system, config.gram);
  out.gram_status = result.status;
  std::string stats = "basis " + std::to_string(basis.size()) + ", " + std::to_string(result.iterations) +
                      " iterations, residual " + format_double(result.residual) + ", min eigenvalue " +
                      format_double(result.min_eigenvalue);
  if (result.status != GramStatus::kFeasible) {
    out.note = to_string(result.status) + ": " + stats + ", distance " + format_double(result.distance);
    return out;
  }
  SosCertificate cert = extract_decomposition(result, system, config.gram.eig_tol);
  if (cert.reconstruction_residual > config.certificate_tol * coefficient_scale(p)) {
    out.gram_status = GramStatus::kIterationLimit;
    out.note = "FEASIBLE but certificate residual " + format_double(cert.reconstruction_residual) +
               " exceeds tolerance: " + stats;
    return out;
  }
  out.decision = Decision::kProvesSos;
  out.note = "FEASIBLE: " + stats;
  out.certificate = std::move(cert);
  return out;
}

Verdict classify(const Polynomial& p, const CheckerConfig& config, const Expr* source) {
  config.validate();
  Verdict v;
  auto decided = [&](StepOutcome outcome) {
    v.trace.push_back(std::move(outcome));
    const StepOutcome& o = v.trace.back();
    if (o.decision == Decision::kInconclusive) return false;
    v.deciding_step = o.step_id;
    if (o.decision == Decision::kProvesSos) {
      v.label = Label::kSos;
      v.certificate = o.certificate;
    } else {
      v.label = Label::kNotSos;
      v.witness = o.witness;
    }
    return true;
  };

  if (decided(step1_degree(p, config))) return v;
  if (decided(step2_negativity_search(p, config))) return v;
  StepOutcome special = step3_special_case(p, config);
  const bool equivalence = special.equivalence;
  if (decided(std::move(special))) return v;
  if (source != nullptr) {
    if (decided(step4_square_form(*source, p.n_vars(), config))) return v;
  } else {
    StepOutcome skipped;
    skipped.step_id = 4;
    skipped.note = "no parse tree available";
    v.trace.push_back(std::move(skipped));
  }

  StepOutcome gram = step5_gram(p, config);
  if (gram.decision == Decision::kInconclusive && equivalence) {
    // Nonnegativity and SoS coincide here, so a failed Gram search suggests a
    // negative point the default search missed.
    CheckerConfig intense = config;
    intense.random_samples *= config.intensified_factor;
    intense.descent_starts *= config.intensified_factor;
    intense.rng_seed = derive_seed(config.rng_seed, {5});
    const double stop = -config.negativity_tol * coefficient_scale(p);
    const MinimumEstimate est = estimate_minimum(p, intense.search(), stop);
    if (auto hit = accept_witness(p, est.best, config.negativity_tol)) {
      gram.decision = Decision::kProvesNotSos;
      gram.witness = Witness{hit->x, hit->value};
      gram.note += "; intensified search found a negative value";
    }
  }
  if (decided(gram)) return v;

  v.deciding_step = 5;
  const auto& status = v.trace.back().gram_status;
  v.label = status && *status == GramStatus::kInfeasibleNumeric ? Label::kLikelyNotSos : Label::kUnknown;
  return v;
}

Verdict classify_text(std::string_view text, const CheckerConfig& config) {
  const ParsedExpression parsed = parse_expression(text);
  const Polynomial p = to_polynomial(parsed.root, parsed.n_vars);
  return classify(p, config, &parsed.root);
}

namespace {

nlohmann::json witness_json(const Witness& w) { return {{"point", w.point}, {"value", w.value}}; }

nlohmann::json certificate_json(const SosCertificate& c) {
  nlohmann::json squares = nlohmann::json::array();
  for (const auto& q : c.squares.squares) squares.push_back(canonical_text(q));
  return {{"squares", std::move(squares)}, {"residual", c.reconstruction_residual}};
}

}  // namespace

nlohmann::json to_json(const StepOutcome& o) {
  nlohmann::json j;
  j["step_id"] = o.step_id;
  j["decision"] = to_string(o.decision);
  j["note"] = o.note;
  if (o.witness) j["witness"] = witness_json(*o.witness);
  if (o.certificate) j["certificate"] = certificate_json(*o.certificate);
  if (o.step_id == 3) {
    j["special_class"] = to_string(o.special_class);
    j["equivalence"] = o.equivalence;
  }
  if (o.gram_status) j["gram_status"] = to_string(*o.gram_status);
  return j;
}

nlohmann::json to_json(const Verdict& v) {
  nlohmann::json j;
  j["label"] = to_string(v.label);
  j["deciding_step"] = v.deciding_step;
  if (v.witness) j["witness"] = witness_json(*v.witness);
  if (v.certificate) j["certificate"] = certificate_json(*v.certificate);
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& o : v.trace) trace.push_back(to_json(o));
  j["trace"] = std::move(trace);
  return j;
}

}  // namespace sos
