#ifndef SOS_GRAM_HPP
#define SOS_GRAM_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sos/polynomial.hpp"

namespace sos {

enum class BasisPruning {
  kNone,         // every monomial of degree <= d
  kBoundingBox,  // keep m when 2m lies in the support's bounding box and deg(2m) >= min degree
  kFacial,       // bounding box, then repeatedly drop m whose square 2m is unmatched
};

// Candidate monomials phi_d for a Gram representation p = phi^T Q phi.
struct MonomialBasis {
  std::vector<Monomial> entries;  // distinct, ascending degree, x1-heavy first within a degree
  std::size_t n_vars = 1;
  int half_degree = 0;
  // Unpruned size C(n+d, d) and the moment-side dimension C(n+2d, 2d), kept as metadata.
  std::size_t full_size = 1;
  std::size_t moment_dimension = 1;

  std::size_t size() const { return entries.size(); }
};

class OddDegreeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

MonomialBasis monomial_basis(const Polynomial& p, BasisPruning pruning = BasisPruning::kFacial);
inline MonomialBasis monomial_basis(const Polynomial& p, bool prune) {
  return monomial_basis(p, prune ? BasisPruning::kFacial : BasisPruning::kNone);
}

std::size_t binomial(std::size_t n, std::size_t k);

// All basis pairs (i <= j) with basis[i] + basis[j] == monomial; Q must satisfy
// sum_{i<j} 2 Q_ij + sum_{i=j} Q_ii == target.
struct GramConstraint {
  Monomial monomial;
  std::vector<std::pair<int, int>> pairs;
  double target = 0.0;
};

struct GramSystem {
  MonomialBasis basis;
  std::vector<GramConstraint> constraints;
  Polynomial target;
};

class UnreachableSupportError : public std::runtime_error {
 public:
  UnreachableSupportError(Monomial monomial, double coefficient);
  const Monomial& monomial() const { return monomial_; }
  double coefficient() const { return coefficient_; }

 private:
  Monomial monomial_;
  double coefficient_;
};

GramSystem build_gram_system(const Polynomial& p, const MonomialBasis& basis);

struct GramConfig {
  int max_iterations = 5000;
  double res_tol = 1e-8;
  double eig_tol = 1e-8;
  int stall_window = 50;
  double stall_tol = 1e-10;
  double separation_threshold = 1e-6;
  // Factored Levenberg-Marquardt refinement at AP checkpoints.
  bool refine = true;
  int refine_iterations = 60;
  // Ranks above 1 are skipped once m^2 * n * r (m constraints, n basis size) exceeds this.
  double refine_flop_budget = 2e8;
};

enum class GramStatus { kFeasible, kInfeasibleNumeric, kIterationLimit };

std::string to_string(GramStatus status);

// residual, min_eigenvalue and distance are measured on the system normalised by
// `scale` (max |target coefficient|); Q is in the polynomial's own units.
struct GramResult {
  GramStatus status = GramStatus::kIterationLimit;
  Eigen::MatrixXd Q;
  double min_eigenvalue = 0.0;
  double residual = 0.0;
  double distance = 0.0;
  int iterations = 0;
  double scale = 1.0;
  int refine_rank = 0;  // 0 when plain alternating projections converged
};

GramResult solve_psd_feasibility(const GramSystem& system, const GramConfig& config = {});

// Orthogonal projections used by the solver, exposed for testing.
void project_affine(const GramSystem& system, double scale, Eigen::MatrixXd& Q);
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& Q);
double constraint_residual(const GramSystem& system, double scale, const Eigen::MatrixXd& Q);

struct SosCertificate {
  SquareList squares;
  double reconstruction_residual = 0.0;
};

class NotFeasibleError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Q = sum_k lambda_k v_k v_k^T  ->  q_k = sqrt(lambda_k) * (v_k . phi).
SosCertificate extract_decomposition(const GramResult& result, const GramSystem& system,
                                     double eig_tol = 1e-8);

double verify_certificate(const Polynomial& p, const SosCertificate& certificate);

// phi^T Q phi, expanded.
Polynomial gram_polynomial(const Eigen::MatrixXd& Q, const MonomialBasis& basis);

nlohmann::json certificate_to_json(const MonomialBasis& basis, const GramResult& result,
                                   const SosCertificate& certificate);

}  // namespace sos

#endif  // SOS_GRAM_HPP
