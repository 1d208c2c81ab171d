#include "sos/gram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace sos {

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

namespace {

void enumerate_monomials(std::size_t n, int max_degree, std::size_t var, std::vector<int>& current,
                         int used, std::vector<Monomial>& out) {
  if (var == n) {
    out.emplace_back(current);
    return;
  }
  for (int e = 0; e + used <= max_degree; ++e) {
    current[var] = e;
    enumerate_monomials(n, max_degree, var + 1, current, used + e, out);
  }
  current[var] = 0;
}

// Ascending total degree; within a degree x1-heavy monomials first.
bool basis_order(const Monomial& a, const Monomial& b) {
  const int da = a.degree();
  const int db = b.degree();
  if (da != db) return da < db;
  return a.exponents() > b.exponents();
}

std::map<Monomial, int> pair_counts(const std::vector<Monomial>& entries) {
  std::map<Monomial, int> counts;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = i; j < entries.size(); ++j) ++counts[entries[i] + entries[j]];
  }
  return counts;
}

}  // namespace

MonomialBasis monomial_basis(const Polynomial& p, BasisPruning pruning) {
  const int deg = p.degree();
  if (deg % 2 != 0) throw OddDegreeError("monomial_basis: polynomial has odd degree " + std::to_string(deg));
  const std::size_t n = p.n_vars();
  const int d = deg / 2;

  MonomialBasis basis;
  basis.n_vars = n;
  basis.half_degree = d;
  basis.full_size = binomial(n + static_cast<std::size_t>(d), static_cast<std::size_t>(d));
  basis.moment_dimension = binomial(n + static_cast<std::size_t>(deg), static_cast<std::size_t>(deg));

  std::vector<int> scratch(n, 0);
  enumerate_monomials(n, d, 0, scratch, 0, basis.entries);

  if (pruning != BasisPruning::kNone && !p.is_zero()) {
    std::vector<int> lo(n, std::numeric_limits<int>::max());
    std::vector<int> hi(n, 0);
    for (const auto& [m, c] : p.terms()) {
      for (std::size_t i = 0; i < n; ++i) {
        lo[i] = std::min(lo[i], m[i]);
        hi[i] = std::max(hi[i], m[i]);
      }
    }
    const int min_deg = p.min_degree();
    std::erase_if(basis.entries, [&](const Monomial& m) {
      if (2 * m.degree() < min_deg) return true;
      for (std::size_t i = 0; i < n; ++i) {
        if (2 * m[i] < lo[i] || 2 * m[i] > hi[i]) return true;
      }
      return false;
    });

    if (pruning == BasisPruning::kFacial) {
      // If 2m has a zero coefficient and only (m, m) produces it, then Q_mm = 0 for
      // every PSD Gram matrix, so row m vanishes and m can be removed.
      bool changed = true;
      while (changed && !basis.entries.empty()) {
        changed = false;
        const auto counts = pair_counts(basis.entries);
        std::vector<Monomial> kept;
        kept.reserve(basis.entries.size());
        for (const auto& m : basis.entries) {
          const Monomial sq = m.doubled();
          if (counts.at(sq) == 1 && p.coefficient(sq) == 0.0) {
            changed = true;
          } else {
            kept.push_back(m);
          }
        }
        basis.entries = std::move(kept);
      }
    }
  }
  std::sort(basis.entries.begin(), basis.entries.end(), basis_order);
  return basis;
}

UnreachableSupportError::UnreachableSupportError(Monomial monomial, double coefficient)
    : std::runtime_error("build_gram_system: support monomial " + monomial_text(monomial) +
                         " is not a sum of two basis monomials"),
      monomial_(std::move(monomial)),
      coefficient_(coefficient) {}

GramSystem build_gram_system(const Polynomial& p, const MonomialBasis& basis) {
  if (basis.n_vars != p.n_vars()) throw DimensionError("build_gram_system: n_vars mismatch");
  GramSystem system;
  system.basis = basis;
  system.target = p;

  std::map<Monomial, std::size_t, GradedLexGreater> index;
  const auto& b = basis.entries;
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = i; j < b.size(); ++j) {
      Monomial gamma = b[i] + b[j];
      auto [it, inserted] = index.try_emplace(gamma, system.constraints.size());
      if (inserted) {
        GramConstraint c;
        c.monomial = gamma;
        c.target = p.coefficient(gamma);
        system.constraints.push_back(std::move(c));
      }
      system.constraints[it->second].pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  for (const auto& [m, c] : p.terms()) {
    if (!index.contains(m)) throw UnreachableSupportError(m, c);
  }
  return system;
}

std::string to_string(GramStatus status) {
  switch (status) {
    case GramStatus::kFeasible: return "FEASIBLE";
    case GramStatus::kInfeasibleNumeric: return "INFEASIBLE_NUMERIC";
    case GramStatus::kIterationLimit: return "ITERATION_LIMIT";
  }
  return "UNKNOWN";
}

namespace {

double pair_sum(const GramConstraint& c, const Eigen::MatrixXd& Q) {
  double s = 0.0;
  for (const auto& [i, j] : c.pairs) s += (i == j) ? Q(i, i) : 2.0 * Q(i, j);
  return s;
}

int pair_weight(const GramConstraint& c) {
  int w = 0;
  for (const auto& [i, j] : c.pairs) w += (i == j) ? 1 : 2;
  return w;
}

double system_scale(const GramSystem& system) {
  double s = 0.0;
  for (const auto& c : system.constraints) s = std::max(s, std::fabs(c.target));
  return s;
}

struct Eig {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

Eig eig(const Eigen::MatrixXd& Q) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Q);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::MatrixXd clamp_psd(const Eig& e) {
  const Eigen::VectorXd clamped = e.values.cwiseMax(0.0);
  return e.vectors * clamped.asDiagonal() * e.vectors.transpose();
}

// Levenberg-Marquardt on the factored Gram matrix Q = L L^T (normalised units).
// Returns true and sets Q on success.
class FactoredRefiner {
 public:
  FactoredRefiner(const GramSystem& system, double scale, const GramConfig& config)
      : system_(system), scale_(scale), config_(config) {
    const auto m = system.constraints.size();
    targets_.resize(static_cast<Eigen::Index>(m));
    for (std::size_t c = 0; c < m; ++c) targets_(static_cast<Eigen::Index>(c)) = system.constraints[c].target / scale;
  }

  bool run(const Eig& start, Eigen::MatrixXd& Q, int& rank_out) const {
    const auto n = static_cast<int>(system_.basis.size());
    const double m = static_cast<double>(system_.constraints.size());
    for (int r : rank_schedule(n)) {
      // Each LM step forms an m x m normal matrix from an m x (n r) Jacobian.
      if (r > 1 && m * m * n * r > config_.refine_flop_budget) break;
      Eigen::MatrixXd L(n, r);
      const double top = std::max(start.values.maxCoeff(), 1e-12);
      for (int k = 0; k < r; ++k) {
        const Eigen::Index col = n - 1 - k;  // eigenvalues ascend
        const double lambda = std::max(start.values(col), 1e-6 * top);
        L.col(k) = start.vectors.col(col) * std::sqrt(lambda);
      }
      if (fit(L)) {
        Q = L * L.transpose();
        rank_out = r;
        return true;
      }
    }
    return false;
  }

 private:
  static std::vector<int> rank_schedule(int n) {
    std::vector<int> ranks;
    for (int r : {1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128}) {
      if (r < n) ranks.push_back(r);
    }
    ranks.push_back(n);
    return ranks;
  }

  Eigen::VectorXd residual(const Eigen::MatrixXd& L) const {
    const Eigen::MatrixXd Q = L * L.transpose();
    Eigen::VectorXd R(targets_.size());
    for (std::size_t c = 0; c < system_.constraints.size(); ++c) {
      R(static_cast<Eigen::Index>(c)) = pair_sum(system_.constraints[c], Q) - targets_(static_cast<Eigen::Index>(c));
    }
    return R;
  }

  Eigen::MatrixXd jacobian(const Eigen::MatrixXd& L) const {
    const Eigen::Index n = L.rows();
    const Eigen::Index r = L.cols();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(system_.constraints.size()), n * r);
    for (std::size_t c = 0; c < system_.constraints.size(); ++c) {
      const auto row = static_cast<Eigen::Index>(c);
      for (const auto& [i, j] : system_.constraints[c].pairs) {
        for (Eigen::Index k = 0; k < r; ++k) {
          if (i == j) {
            J(row, i + n * k) += 2.0 * L(i, k);
          } else {
            J(row, i + n * k) += 2.0 * L(j, k);
            J(row, j + n * k) += 2.0 * L(i, k);
          }
        }
      }
    }
    return J;
  }

  bool fit(Eigen::MatrixXd& L) const {
    const double goal = 0.5 * config_.res_tol;
    Eigen::VectorXd R = residual(L);
    double f = R.squaredNorm();
    double mu = 1e-3;
    std::vector<double> history;
    for (int it = 0; it < config_.refine_iterations; ++it) {
      if (R.lpNorm<Eigen::Infinity>() <= goal) return true;
      // Feasible fits converge quadratically; a slow crawl means this rank is hopeless.
      history.push_back(f);
      if (it >= 20 && f > 0.5 * history[history.size() - 11]) break;
      const Eigen::MatrixXd J = jacobian(L);
      const Eigen::MatrixXd JJt = J * J.transpose();
      bool improved = false;
      while (mu < 1e10) {
        Eigen::MatrixXd A = JJt;
        A.diagonal().array() += mu;
        const Eigen::VectorXd y = A.ldlt().solve(R);
        const Eigen::VectorXd step = -(J.transpose() * y);
        Eigen::MatrixXd trial = L + Eigen::Map<const Eigen::MatrixXd>(step.data(), L.rows(), L.cols());
        Eigen::VectorXd R_trial = residual(trial);
        const double f_trial = R_trial.squaredNorm();
        if (f_trial < f) {
          L = std::move(trial);
          R = std::move(R_trial);
          f = f_trial;
          mu = std::max(mu / 3.0, 1e-12);
          improved = true;
          break;
        }
        mu *= 4.0;
      }
      if (!improved) break;
    }
    return R.lpNorm<Eigen::Infinity>() <= goal;
  }

  const GramSystem& system_;
  double scale_;
  const GramConfig& config_;
  Eigen::VectorXd targets_;
};

bool is_checkpoint(int k) { return k == 100 || k == 400 || k == 1600 || k == 4000; }

}  // namespace

void project_affine(const GramSystem& system, double scale, Eigen::MatrixXd& Q) {
  for (const auto& c : system.constraints) {
    const double delta = (c.target / scale - pair_sum(c, Q)) / pair_weight(c);
    for (const auto& [i, j] : c.pairs) {
      if (i == j) {
        Q(i, i) += delta;
      } else {
        Q(i, j) += delta;
        Q(j, i) += delta;
      }
    }
  }
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& Q) {
  const Eigen::MatrixXd sym = 0.5 * (Q + Q.transpose());
  return clamp_psd(eig(sym));
}

double constraint_residual(const GramSystem& system, double scale, const Eigen::MatrixXd& Q) {
  double r = 0.0;
  for (const auto& c : system.constraints) r = std::max(r, std::fabs(pair_sum(c, Q) - c.target / scale));
  return r;
}

GramResult solve_psd_feasibility(const GramSystem& system, const GramConfig& config) {
  const auto n = static_cast<Eigen::Index>(system.basis.size());
  GramResult result;
  const double raw_scale = system_scale(system);
  result.scale = raw_scale > 0.0 ? raw_scale : 1.0;
  const double scale = result.scale;

  auto finish = [&](GramStatus status, const Eigen::MatrixXd& Qn, int iterations) {
    result.status = status;
    result.iterations = iterations;
    result.residual = constraint_residual(system, scale, Qn);
    result.min_eigenvalue = n > 0 ? eig(Qn).values.minCoeff() : 0.0;
    result.Q = Qn * scale;
    return result;
  };

  // Least-squares (minimum Frobenius norm) symmetric Q satisfying the constraints.
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  project_affine(system, scale, Q);

  const FactoredRefiner refiner(system, scale, config);
  std::vector<double> distances;
  distances.reserve(static_cast<std::size_t>(config.max_iterations) + 1);

  for (int k = 0; k < config.max_iterations; ++k) {
    const Eig e = eig(Q);
    const double min_eig = e.values.minCoeff();
    if (min_eig >= -config.eig_tol && constraint_residual(system, scale, Q) <= config.res_tol) {
      result.distance = distances.empty() ? 0.0 : distances.back();
      return finish(GramStatus::kFeasible, Q, k);
    }
    const Eigen::MatrixXd P = clamp_psd(e);

    if (k > 0 && k % config.stall_window == 0 && k >= 2 * config.stall_window) {
      const double before = distances[static_cast<std::size_t>(k - config.stall_window)];
      const double now = distances.back();
      const double improvement = before > 0.0 ? (before - now) / before : 0.0;
      if (improvement < config.stall_tol && now > config.separation_threshold) {
        result.distance = now;
        // Last chance for boundary instances where AP creeps too slowly to register progress.
        Eigen::MatrixXd refined;
        int rank = 0;
        if (config.refine && refiner.run(eig(P), refined, rank)) {
          result.refine_rank = rank;
          return finish(GramStatus::kFeasible, refined, k);
        }
        return finish(GramStatus::kInfeasibleNumeric, Q, k);
      }
    }
    if (config.refine && is_checkpoint(k)) {
      Eigen::MatrixXd refined;
      int rank = 0;
      if (refiner.run(eig(P), refined, rank)) {
        result.refine_rank = rank;
        result.distance = distances.back();
        const Eig check = eig(refined);
        if (check.values.minCoeff() >= -config.eig_tol) return finish(GramStatus::kFeasible, refined, k);
      }
    }

    Eigen::MatrixXd next = P;
    project_affine(system, scale, next);
    distances.push_back((next - P).norm());
    Q = std::move(next);
  }

  result.distance = distances.empty() ? 0.0 : distances.back();
  if (config.refine && n > 0) {
    Eigen::MatrixXd refined;
    int rank = 0;
    if (refiner.run(eig(project_psd(Q)), refined, rank)) {
      result.refine_rank = rank;
      return finish(GramStatus::kFeasible, refined, config.max_iterations);
    }
  }
  return finish(GramStatus::kIterationLimit, Q, config.max_iterations);
}

Polynomial gram_polynomial(const Eigen::MatrixXd& Q, const MonomialBasis& basis) {
  Polynomial out(basis.n_vars);
  const auto& b = basis.entries;
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      out.add_term(b[i] + b[j], Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  return out;
}

SosCertificate extract_decomposition(const GramResult& result, const GramSystem& system, double eig_tol) {
  if (result.status != GramStatus::kFeasible) {
    throw NotFeasibleError("extract_decomposition: result status is " + to_string(result.status));
  }
  const auto& basis = system.basis;
  SosCertificate cert;
  const std::size_t n_vars = system.target.n_vars();
  if (basis.size() > 0) {
    const Eigen::MatrixXd sym = 0.5 * (result.Q + result.Q.transpose());
    const Eig e = eig(sym);
    const double threshold = eig_tol * result.scale;
    for (Eigen::Index k = e.values.size() - 1; k >= 0; --k) {
      const double lambda = e.values(k);
      if (lambda <= threshold) break;
      const double root = std::sqrt(lambda);
      Polynomial q(n_vars);
      double biggest = 0.0;
      for (std::size_t i = 0; i < basis.size(); ++i) {
        biggest = std::max(biggest, std::fabs(e.vectors(static_cast<Eigen::Index>(i), k)));
      }
      for (std::size_t i = 0; i < basis.size(); ++i) {
        const double v = e.vectors(static_cast<Eigen::Index>(i), k);
        if (std::fabs(v) > 1e-15 * biggest) q.add_term(basis.entries[i], root * v);
      }
      cert.squares.squares.push_back(std::move(q));
    }
  }
  if (cert.squares.squares.empty()) cert.squares.squares.emplace_back(n_vars);
  cert.reconstruction_residual = verify_certificate(system.target, cert);
  return cert;
}

double verify_certificate(const Polynomial& p, const SosCertificate& certificate) {
  for (const auto& q : certificate.squares.squares) {
    if (q.n_vars() != p.n_vars()) throw DimensionError("verify_certificate: n_vars mismatch");
  }
  if (certificate.squares.squares.empty()) return max_abs_coefficient(p);
  return max_coefficient_difference(expand_squares(certificate.squares), p);
}

nlohmann::json certificate_to_json(const MonomialBasis& basis, const GramResult& result,
                                   const SosCertificate& certificate) {
  nlohmann::json out;
  nlohmann::json basis_json = nlohmann::json::array();
  for (const auto& m : basis.entries) basis_json.push_back(m.exponents());
  out["basis"] = std::move(basis_json);
  std::vector<double> q_row_major;
  q_row_major.reserve(static_cast<std::size_t>(result.Q.size()));
  for (Eigen::Index i = 0; i < result.Q.rows(); ++i) {
    for (Eigen::Index j = 0; j < result.Q.cols(); ++j) q_row_major.push_back(result.Q(i, j));
  }
  out["Q"] = std::move(q_row_major);
  nlohmann::json squares = nlohmann::json::array();
  for (const auto& q : certificate.squares.squares) squares.push_back(canonical_text(q));
  out["squares"] = std::move(squares);
  out["residual"] = certificate.reconstruction_residual;
  out["min_eigenvalue"] = result.min_eigenvalue;
  return out;
}

}  // namespace sos
