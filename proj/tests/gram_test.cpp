#include "sos/gram.hpp"

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "sos/parser.hpp"
#include "test_util.hpp"

namespace sos {
namespace {

Eigen::MatrixXd random_psd(std::mt19937_64& gen, int n, int rank) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd A(n, rank);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < rank; ++j) A(i, j) = z(gen);
  }
  return A * A.transpose();
}

MonomialBasis full_basis(std::size_t n, int d) {
  MonomialBasis b;
  b.n_vars = n;
  b.half_degree = d;
  b.entries = test::all_monomials(n, d);
  return b;
}

TEST(MonomialBasisTest, FullSizeIsBinomial) {
  for (std::size_t n = 1; n <= 4; ++n) {
    for (int d = 1; d <= 3; ++d) {
      // sum x_i^{2d} + 1 has the full cube as bounding box, so nothing is pruned by kNone.
      Polynomial p = Polynomial::constant(n, 1.0);
      for (std::size_t i = 0; i < n; ++i) p.add_term(Monomial::unit(n, i, 2 * d), 1.0);
      const auto basis = monomial_basis(p, BasisPruning::kNone);
      EXPECT_EQ(basis.size(), test::all_monomials(n, d).size());
      EXPECT_EQ(basis.full_size, binomial(n + static_cast<std::size_t>(d), static_cast<std::size_t>(d)));
      EXPECT_EQ(basis.moment_dimension, binomial(n + 2 * static_cast<std::size_t>(d), 2 * static_cast<std::size_t>(d)));
    }
  }
  EXPECT_EQ(binomial(10, 5), 252u);
  EXPECT_EQ(binomial(3, 0), 1u);
}

TEST(MonomialBasisTest, MotzkinNewtonPolytope) {
  // Half the Newton polytope of the Motzkin polynomial contains exactly these points.
  const auto basis = monomial_basis(parse(test::kMotzkin));
  const std::set<Monomial> got(basis.entries.begin(), basis.entries.end());
  const std::set<Monomial> want{Monomial{0, 0}, Monomial{1, 1}, Monomial{2, 1}, Monomial{1, 2}};
  EXPECT_EQ(got, want);
  EXPECT_EQ(basis.entries.front(), (Monomial{0, 0}));
}

TEST(MonomialBasisTest, PruningKeepsEveryTermReachable) {
  std::mt19937_64 gen(19);
  for (int trial = 0; trial < 50; ++trial) {
    SquareList list;
    for (int j = 0; j < 3; ++j) {
      Polynomial q(3);
      for (const auto& m : test::all_monomials(3, 2)) {
        if (gen() % 3 == 0) q.add_term(m, static_cast<double>(gen() % 7) - 3.0);
      }
      list.squares.push_back(q);
    }
    const Polynomial p = expand_squares(list);
    if (p.is_zero()) continue;
    EXPECT_NO_THROW(build_gram_system(p, monomial_basis(p, BasisPruning::kFacial)));
    EXPECT_LE(monomial_basis(p, BasisPruning::kFacial).size(), monomial_basis(p, BasisPruning::kBoundingBox).size());
  }
}

TEST(MonomialBasisTest, OddDegreeThrows) {
  EXPECT_THROW(monomial_basis(parse("x1^3 + 1")), OddDegreeError);
}

TEST(GramSystemTest, SmallExample) {
  // x1^2 + x2^2 - 2*x1*x2 over the basis (x1, x2).
  const Polynomial p = parse("x1^2 + x2^2 - 2*x1*x2");
  const GramSystem sys = build_gram_system(p, monomial_basis(p));
  ASSERT_EQ(sys.basis.entries, (std::vector<Monomial>{Monomial{1, 0}, Monomial{0, 1}}));
  ASSERT_EQ(sys.constraints.size(), 3u);
  for (const auto& c : sys.constraints) {
    ASSERT_EQ(c.pairs.size(), 1u);
    EXPECT_EQ(c.target, p.coefficient(c.monomial));
  }
}

TEST(GramSystemTest, PairsPartitionTheUpperTriangle) {
  const Polynomial p = parse(test::kRobinson);
  const auto basis = monomial_basis(p, BasisPruning::kNone);
  const GramSystem sys = build_gram_system(p, basis);
  std::set<std::pair<int, int>> seen;
  for (const auto& c : sys.constraints) {
    for (const auto& [i, j] : c.pairs) {
      EXPECT_LE(i, j);
      EXPECT_EQ(basis.entries[static_cast<std::size_t>(i)] + basis.entries[static_cast<std::size_t>(j)], c.monomial);
      EXPECT_TRUE(seen.insert({i, j}).second);
    }
  }
  EXPECT_EQ(seen.size(), basis.size() * (basis.size() + 1) / 2);
}

TEST(GramSystemTest, UnreachableSupport) {
  MonomialBasis basis;
  basis.n_vars = 2;
  basis.half_degree = 1;
  basis.entries = {Monomial{1, 0}};
  try {
    build_gram_system(parse("x1^2 + x2^2"), basis);
    FAIL();
  } catch (const UnreachableSupportError& e) {
    EXPECT_EQ(e.monomial(), (Monomial{0, 2}));
    EXPECT_EQ(e.coefficient(), 1.0);
  }
  EXPECT_THROW(build_gram_system(parse("x1^2", 3), basis), DimensionError);
}

TEST(GramPolynomialTest, MatchesDirectQuadraticForm) {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (std::size_t n = 1; n <= 3; ++n) {
    const MonomialBasis basis = full_basis(n, 2);
    const Eigen::MatrixXd Q = random_psd(gen, static_cast<int>(basis.size()), 3);
    const Polynomial p = gram_polynomial(Q, basis);
    for (int k = 0; k < 50; ++k) {
      std::vector<double> x(n);
      for (auto& xi : x) xi = u(gen);
      const double expected = test::gram_value(Q, basis.entries, x);
      EXPECT_NEAR(evaluate(p, x), expected, 1e-10 * std::max(1.0, std::fabs(expected)));
    }
  }
}

TEST(ProjectionTest, PsdProjectionIsIdempotentAndPsd) {
  std::mt19937_64 gen(29);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 8;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) M(i, j) = z(gen);
    }
    const Eigen::MatrixXd P = project_psd(M);
    EXPECT_LT((P - P.transpose()).norm(), 1e-12);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(P).eigenvalues().minCoeff(), -1e-12);
    EXPECT_LT((project_psd(P) - P).norm(), 1e-10 * (1.0 + P.norm()));
    // Nearest PSD matrix: no PSD matrix is closer than P, in particular 0 and PSD(M) + eps * I.
    const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());
    EXPECT_LE((sym - P).norm(), sym.norm() + 1e-12);
  }
}

TEST(ProjectionTest, AffineProjectionSatisfiesConstraints) {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> z;
  const Polynomial p = parse(test::kRobinson);
  const GramSystem sys = build_gram_system(p, monomial_basis(p));
  const auto n = static_cast<int>(sys.basis.size());
  Eigen::MatrixXd Q(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) Q(i, j) = Q(j, i) = z(gen);
  }
  project_affine(sys, 1.0, Q);
  EXPECT_LT(constraint_residual(sys, 1.0, Q), 1e-12);
  const Eigen::MatrixXd again = [&] {
    Eigen::MatrixXd R = Q;
    project_affine(sys, 1.0, R);
    return R;
  }();
  EXPECT_LT((again - Q).norm(), 1e-12);
  EXPECT_LT(max_coefficient_difference(gram_polynomial(Q, sys.basis), p), 1e-12);
}

TEST(SolverTest, CertifiesSquareAndExtractsIt) {
  const Polynomial p = parse(test::kPa);
  const GramSystem sys = build_gram_system(p, monomial_basis(p));
  const GramResult r = solve_psd_feasibility(sys);
  ASSERT_EQ(r.status, GramStatus::kFeasible);
  EXPECT_GE(r.min_eigenvalue, -1e-8);
  const SosCertificate cert = extract_decomposition(r, sys);
  EXPECT_LE(cert.reconstruction_residual, 1e-6);
  EXPECT_LE(verify_certificate(p, cert), 1e-6);
  EXPECT_NEAR(verify_certificate(p, cert), cert.reconstruction_residual, 1e-15);
}

TEST(SolverTest, CorruptedCertificateFailsVerification) {
  const Polynomial p = parse("x1^4 - 2*x1^2*x2^2 + x2^4 + x1^2 + 1");
  const GramSystem sys = build_gram_system(p, monomial_basis(p));
  const GramResult r = solve_psd_feasibility(sys);
  ASSERT_EQ(r.status, GramStatus::kFeasible);
  SosCertificate cert = extract_decomposition(r, sys);
  ASSERT_LE(cert.reconstruction_residual, 1e-6);
  auto& q = cert.squares.squares.front();
  q.add_term(q.terms().begin()->first, 0.1);
  EXPECT_GT(verify_certificate(p, cert), 1e-3);
}

TEST(SolverTest, MotzkinHasNoGramMatrix) {
  const Polynomial p = parse(test::kMotzkin);
  const GramSystem sys = build_gram_system(p, monomial_basis(p));
  const GramResult r = solve_psd_feasibility(sys);
  EXPECT_NE(r.status, GramStatus::kFeasible);
  EXPECT_THROW(extract_decomposition(r, sys), NotFeasibleError);
}

TEST(SolverTest, RandomGramPolynomialsAreCertified) {
  std::mt19937_64 gen(37);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 2);
    const MonomialBasis basis = full_basis(n, 2);
    const Eigen::MatrixXd Q =
        random_psd(gen, static_cast<int>(basis.size()), static_cast<int>(basis.size())) +
        0.1 * Eigen::MatrixXd::Identity(static_cast<int>(basis.size()), static_cast<int>(basis.size()));
    const Polynomial p = gram_polynomial(Q, basis);
    const GramSystem sys = build_gram_system(p, monomial_basis(p));
    const GramResult r = solve_psd_feasibility(sys);
    ASSERT_EQ(r.status, GramStatus::kFeasible) << canonical_text(p);
    EXPECT_LE(extract_decomposition(r, sys).reconstruction_residual, 1e-6 * std::max(1.0, max_abs_coefficient(p)));
  }
}

TEST(SolverTest, Deterministic) {
  const Polynomial p = parse(test::kRobinson);
  const GramSystem sys = build_gram_system(p, monomial_basis(p));
  const GramResult a = solve_psd_feasibility(sys);
  const GramResult b = solve_psd_feasibility(sys);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_TRUE(a.Q == b.Q);
}

TEST(CertificateJsonTest, Fields) {
  const Polynomial p = parse("x1^2 + x2^2 - 2*x1*x2");
  const GramSystem sys = build_gram_system(p, monomial_basis(p));
  const GramResult r = solve_psd_feasibility(sys);
  ASSERT_EQ(r.status, GramStatus::kFeasible);
  const auto j = certificate_to_json(sys.basis, r, extract_decomposition(r, sys));
  EXPECT_EQ(j.at("basis").size(), 2u);
  EXPECT_EQ(j.at("Q").size(), 4u);
  EXPECT_TRUE(j.contains("squares"));
}

}  // namespace
}  // namespace sos
