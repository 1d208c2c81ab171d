#ifndef SOS_TESTS_TEST_UTIL_HPP
#define SOS_TESTS_TEST_UTIL_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sos/gram.hpp"
#include "sos/polynomial.hpp"

namespace sos::test {

inline const char* const kMotzkin = "x1^4*x2^2 + x1^2*x2^4 + 1 - 3*x1^2*x2^2";
inline const char* const kRobinson =
    "x1^6 + x2^6 + x3^6 - x1^4*x2^2 - x1^4*x3^2 - x2^4*x1^2 - x2^4*x3^2 - x3^4*x1^2 - x3^4*x2^2"
    " + 3*x1^2*x2^2*x3^2";
inline const char* const kTernaryQuartic =
    "(x1^4 + x2^4 + x3^4) + 2*(x1^2 + x2^2 + x3^2) + 8*(x1*x2 + x1*x3 + x2*x3) + 9/4";
inline const char* const kQa = "x1^4x2^2x3^2 + x1^2x2^4x3^2 + x3^4 + 1 - 3x1^2x2^2x3^2";
inline const char* const kPa = "x1^4 + x2^4 + 1 - x1^2 - x2^2 - x1^2*x2^2";
inline const char* const kSquareForm = "(x1 - x1*x2)^2 + (x2^2 - x1^4)^2";
inline const char* const kSquareFormExpanded = "-2*x1^2*x2 + x1^2 + x1^8 - 2*x1^4*x2^2 + x1^2*x2^2 + x2^4";
inline const char* const kTranslated = "1.8*x1^2 + 10.8*x1 + 1.2*x2^2 + 4.8*x2 + 20.82";
inline const char* const kStep5Quartic = "x1^4 - 4*x1^3*x2 + 7*x1^2*x2^2 - 4*x1*x2^3 - 4*x1*x2 + x2^4";

// Every exponent vector of total degree <= d in n variables.
inline std::vector<Monomial> all_monomials(std::size_t n, int d) {
  std::vector<Monomial> out;
  std::vector<int> e(n, 0);
  auto rec = [&](auto&& self, std::size_t i, int left) -> void {
    if (i == n) {
      out.emplace_back(e);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      e[i] = k;
      self(self, i + 1, left - k);
    }
    e[i] = 0;
  };
  rec(rec, 0, d);
  return out;
}

// phi^T Q phi by direct evaluation at x, independent of the library's expansion.
inline double gram_value(const Eigen::MatrixXd& Q, const std::vector<Monomial>& basis, const std::vector<double>& x) {
  Eigen::VectorXd phi(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    double v = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) v *= std::pow(x[i], basis[k][i]);
    phi(static_cast<Eigen::Index>(k)) = v;
  }
  return phi.dot(Q * phi);
}

// Independent global-minimum oracle for polynomials: analytic gradient and
// Hessian, damped Newton from many uniform starts. Shares no code with search.cpp.
class NewtonOracle {
 public:
  explicit NewtonOracle(const Polynomial& p) : n_(p.n_vars()) {
    for (const auto& [m, c] : p.terms()) terms_.push_back({m.exponents(), c});
  }

  double value(const std::vector<double>& x) const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.c * mono(t.e, x, -1, -1);
    return s;
  }

  double minimize(int starts, double box, std::uint64_t seed, std::vector<double>* argmin = nullptr) const {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-box, box);
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> x(n_);
    for (int s = 0; s < starts; ++s) {
      for (auto& xi : x) xi = u(gen);
      const double f = local(x);
      if (f < best) {
        best = f;
        if (argmin) *argmin = x;
      }
    }
    return best;
  }

 private:
  struct Term {
    std::vector<int> e;
    double c;
  };

  // prod x_i^e_i with d/dx_a and d/dx_b applied (-1: none).
  static double mono(const std::vector<int>& e, const std::vector<double>& x, int a, int b) {
    std::vector<int> k = e;
    double coef = 1.0;
    for (int v : {a, b}) {
      if (v < 0) continue;
      if (k[static_cast<std::size_t>(v)] == 0) return 0.0;
      coef *= k[static_cast<std::size_t>(v)]--;
    }
    double r = coef;
    for (std::size_t i = 0; i < x.size(); ++i) r *= std::pow(x[i], k[i]);
    return r;
  }

  double local(std::vector<double>& x) const {
    const auto n = static_cast<Eigen::Index>(n_);
    double f = value(x);
    for (int it = 0; it < 100; ++it) {
      Eigen::VectorXd g(n);
      Eigen::MatrixXd H(n, n);
      for (Eigen::Index a = 0; a < n; ++a) {
        g(a) = 0.0;
        for (const auto& t : terms_) g(a) += t.c * mono(t.e, x, static_cast<int>(a), -1);
        for (Eigen::Index b = 0; b < n; ++b) {
          H(a, b) = 0.0;
          for (const auto& t : terms_) H(a, b) += t.c * mono(t.e, x, static_cast<int>(a), static_cast<int>(b));
        }
      }
      if (g.norm() < 1e-13) break;
      // Levenberg-damped Newton; falls back toward steepest descent when H is indefinite.
      const double lam_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues()(0);
      const double shift = lam_min < 1e-8 ? 1e-8 - lam_min + 1e-6 * (1.0 + g.norm()) : 0.0;
      const Eigen::VectorXd step = -(H + shift * Eigen::MatrixXd::Identity(n, n)).ldlt().solve(g);
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
        std::vector<double> y = x;
        for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += t * step(i);
        const double fy = value(y);
        if (fy < f) {
          x = y;
          moved = f - fy > 1e-16 * (1.0 + std::fabs(f));
          f = fy;
          break;
        }
      }
      if (!moved) break;
      if (std::fabs(x[0]) > 1e6) break;
    }
    return f;
  }

  std::size_t n_;
  std::vector<Term> terms_;
};

}  // namespace sos::test

#endif  // SOS_TESTS_TEST_UTIL_HPP
