#ifndef SOS_SEARCH_HPP
#define SOS_SEARCH_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sos/polynomial.hpp"

namespace sos {

// Flattened term list for fast repeated evaluation.
class CompiledPolynomial {
 public:
  explicit CompiledPolynomial(const Polynomial& p);

  std::size_t n_vars() const { return n_vars_; }
  double operator()(std::span<const double> x) const;
  // sum |c| |x^alpha|, a bound on the rounding error scale of operator().
  double magnitude(std::span<const double> x) const;
  // Central differences with h = 1e-6 * max(1, |x_i|).
  void fd_gradient(std::span<const double> x, std::span<double> g) const;

 private:
  void fill_powers(std::span<const double> x) const;

  std::size_t n_vars_;
  int max_exponent_ = 0;
  std::vector<double> coefficients_;
  std::vector<int> exponents_;  // term-major, n_vars_ per term
  mutable std::vector<double> powers_;
};

struct SearchPoint {
  std::vector<double> x;
  double value = 0.0;
};

struct SearchConfig {
  double radius = 2.0;
  int values_per_axis = 7;
  std::size_t max_grid_points = 100000;
  int random_samples = 2000;
  int descent_starts = 20;
  int descent_steps = 200;
  std::uint64_t seed = 42;
};

// Visits linspace(-radius, radius, values_per_axis)^n, or a uniformly subsampled set
// of max_grid_points grid nodes when the full grid is larger.
void for_each_grid_point(std::size_t n_vars, const SearchConfig& config,
                         const std::function<void(std::span<const double>)>& visit);

// Gradient descent with Barzilai-Borwein step guesses and Armijo backtracking.
// Stops early once the value drops below stop_below.
SearchPoint descend(const CompiledPolynomial& f, std::vector<double> start, int max_steps,
                    double stop_below = -std::numeric_limits<double>::infinity());

// Stationary point of a degree <= 2 polynomial (least-squares solution of 2Ax = -b).
std::optional<SearchPoint> complete_square(const Polynomial& p);

// Walks t * direction for t = 1, 2, 4, ... until f drops below `below`.
std::optional<SearchPoint> march(const CompiledPolynomial& f, std::span<const double> direction,
                                 double below, int max_doublings = 60);

struct MinimumEstimate {
  SearchPoint best;
  std::string stage;  // where the best point was first found
};

// Grid, random sampling and multi-start descent; `stop_below` ends the search at the
// first point below it (after descent polishing).
MinimumEstimate estimate_minimum(const Polynomial& p, const SearchConfig& config,
                                 double stop_below = -std::numeric_limits<double>::infinity());

}  // namespace sos

#endif  // SOS_SEARCH_HPP
