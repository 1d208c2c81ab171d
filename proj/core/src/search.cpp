#include "sos/search.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

#include <Eigen/Dense>

#include "sos/rng.hpp"

namespace sos {

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) : n_vars_(p.n_vars()) {
  coefficients_.reserve(p.size());
  exponents_.reserve(p.size() * n_vars_);
  for (const auto& [m, c] : p.terms()) {
    coefficients_.push_back(c);
    for (std::size_t i = 0; i < n_vars_; ++i) {
      exponents_.push_back(m[i]);
      max_exponent_ = std::max(max_exponent_, m[i]);
    }
  }
  powers_.resize(n_vars_ * static_cast<std::size_t>(max_exponent_ + 1));
}

void CompiledPolynomial::fill_powers(std::span<const double> x) const {
  if (x.size() != n_vars_) throw DimensionError("CompiledPolynomial: point length differs from n_vars");
  const auto stride = static_cast<std::size_t>(max_exponent_ + 1);
  for (std::size_t i = 0; i < n_vars_; ++i) {
    double* row = powers_.data() + i * stride;
    row[0] = 1.0;
    for (std::size_t k = 1; k < stride; ++k) row[k] = row[k - 1] * x[i];
  }
}

double CompiledPolynomial::operator()(std::span<const double> x) const {
  fill_powers(x);
  const auto stride = static_cast<std::size_t>(max_exponent_ + 1);
  double sum = 0.0;
  const int* e = exponents_.data();
  for (double c : coefficients_) {
    double term = c;
    for (std::size_t i = 0; i < n_vars_; ++i, ++e) {
      if (*e != 0) term *= powers_[i * stride + static_cast<std::size_t>(*e)];
    }
    sum += term;
  }
  return sum;
}

double CompiledPolynomial::magnitude(std::span<const double> x) const {
  fill_powers(x);
  const auto stride = static_cast<std::size_t>(max_exponent_ + 1);
  double sum = 0.0;
  const int* e = exponents_.data();
  for (double c : coefficients_) {
    double term = std::fabs(c);
    for (std::size_t i = 0; i < n_vars_; ++i, ++e) {
      if (*e != 0) term *= std::fabs(powers_[i * stride + static_cast<std::size_t>(*e)]);
    }
    sum += term;
  }
  return sum;
}

void CompiledPolynomial::fd_gradient(std::span<const double> x, std::span<double> g) const {
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < n_vars_; ++i) {
    const double h = 1e-6 * std::max(1.0, std::fabs(x[i]));
    probe[i] = x[i] + h;
    const double up = (*this)(probe);
    probe[i] = x[i] - h;
    const double down = (*this)(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
}

void for_each_grid_point(std::size_t n_vars, const SearchConfig& config,
                         const std::function<void(std::span<const double>)>& visit) {
  const int m = std::max(config.values_per_axis, 1);
  std::vector<double> axis(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    axis[static_cast<std::size_t>(k)] =
        m == 1 ? 0.0 : -config.radius + 2.0 * config.radius * k / (m - 1);
  }
  double full = 1.0;
  for (std::size_t i = 0; i < n_vars; ++i) full *= m;

  std::vector<double> point(n_vars);
  if (full <= static_cast<double>(config.max_grid_points)) {
    std::vector<int> idx(n_vars, 0);
    while (true) {
      for (std::size_t i = 0; i < n_vars; ++i) point[i] = axis[static_cast<std::size_t>(idx[i])];
      visit(point);
      std::size_t i = 0;
      while (i < n_vars && ++idx[i] == m) idx[i++] = 0;
      if (i == n_vars) break;
    }
    return;
  }
  Rng rng(derive_seed(config.seed, {0x67726964ULL, n_vars}));
  for (std::size_t s = 0; s < config.max_grid_points; ++s) {
    for (std::size_t i = 0; i < n_vars; ++i) point[i] = axis[static_cast<std::size_t>(rng.integer(0, m - 1))];
    visit(point);
  }
}

SearchPoint descend(const CompiledPolynomial& f, std::vector<double> start, int max_steps, double stop_below) {
  const std::size_t n = f.n_vars();
  SearchPoint cur{std::move(start), 0.0};
  cur.value = f(cur.x);
  if (!std::isfinite(cur.value)) return cur;

  std::vector<double> g(n), g_next(n), trial(n);
  f.fd_gradient(cur.x, g);
  double alpha = 0.0;
  std::vector<double> s_prev, y_prev;

  for (int step = 0; step < max_steps && cur.value >= stop_below; ++step) {
    double gnorm2 = 0.0;
    for (double v : g) gnorm2 += v * v;
    if (!(gnorm2 > 0.0) || !std::isfinite(gnorm2)) break;

    if (s_prev.empty()) {
      alpha = 1.0 / std::max(1.0, std::sqrt(gnorm2));
    } else {
      double sy = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sy += s_prev[i] * y_prev[i];
        ss += s_prev[i] * s_prev[i];
      }
      alpha = sy > 0.0 ? ss / sy : 2.0 * alpha;
    }

    bool accepted = false;
    double f_trial = 0.0;
    for (int halving = 0; halving < 60; ++halving) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = cur.x[i] - alpha * g[i];
      f_trial = f(trial);
      if (std::isfinite(f_trial) && f_trial <= cur.value - 1e-4 * alpha * gnorm2) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    f.fd_gradient(trial, g_next);
    s_prev.resize(n);
    y_prev.resize(n);
    double xmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s_prev[i] = trial[i] - cur.x[i];
      y_prev[i] = g_next[i] - g[i];
      xmax = std::max(xmax, std::fabs(trial[i]));
    }
    const double previous = cur.value;
    cur.x = trial;
    cur.value = f_trial;
    std::swap(g, g_next);
    if (xmax > 1e8) break;
    if (previous - f_trial <= 1e-16 * std::max(1.0, std::fabs(previous))) break;
  }
  return cur;
}

std::optional<SearchPoint> complete_square(const Polynomial& p) {
  if (p.degree() > 2) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(p.n_vars());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (const auto& [m, c] : p.terms()) {
    std::vector<Eigen::Index> vars;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int k = 0; k < m[static_cast<std::size_t>(i)]; ++k) vars.push_back(i);
    }
    if (vars.size() == 1) {
      b(vars[0]) += c;
    } else if (vars.size() == 2) {
      if (vars[0] == vars[1]) {
        A(vars[0], vars[0]) += c;
      } else {
        A(vars[0], vars[1]) += 0.5 * c;
        A(vars[1], vars[0]) += 0.5 * c;
      }
    }
  }
  const Eigen::VectorXd x = A.completeOrthogonalDecomposition().solve(-0.5 * b);
  if (!x.allFinite()) return std::nullopt;
  SearchPoint out;
  out.x.assign(x.data(), x.data() + x.size());
  out.value = evaluate(p, out.x);
  return out;
}

std::optional<SearchPoint> march(const CompiledPolynomial& f, std::span<const double> direction, double below,
                                 int max_doublings) {
  std::vector<double> x(direction.size());
  double t = 1.0;
  for (int k = 0; k < max_doublings; ++k, t *= 2.0) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = t * direction[i];
    const double v = f(x);
    if (!std::isfinite(v)) break;
    if (v < below) return SearchPoint{x, v};
  }
  return std::nullopt;
}

namespace {

// Keeps the k lowest-valued points seen.
class BestK {
 public:
  explicit BestK(std::size_t k) : k_(k) {}

  void offer(std::span<const double> x, double value) {
    if (k_ == 0 || !std::isfinite(value)) return;
    if (heap_.size() < k_) {
      heap_.push({value, std::vector<double>(x.begin(), x.end())});
    } else if (value < heap_.top().first) {
      heap_.pop();
      heap_.push({value, std::vector<double>(x.begin(), x.end())});
    }
  }

  std::vector<std::vector<double>> ascending() {
    std::vector<std::pair<double, std::vector<double>>> items;
    while (!heap_.empty()) {
      items.push_back(heap_.top());
      heap_.pop();
    }
    std::reverse(items.begin(), items.end());
    std::vector<std::vector<double>> out;
    for (auto& it : items) out.push_back(std::move(it.second));
    return out;
  }

 private:
  using Entry = std::pair<double, std::vector<double>>;
  struct ByValue {
    bool operator()(const Entry& a, const Entry& b) const { return a.first < b.first; }
  };
  std::size_t k_;
  std::priority_queue<Entry, std::vector<Entry>, ByValue> heap_;
};

}  // namespace

MinimumEstimate estimate_minimum(const Polynomial& p, const SearchConfig& config, double stop_below) {
  const std::size_t n = p.n_vars();
  const CompiledPolynomial f(p);
  MinimumEstimate est;
  est.best.x.assign(n, 0.0);
  est.best.value = f(est.best.x);
  est.stage = "constant";

  // Polishing stops once the value is ten times deeper, so witnesses of polynomials
  // that are unbounded below stay at a moderate scale.
  auto polish_and_finish = [&](std::vector<double> x, const char* stage) {
    const double target = 10.0 * f(x);
    est.best = descend(f, std::move(x), config.descent_steps, target);
    est.stage = stage;
    return est;
  };
  if (est.best.value < stop_below) return polish_and_finish(est.best.x, "constant");

  const auto starts = static_cast<std::size_t>(std::max(config.descent_starts, 0));
  BestK best_grid((starts + 1) / 2);
  bool hit = false;
  std::vector<double> hit_x;
  const char* hit_stage = "";
  auto consider = [&](std::span<const double> x, const char* stage) {
    const double v = f(x);
    best_grid.offer(x, v);
    if (v < est.best.value) {
      est.best.x.assign(x.begin(), x.end());
      est.best.value = v;
      est.stage = stage;
      if (!hit && v < stop_below) {
        hit = true;
        hit_x.assign(x.begin(), x.end());
        hit_stage = stage;
      }
    }
  };

  // Axis and diagonal probes, then the grid.
  std::vector<double> probe(n, 0.0);
  for (std::size_t i = 0; i < n && !hit; ++i) {
    for (double s : {1.0, -1.0}) {
      probe.assign(n, 0.0);
      probe[i] = s;
      consider(probe, "grid");
    }
  }
  for (double s : {1.0, -1.0}) {
    probe.assign(n, s);
    consider(probe, "grid");
  }
  if (!hit) {
    for_each_grid_point(n, config, [&](std::span<const double> x) {
      if (!hit) consider(x, "grid");
    });
  }
  if (hit) return polish_and_finish(hit_x, hit_stage);

  Rng rng(derive_seed(config.seed, {0x72616e64ULL, n}));
  std::vector<std::vector<double>> random_starts;
  std::vector<double> x(n);
  for (int s = 0; s < config.random_samples && !hit; ++s) {
    for (auto& xi : x) xi = rng.uniform(-config.radius, config.radius);
    if (random_starts.size() < starts / 2) random_starts.push_back(x);
    consider(x, "random");
  }
  if (hit) return polish_and_finish(hit_x, hit_stage);

  std::vector<std::vector<double>> seeds = best_grid.ascending();
  for (auto& r : random_starts) seeds.push_back(std::move(r));
  while (seeds.size() < starts) {
    for (auto& xi : x) xi = rng.uniform(-config.radius, config.radius);
    seeds.push_back(x);
  }
  for (auto& s : seeds) {
    SearchPoint local = descend(f, std::move(s), config.descent_steps, stop_below);
    if (local.value < est.best.value) {
      est.best = std::move(local);
      est.stage = "descent";
      if (est.best.value < stop_below) return polish_and_finish(est.best.x, "descent");
    }
  }

  if (auto sq = complete_square(p); sq && sq->value < est.best.value) {
    est.best = *sq;
    est.stage = "square_completion";
  }
  return est;
}

}  // namespace sos
