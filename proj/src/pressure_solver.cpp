#include "silva/pressure_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "silva/error.hpp"
#include "silva/operators.hpp"
#include "silva/parallel.hpp"

namespace silva {

SparseSymmetricOperator SparseSymmetricOperator::from_pairs(
    std::size_t n, std::vector<std::tuple<int, int, double>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  SparseSymmetricOperator op;
  op.diagonal_.assign(n, 0.0);
  std::vector<int> count(n, 1);
  for (const auto& [i, j, w] : pairs) {
    ++count[static_cast<std::size_t>(i)];
    ++count[static_cast<std::size_t>(j)];
    op.diagonal_[static_cast<std::size_t>(i)] += w;
    op.diagonal_[static_cast<std::size_t>(j)] += w;
  }
  op.row_start_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) op.row_start_[i + 1] = op.row_start_[i] + count[i];
  op.columns_.resize(static_cast<std::size_t>(op.row_start_[n]));
  op.values_.resize(op.columns_.size());

  std::vector<std::vector<std::pair<int, double>>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i].emplace_back(static_cast<int>(i), op.diagonal_[i]);
  for (const auto& [i, j, w] : pairs) {
    rows[static_cast<std::size_t>(i)].emplace_back(j, -w);
    rows[static_cast<std::size_t>(j)].emplace_back(i, -w);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(rows[i].begin(), rows[i].end());
    auto k = static_cast<std::size_t>(op.row_start_[i]);
    for (const auto& [c, v] : rows[i]) {
      op.columns_[k] = c;
      op.values_[k] = v;
      ++k;
    }
  }
  return op;
}

double SparseSymmetricOperator::mean_nonzeros_per_row() const {
  return dimension() == 0 ? 0.0 : static_cast<double>(nonzeros()) / static_cast<double>(dimension());
}

std::span<const int> SparseSymmetricOperator::row_columns(std::size_t i) const {
  return {columns_.data() + row_start_[i], columns_.data() + row_start_[i + 1]};
}

std::span<const double> SparseSymmetricOperator::row_values(std::size_t i) const {
  return {values_.data() + row_start_[i], values_.data() + row_start_[i + 1]};
}

double SparseSymmetricOperator::coefficient(std::size_t i, std::size_t j) const {
  const auto cols = row_columns(i);
  const auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<int>(j));
  if (it == cols.end() || *it != static_cast<int>(j)) return 0.0;
  return row_values(i)[static_cast<std::size_t>(it - cols.begin())];
}

void SparseSymmetricOperator::apply(std::span<const double> x, std::span<double> y) const {
  const auto n = static_cast<std::ptrdiff_t>(dimension());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = row_start_[static_cast<std::size_t>(i)]; k < row_start_[static_cast<std::size_t>(i) + 1];
         ++k)
      s += values_[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(columns_[static_cast<std::size_t>(k)])];
    y[static_cast<std::size_t>(i)] = s;
  }
}

std::vector<double> SparseSymmetricOperator::apply(std::span<const double> x) const {
  std::vector<double> y(dimension());
  apply(x, y);
  return y;
}

double SparseSymmetricOperator::quadratic_form(std::span<const double> x) const {
  const auto y = apply(x);
  return deterministic_dot(x, y);
}

SparseSymmetricOperator assemble_B(const VoronoiMesh& mesh, double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidInput("density must be positive");
  const double inv_rho = 1.0 / rho;
  std::vector<std::tuple<int, int, double>> pairs;
  pairs.reserve(mesh.size() * 3);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const int ii = static_cast<int>(i);
    for (const auto& f : mesh.cells[i].facets) {
      if (f.is_wall()) continue;
      const int j = f.neighbor;
      if (j > ii) {
        pairs.emplace_back(ii, j, inv_rho * f.length / f.distance);
      } else if (mesh.find_facet(j, ii) == nullptr) {
        // Facet kept on this side only (degenerate on the other); still couple once.
        pairs.emplace_back(j, ii, inv_rho * f.length / f.distance);
      }
    }
  }
  return SparseSymmetricOperator::from_pairs(mesh.size(), std::move(pairs));
}

std::vector<double> assemble_rhs(const VoronoiMesh& mesh, std::span<const Vec2> v, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("time step must be positive");
  auto b = volume_rate_field(mesh, v);
  for (double& x : b) x = -x / dt;
  return b;
}

std::vector<double> apply_A(const VoronoiMesh& mesh, std::span<const double> rho,
                            std::span<const double> p) {
  std::vector<double> out(mesh.size(), 0.0);
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    const auto& cell = mesh.cells[k];
    const Vec2 g = strong_gradient(mesh, p, static_cast<int>(k)) * (cell.volume / rho[k]);
    const Vec2 xk = mesh.seeds[k];
    // d(grad_s phi_k)/d phi_j = c for the neighbor and -c for the cell itself.
    for (const auto& f : cell.facets) {
      if (f.is_wall()) continue;
      const Vec2 c = (f.midpoint - xk) * (f.length / (f.distance * cell.volume));
      const double gc = dot(g, c);
      out[k] -= gc;
      out[static_cast<std::size_t>(f.neighbor)] += gc;
    }
  }
  return out;
}

void remove_mean(std::span<double> x) {
  if (x.empty()) return;
  const double mean = deterministic_sum(x) / static_cast<double>(x.size());
  for (double& v : x) v -= mean;
}

namespace {

double norm2_of(std::span<const double> x) { return std::sqrt(deterministic_dot(x, x)); }

void check_finite(double value, const char* what, double residual, int iterations) {
  if (!std::isfinite(value))
    throw SolverError(std::string("MINRES: non-finite ") + what, residual, iterations);
}

/// One MINRES cycle for B x = r (r zero-mean) starting from x = 0. Returns the
/// number of iterations; stops when the recurrence residual reaches `target`.
int minres_cycle(const SparseSymmetricOperator& B, std::span<const double> r, double target,
                 int budget, std::span<double> x, std::span<const double> base, int offset,
                 const SolveOptions& options) {
  const std::size_t n = r.size();
  std::fill(x.begin(), x.end(), 0.0);
  const double beta1 = norm2_of(r);
  if (beta1 <= target || beta1 == 0.0) return 0;

  std::vector<double> v_prev(n, 0.0), v(n), v_next(n), w_prev2(n, 0.0), w_prev(n, 0.0), w(n),
      iterate;
  for (std::size_t i = 0; i < n; ++i) v[i] = r[i] / beta1;

  double beta = beta1;
  double gamma_prev = 1.0, gamma = 1.0, sigma_prev = 0.0, sigma = 0.0;
  double eta = beta1;
  int k = 0;
  while (k < budget) {
    ++k;
    B.apply(v, v_next);
    const double alpha = deterministic_dot(v, v_next);
    for (std::size_t i = 0; i < n; ++i) v_next[i] -= alpha * v[i] + beta * v_prev[i];
    remove_mean(v_next);
    const double beta_next = norm2_of(v_next);
    check_finite(alpha + beta_next, "Lanczos coefficient", std::abs(eta), offset + k);

    const double delta = gamma * alpha - gamma_prev * sigma * beta;
    const double rho1 = std::hypot(delta, beta_next);
    const double rho2 = sigma * alpha + gamma_prev * gamma * beta;
    const double rho3 = sigma_prev * beta;
    if (rho1 == 0.0) break;  // exact breakdown, x is the solution
    const double gamma_next = delta / rho1;
    const double sigma_next = beta_next / rho1;

    for (std::size_t i = 0; i < n; ++i) {
      w[i] = (v[i] - rho3 * w_prev2[i] - rho2 * w_prev[i]) / rho1;
      x[i] += gamma_next * eta * w[i];
    }
    remove_mean(x);
    eta = -sigma_next * eta;

    if (options.on_iterate) {
      iterate.assign(base.begin(), base.end());
      for (std::size_t i = 0; i < n; ++i) iterate[i] += x[i];
      options.on_iterate(offset + k, iterate);
    }
    if (std::abs(eta) <= target || beta_next == 0.0) break;

    std::swap(w_prev2, w_prev);
    std::swap(w_prev, w);
    std::swap(v_prev, v);
    std::swap(v, v_next);
    for (double& vi : v) vi /= beta_next;
    beta = beta_next;
    gamma_prev = gamma;
    gamma = gamma_next;
    sigma_prev = sigma;
    sigma = sigma_next;
  }
  return k;
}

}  // namespace

std::vector<double> solve_pressure(const SparseSymmetricOperator& B, std::span<const double> b,
                                   const SolveOptions& options, SolveReport* report,
                                   std::span<const double> initial) {
  const std::size_t n = B.dimension();
  if (b.size() != n) throw InvalidInput("right-hand side size does not match operator");
  for (double bi : b)
    if (!std::isfinite(bi)) throw SolverError("MINRES: non-finite right-hand side", 0.0, 0);

  std::vector<double> rhs(b.begin(), b.end());
  remove_mean(rhs);
  const double bnorm = norm2_of(rhs);
  const double target = std::max(options.rel_tol * bnorm, options.abs_tol);
  const int max_iter = options.max_iter > 0 ? options.max_iter : static_cast<int>(10 * std::max<std::size_t>(n, 1));

  std::vector<double> p(n, 0.0);
  if (initial.size() == n) {
    p.assign(initial.begin(), initial.end());
    remove_mean(p);
  }
  SolveReport rep;
  rep.rhs_norm = bnorm;

  std::vector<double> r(n), correction(n);
  auto residual = [&] {
    B.apply(p, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
    remove_mean(r);
    return norm2_of(r);
  };

  double res = residual();
  for (int cycle = 0; res > target; ++cycle) {
    if (rep.iterations >= max_iter || cycle > options.max_restarts) {
      throw SolverError("MINRES did not converge: residual " + std::to_string(res) +
                            " after " + std::to_string(rep.iterations) + " iterations",
                        res, rep.iterations);
    }
    // Aim slightly below the target so that the true residual also passes.
    const int used = minres_cycle(B, r, 0.5 * target, max_iter - rep.iterations, correction, p,
                                  rep.iterations, options);
    rep.iterations += used;
    for (std::size_t i = 0; i < n; ++i) p[i] += correction[i];
    remove_mean(p);
    const double next = residual();
    check_finite(next, "residual", next, rep.iterations);
    if (cycle > 0) ++rep.restarts;
    if (used == 0 && next > target) {
      throw SolverError("MINRES stagnated at residual " + std::to_string(next), next,
                        rep.iterations);
    }
    res = next;
  }
  rep.residual = res;
  if (report != nullptr) *report = rep;
  return p;
}

std::vector<double> solve_pressure_multiphase(const VoronoiMesh& mesh, std::span<const double> rho,
                                              std::span<const Vec2> v, double dt,
                                              std::span<const double> p_prev,
                                              const MultiphaseOptions& options,
                                              MultiphaseReport* report) {
  if (!(dt > 0.0)) throw InvalidInput("time step must be positive");
  const std::size_t n = mesh.size();
  for (double r : rho)
    if (!(r > 0.0)) throw InvalidInput("density must be positive");

  const auto L = assemble_B(mesh, 1.0);
  const auto rate = volume_rate_field(mesh, v);
  const auto grad_rho = strong_gradient_field(mesh, rho);

  std::vector<double> base(n), coupling(n);
  for (std::size_t i = 0; i < n; ++i) {
    base[i] = -rho[i] * rate[i] / dt;
    coupling[i] = mesh.cells[i].volume / rho[i];
  }

  std::vector<double> p(n, 0.0);
  if (p_prev.size() == n) p.assign(p_prev.begin(), p_prev.end());
  remove_mean(p);

  MultiphaseReport rep;
  std::vector<double> c(n);
  // Without a density gradient the right-hand side does not depend on p and the
  // map is constant: its first image is the fixed point.
  const bool uniform = std::all_of(grad_rho.begin(), grad_rho.end(),
                                   [](const Vec2& g) { return g.x == 0.0 && g.y == 0.0; });
  if (uniform) {
    SolveReport inner;
    p = solve_pressure(L, base, options.inner, &inner, p);
    rep.outer_iterations = 1;
    rep.inner_iterations = inner.iterations;
    if (report != nullptr) *report = rep;
    return p;
  }
  for (int m = 0; m < options.max_outer; ++m) {
    const auto grad_p = strong_gradient_field(mesh, p);
    for (std::size_t i = 0; i < n; ++i)
      c[i] = base[i] - coupling[i] * dot(grad_rho[i], grad_p[i]);

    SolveReport inner;
    auto next = solve_pressure(L, c, options.inner, &inner, p);
    rep.inner_iterations += inner.iterations;
    double inc = 0.0;
    for (std::size_t i = 0; i < n; ++i) inc = std::max(inc, std::abs(next[i] - p[i]));
    p = std::move(next);
    rep.outer_iterations = m + 1;
    rep.last_increment = inc;
    if (inc < options.outer_tol) {
      if (report != nullptr) *report = rep;
      return p;
    }
  }
  if (report != nullptr) *report = rep;
  throw SolverError("multiphase fixed point did not converge: last increment " +
                        std::to_string(rep.last_increment),
                    rep.last_increment, rep.outer_iterations);
}

}  // namespace silva
