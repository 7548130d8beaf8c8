#pragma once

#include <functional>
#include <span>
#include <tuple>
#include <vector>

#include "silva/vec2.hpp"
#include "silva/voronoi_mesh.hpp"

namespace silva {

/// Symmetric sparse matrix in CSR layout. Each row stores its diagonal entry
/// and one entry per facet neighbor.
class SparseSymmetricOperator {
 public:
  SparseSymmetricOperator() = default;

  /// Builds from an unordered pair list (i < j, weight w): B_ij = B_ji = -w,
  /// B_ii = sum of incident weights. Row sums are zero by construction.
  static SparseSymmetricOperator from_pairs(std::size_t n,
                                            std::vector<std::tuple<int, int, double>> pairs);

  std::size_t dimension() const { return diagonal_.size(); }
  std::size_t nonzeros() const { return columns_.size(); }
  double mean_nonzeros_per_row() const;

  std::span<const int> row_columns(std::size_t i) const;
  std::span<const double> row_values(std::size_t i) const;
  double diagonal(std::size_t i) const { return diagonal_[i]; }
  double coefficient(std::size_t i, std::size_t j) const;

  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> apply(std::span<const double> x) const;

  /// x^T B x.
  double quadratic_form(std::span<const double> x) const;

 private:
  std::vector<int> row_start_;
  std::vector<int> columns_;
  std::vector<double> values_;
  std::vector<double> diagonal_;
};

/// Sparsified pressure operator: (B p)_i = (1/rho) sum_j |G_ij|/r_ij (p_i - p_j).
/// Every unordered facet pair contributes once, so B is exactly symmetric.
SparseSymmetricOperator assemble_B(const VoronoiMesh& mesh, double rho);

/// Right-hand side b_i = -(d|w_i|/dt)[v] / dt = (S_i.v_i - |w_i| div_w v_i) / dt,
/// the functional (1/dt) sum_k |w_k| v_k . grad_s(e_i)_k. Sums to zero.
std::vector<double> assemble_rhs(const VoronoiMesh& mesh, std::span<const Vec2> v, double dt);

/// Action of the unsparsified operator A, sum_k (|w_k|/rho_k) grad_s p_k . grad_s phi_k,
/// through two strong-gradient applications. Reference quality only.
std::vector<double> apply_A(const VoronoiMesh& mesh, std::span<const double> rho,
                            std::span<const double> p);

struct SolveOptions {
  double rel_tol = 1e-9;
  double abs_tol = 0.0;
  /// 0 means 10 * dimension.
  int max_iter = 0;
  /// Restarts from the true residual when the recursive estimate drifts.
  int max_restarts = 4;
  /// Called after every iteration with the current zero-mean iterate.
  std::function<void(int, std::span<const double>)> on_iterate;
};

struct SolveReport {
  int iterations = 0;
  int restarts = 0;
  double residual = 0.0;
  double rhs_norm = 0.0;
};

/// MINRES on the zero-mean subspace: the right-hand side is mean-removed on
/// entry, every iterate is kept mean-free, and the result has zero mean.
/// `initial` (optional) warm-starts the iteration. Throws SolverError when the
/// iteration cap is exceeded or a non-finite value appears.
std::vector<double> solve_pressure(const SparseSymmetricOperator& B, std::span<const double> b,
                                   const SolveOptions& options = {}, SolveReport* report = nullptr,
                                   std::span<const double> initial = {});

struct MultiphaseOptions {
  double outer_tol = 1e-12;
  int max_outer = 100;
  SolveOptions inner = strict_inner();

  static SolveOptions strict_inner() {
    SolveOptions o;
    o.rel_tol = 1e-12;
    return o;
  }
};

struct MultiphaseReport {
  int outer_iterations = 0;
  int inner_iterations = 0;
  double last_increment = 0.0;
};

/// Heterogeneous-density pressure by fixed-point iteration on
///   -<lap p>_i = -(rho_i/dt) div v_i - (1/rho_i) grad_s rho_i . grad_s p^(m)_i,
/// started from p_prev and stopped when max_i |p^(m+1) - p^(m)| < outer_tol.
std::vector<double> solve_pressure_multiphase(const VoronoiMesh& mesh, std::span<const double> rho,
                                              std::span<const Vec2> v, double dt,
                                              std::span<const double> p_prev,
                                              const MultiphaseOptions& options = {},
                                              MultiphaseReport* report = nullptr);

/// Subtracts the arithmetic mean in place.
void remove_mean(std::span<double> x);

}  // namespace silva
