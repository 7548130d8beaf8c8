#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../oracles/dense.hpp"
#include "../support.hpp"
#include "silva/error.hpp"
#include "silva/operators.hpp"
#include "silva/parallel.hpp"
#include "silva/pressure_solver.hpp"

using namespace silva;
using testing::unit_square;

namespace {

VoronoiMesh random_mesh(std::size_t n, std::uint64_t seed, const DomainBox& d = unit_square()) {
  const auto seeds = testing::random_seeds(n, d, seed);
  return build_mesh(seeds, d, nominal_spacing(d, n));
}

VoronoiMesh two_cells() {
  return build_mesh(std::vector<Vec2>{{0.25, 0.5}, {0.75, 0.5}}, unit_square(), 0.5);
}

double mean(std::span<const double> x) { return deterministic_sum(x) / static_cast<double>(x.size()); }

}  // namespace

TEST_CASE("two-cell operator by hand") {
  const auto B = assemble_B(two_cells(), 1.0);
  CHECK(B.coefficient(0, 0) == doctest::Approx(2.0));
  CHECK(B.coefficient(0, 1) == doctest::Approx(-2.0));
  CHECK(B.coefficient(1, 0) == doctest::Approx(-2.0));
  CHECK(B.coefficient(1, 1) == doctest::Approx(2.0));
  const auto half = assemble_B(two_cells(), 2.0);
  CHECK(half.coefficient(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("operator annihilates constants and is symmetric") {
  const auto mesh = random_mesh(500, 3);
  const auto B = assemble_B(mesh, 1.3);
  const auto y = B.apply(std::vector<double>(mesh.size(), 1.0));
  for (double v : y) CHECK(std::abs(v) < 1e-12);
  for (std::size_t i = 0; i < B.dimension(); ++i) {
    const auto cols = B.row_columns(i);
    const auto vals = B.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      CHECK(B.coefficient(static_cast<std::size_t>(cols[k]), i) == vals[k]);
  }
}

TEST_CASE("Cartesian interior rows are the 5-point Laplacian") {
  const int n = 8;
  const auto mesh = build_mesh(testing::lattice(n, unit_square()), unit_square(), 1.0 / n);
  const auto B = assemble_B(mesh, 1.0);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    if (!testing::interior(mesh.cells[i])) continue;
    CHECK(B.diagonal(i) == doctest::Approx(4.0));
    REQUIRE(B.row_columns(i).size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
      const auto c = static_cast<std::size_t>(B.row_columns(i)[k]);
      CHECK(B.row_values(i)[k] == doctest::Approx(c == i ? 4.0 : -1.0));
    }
  }
}

TEST_CASE("operator is positive semi-definite") {
  const auto mesh = random_mesh(300, 5);
  const auto B = assemble_B(mesh, 1.0);
  for (std::uint64_t s = 0; s < 20; ++s)
    CHECK(B.quadratic_form(testing::random_values(mesh.size(), 100 + s)) >= -1e-12);
}

TEST_CASE("right-hand side: uniform velocity") {
  // Zero in the interior; cells on a wall keep the flux through it, S.v / dt.
  const auto mesh = random_mesh(200, 7);
  const Vec2 v{0.3, -0.7};
  const auto b = assemble_rhs(mesh, std::vector<Vec2>(mesh.size(), v), 0.1);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    if (testing::interior(mesh.cells[i]))
      CHECK(std::abs(b[i]) < 1e-12);
    else
      CHECK(b[i] == doctest::Approx(dot(mesh.cells[i].surface, v) / 0.1).epsilon(1e-12));
  }
}

TEST_CASE("right-hand side sums to zero") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto mesh = random_mesh(400, 10 + s);
    const auto b = assemble_rhs(mesh, testing::random_vectors(mesh.size(), 20 + s), 0.01);
    double sum = 0.0, scale = 0.0;
    for (double x : b) {
      sum += x;
      scale += std::abs(x);
    }
    CHECK(std::abs(sum) <= 1e-11 * scale);
  }
}

TEST_CASE("right-hand side of a radial expansion") {
  // The volume rate of v = (x, y) is +2|w| per cell, so b = -2|w|/dt.
  const int n = 16;
  const auto mesh = build_mesh(testing::lattice(n, unit_square()), unit_square(), 1.0 / n);
  std::vector<Vec2> v(mesh.seeds.begin(), mesh.seeds.end());
  const double dt = 0.01;
  const auto b = assemble_rhs(mesh, v, dt);
  for (std::size_t i = 0; i < mesh.size(); ++i)
    if (testing::interior(mesh.cells[i]))
      CHECK(b[i] == doctest::Approx(-2.0 * mesh.cells[i].volume / dt).epsilon(0.05));
}

TEST_CASE("right-hand side rejects a non-positive step") {
  CHECK_THROWS_AS(assemble_rhs(two_cells(), std::vector<Vec2>(2), 0.0), InvalidInput);
}

TEST_CASE("full operator A: constants and symmetry") {
  const auto mesh = random_mesh(150, 31);
  std::vector<double> rho(mesh.size(), 1.0);
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = mesh.seeds[i].y > 0.5 ? 1.8 : 1.0;
  const auto zero = apply_A(mesh, rho, std::vector<double>(mesh.size(), 2.5));
  for (double v : zero) CHECK(std::abs(v) < 1e-10);
  const auto p = testing::random_values(mesh.size(), 32);
  const auto q = testing::random_values(mesh.size(), 33);
  const double pAq = deterministic_dot(p, apply_A(mesh, rho, q));
  const double qAp = deterministic_dot(q, apply_A(mesh, rho, p));
  CHECK(std::abs(pAq - qAp) <= 1e-11 * (std::abs(pAq) + 1.0));
}

TEST_CASE("full operator A agrees with the quadratic form of the strong gradient") {
  const auto mesh = random_mesh(120, 35);
  const std::vector<double> rho(mesh.size(), 1.0);
  const auto p = testing::random_values(mesh.size(), 36);
  const auto q = testing::random_values(mesh.size(), 37);
  double direct = 0.0;
  for (int i = 0; i < static_cast<int>(mesh.size()); ++i)
    direct += mesh.cells[static_cast<std::size_t>(i)].volume *
              dot(strong_gradient(mesh, p, i), strong_gradient(mesh, q, i));
  CHECK(deterministic_dot(q, apply_A(mesh, rho, p)) == doctest::Approx(direct).epsilon(1e-11));
}

TEST_CASE("sparsified operator approaches A under refinement") {
  using std::numbers::pi;
  double prev = 1e300;
  for (int n : {8, 16, 32}) {
    const auto mesh = build_mesh(testing::lattice(n, unit_square()), unit_square(), 1.0 / n);
    std::vector<double> p(mesh.size());
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = std::cos(pi * mesh.seeds[i].x) * std::cos(pi * mesh.seeds[i].y);
    const auto Ap = apply_A(mesh, std::vector<double>(mesh.size(), 1.0), p);
    const auto Bp = assemble_B(mesh, 1.0).apply(p);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      num += (Ap[i] - Bp[i]) * (Ap[i] - Bp[i]);
      den += Ap[i] * Ap[i];
    }
    const double rel = std::sqrt(num / den);
    CHECK(rel < prev);
    prev = rel;
  }
}

TEST_CASE("solver: zero right-hand side gives zero") {
  const auto mesh = random_mesh(100, 41);
  const auto p = solve_pressure(assemble_B(mesh, 1.0), std::vector<double>(mesh.size(), 0.0));
  for (double x : p) CHECK(x == 0.0);
}

TEST_CASE("solver: two-cell system by hand") {
  const auto B = assemble_B(two_cells(), 1.0);
  const std::vector<double> b{1.0, -1.0};
  const auto p = solve_pressure(B, b);
  CHECK(p[0] == doctest::Approx(0.25));
  CHECK(p[1] == doctest::Approx(-0.25));
}

TEST_CASE("solver matches a dense pseudo-inverse") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto mesh = random_mesh(100, 50 + s);
    const auto B = assemble_B(mesh, 1.0);
    auto b = testing::random_values(mesh.size(), 60 + s);
    remove_mean(b);
    SolveOptions opt;
    opt.rel_tol = 1e-13;
    SolveReport rep;
    const auto p = solve_pressure(B, b, opt, &rep);
    const auto ref = oracle::pseudo_inverse_solve(oracle::to_dense(B), b);
    double scale = 0.0;
    for (double x : ref) scale = std::max(scale, std::abs(x));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - ref[i]) <= 1e-8 * scale);
    CHECK(std::abs(mean(p)) < 1e-12 * scale);
    CHECK(rep.iterations > 0);
  }
}

TEST_CASE("solver projects an inconsistent right-hand side onto the range") {
  const auto mesh = random_mesh(80, 71);
  const auto B = assemble_B(mesh, 1.0);
  auto b = testing::random_values(mesh.size(), 72);
  auto centered = b;
  remove_mean(centered);
  for (double& x : b) x += 3.0;
  const auto p = solve_pressure(B, b);
  const auto q = solve_pressure(B, centered);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-9));
}

TEST_CASE("solver warm start converges to the same solution in fewer iterations") {
  const auto mesh = random_mesh(400, 81);
  const auto B = assemble_B(mesh, 1.0);
  auto b = testing::random_values(mesh.size(), 82);
  remove_mean(b);
  SolveReport cold, warm;
  const auto p = solve_pressure(B, b, {}, &cold);
  auto guess = p;
  for (double& x : guess) x *= 1.0 + 1e-6;
  const auto q = solve_pressure(B, b, {}, &warm, guess);
  CHECK(warm.iterations < cold.iterations);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-6));
}

TEST_CASE("solver reports non-convergence") {
  const auto mesh = random_mesh(400, 83);
  auto b = testing::random_values(mesh.size(), 84);
  remove_mean(b);
  SolveOptions opt;
  opt.max_iter = 3;
  opt.max_restarts = 0;
  CHECK_THROWS_AS(solve_pressure(assemble_B(mesh, 1.0), b, opt), SolverError);
}

TEST_CASE("solver calls the iterate hook with mean-free iterates") {
  const auto mesh = random_mesh(60, 85);
  auto b = testing::random_values(mesh.size(), 86);
  remove_mean(b);
  int calls = 0;
  SolveOptions opt;
  opt.on_iterate = [&](int k, std::span<const double> x) {
    ++calls;
    CHECK(k == calls);
    CHECK(std::abs(deterministic_sum(x)) < 1e-10);
  };
  SolveReport rep;
  solve_pressure(assemble_B(mesh, 1.0), b, opt, &rep);
  CHECK(calls == rep.iterations);
}

TEST_CASE("multiphase: uniform density reduces to the single-phase solve") {
  const auto mesh = random_mesh(200, 91);
  const auto v = testing::random_vectors(mesh.size(), 92);
  const double dt = 0.01;
  const std::vector<double> rho(mesh.size(), 1.0);
  MultiphaseReport rep;
  const auto p = solve_pressure_multiphase(mesh, rho, v, dt, std::vector<double>(mesh.size(), 0.0), {}, &rep);
  CHECK(rep.outer_iterations == 1);
  SolveOptions strict;
  strict.rel_tol = 1e-12;
  const auto q = solve_pressure(assemble_B(mesh, 1.0), assemble_rhs(mesh, v, dt), strict);
  double scale = 0.0;
  for (double x : q) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-9 * scale);
}

TEST_CASE("multiphase: Atwood number of the two-phase densities") {
  const double heavy = 1.8, light = 1.0;
  CHECK((heavy - light) / (heavy + light) == doctest::Approx(2.0 / 7.0));
}

TEST_CASE("multiphase: a resting two-phase column is hydrostatic") {
  // Fluid at rest under gravity (0, -1): the kick v* = g dt must be cancelled
  // by the projection, which needs dp/dy = -rho.
  const int n = 24;
  const DomainBox d{0.0, 1.0, 0.0, 2.0};
  std::vector<Vec2> seeds;
  for (int j = 0; j < 2 * n; ++j)
    for (int i = 0; i < n; ++i) seeds.push_back({(i + 0.5) / n, (j + 0.5) / n});
  const auto mesh = build_mesh(seeds, d, 1.0 / n);
  std::vector<double> rho(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) rho[i] = seeds[i].y > 1.0 ? 1.8 : 1.0;
  const double dt = 1e-3;
  const std::vector<Vec2> v_star(seeds.size(), Vec2{0.0, -dt});
  MultiphaseReport rep;
  const auto p = solve_pressure_multiphase(mesh, rho, v_star, dt, std::vector<double>(seeds.size(), 0.0), {}, &rep);
  CHECK(rep.last_increment < 1e-12);
  CHECK(rep.outer_iterations <= 100);
  // Column average of p along the middle: decreasing upwards, slopes follow rho.
  auto row_mean = [&](int j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += p[static_cast<std::size_t>(j * n + i)];
    return s / n;
  };
  for (int j = 1; j < 2 * n; ++j) CHECK(row_mean(j) < row_mean(j - 1));
  const double slope_light = (row_mean(n / 2 + 2) - row_mean(n / 2 - 2)) / 4.0;
  const double slope_heavy = (row_mean(3 * n / 2 + 2) - row_mean(3 * n / 2 - 2)) / 4.0;
  CHECK(slope_heavy / slope_light == doctest::Approx(1.8).epsilon(0.1));
}

TEST_CASE("multiphase rejects a non-positive density") {
  const auto mesh = two_cells();
  CHECK_THROWS_AS(solve_pressure_multiphase(mesh, std::vector<double>{1.0, 0.0}, std::vector<Vec2>(2), 0.1,
                                            std::vector<double>(2, 0.0)),
                  InvalidInput);
}
