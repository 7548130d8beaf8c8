#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../support.hpp"
#include "silva/benchmarks.hpp"
#include "silva/error.hpp"
#include "silva/operators.hpp"
#include "silva/time_integrator.hpp"

using namespace silva;
using testing::unit_square;

namespace {

ParticleState resting_state(const std::vector<Vec2>& seeds, const VoronoiMesh& mesh) {
  ParticleState s;
  s.position = seeds;
  s.velocity.assign(seeds.size(), Vec2{});
  s.pressure.assign(seeds.size(), 0.0);
  s.density.assign(seeds.size(), 1.0);
  for (const auto& c : mesh.cells) {
    s.reference_volume.push_back(c.volume);
    s.mass.push_back(c.volume);
  }
  return s;
}

BoundarySpec all_walls(WallKind kind) {
  BoundarySpec b;
  for (auto& w : b.walls) w.kind = kind;
  return b;
}

IntegratorParams params_for(const DomainBox& d, double dr, double nu) {
  IntegratorParams p;
  p.domain = d;
  p.dr = dr;
  p.viscosity = nu;
  return p;
}

}  // namespace

TEST_CASE("time step: advective bound at rest") {
  ParticleState s;
  s.velocity.assign(3, Vec2{});
  auto p = params_for(unit_square(), 0.01, 0.0);
  CHECK(compute_dt(s, p) == doctest::Approx(1e-3));
  s.velocity[1] = {0.0, 4.0};
  CHECK(compute_dt(s, p) == doctest::Approx(2.5e-4));
  p.dt_max = 1e-4;
  CHECK(compute_dt(s, p) == doctest::Approx(1e-4));
}

TEST_CASE("time step: viscous cap") {
  ParticleState s;
  s.velocity.assign(3, Vec2{});
  auto p = params_for(unit_square(), 0.01, 0.01);
  CHECK(compute_dt(s, p) == doctest::Approx(1e-3));
  p.cfl = 1.0;
  CHECK(compute_dt(s, p) == doctest::Approx(2.5e-3));
}

TEST_CASE("time step: mesh bound equals the formula on a Cartesian interior") {
  const int n = 20;
  const DomainBox d{0.0, 1.0, 0.0, 1.0};
  const auto mesh = build_mesh(testing::lattice(n, d), d, 1.0 / n);
  auto p = params_for(d, 1.0 / n, 0.01);
  // Wall facets (r = h) raise the row sum of edge cells only under explicit friction.
  p.wall_friction = WallFriction::PointImplicit;
  CHECK(viscous_dt_limit(mesh, p) == doctest::Approx(p.dt_safety * p.dr * p.dr / p.viscosity));
  p.wall_friction = WallFriction::Explicit;
  CHECK(viscous_dt_limit(mesh, p) < p.dt_safety * p.dr * p.dr / p.viscosity);
}

TEST_CASE("time step: Taylor-Green step count follows the formula") {
  const auto spec = CaseSpec::taylor_green(32, 400.0);
  const auto params = integrator_params(spec);
  const auto init = init_case(spec);
  const double predicted = spec.t_end / compute_dt(init, params);
  const auto run = run_case(spec, params);
  CHECK(static_cast<double>(run.steps) <= 2.0 * predicted);
  CHECK(static_cast<double>(run.steps) >= 0.5 * predicted);
}

TEST_CASE("mirror velocities") {
  BoundarySpec b;
  b.at(Wall::Left).kind = WallKind::NoSlip;
  b.at(Wall::Top) = {WallKind::Dirichlet, {1.0, 0.0}};
  b.at(Wall::Bottom) = {WallKind::Dirichlet, {0.0, 0.0}};
  b.at(Wall::Right).kind = WallKind::FreeSlip;
  const Vec2 v{0.3, -0.2};
  CHECK(*b.mirror_velocity(Wall::Left, v) == -v);
  CHECK(*b.mirror_velocity(Wall::Top, v) == Vec2{1.7, 0.2});
  CHECK(*b.mirror_velocity(Wall::Bottom, v) == -v);  // v_D = 0 is exactly no-slip
  CHECK(*b.mirror_velocity(Wall::Right, v) == Vec2{-0.3, -0.2});
  b.at(Wall::Top).kind = WallKind::FreeSlip;
  CHECK(*b.mirror_velocity(Wall::Top, v) == Vec2{0.3, 0.2});
}

TEST_CASE("forces: no viscosity and no gravity leave v unchanged") {
  const auto seeds = testing::random_seeds(100, unit_square(), 1);
  const auto mesh = build_mesh(seeds, unit_square(), 0.1);
  const auto v = testing::random_vectors(seeds.size(), 2);
  const auto out = viscous_and_body_forces(mesh, v, all_walls(WallKind::NoSlip), 0.0, 0.1);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(out[i] == v[i]);
}

TEST_CASE("forces: uniform slip along free-slip walls is friction free") {
  const auto seeds = testing::random_seeds(150, unit_square(), 3);
  const auto mesh = build_mesh(seeds, unit_square(), 0.08);
  for (auto mode : {WallFriction::Explicit, WallFriction::PointImplicit}) {
    // Parallel to bottom and top; cells on the left/right walls see normal flow.
    BoundarySpec b = all_walls(WallKind::FreeSlip);
    const std::vector<Vec2> v(seeds.size(), Vec2{0.7, 0.0});
    const auto out = viscous_and_body_forces(mesh, v, b, 0.05, 0.01, mode);
    for (std::size_t i = 0; i < v.size(); ++i) {
      bool on_side = false;
      for (const auto& f : mesh.cells[i].facets)
        on_side = on_side || (f.is_wall() && (f.wall() == Wall::Left || f.wall() == Wall::Right));
      if (on_side) continue;
      CHECK(out[i].x == doctest::Approx(0.7).epsilon(1e-14));
      CHECK(out[i].y == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("forces: gravity kick") {
  const auto seeds = testing::random_seeds(50, unit_square(), 4);
  const auto mesh = build_mesh(seeds, unit_square(), 0.15);
  BoundarySpec b;
  b.gravity = {0.0, -2.0};
  const std::vector<Vec2> v(seeds.size(), Vec2{});
  const auto out = viscous_and_body_forces(mesh, v, b, 0.0, 0.01);
  for (const auto& x : out) CHECK(x.y == doctest::Approx(-0.02));
}

TEST_CASE("forces: lid drags the cell below it") {
  const int n = 5;
  const auto seeds = testing::lattice(n, unit_square());
  const auto mesh = build_mesh(seeds, unit_square(), 1.0 / n);
  BoundarySpec b = all_walls(WallKind::NoSlip);
  b.at(Wall::Top) = {WallKind::Dirichlet, {1.0, 0.0}};
  const std::vector<Vec2> rest(seeds.size(), Vec2{});
  const double nu = 0.01, dt = 1e-3;
  const std::size_t i = (n - 1) * n + n / 2;  // middle of the top row
  const auto& cell = mesh.cells[i];
  const Facet* lid = nullptr;
  for (const auto& f : cell.facets)
    if (f.is_wall() && f.wall() == Wall::Top) lid = &f;
  REQUIRE(lid != nullptr);
  const double a = dt * nu * (lid->length / lid->distance) / cell.volume;

  const auto expl = viscous_and_body_forces(mesh, rest, b, nu, dt, WallFriction::Explicit);
  CHECK(expl[i].x > 0.0);
  CHECK(expl[i].x == doctest::Approx(2.0 * a).epsilon(1e-12));
  CHECK(expl[i].y == 0.0);

  const auto impl = viscous_and_body_forces(mesh, rest, b, nu, dt, WallFriction::PointImplicit);
  CHECK(impl[i].x == doctest::Approx(2.0 * a / (1.0 + 2.0 * a)).epsilon(1e-12));
  CHECK(std::abs(impl[i].x - expl[i].x) <= 4.0 * a * a);
}

TEST_CASE("forces: point-implicit wall friction stays bounded for a seed hugging a wall") {
  std::vector<Vec2> seeds = testing::lattice(6, unit_square());
  seeds[0] = {1e-7, 0.3 / 6};
  const auto mesh = build_mesh(seeds, unit_square(), 1.0 / 6);
  std::vector<Vec2> v(seeds.size(), Vec2{});
  v[0] = {0.0, 1.0};
  const auto b = all_walls(WallKind::NoSlip);
  const auto impl = viscous_and_body_forces(mesh, v, b, 0.01, 1e-3, WallFriction::PointImplicit);
  CHECK(std::abs(impl[0].y) <= 1.0);
  CHECK(impl[0].y >= 0.0);
  const auto expl = viscous_and_body_forces(mesh, v, b, 0.01, 1e-3, WallFriction::Explicit);
  CHECK(std::abs(expl[0].y) > 1.0);  // the explicit form overshoots past -v
}

TEST_CASE("reflect_into_domain folds escaped seeds back") {
  const DomainBox d = unit_square();
  Vec2 x{1.05, 0.5};
  CHECK(reflect_into_domain(d, 0.1, x));
  CHECK(x.x == doctest::Approx(0.95));
  Vec2 y{-0.02, -0.03};
  CHECK(reflect_into_domain(d, 0.1, y));
  CHECK(y.x == doctest::Approx(0.02));
  CHECK(y.y == doctest::Approx(0.03));
  Vec2 z{0.4, 0.6};
  CHECK_FALSE(reflect_into_domain(d, 0.1, z));
}

TEST_CASE("state validation") {
  ParticleState s;
  s.position = {{0.5, 0.5}};
  s.velocity = {{0, 0}};
  s.pressure = {0.0};
  s.density = {1.0};
  s.mass = {1.0};
  s.reference_volume = {1.0};
  CHECK_NOTHROW(s.validate());
  s.density[0] = -1.0;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s.density[0] = 1.0;
  s.pressure.clear();
  CHECK_THROWS_AS(s.validate(), InvalidInput);
}

TEST_CASE("step: a resting state without forces is a fixed point") {
  const auto seeds = testing::random_seeds(200, unit_square(), 8);
  const double dr = nominal_spacing(unit_square(), seeds.size());
  const auto mesh = build_mesh(seeds, unit_square(), dr);
  const auto state = resting_state(seeds, mesh);
  const auto out = silva_step(state, &mesh, all_walls(WallKind::NoSlip), params_for(unit_square(), dr, 0.01), 0.01);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    CHECK(out.state.position[i] == seeds[i]);
    CHECK(norm(out.state.velocity[i]) == 0.0);
    CHECK(out.state.pressure[i] == 0.0);
  }
  CHECK(out.state.step == 1);
  CHECK(out.state.time == doctest::Approx(0.01));
}

TEST_CASE("step: projection reduces the divergence of the kicked field") {
  const auto spec = CaseSpec::taylor_green(24, 400.0);
  Simulation sim(init_case(spec), spec.boundary, integrator_params(spec));
  for (int k = 0; k < 5; ++k) {
    const auto d = sim.step();
    CHECK(d.div_l2 < d.div_star_l2);
    CHECK(d.minres_iterations > 0);
    CHECK(d.escaped == 0);
  }
}

TEST_CASE("step: masses, reference volumes and densities are carried unchanged") {
  const auto spec = CaseSpec::rayleigh_taylor(12);
  const auto init = init_case(spec);
  Simulation sim(init, spec.boundary, integrator_params(spec));
  for (int k = 0; k < 3; ++k) sim.step();
  CHECK(sim.state().mass == init.mass);
  CHECK(sim.state().density == init.density);
  CHECK(sim.state().reference_volume == init.reference_volume);
}

TEST_CASE("inviscid Taylor-Green keeps its energy within the first-order regime") {
  const auto spec = CaseSpec::taylor_green(32, kInfinity);
  Simulation sim(init_case(spec), spec.boundary, integrator_params(spec));
  const double e0 = sim.initial_energy();
  double prev = e0;
  int increases = 0;
  while (sim.state().time < spec.t_end - 1e-12) {
    const auto d = sim.step(spec.t_end - sim.state().time);
    if (d.energy > prev) ++increases;
    prev = d.energy;
  }
  CHECK(increases == 0);
  CHECK(std::abs(prev - e0) / e0 < 1e-2);
}

TEST_CASE("Gresho vortex keeps its profile over one revolution") {
  auto spec = CaseSpec::gresho(50);
  spec.t_end = 2.0 * std::numbers::pi * 0.2;
  const auto run = run_case(spec, integrator_params(spec));
  CHECK(peak_azimuthal_velocity(run.state, spec) >= 0.8);
}

TEST_CASE("Simulation::step honours the cap and counts steps") {
  const auto spec = CaseSpec::taylor_green(16, 400.0);
  Simulation sim(init_case(spec), spec.boundary, integrator_params(spec));
  const auto d = sim.step(1e-5);
  CHECK(d.dt == doctest::Approx(1e-5));
  CHECK(d.step == 1);
  CHECK(sim.state().time == doctest::Approx(1e-5));
}

TEST_CASE("Simulation::resume continues from an external step") {
  const auto spec = CaseSpec::taylor_green(16, 400.0);
  const auto params = integrator_params(spec);
  Simulation a(init_case(spec), spec.boundary, params);
  Simulation b(init_case(spec), spec.boundary, params);
  const double dt = compute_dt(b.state(), params, &b.mesh());
  auto outcome = silva_step(b.state(), &b.mesh(), spec.boundary, params, dt);
  auto c = Simulation::resume(std::move(outcome), spec.boundary, params, b.initial_energy());
  a.step();
  a.step();
  c.step();
  CHECK(a.state().position == c.state().position);
  CHECK(a.state().velocity == c.state().velocity);
}
