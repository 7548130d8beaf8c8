#include "silva/time_integrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "silva/error.hpp"
#include "silva/operators.hpp"
#include "silva/parallel.hpp"

namespace silva {

std::optional<Vec2> BoundarySpec::mirror_velocity(Wall w, const Vec2& vi) const {
  const auto& c = at(w);
  switch (c.kind) {
    case WallKind::FreeSlip: {
      const bool normal_x = (w == Wall::Left || w == Wall::Right);
      return normal_x ? Vec2{-vi.x, vi.y} : Vec2{vi.x, -vi.y};
    }
    case WallKind::NoSlip: return -vi;
    case WallKind::Dirichlet: return 2.0 * c.velocity - vi;
  }
  return std::nullopt;
}

void ParticleState::validate() const {
  const auto n = position.size();
  if (velocity.size() != n || pressure.size() != n || density.size() != n || mass.size() != n ||
      reference_volume.size() != n)
    throw InvalidInput("particle state fields have inconsistent sizes");
  for (std::size_t i = 0; i < n; ++i)
    if (!(density[i] > 0.0))
      throw InvalidInput("density of particle " + std::to_string(i) + " is not positive");
}

double compute_dt(const ParticleState& state, const IntegratorParams& params,
                  const VoronoiMesh* mesh) {
  if (!(params.dr > 0.0)) throw InvalidInput("resolution dr must be positive");
  double vmax = 0.0;
  for (const auto& v : state.velocity) vmax = std::max(vmax, norm(v));
  double dt = params.cfl * params.dr / std::max(vmax, params.v_ref);
  if (params.viscosity > 0.0) {
    dt = std::min(dt, params.dt_safety * params.dr * params.dr / params.viscosity);
    if (mesh != nullptr) dt = std::min(dt, viscous_dt_limit(*mesh, params));
  }
  return std::min(dt, params.dt_max);
}

double viscous_dt_limit(const VoronoiMesh& mesh, const IntegratorParams& params) {
  if (!(params.viscosity > 0.0)) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const auto& cell : mesh.cells) {
    double sum = 0.0;
    for (const auto& f : cell.facets) {
      if (f.is_wall() && params.wall_friction == WallFriction::PointImplicit) continue;
      if (f.distance > 0.0) sum += f.length / f.distance;
    }
    if (cell.volume > 0.0) worst = std::max(worst, sum / cell.volume);
  }
  if (worst == 0.0) return std::numeric_limits<double>::infinity();
  return 4.0 * params.dt_safety / (params.viscosity * worst);
}

double kinetic_energy(const VoronoiMesh& mesh, std::span<const Vec2> v,
                      std::span<const double> rho) {
  std::vector<double> e(mesh.size());
  for (std::size_t i = 0; i < mesh.size(); ++i)
    e[i] = 0.5 * mesh.cells[i].volume * rho[i] * norm2(v[i]);
  return deterministic_sum(e);
}

double min_seed_spacing(const VoronoiMesh& mesh) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& cell : mesh.cells)
    for (const auto& f : cell.facets)
      if (!f.is_wall()) best = std::min(best, f.distance);
  return best;
}

std::vector<Vec2> viscous_and_body_forces(const VoronoiMesh& mesh, std::span<const Vec2> v,
                                          const BoundarySpec& boundary, double viscosity,
                                          double dt, WallFriction friction) {
  std::vector<Vec2> out(v.begin(), v.end());
  const MirrorFn mirror = [&](int i, Wall w, Vec2& value) {
    const auto m = boundary.mirror_velocity(w, v[static_cast<std::size_t>(i)]);
    if (m) value = *m;
    return m.has_value();
  };
  const bool implicit = friction == WallFriction::PointImplicit && viscosity > 0.0;
  const auto n = static_cast<std::ptrdiff_t>(mesh.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    Vec2 force = boundary.gravity;
    if (!implicit) {
      if (viscosity > 0.0) force += viscosity * laplacian(mesh, v, static_cast<int>(i), mirror);
      out[k] += dt * force;
      continue;
    }
    force += viscosity * laplacian(mesh, v, static_cast<int>(i));
    // Mirror value is M v_i + s per component, M = +-1; the wall term
    // c (v' - v*) becomes c ((M - 1) v* + s).
    Vec2 rhs = v[k] + dt * force;
    Vec2 diag{1.0, 1.0};
    const auto& cell = mesh.cells[k];
    for (const auto& f : cell.facets) {
      if (!f.is_wall()) continue;
      const double c = dt * viscosity * f.length / (f.distance * cell.volume);
      const auto unit_x = boundary.mirror_velocity(f.wall(), Vec2{1.0, 0.0});
      if (!unit_x) continue;
      const Vec2 s = *boundary.mirror_velocity(f.wall(), Vec2{0.0, 0.0});
      const Vec2 unit_y = *boundary.mirror_velocity(f.wall(), Vec2{0.0, 1.0});
      const double mx = unit_x->x - s.x, my = unit_y.y - s.y;
      diag.x += c * (1.0 - mx);
      diag.y += c * (1.0 - my);
      rhs += c * s;
    }
    out[k] = Vec2{rhs.x / diag.x, rhs.y / diag.y};
  }
  return out;
}

bool reflect_into_domain(const DomainBox& domain, double dr, Vec2& x) {
  const Vec2 before = x;
  const double inset = 1e-9 * dr;
  auto fold = [&](double& c, double lo, double hi) {
    if (c <= lo) c = 2.0 * lo - c;
    if (c >= hi) c = 2.0 * hi - c;
    c = std::clamp(c, lo + inset, hi - inset);
  };
  if (!domain.strictly_contains(x)) {
    fold(x.x, domain.xmin, domain.xmax);
    fold(x.y, domain.ymin, domain.ymax);
  }
  return !(x == before);
}

namespace {

bool uniform_density(std::span<const double> rho) {
  return std::all_of(rho.begin(), rho.end(), [&](double r) { return r == rho.front(); });
}

struct DivergenceNorms {
  double l2 = 0.0;
  double max = 0.0;
};

DivergenceNorms divergence_norms(const VoronoiMesh& mesh, std::span<const Vec2> v) {
  const auto rate = volume_rate_field(mesh, v);
  std::vector<double> sq(mesh.size());
  DivergenceNorms out;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const double d = rate[i] / mesh.cells[i].volume;
    sq[i] = mesh.cells[i].volume * d * d;
    out.max = std::max(out.max, std::abs(d));
  }
  out.l2 = std::sqrt(deterministic_sum(sq));
  return out;
}

void fill_geometry_diagnostics(const VoronoiMesh& mesh, const ParticleState& state,
                               StepDiagnostics& d) {
  d.energy = kinetic_energy(mesh, state.velocity, state.density);
  const auto div = divergence_norms(mesh, state.velocity);
  d.div_l2 = div.l2;
  d.div_max = div.max;
  d.volume_drift_min = std::numeric_limits<double>::infinity();
  d.volume_drift_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const double drift =
        (mesh.cells[i].volume - state.reference_volume[i]) / state.reference_volume[i];
    d.volume_drift_min = std::min(d.volume_drift_min, drift);
    d.volume_drift_max = std::max(d.volume_drift_max, drift);
  }
  if (mesh.size() == 0) d.volume_drift_min = d.volume_drift_max = 0.0;
  d.min_spacing = min_seed_spacing(mesh);
}

}  // namespace

StepOutcome silva_step(const ParticleState& state, const VoronoiMesh* previous,
                       const BoundarySpec& boundary, const IntegratorParams& params, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("time step must be positive");
  StepOutcome out;
  auto& next = out.state;
  auto& diag = out.diagnostics;
  next = state;
  next.time = state.time + dt;
  next.step = state.step + 1;
  diag.step = next.step;
  diag.time = next.time;
  diag.dt = dt;

  // (1) explicit trajectory update
  for (std::size_t i = 0; i < state.size(); ++i) {
    next.position[i] = state.position[i] + dt * state.velocity[i];
    if (reflect_into_domain(params.domain, params.dr, next.position[i])) ++diag.escaped;
  }

  // (2) mesh regeneration
  const auto t0 = std::chrono::steady_clock::now();
  out.mesh = build_mesh(next.position, params.domain, params.dr, previous);
  diag.mesh_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& mesh = out.mesh;

  // (3) explicit viscous and body forces
  const auto v_star =
      viscous_and_body_forces(mesh, state.velocity, boundary, params.viscosity, dt,
                              params.wall_friction);
  diag.div_star_l2 = divergence_norms(mesh, v_star).l2;

  // (4) pressure
  if (uniform_density(state.density)) {
    const auto B = assemble_B(mesh, state.density.front());
    const auto b = assemble_rhs(mesh, v_star, dt);
    SolveReport rep;
    next.pressure = solve_pressure(B, b, params.solver, &rep, state.pressure);
    diag.minres_iterations = rep.iterations;
    diag.outer_iterations = 1;
  } else {
    MultiphaseReport rep;
    next.pressure = solve_pressure_multiphase(mesh, state.density, v_star, dt, state.pressure,
                                              params.multiphase, &rep);
    diag.minres_iterations = rep.inner_iterations;
    diag.outer_iterations = rep.outer_iterations;
    diag.outer_increment = rep.last_increment;
  }

  // (5) velocity update
  const auto grad = params.stabilize ? stabilized_gradient_field(mesh, next.pressure)
                                     : strong_gradient_field(mesh, next.pressure);
  for (std::size_t i = 0; i < state.size(); ++i)
    next.velocity[i] = v_star[i] - (dt / state.density[i]) * grad[i];

  fill_geometry_diagnostics(mesh, next, diag);
  return out;
}

Simulation::Simulation(ParticleState initial, BoundarySpec boundary, IntegratorParams params)
    : state_(std::move(initial)), boundary_(boundary), params_(params) {
  state_.validate();
  mesh_ = build_mesh(state_.position, params_.domain, params_.dr);
  initial_energy_ = kinetic_energy(mesh_, state_.velocity, state_.density);
}

Simulation Simulation::resume(StepOutcome outcome, BoundarySpec boundary, IntegratorParams params,
                              double initial_energy) {
  Simulation sim;
  sim.state_ = std::move(outcome.state);
  sim.mesh_ = std::move(outcome.mesh);
  sim.boundary_ = boundary;
  sim.params_ = params;
  sim.initial_energy_ = initial_energy;
  return sim;
}

StepDiagnostics Simulation::step(double max_dt) {
  const double dt = std::min(compute_dt(state_, params_, &mesh_), max_dt);
  auto out = silva_step(state_, &mesh_, boundary_, params_, dt);
  state_ = std::move(out.state);
  mesh_ = std::move(out.mesh);
  return out.diagnostics;
}

StepDiagnostics Simulation::snapshot_diagnostics() const {
  StepDiagnostics d;
  d.step = state_.step;
  d.time = state_.time;
  fill_geometry_diagnostics(mesh_, state_, d);
  return d;
}

}  // namespace silva
