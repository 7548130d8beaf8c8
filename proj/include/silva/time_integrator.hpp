#pragma once

#include <array>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "silva/pressure_solver.hpp"
#include "silva/vec2.hpp"
#include "silva/voronoi_mesh.hpp"

namespace silva {

enum class WallKind { FreeSlip, NoSlip, Dirichlet };

struct WallCondition {
  WallKind kind = WallKind::FreeSlip;
  Vec2 velocity;  // only used by Dirichlet walls
};

struct BoundarySpec {
  std::array<WallCondition, 4> walls{};
  Vec2 gravity;

  const WallCondition& at(Wall w) const { return walls[static_cast<std::size_t>(w)]; }
  WallCondition& at(Wall w) { return walls[static_cast<std::size_t>(w)]; }

  /// Velocity of the mirrored cell across wall w: 2 v_D - v_i for Dirichlet
  /// walls, -v_i for no-slip walls, and the reflection of v_i (normal part
  /// flipped, tangential part kept) for free-slip walls.
  std::optional<Vec2> mirror_velocity(Wall w, const Vec2& vi) const;
};

/// Per-seed physical state. The mass and reference volume are fixed at t = 0.
struct ParticleState {
  std::vector<Vec2> position;
  std::vector<Vec2> velocity;
  std::vector<double> pressure;
  std::vector<double> density;
  std::vector<double> mass;
  std::vector<double> reference_volume;
  double time = 0.0;
  long step = 0;

  std::size_t size() const { return position.size(); }
  /// Throws InvalidInput on inconsistent sizes or non-positive density.
  void validate() const;
};

/// How the mirror-cell friction enters v*. The mirror coupling scales with
/// 1/dist(x_i, wall), so a seed sliding along a wall makes the explicit form
/// stiff without bound; the point-implicit form evaluates the mirror term at
/// v*_i instead of v_i and agrees with the explicit one to O(dt^2).
enum class WallFriction { Explicit, PointImplicit };

struct IntegratorParams {
  DomainBox domain;
  double dr = 0.0;
  double viscosity = 0.0;
  double cfl = 0.1;
  double dt_safety = 0.25;
  double dt_max = std::numeric_limits<double>::infinity();
  double v_ref = 1.0;
  bool stabilize = true;
  WallFriction wall_friction = WallFriction::PointImplicit;
  SolveOptions solver;
  MultiphaseOptions multiphase;
};

struct StepDiagnostics {
  long step = 0;
  double time = 0.0;
  double dt = 0.0;
  double energy = 0.0;
  /// Discrete divergence |w_i|^-1 d|w_i|/dt of the projected / intermediate field.
  double div_l2 = 0.0;
  double div_max = 0.0;
  double div_star_l2 = 0.0;
  int minres_iterations = 0;
  int outer_iterations = 0;
  /// Last max-norm pressure increment of the multiphase fixed point (0 when uniform).
  double outer_increment = 0.0;
  double mesh_seconds = 0.0;
  double volume_drift_min = 0.0;
  double volume_drift_max = 0.0;
  double min_spacing = 0.0;
  int escaped = 0;
};

/// dt = min(cfl dr / max(|v|_inf, v_ref), dt_safety dr^2 / nu, dt_max).
/// With a mesh, the viscous bound is also tightened to viscous_dt_limit.
double compute_dt(const ParticleState& state, const IntegratorParams& params,
                  const VoronoiMesh* mesh = nullptr);

/// Forward-Euler diffusion bound on the actual mesh:
/// 4 dt_safety / max_i (nu / |w_i| sum_j |G_ij| / r_ij). Wall facets count
/// only under explicit wall friction. Equals dt_safety dr^2 / nu on a uniform
/// Cartesian mesh away from walls.
double viscous_dt_limit(const VoronoiMesh& mesh, const IntegratorParams& params);

/// Kinetic energy 1/2 sum_i |w_i| rho_i |v_i|^2 on the given mesh.
double kinetic_energy(const VoronoiMesh& mesh, std::span<const Vec2> v,
                      std::span<const double> rho);

/// Smallest inter-seed distance over all facet pairs.
double min_seed_spacing(const VoronoiMesh& mesh);

/// v* = v + dt (nu <lap v> + g) on a freshly generated mesh, with mirror cells
/// across every wall facet.
std::vector<Vec2> viscous_and_body_forces(const VoronoiMesh& mesh, std::span<const Vec2> v,
                                          const BoundarySpec& boundary, double viscosity,
                                          double dt,
                                          WallFriction friction = WallFriction::Explicit);

/// Moves a seed that left the domain back inside by reflecting it across the
/// violated wall. Returns true if the position was changed.
bool reflect_into_domain(const DomainBox& domain, double dr, Vec2& x);

struct StepOutcome {
  ParticleState state;
  VoronoiMesh mesh;
  StepDiagnostics diagnostics;
};

/// One time step: advect seeds, regenerate the mesh (warm-started from
/// `previous`), explicit viscous and body forces, pressure projection, velocity
/// update with the (stabilized) strong gradient.
StepOutcome silva_step(const ParticleState& state, const VoronoiMesh* previous,
                       const BoundarySpec& boundary, const IntegratorParams& params, double dt);

/// Stateful wrapper that keeps the previous mesh for warm starts.
class Simulation {
 public:
  Simulation(ParticleState initial, BoundarySpec boundary, IntegratorParams params);

  /// Continues from an externally computed step.
  static Simulation resume(StepOutcome outcome, BoundarySpec boundary, IntegratorParams params,
                           double initial_energy);

  const ParticleState& state() const { return state_; }
  const VoronoiMesh& mesh() const { return mesh_; }
  const BoundarySpec& boundary() const { return boundary_; }
  const IntegratorParams& params() const { return params_; }
  double initial_energy() const { return initial_energy_; }

  /// Advances by min(compute_dt, max_dt).
  StepDiagnostics step(double max_dt = std::numeric_limits<double>::infinity());

  /// Diagnostics of the current state without stepping.
  StepDiagnostics snapshot_diagnostics() const;

 private:
  Simulation() = default;

  ParticleState state_;
  BoundarySpec boundary_;
  IntegratorParams params_;
  VoronoiMesh mesh_;
  double initial_energy_ = 0.0;
};

}  // namespace silva
