#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "silva/time_integrator.hpp"

namespace silva {

enum class CaseId { TaylorGreen, Gresho, LidCavity, RayleighTaylor };
enum class Seeding { Cartesian, Vogel };

/// Throws InvalidInput on an unknown name.
CaseId parse_case_id(std::string_view name);
std::string_view to_string(CaseId id);
Seeding parse_seeding(std::string_view name);
std::string_view to_string(Seeding s);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct CaseSpec {
  CaseId id = CaseId::TaylorGreen;
  DomainBox domain;
  /// Seeds along the shorter side of the domain.
  int N = 32;
  /// Reynolds number; infinity means inviscid.
  double Re = kInfinity;
  /// Froude number, used by the Rayleigh-Taylor case only.
  double Fr = 1.0;
  double t_end = 0.2;
  Seeding seeding = Seeding::Cartesian;
  BoundarySpec boundary;
  /// Random displacement of Cartesian seeds, as a fraction of dr.
  double jitter = 0.0;
  std::uint64_t rng_seed = 1;
  double heavy_density = 1.8;
  double light_density = 1.0;

  double dr() const { return std::min(domain.width(), domain.height()) / N; }
  double viscosity() const { return std::isinf(Re) ? 0.0 : 1.0 / Re; }
  /// Throws InvalidInput when N < 4, Re <= 0 or the domain is degenerate.
  void validate() const;

  static CaseSpec taylor_green(int N = 32, double Re = 400.0);
  static CaseSpec gresho(int N = 50);
  static CaseSpec lid_cavity(int N = 50, double Re = 100.0);
  static CaseSpec rayleigh_taylor(int N = 60, double Re = 420.0);
};

/// Default setup of a case at resolution N.
CaseSpec default_case(CaseId id, int N);

std::vector<Vec2> seed_positions(const CaseSpec& spec);

/// Seeds and fields at t = 0. Reference volumes and masses come from the
/// initial tessellation.
ParticleState init_case(const CaseSpec& spec);

/// Integrator parameters matching the case (domain, dr, viscosity, v_ref).
IntegratorParams integrator_params(const CaseSpec& spec);

/// Interface height of the Rayleigh-Taylor setup, 1 - 0.15 cos(2 pi x).
double rt_interface(double x);

bool has_exact_solution(CaseId id);

struct ExactValue {
  Vec2 velocity;
  double pressure = 0.0;
};

/// Closed-form reference; throws InvalidInput("no analytic reference ...")
/// for cases that have none.
ExactValue exact_solution(const CaseSpec& spec, double t, const Vec2& x);

/// Exact kinetic energy relative to its initial value.
double exact_energy_ratio(const CaseSpec& spec, double t);

struct ErrorEntry {
  int N = 0;
  double time = 0.0;
  double velocity_l2 = 0.0;
  double pressure_l2 = 0.0;
  /// |E - E_exact| / E_exact, with E_exact = E(0) * exact_energy_ratio(t).
  double energy_error = 0.0;
  double divergence_l2 = 0.0;
};

/// L2 norms sqrt(sum |w_i| |f_i - f_exact(x_i)|^2). Pressures are compared
/// after removing the volume-weighted mean of both fields.
ErrorEntry error_norms(const ParticleState& state, const VoronoiMesh& mesh, const CaseSpec& spec,
                       double initial_energy);

/// Volume-weighted L2 norm of the cell volume rate per unit volume.
double divergence_l2(const VoronoiMesh& mesh, std::span<const Vec2> v);

/// Least-squares slope of -log(err) against log(N).
double fitted_order(std::span<const int> N, std::span<const double> err);

struct ErrorReport {
  std::vector<ErrorEntry> entries;
  double velocity_order = 0.0;
  double pressure_order = 0.0;
  double divergence_order = 0.0;
  double energy_order = 0.0;
};

/// Observer hooks for run_case. All callbacks see the simulation after the
/// state they describe has been reached.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_start(const Simulation&, const StepDiagnostics&) {}
  virtual void on_step(const Simulation&, const StepDiagnostics&) {}
  virtual void on_finish(const Simulation&, const StepDiagnostics&) {}
};

struct RunResult {
  ParticleState state;
  VoronoiMesh mesh;
  double initial_energy = 0.0;
  long steps = 0;
  StepDiagnostics last;
  std::vector<StepDiagnostics> history;
};

/// Runs the case from init_case to spec.t_end. The last step is shortened to
/// land exactly on t_end.
RunResult run_case(const CaseSpec& spec, const IntegratorParams& params,
                   RunObserver* observer = nullptr);

/// Runs each resolution and fits convergence orders. Needs >= 2 resolutions
/// and a case with an analytic reference.
ErrorReport convergence_study(const CaseSpec& base, std::span<const int> resolutions,
                              const IntegratorParams* overrides = nullptr);

struct CenterlinePoint {
  /// 'u' for u(y) along x = center, 'v' for v(x) along y = center.
  char component = 'u';
  /// Coordinate in unit-square units, as tabulated.
  double coordinate = 0.0;
  double value = 0.0;
  double reference = 0.0;
};

/// Ghia, Ghia & Shin (1982) centerline profiles of the Re = 100 cavity,
/// coordinates in [0, 1].
struct GhiaProfile {
  std::array<double, 17> y;
  std::array<double, 17> u;
  std::array<double, 17> x;
  std::array<double, 17> v;
};
const GhiaProfile& ghia_re100();

/// Samples a field at x from the nearest seed with a strong-gradient linear
/// correction.
double sample_field(const VoronoiMesh& mesh, std::span<const double> f, const Vec2& x);

/// Cavity centerline velocities at the tabulated ordinates. Points on a wall
/// take the wall velocity.
std::vector<CenterlinePoint> cavity_centerlines(const ParticleState& state, const VoronoiMesh& mesh,
                                                const CaseSpec& spec);

/// Mass-weighted center of mass of particles with density above the mean of
/// the two phase densities.
Vec2 heavy_phase_center(const ParticleState& state, const CaseSpec& spec);
std::size_t heavy_phase_count(const ParticleState& state, const CaseSpec& spec);

/// Peak of the azimuthal velocity about the domain center, averaged over
/// radial bins of width dr.
double peak_azimuthal_velocity(const ParticleState& state, const CaseSpec& spec);

}  // namespace silva
