#include "silva/benchmarks.hpp"

#include <numbers>
#include <random>
#include <string>

#include "silva/error.hpp"
#include "silva/operators.hpp"
#include "silva/parallel.hpp"

namespace silva {

namespace {

constexpr double kPi = std::numbers::pi;

struct CaseName {
  CaseId id;
  std::string_view name;
};
constexpr std::array<CaseName, 4> kCaseNames = {{{CaseId::TaylorGreen, "taylor_green"},
                                                 {CaseId::Gresho, "gresho"},
                                                 {CaseId::LidCavity, "lid_cavity"},
                                                 {CaseId::RayleighTaylor, "rayleigh_taylor"}}};

Vec2 domain_center(const DomainBox& d) { return {0.5 * (d.xmin + d.xmax), 0.5 * (d.ymin + d.ymax)}; }

DomainBox unit_box_centered() { return {-0.5, 0.5, -0.5, 0.5}; }

Vec2 gresho_velocity(const Vec2& rel) {
  const double r = norm(rel);
  double vphi = 0.0;
  if (r < 0.2)
    vphi = 5.0 * r;
  else if (r < 0.4)
    vphi = 2.0 - 5.0 * r;
  if (r == 0.0) return {};
  return (vphi / r) * Vec2{-rel.y, rel.x};
}

double gresho_pressure(double r) {
  if (r < 0.2) return 5.0 + 12.5 * r * r;
  if (r < 0.4) return 9.0 - 4.0 * std::log(0.2) + 12.5 * r * r - 20.0 * r + 4.0 * std::log(r);
  return 3.0 + 4.0 * std::log(2.0);
}

std::vector<Vec2> cartesian_seeds(const CaseSpec& spec) {
  const auto& d = spec.domain;
  const double dr = spec.dr();
  const int nx = static_cast<int>(std::lround(d.width() / dr));
  const int ny = static_cast<int>(std::lround(d.height() / dr));
  const double hx = d.width() / nx;
  const double hy = d.height() / ny;
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      Vec2 p{d.xmin + (i + 0.5) * hx, d.ymin + (j + 0.5) * hy};
      if (spec.jitter > 0.0) {
        p.x += spec.jitter * hx * jitter(rng);
        p.y += spec.jitter * hy * jitter(rng);
      }
      out.push_back(p);
    }
  return out;
}

// Golden-angle spiral over the circumscribed disk, keeping the points inside
// the domain. Density matches the Cartesian lattice of the same dr.
std::vector<Vec2> vogel_seeds(const CaseSpec& spec) {
  const auto& d = spec.domain;
  const double dr = spec.dr();
  const Vec2 c = domain_center(d);
  const double R = 0.5 * std::hypot(d.width(), d.height());
  const double target = d.area() / (dr * dr);
  const auto total = static_cast<long>(std::ceil(target * kPi * R * R / d.area()));
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  const double margin = 1e-3 * dr;
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(target) + 16);
  for (long k = 0; k < total; ++k) {
    const double r = R * std::sqrt((k + 0.5) / static_cast<double>(total));
    const double th = golden * static_cast<double>(k);
    const Vec2 p = c + r * Vec2{std::cos(th), std::sin(th)};
    if (p.x > d.xmin + margin && p.x < d.xmax - margin && p.y > d.ymin + margin &&
        p.y < d.ymax - margin)
      out.push_back(p);
  }
  return out;
}

double volume_weighted_mean(const VoronoiMesh& mesh, std::span<const double> f) {
  std::vector<double> wf(mesh.size()), w(mesh.size());
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    w[i] = mesh.cells[i].volume;
    wf[i] = w[i] * f[i];
  }
  return deterministic_sum(wf) / deterministic_sum(w);
}

}  // namespace

CaseId parse_case_id(std::string_view name) {
  for (const auto& c : kCaseNames)
    if (c.name == name) return c.id;
  throw InvalidInput("unknown case '" + std::string(name) +
                     "' (expected taylor_green, gresho, lid_cavity or rayleigh_taylor)");
}

std::string_view to_string(CaseId id) {
  for (const auto& c : kCaseNames)
    if (c.id == id) return c.name;
  return "unknown";
}

Seeding parse_seeding(std::string_view name) {
  if (name == "cartesian") return Seeding::Cartesian;
  if (name == "vogel") return Seeding::Vogel;
  throw InvalidInput("unknown seeding '" + std::string(name) + "' (expected cartesian or vogel)");
}

std::string_view to_string(Seeding s) { return s == Seeding::Vogel ? "vogel" : "cartesian"; }

void CaseSpec::validate() const {
  domain.validate();
  if (N < 4) throw InvalidInput("N must be at least 4, got " + std::to_string(N));
  if (!(Re > 0.0)) throw InvalidInput("Re must be positive or infinite");
  if (!(Fr > 0.0)) throw InvalidInput("Fr must be positive");
  if (!(t_end >= 0.0)) throw InvalidInput("t_end must be non-negative");
  if (!(jitter >= 0.0 && jitter < 1.0)) throw InvalidInput("jitter must lie in [0, 1)");
  if (!(heavy_density > 0.0 && light_density > 0.0))
    throw InvalidInput("phase densities must be positive");
}

CaseSpec CaseSpec::taylor_green(int N, double Re) {
  CaseSpec s;
  s.id = CaseId::TaylorGreen;
  s.domain = unit_box_centered();
  s.N = N;
  s.Re = Re;
  s.t_end = 0.2;
  return s;
}

CaseSpec CaseSpec::gresho(int N) {
  CaseSpec s;
  s.id = CaseId::Gresho;
  s.domain = unit_box_centered();
  s.N = N;
  s.Re = kInfinity;
  s.t_end = 3.0;
  return s;
}

CaseSpec CaseSpec::lid_cavity(int N, double Re) {
  CaseSpec s;
  s.id = CaseId::LidCavity;
  s.domain = unit_box_centered();
  s.N = N;
  s.Re = Re;
  s.t_end = Re / 10.0;
  for (auto w : kWalls) s.boundary.at(w).kind = WallKind::NoSlip;
  s.boundary.at(Wall::Top) = {WallKind::Dirichlet, {1.0, 0.0}};
  return s;
}

CaseSpec CaseSpec::rayleigh_taylor(int N, double Re) {
  CaseSpec s;
  s.id = CaseId::RayleighTaylor;
  s.domain = {0.0, 1.0, 0.0, 2.0};
  s.N = N;
  s.Re = Re;
  s.Fr = 1.0;
  s.t_end = 5.0;
  for (auto w : kWalls) s.boundary.at(w).kind = WallKind::NoSlip;
  s.boundary.gravity = {0.0, -1.0 / (s.Fr * s.Fr)};
  return s;
}

CaseSpec default_case(CaseId id, int N) {
  switch (id) {
    case CaseId::TaylorGreen: return CaseSpec::taylor_green(N);
    case CaseId::Gresho: return CaseSpec::gresho(N);
    case CaseId::LidCavity: return CaseSpec::lid_cavity(N);
    case CaseId::RayleighTaylor: return CaseSpec::rayleigh_taylor(N);
  }
  throw InvalidInput("unknown case id");
}

std::vector<Vec2> seed_positions(const CaseSpec& spec) {
  spec.validate();
  return spec.seeding == Seeding::Vogel ? vogel_seeds(spec) : cartesian_seeds(spec);
}

double rt_interface(double x) { return 1.0 - 0.15 * std::cos(2.0 * kPi * x); }

ParticleState init_case(const CaseSpec& spec) {
  ParticleState s;
  s.position = seed_positions(spec);
  const auto n = s.position.size();
  s.velocity.assign(n, {});
  s.pressure.assign(n, 0.0);
  s.density.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 x = s.position[i];
    if (has_exact_solution(spec.id)) {
      const auto e = exact_solution(spec, 0.0, x);
      s.velocity[i] = e.velocity;
      s.pressure[i] = e.pressure;
    } else if (spec.id == CaseId::RayleighTaylor) {
      s.density[i] = x.y > rt_interface(x.x) ? spec.heavy_density : spec.light_density;
    }
  }
  const auto mesh = build_mesh(s.position, spec.domain, spec.dr());
  s.reference_volume.resize(n);
  s.mass.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.reference_volume[i] = mesh.cells[i].volume;
    s.mass[i] = s.density[i] * mesh.cells[i].volume;
  }
  return s;
}

IntegratorParams integrator_params(const CaseSpec& spec) {
  IntegratorParams p;
  p.domain = spec.domain;
  p.dr = spec.dr();
  p.viscosity = spec.viscosity();
  p.v_ref = 1.0;
  return p;
}

bool has_exact_solution(CaseId id) { return id == CaseId::TaylorGreen || id == CaseId::Gresho; }

ExactValue exact_solution(const CaseSpec& spec, double t, const Vec2& x) {
  switch (spec.id) {
    case CaseId::TaylorGreen: {
      const double decay = std::exp(-2.0 * kPi * kPi * t * spec.viscosity());
      const double sx = std::sin(kPi * x.x), cx = std::cos(kPi * x.x);
      const double sy = std::sin(kPi * x.y), cy = std::cos(kPi * x.y);
      return {decay * Vec2{cx * sy, -sx * cy}, 0.5 * (sx * sx + sy * sy - 1.0) * decay * decay};
    }
    case CaseId::Gresho: {
      const Vec2 rel = x - domain_center(spec.domain);
      return {gresho_velocity(rel), gresho_pressure(norm(rel))};
    }
    default:
      throw InvalidInput("no analytic reference for case '" + std::string(to_string(spec.id)) +
                         "'");
  }
}

double exact_energy_ratio(const CaseSpec& spec, double t) {
  switch (spec.id) {
    case CaseId::TaylorGreen: return std::exp(-4.0 * kPi * kPi * t * spec.viscosity());
    case CaseId::Gresho: return 1.0;
    default:
      throw InvalidInput("no analytic reference for case '" + std::string(to_string(spec.id)) +
                         "'");
  }
}

double divergence_l2(const VoronoiMesh& mesh, std::span<const Vec2> v) {
  const auto rate = volume_rate_field(mesh, v);
  std::vector<double> sq(mesh.size());
  for (std::size_t i = 0; i < mesh.size(); ++i) sq[i] = rate[i] * rate[i] / mesh.cells[i].volume;
  return std::sqrt(deterministic_sum(sq));
}

ErrorEntry error_norms(const ParticleState& state, const VoronoiMesh& mesh, const CaseSpec& spec,
                       double initial_energy) {
  const auto n = state.size();
  if (mesh.size() != n) throw InvalidInput("mesh and state sizes differ");
  ErrorEntry e;
  e.N = spec.N;
  e.time = state.time;
  std::vector<double> p_exact(n);
  std::vector<double> dv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ex = exact_solution(spec, state.time, state.position[i]);
    p_exact[i] = ex.pressure;
    dv[i] = mesh.cells[i].volume * norm2(state.velocity[i] - ex.velocity);
  }
  e.velocity_l2 = std::sqrt(deterministic_sum(dv));
  const double pm = volume_weighted_mean(mesh, state.pressure);
  const double em = volume_weighted_mean(mesh, p_exact);
  std::vector<double> dp(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (state.pressure[i] - pm) - (p_exact[i] - em);
    dp[i] = mesh.cells[i].volume * d * d;
  }
  e.pressure_l2 = std::sqrt(deterministic_sum(dp));
  const double E = kinetic_energy(mesh, state.velocity, state.density);
  const double E_exact = initial_energy * exact_energy_ratio(spec, state.time);
  e.energy_error = std::abs(E - E_exact) / E_exact;
  e.divergence_l2 = divergence_l2(mesh, state.velocity);
  return e;
}

double fitted_order(std::span<const int> N, std::span<const double> err) {
  if (N.size() != err.size() || N.size() < 2)
    throw InvalidInput("fitted_order needs at least two (N, error) pairs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(N.size());
  for (std::size_t k = 0; k < N.size(); ++k) {
    if (!(err[k] > 0.0) || N[k] <= 0) throw InvalidInput("fitted_order needs positive values");
    const double x = std::log(static_cast<double>(N[k]));
    const double y = -std::log(err[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = m * sxx - sx * sx;
  if (den == 0.0) throw InvalidInput("fitted_order needs distinct resolutions");
  return (m * sxy - sx * sy) / den;
}

RunResult run_case(const CaseSpec& spec, const IntegratorParams& params, RunObserver* observer) {
  Simulation sim(init_case(spec), spec.boundary, params);
  RunResult out;
  out.initial_energy = sim.initial_energy();
  auto diag = sim.snapshot_diagnostics();
  out.history.push_back(diag);
  if (observer) observer->on_start(sim, diag);
  // Steps shorter than this fraction of the regular step are absorbed.
  constexpr double kLandingSlack = 1e-9;
  while (true) {
    const double remaining = spec.t_end - sim.state().time;
    if (remaining <= kLandingSlack * compute_dt(sim.state(), params, &sim.mesh())) break;
    diag = sim.step(remaining);
    out.history.push_back(diag);
    if (observer) observer->on_step(sim, diag);
  }
  out.steps = sim.state().step;
  out.last = diag;
  if (observer) observer->on_finish(sim, diag);
  out.state = sim.state();
  out.mesh = sim.mesh();
  return out;
}

ErrorReport convergence_study(const CaseSpec& base, std::span<const int> resolutions,
                              const IntegratorParams* overrides) {
  if (resolutions.size() < 2) throw InvalidInput("convergence study needs >= 2 resolutions");
  if (!has_exact_solution(base.id))
    throw InvalidInput("no analytic reference for case '" + std::string(to_string(base.id)) + "'");
  ErrorReport rep;
  std::vector<double> ev, ep, ed, ee;
  for (int N : resolutions) {
    CaseSpec spec = base;
    spec.N = N;
    IntegratorParams params = integrator_params(spec);
    if (overrides) {
      params.cfl = overrides->cfl;
      params.dt_safety = overrides->dt_safety;
      params.dt_max = overrides->dt_max;
      params.stabilize = overrides->stabilize;
      params.solver = overrides->solver;
      params.multiphase = overrides->multiphase;
    }
    const auto run = run_case(spec, params);
    const auto e = error_norms(run.state, run.mesh, spec, run.initial_energy);
    rep.entries.push_back(e);
    ev.push_back(e.velocity_l2);
    ep.push_back(e.pressure_l2);
    ed.push_back(e.divergence_l2);
    ee.push_back(e.energy_error);
  }
  auto order = [&](const std::vector<double>& err) {
    for (double x : err)
      if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return fitted_order(resolutions, err);
  };
  rep.velocity_order = order(ev);
  rep.pressure_order = order(ep);
  rep.divergence_order = order(ed);
  rep.energy_order = order(ee);
  return rep;
}

const GhiaProfile& ghia_re100() {
  // Table I and II of Ghia, Ghia & Shin, J. Comput. Phys. 48 (1982), Re = 100.
  static const GhiaProfile profile{
      {1.0000, 0.9766, 0.9688, 0.9609, 0.9531, 0.8516, 0.7344, 0.6172, 0.5000, 0.4531, 0.2813,
       0.1719, 0.1016, 0.0703, 0.0625, 0.0547, 0.0000},
      {1.00000, 0.84123, 0.78871, 0.73722, 0.68717, 0.23151, 0.00332, -0.13641, -0.20581,
       -0.21090, -0.15662, -0.10150, -0.06434, -0.04775, -0.04192, -0.03717, 0.00000},
      {1.0000, 0.9688, 0.9609, 0.9531, 0.9453, 0.9063, 0.8594, 0.8047, 0.5000, 0.2344, 0.2266,
       0.1563, 0.0938, 0.0781, 0.0703, 0.0625, 0.0000},
      {0.00000, -0.05906, -0.07391, -0.08864, -0.10313, -0.16914, -0.22445, -0.24533, 0.05454,
       0.17527, 0.17507, 0.16077, 0.12317, 0.10890, 0.10091, 0.09233, 0.00000}};
  return profile;
}

double sample_field(const VoronoiMesh& mesh, std::span<const double> f, const Vec2& x) {
  if (mesh.size() == 0) throw InvalidInput("cannot sample an empty mesh");
  std::size_t best = 0;
  double best_d = norm2(mesh.seeds[0] - x);
  for (std::size_t i = 1; i < mesh.size(); ++i) {
    const double d = norm2(mesh.seeds[i] - x);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  const auto i = static_cast<int>(best);
  return f[best] + dot(strong_gradient(mesh, f, i), x - mesh.seeds[best]);
}

std::vector<CenterlinePoint> cavity_centerlines(const ParticleState& state, const VoronoiMesh& mesh,
                                                const CaseSpec& spec) {
  const auto& d = spec.domain;
  const auto& g = ghia_re100();
  const auto n = state.size();
  std::vector<double> u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = state.velocity[i].x;
    v[i] = state.velocity[i].y;
  }
  const Vec2 c = domain_center(d);
  auto on_wall = [](double s) { return s <= 0.0 || s >= 1.0; };
  std::vector<CenterlinePoint> out;
  for (std::size_t k = 0; k < g.y.size(); ++k) {
    const double s = g.y[k];
    double value;
    if (on_wall(s)) {
      const auto& wc = spec.boundary.at(s >= 1.0 ? Wall::Top : Wall::Bottom);
      value = wc.kind == WallKind::Dirichlet ? wc.velocity.x : 0.0;
    } else {
      value = sample_field(mesh, u, {c.x, d.ymin + s * d.height()});
    }
    out.push_back({'u', s, value, g.u[k]});
  }
  for (std::size_t k = 0; k < g.x.size(); ++k) {
    const double s = g.x[k];
    double value;
    if (on_wall(s)) {
      const auto& wc = spec.boundary.at(s >= 1.0 ? Wall::Right : Wall::Left);
      value = wc.kind == WallKind::Dirichlet ? wc.velocity.y : 0.0;
    } else {
      value = sample_field(mesh, v, {d.xmin + s * d.width(), c.y});
    }
    out.push_back({'v', s, value, g.v[k]});
  }
  return out;
}

namespace {
bool is_heavy(double rho, const CaseSpec& spec) {
  return rho > 0.5 * (spec.heavy_density + spec.light_density);
}
}  // namespace

Vec2 heavy_phase_center(const ParticleState& state, const CaseSpec& spec) {
  std::vector<double> mx, my, m;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!is_heavy(state.density[i], spec)) continue;
    m.push_back(state.mass[i]);
    mx.push_back(state.mass[i] * state.position[i].x);
    my.push_back(state.mass[i] * state.position[i].y);
  }
  const double total = deterministic_sum(m);
  if (!(total > 0.0)) throw InvalidInput("state has no heavy-phase particles");
  return {deterministic_sum(mx) / total, deterministic_sum(my) / total};
}

std::size_t heavy_phase_count(const ParticleState& state, const CaseSpec& spec) {
  return static_cast<std::size_t>(std::count_if(state.density.begin(), state.density.end(),
                                                [&](double r) { return is_heavy(r, spec); }));
}

double peak_azimuthal_velocity(const ParticleState& state, const CaseSpec& spec) {
  const Vec2 c = domain_center(spec.domain);
  const double width = spec.dr();
  const double rmax = 0.5 * std::min(spec.domain.width(), spec.domain.height());
  const auto bins = static_cast<std::size_t>(std::ceil(rmax / width));
  std::vector<double> sum(bins, 0.0);
  std::vector<int> count(bins, 0);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const Vec2 rel = state.position[i] - c;
    const double r = norm(rel);
    if (r == 0.0 || r >= rmax) continue;
    const auto b = std::min(bins - 1, static_cast<std::size_t>(r / width));
    sum[b] += cross(rel, state.velocity[i]) / r;
    ++count[b];
  }
  double peak = 0.0;
  for (std::size_t b = 0; b < bins; ++b)
    if (count[b] > 0) peak = std::max(peak, sum[b] / count[b]);
  return peak;
}

}  // namespace silva
