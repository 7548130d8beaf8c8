#include "silva/cli_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "silva/error.hpp"
#include "silva/operators.hpp"
#include "silva/pressure_solver.hpp"

namespace silva {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

struct Entry {
  std::string value;
  std::string origin;  // "line N" or "override"
};

[[noreturn]] void bad_value(const std::string& key, const Entry& e, std::string_view expected) {
  throw InvalidInput(e.origin + ": value '" + e.value + "' for '" + key + "' is not " +
                     std::string(expected));
}

double to_double(const std::string& key, const Entry& e) {
  const std::string v = lower(trim(e.value));
  if (v == "inf" || v == "infinity") return kInfinity;
  double out = 0.0;
  const auto* first = v.data();
  const auto* last = v.data() + v.size();
  const auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc() || res.ptr != last || v.empty()) bad_value(key, e, "a number");
  return out;
}

long to_long(const std::string& key, const Entry& e) {
  const std::string v(trim(e.value));
  long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || v.empty())
    bad_value(key, e, "an integer");
  return out;
}

bool to_bool(const std::string& key, const Entry& e) {
  const std::string v = lower(trim(e.value));
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  bad_value(key, e, "a boolean");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidInput(message);
}

}  // namespace

IntegratorParams SimConfig::integrator() const {
  IntegratorParams p = integrator_params(spec);
  p.cfl = cfl;
  p.dt_safety = dt_safety;
  p.dt_max = dt_max;
  p.v_ref = v_ref;
  p.stabilize = stabilize;
  p.solver.rel_tol = solver_tol;
  p.solver.max_iter = solver_max_iter;
  p.multiphase.outer_tol = outer_tol;
  p.multiphase.max_outer = max_outer;
  p.multiphase.inner.max_iter = solver_max_iter;
  return p;
}

SimConfig parse_config(std::string_view text, bool lenient, const ConfigOverrides& overrides) {
  std::map<std::string, Entry> entries;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no);
    if (eq == std::string_view::npos)
      throw InvalidInput(where + ": expected 'key = value', got '" + std::string(line) + "'");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw InvalidInput(where + ": missing key");
    if (entries.count(key)) throw InvalidInput(where + ": duplicate key '" + key + "'");
    entries[key] = {value, where};
  }
  for (const auto& [k, v] : overrides) {
    const std::string key = lower(k);
    // A resolution given on the command line replaces the file's choice.
    if (key == "n") entries.erase("dr");
    if (key == "dr") entries.erase("n");
    entries[key] = {v, "override " + key};
  }

  SimConfig cfg;
  auto take = [&](const std::string& key) -> const Entry* {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    return &it->second;
  };
  std::map<std::string, bool> known;
  auto get = [&](const std::string& key) {
    known[key] = true;
    return take(key);
  };

  const Entry* c = get("case");
  if (!c || trim(c->value).empty()) throw InvalidInput("missing required key 'case'");
  const CaseId id = parse_case_id(trim(c->value));

  int N = id == CaseId::TaylorGreen ? 32 : id == CaseId::RayleighTaylor ? 60 : 50;
  const Entry* eN = get("n");
  const Entry* edr = get("dr");
  if (eN && edr) throw InvalidInput("conflicting resolution: both 'N' and 'dr' are given");
  if (eN) N = static_cast<int>(to_long("N", *eN));
  cfg.spec = default_case(id, std::max(N, 4));
  cfg.spec.N = N;
  if (edr) {
    const double dr = to_double("dr", *edr);
    require(dr > 0.0, edr->origin + ": dr must be positive");
    const double side = std::min(cfg.spec.domain.width(), cfg.spec.domain.height());
    cfg.spec.N = static_cast<int>(std::lround(side / dr));
    cfg.dr = dr;
  }

  auto num = [&](const char* key, double& dst) {
    if (const Entry* e = get(key)) dst = to_double(key, *e);
  };
  auto integer = [&](const char* key, auto& dst) {
    if (const Entry* e = get(key)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(to_long(key, *e));
  };
  auto flag = [&](const char* key, bool& dst) {
    if (const Entry* e = get(key)) dst = to_bool(key, *e);
  };

  const bool re_given = take("re") != nullptr;
  num("re", cfg.spec.Re);
  num("fr", cfg.spec.Fr);
  if (cfg.spec.id == CaseId::RayleighTaylor)
    cfg.spec.boundary.gravity = {0.0, -1.0 / (cfg.spec.Fr * cfg.spec.Fr)};
  if (cfg.spec.id == CaseId::LidCavity && re_given) cfg.spec.t_end = cfg.spec.Re / 10.0;
  num("t_end", cfg.spec.t_end);
  if (const Entry* e = get("seeding")) cfg.spec.seeding = parse_seeding(lower(trim(e->value)));
  num("jitter", cfg.spec.jitter);
  integer("seed", cfg.spec.rng_seed);
  num("heavy_density", cfg.spec.heavy_density);
  num("light_density", cfg.spec.light_density);
  num("cfl", cfg.cfl);
  num("dt_safety", cfg.dt_safety);
  num("dt_max", cfg.dt_max);
  num("v_ref", cfg.v_ref);
  flag("stabilize", cfg.stabilize);
  num("solver_tol", cfg.solver_tol);
  integer("solver_max_iter", cfg.solver_max_iter);
  num("outer_tol", cfg.outer_tol);
  integer("max_outer", cfg.max_outer);
  if (const Entry* e = get("output_dir")) cfg.output_dir = e->value;
  integer("snapshot_every", cfg.snapshot_every);
  num("snapshot_interval", cfg.snapshot_interval);
  integer("threads", cfg.threads);
  flag("write_particles", cfg.write_particles);
  flag("write_mesh", cfg.write_mesh);
  flag("write_vtk", cfg.write_vtk);
  flag("write_diagnostics", cfg.write_diagnostics);

  for (const auto& [key, e] : entries) {
    if (known.count(key)) continue;
    const std::string msg = e.origin + ": unknown key '" + key + "'";
    if (!lenient) throw InvalidInput(msg);
    cfg.warnings.push_back(msg);
  }

  cfg.spec.validate();
  require(cfg.cfl > 0.0, "CFL must be positive");
  require(cfg.dt_safety > 0.0, "dt_safety must be positive");
  require(cfg.dt_max > 0.0, "dt_max must be positive");
  require(cfg.v_ref > 0.0, "v_ref must be positive");
  require(cfg.solver_tol > 0.0, "solver_tol must be positive");
  require(cfg.outer_tol > 0.0, "outer_tol must be positive");
  require(cfg.solver_max_iter >= 0, "solver_max_iter must be non-negative");
  require(cfg.max_outer > 0, "max_outer must be positive");
  require(cfg.snapshot_every >= 0, "snapshot_every must be non-negative");
  require(cfg.snapshot_interval >= 0.0, "snapshot_interval must be non-negative");
  require(cfg.threads >= 0, "threads must be non-negative");
  require(!cfg.output_dir.empty(), "output_dir must not be empty");
  return cfg;
}

SimConfig load_config(const std::filesystem::path& path, bool lenient,
                      const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), lenient, overrides);
}

std::string format_double(double x) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
  return {buf, static_cast<std::size_t>(n)};
}

std::vector<SnapshotRow> snapshot_rows(const ParticleState& state, const VoronoiMesh* mesh) {
  std::vector<SnapshotRow> rows(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    auto& r = rows[i];
    r.id = static_cast<long>(i);
    r.x = state.position[i].x;
    r.y = state.position[i].y;
    r.u = state.velocity[i].x;
    r.v = state.velocity[i].y;
    r.p = state.pressure[i];
    r.rho = state.density[i];
    r.vol = mesh ? mesh->cells[i].volume : state.reference_volume[i];
  }
  return rows;
}

void write_snapshot(std::ostream& out, std::span<const SnapshotRow> rows) {
  out << kSnapshotHeader << '\n';
  for (const auto& r : rows) {
    out << r.id;
    for (double v : {r.x, r.y, r.u, r.v, r.p, r.rho, r.vol}) out << ',' << format_double(v);
    out << '\n';
  }
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

double parse_field(std::string_view s, int line_no) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidInput("line " + std::to_string(line_no) + ": malformed number '" +
                       std::string(s) + "'");
  return v;
}

long parse_int_field(std::string_view s, int line_no) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidInput("line " + std::to_string(line_no) + ": malformed integer '" +
                       std::string(s) + "'");
  return v;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const ParticleState& state,
                    const VoronoiMesh* mesh) {
  auto out = open_out(path);
  write_snapshot(out, snapshot_rows(state, mesh));
  finish(out, path);
}

std::vector<SnapshotRow> read_snapshot(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSnapshotHeader)
    throw InvalidInput("snapshot header must be '" + std::string(kSnapshotHeader) + "'");
  std::vector<SnapshotRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 8)
      throw InvalidInput("line " + std::to_string(line_no) + ": expected 8 fields");
    SnapshotRow r;
    r.id = parse_int_field(f[0], line_no);
    double* dst[] = {&r.x, &r.y, &r.u, &r.v, &r.p, &r.rho, &r.vol};
    for (int k = 0; k < 7; ++k) *dst[k] = parse_field(f[static_cast<std::size_t>(k) + 1], line_no);
    rows.push_back(r);
  }
  return rows;
}

std::vector<SnapshotRow> read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_snapshot(in);
}

void write_diagnostics_header(std::ostream& out) { out << kDiagnosticsHeader << '\n'; }

void write_diagnostics_row(std::ostream& out, const StepDiagnostics& d) {
  out << d.step << ',' << format_double(d.time) << ',' << format_double(d.dt) << ','
      << format_double(d.energy) << ',' << format_double(d.div_l2) << ','
      << format_double(d.div_max) << ',' << d.minres_iterations << ',' << d.outer_iterations
      << '\n';
}

void write_diagnostics(const std::filesystem::path& path, std::span<const StepDiagnostics> rows) {
  auto out = open_out(path);
  write_diagnostics_header(out);
  for (const auto& d : rows) write_diagnostics_row(out, d);
  finish(out, path);
}

std::vector<StepDiagnostics> read_diagnostics(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kDiagnosticsHeader)
    throw InvalidInput("diagnostics header must be '" + std::string(kDiagnosticsHeader) + "'");
  std::vector<StepDiagnostics> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 8)
      throw InvalidInput("line " + std::to_string(line_no) + ": expected 8 fields");
    StepDiagnostics d;
    d.step = parse_int_field(f[0], line_no);
    d.time = parse_field(f[1], line_no);
    d.dt = parse_field(f[2], line_no);
    d.energy = parse_field(f[3], line_no);
    d.div_l2 = parse_field(f[4], line_no);
    d.div_max = parse_field(f[5], line_no);
    d.minres_iterations = static_cast<int>(parse_int_field(f[6], line_no));
    d.outer_iterations = static_cast<int>(parse_int_field(f[7], line_no));
    rows.push_back(d);
  }
  return rows;
}

void write_mesh_polygons(std::ostream& out, const VoronoiMesh& mesh) {
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    out << i;
    for (const auto& v : mesh.cells[i].vertices)
      out << ' ' << format_double(v.x) << ' ' << format_double(v.y);
    out << '\n';
  }
}

void write_vtk(std::ostream& out, const VoronoiMesh& mesh, const ParticleState& state) {
  std::size_t points = 0;
  for (const auto& c : mesh.cells) points += c.vertices.size();
  out << "# vtk DataFile Version 3.0\nsilva voronoi mesh t=" << format_double(state.time)
      << "\nASCII\nDATASET POLYDATA\nPOINTS " << points << " double\n";
  for (const auto& c : mesh.cells)
    for (const auto& v : c.vertices) out << format_double(v.x) << ' ' << format_double(v.y) << " 0\n";
  out << "POLYGONS " << mesh.size() << ' ' << points + mesh.size() << '\n';
  std::size_t next = 0;
  for (const auto& c : mesh.cells) {
    out << c.vertices.size();
    for (std::size_t k = 0; k < c.vertices.size(); ++k) out << ' ' << next++;
    out << '\n';
  }
  out << "CELL_DATA " << mesh.size() << "\nSCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (double p : state.pressure) out << format_double(p) << '\n';
  out << "SCALARS density double 1\nLOOKUP_TABLE default\n";
  for (double r : state.density) out << format_double(r) << '\n';
  out << "VECTORS velocity double\n";
  for (const auto& v : state.velocity)
    out << format_double(v.x) << ' ' << format_double(v.y) << " 0\n";
}

void write_errors_csv(const std::filesystem::path& path, std::span<const ErrorEntry> rows) {
  auto out = open_out(path);
  out << "N,t,velocity_l2,pressure_l2,energy_error,divergence_l2\n";
  for (const auto& e : rows)
    out << e.N << ',' << format_double(e.time) << ',' << format_double(e.velocity_l2) << ','
        << format_double(e.pressure_l2) << ',' << format_double(e.energy_error) << ','
        << format_double(e.divergence_l2) << '\n';
  finish(out, path);
}

void write_centerline_csv(const std::filesystem::path& path,
                          std::span<const CenterlinePoint> rows) {
  auto out = open_out(path);
  out << "component,coordinate,value,reference\n";
  for (const auto& c : rows)
    out << c.component << ',' << format_double(c.coordinate) << ',' << format_double(c.value)
        << ',' << format_double(c.reference) << '\n';
  finish(out, path);
}

OutputWriter::OutputWriter(const SimConfig& config) : config_(config), dir_(config.output_dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
}

OutputWriter::~OutputWriter() = default;

std::filesystem::path OutputWriter::file(const std::string& name) const { return dir_ / name; }

void OutputWriter::snapshot(const Simulation& sim) {
  char tag[16];
  std::snprintf(tag, sizeof tag, "%05d", snapshot_index_);
  if (config_.write_particles) write_snapshot(file(std::string("snapshot_") + tag + ".csv"), sim.state(), &sim.mesh());
  if (config_.write_mesh) {
    const auto path = file(std::string("mesh_") + tag + ".txt");
    auto out = open_out(path);
    write_mesh_polygons(out, sim.mesh());
    finish(out, path);
  }
  if (config_.write_vtk) {
    const auto path = file(std::string("mesh_") + tag + ".vtk");
    auto out = open_out(path);
    write_vtk(out, sim.mesh(), sim.state());
    finish(out, path);
  }
  if (has_exact_solution(config_.spec.id))
    errors_.push_back(error_norms(sim.state(), sim.mesh(), config_.spec, sim.initial_energy()));
  last_snapshot_step_ = sim.state().step;
  ++snapshot_index_;
}

void OutputWriter::on_start(const Simulation& sim, const StepDiagnostics& d) {
  if (config_.write_diagnostics) {
    const auto path = file("diagnostics.csv");
    diagnostics_ = std::make_unique<std::ofstream>(open_out(path));
    write_diagnostics_header(*diagnostics_);
    write_diagnostics_row(*diagnostics_, d);
  }
  const auto epath = file(std::string(to_string(config_.spec.id)) + "_energy.csv");
  energy_ = std::make_unique<std::ofstream>(open_out(epath));
  *energy_ << "t,E,E_over_E0\n"
           << format_double(d.time) << ',' << format_double(d.energy) << ",1\n";
  snapshot(sim);
  next_snapshot_time_ = sim.state().time + config_.snapshot_interval;
}

void OutputWriter::on_step(const Simulation& sim, const StepDiagnostics& d) {
  if (diagnostics_) write_diagnostics_row(*diagnostics_, d);
  *energy_ << format_double(d.time) << ',' << format_double(d.energy) << ','
           << format_double(d.energy / sim.initial_energy()) << '\n';
  bool due = false;
  if (config_.snapshot_interval > 0.0) {
    // Slack so that landing exactly on a multiple of the interval counts.
    const double slack = 1e-9 * config_.snapshot_interval;
    if (d.time >= next_snapshot_time_ - slack) {
      due = true;
      while (next_snapshot_time_ <= d.time + slack) next_snapshot_time_ += config_.snapshot_interval;
    }
  } else if (config_.snapshot_every > 0) {
    due = d.step % config_.snapshot_every == 0;
  }
  if (due) snapshot(sim);
}

void OutputWriter::on_finish(const Simulation& sim, const StepDiagnostics&) {
  const bool already = snapshot_index_ > 0 && last_snapshot_step_ == sim.state().step;
  if (!already) snapshot(sim);
  if (diagnostics_) finish(*diagnostics_, file("diagnostics.csv"));
  finish(*energy_, file(std::string(to_string(config_.spec.id)) + "_energy.csv"));
  const std::string tag = std::string(to_string(config_.spec.id));
  if (!errors_.empty())
    write_errors_csv(file(tag + "_" + std::to_string(config_.spec.N) + "_errors.csv"), errors_);
  if (config_.spec.id == CaseId::LidCavity)
    write_centerline_csv(file(tag + "_centerline.csv"),
                         cavity_centerlines(sim.state(), sim.mesh(), config_.spec));
}

InvariantReport check_invariants(const SimConfig& config, int steps) {
  InvariantReport rep;
  const auto params = config.integrator();
  Simulation sim(init_case(config.spec), config.spec.boundary, params);
  const auto heavy0 = heavy_phase_count(sim.state(), config.spec);
  auto fail = [&](long step, const std::string& what) {
    rep.failures.push_back("step " + std::to_string(step) + ": " + what);
  };
  const double area = config.spec.domain.area();
  for (int s = 0; s < steps; ++s) {
    const auto& before = sim.state();
    const double dt = compute_dt(before, params, &sim.mesh());
    auto out = silva_step(before, &sim.mesh(), config.spec.boundary, params, dt);
    const auto& mesh = out.mesh;
    const long step = out.diagnostics.step;

    double total = 0.0;
    for (const auto& c : mesh.cells) total += c.volume;
    if (std::abs(total - area) > 1e-10 * area) fail(step, "cell volumes do not tile the domain");

    const bool uniform = std::all_of(before.density.begin(), before.density.end(),
                                     [&](double r) { return r == before.density.front(); });
    const auto B = assemble_B(mesh, uniform ? before.density.front() : 1.0);
    for (std::size_t i = 0; i < B.dimension(); ++i) {
      double row = 0.0;
      const auto cols = B.row_columns(i);
      const auto vals = B.row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        row += vals[k];
        if (B.coefficient(static_cast<std::size_t>(cols[k]), i) != vals[k]) {
          fail(step, "pressure operator is not symmetric");
          break;
        }
      }
      if (std::abs(row) > 1e-12 * std::max(1.0, B.diagonal(i))) {
        fail(step, "pressure operator row " + std::to_string(i) + " does not sum to zero");
        break;
      }
    }
    const auto v_star = viscous_and_body_forces(mesh, before.velocity, config.spec.boundary,
                                                params.viscosity, dt, params.wall_friction);
    const auto b = assemble_rhs(mesh, v_star, dt);
    double sum = 0.0, scale = 0.0;
    for (double x : b) {
      sum += x;
      scale += std::abs(x);
    }
    if (std::abs(sum) > 1e-11 * std::max(scale, 1e-300) && scale > 0.0)
      fail(step, "pressure right-hand side does not sum to zero");
    if (out.diagnostics.div_l2 > out.diagnostics.div_star_l2 * (1.0 + 1e-9) + 1e-14)
      fail(step, "projection increased the divergence");
    for (const auto& c : mesh.cells)
      if (!(c.volume > 0.0)) {
        fail(step, "empty cell");
        break;
      }
    if (heavy_phase_count(out.state, config.spec) != heavy0)
      fail(step, "particle count per phase changed");
    for (std::size_t i = 0; i < out.state.size(); ++i)
      if (!std::isfinite(out.state.velocity[i].x) || !std::isfinite(out.state.velocity[i].y) ||
          !std::isfinite(out.state.pressure[i])) {
        fail(step, "non-finite state");
        break;
      }
    sim = Simulation::resume(std::move(out), config.spec.boundary, params, sim.initial_energy());
    ++rep.steps;
  }
  return rep;
}

}  // namespace silva
