#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "silva/benchmarks.hpp"

namespace silva {

/// Run configuration read from flat `key = value` text.
struct SimConfig {
  CaseSpec spec;
  /// Set when `dr` was given instead of N; N is then derived from it.
  std::optional<double> dr;
  double cfl = 0.1;
  double dt_safety = 0.25;
  double dt_max = kInfinity;
  double v_ref = 1.0;
  bool stabilize = true;
  double solver_tol = 1e-9;
  int solver_max_iter = 0;
  double outer_tol = 1e-12;
  int max_outer = 100;
  std::string output_dir = "silva_out";
  /// Snapshot cadence: every `snapshot_every` steps, or every
  /// `snapshot_interval` simulation time units when that is set.
  long snapshot_every = 0;
  double snapshot_interval = 0.0;
  int threads = 0;
  bool write_particles = true;
  bool write_mesh = false;
  bool write_vtk = false;
  bool write_diagnostics = true;
  /// Unknown keys found in lenient mode.
  std::vector<std::string> warnings;

  IntegratorParams integrator() const;
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Parses configuration text. `#` starts a comment; blank lines are ignored;
/// keys are case-insensitive. Overrides replace file entries of the same key.
/// Throws InvalidInput naming the offending line on unknown keys (unless
/// lenient), malformed values, a missing `case`, conflicting N and dr, or
/// out-of-range values.
SimConfig parse_config(std::string_view text, bool lenient = false,
                       const ConfigOverrides& overrides = {});
SimConfig load_config(const std::filesystem::path& path, bool lenient = false,
                      const ConfigOverrides& overrides = {});

/// Raised on file-system failures, with the path in the message.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-particle record as stored in snapshot files.
struct SnapshotRow {
  long id = 0;
  double x = 0, y = 0, u = 0, v = 0, p = 0, rho = 0, vol = 0;
  friend bool operator==(const SnapshotRow&, const SnapshotRow&) = default;
};

inline constexpr std::string_view kSnapshotHeader = "id,x,y,u,v,p,rho,vol";
inline constexpr std::string_view kDiagnosticsHeader =
    "step,t,dt,E,div_l2,div_max,minres_iters,outer_iters";

/// Rows of a state; `vol` is the current cell volume when a mesh is given and
/// the reference volume otherwise.
std::vector<SnapshotRow> snapshot_rows(const ParticleState& state, const VoronoiMesh* mesh);

/// Shortest round-tripping text form of a double (17 significant digits).
std::string format_double(double x);

void write_snapshot(std::ostream& out, std::span<const SnapshotRow> rows);
void write_snapshot(const std::filesystem::path& path, const ParticleState& state,
                    const VoronoiMesh* mesh = nullptr);
std::vector<SnapshotRow> read_snapshot(std::istream& in);
std::vector<SnapshotRow> read_snapshot(const std::filesystem::path& path);

void write_diagnostics_header(std::ostream& out);
void write_diagnostics_row(std::ostream& out, const StepDiagnostics& d);
void write_diagnostics(const std::filesystem::path& path, std::span<const StepDiagnostics> rows);
std::vector<StepDiagnostics> read_diagnostics(std::istream& in);

/// One cell per line: id followed by the vertex coordinate pairs.
void write_mesh_polygons(std::ostream& out, const VoronoiMesh& mesh);
/// Legacy-VTK polydata with cell polygons and per-cell velocity, pressure and density.
void write_vtk(std::ostream& out, const VoronoiMesh& mesh, const ParticleState& state);

void write_errors_csv(const std::filesystem::path& path, std::span<const ErrorEntry> rows);
void write_centerline_csv(const std::filesystem::path& path,
                          std::span<const CenterlinePoint> rows);

/// Writes snapshots, diagnostics and case tables while a run progresses.
/// Output files:
///   diagnostics.csv, snapshot_<k>.csv (plus mesh_<k>.txt / mesh_<k>.vtk),
///   <case>_energy.csv, <case>_<N>_errors.csv for cases with a reference,
///   <case>_centerline.csv for the cavity.
class OutputWriter : public RunObserver {
 public:
  explicit OutputWriter(const SimConfig& config);
  ~OutputWriter() override;

  void on_start(const Simulation& sim, const StepDiagnostics& d) override;
  void on_step(const Simulation& sim, const StepDiagnostics& d) override;
  void on_finish(const Simulation& sim, const StepDiagnostics& d) override;

  int snapshots_written() const { return snapshot_index_; }

 private:
  void snapshot(const Simulation& sim);
  std::filesystem::path file(const std::string& name) const;

  const SimConfig& config_;
  std::filesystem::path dir_;
  std::unique_ptr<std::ofstream> diagnostics_;
  std::unique_ptr<std::ofstream> energy_;
  std::vector<ErrorEntry> errors_;
  int snapshot_index_ = 0;
  long last_snapshot_step_ = -1;
  double next_snapshot_time_ = 0.0;
};

struct InvariantReport {
  int steps = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

/// Runs a few steps of the configured case and checks the module invariants
/// (mesh partition of unity, operator symmetry and zero row sums, zero-sum
/// right-hand side, projection not increasing divergence, mass per phase).
InvariantReport check_invariants(const SimConfig& config, int steps = 10);

}  // namespace silva
