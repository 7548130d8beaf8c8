// Command-line driver: runs a benchmark case from a config file.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "silva/cli_io.hpp"
#include "silva/parallel.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

class ProgressPrinter : public silva::RunObserver {
 public:
  ProgressPrinter(silva::RunObserver& inner, bool quiet, double t_end)
      : inner_(inner), quiet_(quiet), t_end_(t_end) {}

  void on_start(const silva::Simulation& sim, const silva::StepDiagnostics& d) override {
    inner_.on_start(sim, d);
  }
  void on_step(const silva::Simulation& sim, const silva::StepDiagnostics& d) override {
    inner_.on_step(sim, d);
    if (!quiet_ && t_end_ > 0.0 && d.time >= next_report_) {
      std::fprintf(stderr, "  t=%-10.4g step=%-7ld E=%-12.6g div_l2=%.3e\n", d.time, d.step,
                   d.energy, d.div_l2);
      next_report_ += 0.1 * t_end_;
    }
  }
  void on_finish(const silva::Simulation& sim, const silva::StepDiagnostics& d) override {
    inner_.on_finish(sim, d);
  }

 private:
  silva::RunObserver& inner_;
  bool quiet_;
  double t_end_;
  double next_report_ = 0.0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"silva: incompressible flow on moving Voronoi meshes"};
  std::string config_path;
  std::optional<std::string> output_dir, case_name;
  std::optional<int> threads, N;
  std::optional<double> re, tend;
  bool quiet = false, check = false, lenient = false;
  app.add_option("--config", config_path, "configuration file (key = value)")->required();
  app.add_option("--output-dir", output_dir, "directory for snapshots and tables");
  app.add_option("--threads", threads, "worker threads (default: SILVA_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--case", case_name, "override the case id");
  app.add_option("--N", N, "override seeds per side")->check(CLI::PositiveNumber);
  app.add_option("--re", re, "override the Reynolds number");
  app.add_option("--tend", tend, "override the final time");
  app.add_flag("--quiet", quiet, "suppress progress output");
  app.add_flag("--check", check, "run the invariant checks for a few steps instead of a full run");
  app.add_flag("--lenient", lenient, "warn about unknown config keys instead of failing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    silva::ConfigOverrides overrides;
    if (case_name) overrides.emplace_back("case", *case_name);
    if (N) overrides.emplace_back("N", std::to_string(*N));
    if (re) overrides.emplace_back("Re", silva::format_double(*re));
    if (tend) overrides.emplace_back("t_end", silva::format_double(*tend));
    if (output_dir) overrides.emplace_back("output_dir", *output_dir);
    auto config = silva::load_config(config_path, lenient, overrides);
    for (const auto& w : config.warnings) std::cerr << "warning: " << w << '\n';

    int nthreads = threads.value_or(config.threads);
    if (!threads && config.threads == 0)
      if (const char* env = std::getenv("SILVA_THREADS")) nthreads = std::atoi(env);
    if (nthreads > 0) silva::set_thread_count(nthreads);

    if (check) {
      const auto rep = silva::check_invariants(config, 10);
      for (const auto& f : rep.failures) std::cerr << "invariant violated: " << f << '\n';
      std::printf("check %s: case=%s N=%d steps=%d failures=%zu\n", rep.ok() ? "passed" : "failed",
                  std::string(silva::to_string(config.spec.id)).c_str(), config.spec.N, rep.steps,
                  rep.failures.size());
      return rep.ok() ? kExitOk : kExitRuntime;
    }

    silva::OutputWriter writer(config);
    ProgressPrinter progress(writer, quiet, config.spec.t_end);
    const auto result = silva::run_case(config.spec, config.integrator(), &progress);
    std::printf("silva: case=%s N=%d steps=%ld t=%.6g E=%.10g div_l2=%.6e output=%s\n",
                std::string(silva::to_string(config.spec.id)).c_str(), config.spec.N, result.steps,
                result.state.time, result.last.energy, result.last.div_l2,
                config.output_dir.c_str());
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
