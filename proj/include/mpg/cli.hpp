#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mpg/noise.hpp"
#include "mpg/solvers.hpp"

namespace mpg {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitSolver = 3 };

/// Maps an exception thrown by the library onto the CLI exit code.
int exit_code_for(const std::exception& e) noexcept;

// --- configuration -------------------------------------------------------

/// Sets one SolverConfig field by its flag name ("lambda1", "alpha-w" and
/// "alpha_w" are both accepted). Returns false for unknown keys; throws
/// ConfigError for a value that does not parse.
bool set_config_key(SolverConfig& cfg, const std::string& key,
                    const std::string& value);

/// Resolved fields in a fixed order, formatted for provenance headers.
std::vector<std::pair<std::string, std::string>> describe(const SolverConfig& cfg);

/// Flat `key = value` file: '#' starts a comment, blank lines are ignored,
/// later duplicates override earlier ones. Keys keep their insertion order.
struct KeyValueFile {
  std::vector<std::pair<std::string, std::string>> entries;

  static KeyValueFile parse(std::istream& in, const std::string& origin);
  static KeyValueFile load(const std::filesystem::path& path);
  std::optional<std::string> get(const std::string& key) const;
};

std::vector<std::string> split_list(const std::string& value);
double parse_number(const std::string& text, const std::string& what);

// --- traces --------------------------------------------------------------

inline constexpr const char* kTraceHeader =
    "iter,se,objective,lagrangian,min_w,identity_residual,constraint_residual,"
    "snr,seconds";

/// Writes `# key=value` provenance lines, the header, then one row per
/// record. Absent optional fields are left empty.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace,
                     const std::vector<std::pair<std::string, std::string>>& provenance);

/// Shortest round-tripping decimal form used in every CSV the tool writes.
std::string format_double(double x);

// --- benchmark -----------------------------------------------------------

struct SolverEntry {
  SolverKind kind = SolverKind::bca;
  SolverConfig cfg;
};

struct ExperimentSpec {
  /// Phantom kind names or image file paths.
  std::vector<std::string> images;
  int phantom_size = 64;
  std::vector<NoiseSpec> noises;  ///< seed field unused, see `seeds`
  std::vector<SolverEntry> solvers;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "bench_out";
  /// Optional sweep of one config key; every value yields its own cells.
  std::string sweep_key;
  std::vector<double> sweep_values;

  void validate() const;
};

/// Builds a spec from a key-value file. Recognised keys:
///   images, size, eta, sigma, seeds, solvers, output_dir,
///   sweep, sweep_values, any SolverConfig key (applies to every solver) and
///   <solver>.<key> for a per-solver override. `tvl2.lambda` and
///   `tvkl.lambda` set the baseline fidelity weight.
/// `overrides` (from command-line flags) are applied last.
ExperimentSpec parse_experiment_spec(
    const KeyValueFile& file,
    const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// n log-spaced values from lo to hi inclusive.
std::vector<double> logspace(double lo, double hi, int n);

struct BenchRow {
  std::string image;
  double eta = 0.0, sigma = 0.0;
  std::string solver;
  std::uint64_t seed = 0;
  std::optional<double> sweep_value;
  bool ok = false;
  std::string error;
  double snr_noisy = 0.0, snr = 0.0;
  std::optional<double> ssim;  ///< absent when the image is below the window size
  int iterations = 0;
  bool converged = false;
  std::optional<double> min_w;
  double seconds = 0.0;
};

/// Worker count: MPG_THREADS when set (>= 1), else hardware concurrency,
/// never more than `cells`.
int resolve_thread_count(std::size_t cells);

/// Runs every (image, noise, solver, seed[, sweep value]) cell. Failures
/// are recorded in the row and do not stop the run. Rows come back in cell
/// order whatever the thread count.
std::vector<BenchRow> run_bench(const ExperimentSpec& spec, int threads);

void write_bench_cells(std::ostream& out, const std::vector<BenchRow>& rows);
/// Means over seeds per (image, eta, sigma, solver, sweep value).
void write_bench_summary(std::ostream& out, const std::vector<BenchRow>& rows);

// --- entry point ---------------------------------------------------------

/// Runs `mpg` with argv-style arguments (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace mpg
