#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "hpvpinn/trainer.hpp"

namespace hpvpinn {

/// Process exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumeric = 2, kExitValidation = 3 };

struct ExportOptions {
  bool csv = true;
  bool images = false;
  int image_resolution = 200;
  int grid = 100;  ///< field CSV grid points per direction
  bool checkpoint = true;
};

/// A run config document: training settings plus where and what to export.
struct RunConfigFile {
  TrainingConfig training;
  std::string output_directory = "runs/default";
  ExportOptions exports;
};

/// Parses a YAML run config. Unknown keys, wrong types and invalid values
/// throw ConfigError carrying the 1-based line of the offending node.
RunConfigFile parse_run_config(const std::string& text);
RunConfigFile load_run_config(const std::string& path);

/// Output directory with the VPINN_OUTPUT_ROOT override applied: when the
/// variable is set, relative directories are resolved against it.
std::string resolve_output_directory(const std::string& directory);

int cmd_solve(const std::string& config_path, std::ostream& out, std::ostream& err);

int cmd_sweep(const std::string& config_path, SweepParam param, const std::vector<double>& values, int seeds,
              std::ostream& out, std::ostream& err);

struct ValidateOptions {
  bool flip_jacobian_sign = false;  ///< fault hook: negate mapped gradients in precompute
};

int cmd_validate(const ValidateOptions& options, std::ostream& out);

struct BenchRow {
  int n_cells = 0;
  double loop_ms = 0.0;
  double tensor_ms = 0.0;
  double loop_loss = 0.0;
  double tensor_loss = 0.0;
};

/// One loss evaluation per path on the desk-scale Eriksson-Johnson setup; best
/// of at least `min_repeats` timings (and at least 200 ms in total).
BenchRow bench_mesh(int nx, int ny, int min_repeats = 3);

/// Times loop vs tensor loss evaluation on nx x ny meshes; CSV to `out`.
/// Returns kExitValidation if the two paths disagree beyond 1e-12 relative.
int cmd_bench(const std::vector<std::pair<int, int>>& cells, std::ostream& out, std::ostream& err);

/// Field export: one row per grid point (x fastest) with header
/// x,y,u_pred[,u_exact,abs_err][,tau][,h].
void write_field_csv(const std::string& path, const DenseNetwork& net, const BoundaryAnsatz& ansatz,
                     const CDRProblem& problem, double tau_growth, int grid_n);

/// Binary PPM raster of `values` on an n x n grid (x fastest, y up) using the
/// viridis colormap scaled to [min, max] of the data.
void write_ppm(const std::string& path, const Eigen::VectorXd& values, int n);

}  // namespace hpvpinn
