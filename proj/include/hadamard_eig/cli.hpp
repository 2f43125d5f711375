#pragma once

#include "hadamard_eig/errors.hpp"
#include "hadamard_eig/hadamard.hpp"
#include "hadamard_eig/mesh.hpp"

#include <json.hpp>

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace hadamard_eig {

/// Run configuration problem; the message starts with the offending field name.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

enum class Command { Report, Sweep, Oracle };

struct MeshSpec {
  /// Non-empty: load from this file; otherwise generate a rectangle.
  std::string file;
  int nx = 16;
  int ny = 16;
  double width = 1.0;
  double height = 1.0;
  /// Tags of the bottom, right, top and left sides.
  std::array<BoundaryTag, 4> sides{BoundaryTag::Dirichlet, BoundaryTag::Dirichlet,
                                   BoundaryTag::Dirichlet, BoundaryTag::Dirichlet};
};

struct DeformSpec {
  /// "analytic", "nodal" or "identity".
  std::string kind = "identity";
  std::string name;
  double scale = 1.0;
  std::vector<Vec2> values;
};

struct OracleSpec {
  double h0 = 1e-3;
  /// Pass thresholds: first derivatives absolute (scaled by max(1, |value|)), second relative.
  double first_tol = 1e-6;
  double second_tol = 1e-4;
};

struct OutputSpec {
  std::string dir = ".";
  std::string report = "report.json";
  std::string curves = "curves.csv";
  std::string rearranged = "rearranged.csv";
  std::string events = "events.json";
  std::string oracle = "oracle.csv";
};

struct RunConfig {
  int schema_version = 1;
  Command command = Command::Report;
  MeshSpec mesh;
  DeformSpec deformation;
  double t = 0.0;
  std::vector<double> t_grid;
  int k_max = 4;
  Tolerances tolerances;
  OracleSpec oracle;
  OutputSpec output;
  /// Bisect for crossings that fall between sweep nodes.
  bool refine_crossings = true;
};

/// Throws ConfigError naming the field at fault.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// HADAMARD_EIG_THREADS (unset or 0: hardware concurrency). Throws ConfigError on junk.
int worker_threads();

/// Each returns 0 on success; exceptions propagate to run_command.
int run_report(const RunConfig& config, std::ostream& out);
int run_sweep(const RunConfig& config, std::ostream& out);
int run_oracle(const RunConfig& config, std::ostream& out);

/// Loads the config, checks it names `command`, runs it and maps failures to exit codes:
/// 2 configuration / input error, 3 numerical failure, 1 anything else. Diagnostics go to `err`.
/// A non-empty `out_dir` overrides the configured output directory.
int run_command(Command command, const std::string& config_path, const std::string& out_dir,
                std::ostream& out, std::ostream& err);

}  // namespace hadamard_eig
