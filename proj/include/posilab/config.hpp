#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "posilab/coefficients.hpp"

namespace posilab {

/// Parameters shared by the CLI subcommands. Every field may come from the
/// config file `[run]` table and be overridden on the command line.
struct RunConfig {
  std::optional<std::string> catalog;
  std::optional<EllipticSystem> system;  // inline definition
  std::optional<BoundaryCondition> bc;
  int grid = 16;
  std::vector<double> times;
  double tol = 0.0;          // <= 0: module default
  double rel_tol = 1e-9;     // positivity scan
  std::uint64_t seed = 0;
  std::vector<Point> points;
  double delta_max = 0.0;
  int levels = 7;
  int threads = 1;
  int density = 6;
  int k = 1;  // 1-based index pair for probe
  int l = 1;
  std::string out_dir;

  /// Throws ConfigError when a value is out of range.
  void validate() const;
  /// The system named by `catalog` or given inline, with the bc override applied.
  EllipticSystem resolve_system() const;
};

/// `key = value` lines, `[table]` headers, `#` comments. Values are JSON
/// literals and may span lines while brackets are open. Errors name the
/// source and line.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Inline system definition in the same format; parse_config reads it back.
std::string dump_config(const EllipticSystem& sys);

}  // namespace posilab
