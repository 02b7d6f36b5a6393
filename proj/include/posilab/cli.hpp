#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace posilab {

/// Exit codes of run_cli.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

/// Environment variable naming the default output directory.
constexpr const char* kOutputDirEnv = "POSILAB_OUTPUT_DIR";

/// Runs one subcommand; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace posilab
