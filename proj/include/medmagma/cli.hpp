#pragma once

#include <string>
#include <vector>

namespace medmagma::cli {

inline constexpr char kArtifactVersion[] = "0.1.0";

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitPreprocessingError = 3;
inline constexpr int kExitNonConvergence = 4;
inline constexpr int kExitBenchFailure = 5;

// Runs one invocation, args excluding the program name, e.g.
// run({"fit", "data.csv", "--out", "results"}). Every subcommand writes a
// RunManifest (manifest.json) into its output directory; a manifest can be
// passed back via --config to reproduce the run.
int run(const std::vector<std::string>& args);

}  // namespace medmagma::cli
