#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cbeta/cli/config.hpp"

namespace cbeta::cli {

// Each command writes into cfg.paths.output_dir and returns the written
// files in write order. Failures throw cbeta::Error.
std::vector<std::filesystem::path> cmd_ingest(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_run(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_synth(const RunConfig& cfg);
// Re-renders comparison.md and the cumulative c_t charts from the CSVs of a
// previous run in the output directory.
std::vector<std::filesystem::path> cmd_report(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_fetch(const RunConfig& cfg);

// 0 success, 2 validation, 3 I/O, 4 estimation failure.
int exit_code_for(const std::exception& e);

// Full command-line entry point.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cbeta::cli
