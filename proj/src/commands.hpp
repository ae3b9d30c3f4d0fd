#pragma once

// Subcommand entry points. Each one reads a parsed config, writes its
// outputs under out_dir (atomically, deterministic bytes for a given config
// regardless of thread count) and returns the process exit code: 0 when all
// requested checks pass or none apply, 1 when a check fails. Config and
// input-file problems throw and are mapped to exit code 2 by the CLI.

#include <filesystem>

#include "config.hpp"

namespace herd::cli {

int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir, int threads);
int cmd_check_params(const RunConfig& cfg, const std::filesystem::path& out_dir, int threads);
int cmd_wasserstein(const RunConfig& cfg, const std::filesystem::path& out_dir, int threads);
int cmd_meanfield(const RunConfig& cfg, const std::filesystem::path& out_dir, int threads);
int cmd_suite(const RunConfig& cfg, const std::filesystem::path& out_dir, int threads);

}  // namespace herd::cli
