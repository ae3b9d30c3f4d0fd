#pragma once

// One JSON config file drives every subcommand. Parsing is strict about the
// sections a command needs and reports errors with the dotted path of the
// offending field. The full schema is documented in the README.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "herd/experiments.hpp"
#include "herd/kernel.hpp"
#include "herd/suite.hpp"
#include "herd/types.hpp"

namespace herd::cli {

enum class Command { Simulate, CheckParams, Wasserstein, Meanfield, Suite };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TimeConfig {
  double dt = 0.0;
  double t_end = 0.0;
  long long record_every = 1;
};

struct InitialConfig {
  std::optional<DistributionSpec> sampler;
  std::optional<std::filesystem::path> state_csv;  // resolved against the config dir
  Eigen::Index n = 0;
  std::uint64_t seed = 0;
};

struct MeanfieldConfig {
  std::vector<Eigen::Index> sizes;
  std::vector<std::uint64_t> seeds;
  std::vector<double> checkpoints;
};

struct WassersteinConfig {
  std::filesystem::path file_a;
  std::filesystem::path file_b;
};

struct RunConfig {
  nlohmann::json raw;
  std::filesystem::path dir;  // directory of the config file
  ModelParamsd model;
  KernelSpecd kernel;
  InitialConfig initial;
  TimeConfig time;
  std::optional<double> bounds_r_max;
  MeanfieldConfig meanfield;
  WassersteinConfig wasserstein;
  SuiteOptions suite;
};

RunConfig load_config(const std::filesystem::path& file, Command cmd);

// Exposed for tests: parse from an already loaded document.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& dir, Command cmd);

}  // namespace herd::cli
