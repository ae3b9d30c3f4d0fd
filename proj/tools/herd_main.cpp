// herd: simulate interacting-agent herding dynamics and verify the
// quantitative decay estimates that go with them.
//
// Exit codes: 0 all requested checks passed (or none applied), 1 a check
// failed, 2 configuration or input error.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "commands.hpp"
#include "config.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out = ".";
  int threads = 1;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "Path to a JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", args.out, "Directory for output files (created if missing)");
  sub->add_option("--threads", args.threads,
                  "Worker threads for run-level parallelism (wall time only; "
                  "outputs are byte-identical for any value)")
      ->check(CLI::PositiveNumber);
}

int dispatch(herd::cli::Command cmd, const CommonArgs& args) {
  using herd::cli::Command;
  const auto cfg = herd::cli::load_config(args.config, cmd);
  const std::filesystem::path out_dir(args.out);
  std::filesystem::create_directories(out_dir);
  switch (cmd) {
    case Command::Simulate: return herd::cli::cmd_simulate(cfg, out_dir, args.threads);
    case Command::CheckParams: return herd::cli::cmd_check_params(cfg, out_dir, args.threads);
    case Command::Wasserstein: return herd::cli::cmd_wasserstein(cfg, out_dir, args.threads);
    case Command::Meanfield: return herd::cli::cmd_meanfield(cfg, out_dir, args.threads);
    case Command::Suite: return herd::cli::cmd_suite(cfg, out_dir, args.threads);
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Herding dynamics simulator and estimate checker"};
  app.require_subcommand(1);

  using herd::cli::Command;
  struct SubDef {
    const char* name;
    const char* help;
    Command cmd;
  };
  const SubDef defs[] = {
      {"simulate", "Integrate the agent system and record trajectory and functionals", Command::Simulate},
      {"check-params", "Evaluate the decay parameters and the smallness condition", Command::CheckParams},
      {"wasserstein", "Exact W1 distance between two empirical measures", Command::Wasserstein},
      {"meanfield", "Convergence of small systems toward a large reference system", Command::Meanfield},
      {"suite", "Run the full verification suite on one configuration", Command::Suite},
  };

  CommonArgs args[std::size(defs)];
  Command chosen{};
  const CommonArgs* chosen_args = nullptr;
  for (std::size_t i = 0; i < std::size(defs); ++i) {
    CLI::App* sub = app.add_subcommand(defs[i].name, defs[i].help);
    add_common(sub, args[i]);
    sub->callback([&, i] {
      chosen = defs[i].cmd;
      chosen_args = &args[i];
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // help and version report success; every real usage problem is an input error
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    return dispatch(chosen, *chosen_args);
  } catch (const herd::cli::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
