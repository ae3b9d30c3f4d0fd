#include "commands.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "herd/dynamics.hpp"
#include "herd/experiments.hpp"
#include "herd/functionals.hpp"
#include "herd/suite.hpp"
#include "herd/transport.hpp"
#include "io.hpp"

namespace herd::cli {

namespace {

using nlohmann::json;

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

const char* status_str(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::NotApplicable: return "not_applicable";
  }
  return "unknown";
}

json checks_json(const std::vector<SuiteCheck>& checks) {
  json arr = json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name},
                   {"status", status_str(c.status)},
                   {"margin", finite_or_null(c.margin)},
                   {"detail", c.detail}});
  }
  return arr;
}

bool checks_ok(const std::vector<SuiteCheck>& checks) {
  for (const auto& c : checks) {
    if (c.status == CheckStatus::Fail) return false;
  }
  return true;
}

void write_manifest(const RunConfig& cfg, const std::filesystem::path& out_dir,
                    const std::string& command, const std::vector<std::string>& outputs) {
  json m = {{"format_version", io::kFormatVersion},
            {"command", command},
            {"config", cfg.raw},
            {"outputs", outputs},
            {"numeric_format", "shortest round-trip decimal"}};
  io::atomic_write_text(out_dir / "manifest.json", m.dump(2) + "\n");
}

void write_summary(const std::filesystem::path& out_dir, const std::string& command,
                   const std::vector<SuiteCheck>& checks, json extras) {
  json s = {{"format_version", io::kFormatVersion},
            {"command", command},
            {"ok", checks_ok(checks)},
            {"checks", checks_json(checks)}};
  for (auto& [key, value] : extras.items()) s[key] = std::move(value);
  io::atomic_write_text(out_dir / "summary.json", s.dump(2) + "\n");
}

ParticleStated initial_state(const RunConfig& cfg) {
  if (cfg.initial.state_csv) {
    try {
      return io::parse_state_csv(io::read_text(*cfg.initial.state_csv));
    } catch (const std::exception& e) {
      throw ConfigError("initial.state_csv (" + cfg.initial.state_csv->string() +
                        "): " + e.what());
    }
  }
  return sample(InitialSampler{*cfg.initial.sampler, cfg.initial.seed}, cfg.initial.n);
}

json decay_params_json(const DecayParams<double>& d) {
  return {{"lambda_w", d.lambda_w},
          {"lambda_x", d.lambda_x},
          {"lambda_v", d.lambda_v},
          {"phi_min", d.phi_min},
          {"phi_max", d.phi_max},
          {"theta", d.theta},
          {"alpha", d.alpha},
          {"delta", d.delta},
          {"beta", finite_or_null(d.beta)},
          {"c12_lhs", finite_or_null(d.c12_lhs)},
          {"c12_rhs", d.c12_rhs},
          {"condition_holds", d.condition_holds},
          {"c12_margin", finite_or_null(d.c12_rhs - d.c12_lhs)}};
}

// Largest centered diameter visited by the run, padded, for kernel bounds.
double padded_diameter(const Trajectoryd& traj, double headroom) {
  double diameter = 0.0;
  for (const auto& s : traj.states) {
    diameter = std::max(diameter, 2.0 * support_radii(s).position);
  }
  return std::max(diameter * headroom, 1e-9);
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir, int /*threads*/) {
  const ParticleStated init = initial_state(cfg);
  const Trajectoryd traj =
      simulate(init, cfg.model, cfg.kernel, cfg.time.dt, cfg.time.t_end, cfg.time.record_every);

  const double r_max = padded_diameter(traj, 1.1);
  const KernelBounds<double> kb = kernel_bounds(cfg.kernel, r_max);
  double alpha = 0.0;
  json rate = nullptr;
  try {
    const auto d = decay_params(cfg.model, kb.phi_min, kb.phi_max);
    alpha = d.alpha;
    rate = decay_params_json(d);
  } catch (const std::invalid_argument&) {
    // No weighted rate for these strengths; K falls back to lambda_w X + V.
  }
  const auto series = functional_series(traj, alpha);

  io::atomic_write_text(out_dir / "trajectory.csv", io::trajectory_csv(traj));
  io::atomic_write_text(out_dir / "functionals.csv", io::functionals_csv(series));
  write_manifest(cfg, out_dir, "simulate",
                 {"trajectory.csv", "functionals.csv", "summary.json"});
  write_summary(out_dir, "simulate", {},
                {{"agents", traj.states.front().size()},
                 {"dimension", traj.states.front().dim()},
                 {"recorded_states", traj.states.size()},
                 {"alpha", alpha},
                 {"r_max", r_max},
                 {"phi_min", kb.phi_min},
                 {"phi_max", kb.phi_max},
                 {"decay", rate}});
  return 0;
}

int cmd_check_params(const RunConfig& cfg, const std::filesystem::path& out_dir, int /*threads*/) {
  const double r_max = *cfg.bounds_r_max;
  const KernelBounds<double> kb = kernel_bounds(cfg.kernel, r_max);
  std::vector<SuiteCheck> checks;
  json result;
  if (cfg.model.lambda_x > 0.0 && cfg.model.lambda_v > 0.0 && cfg.model.lambda_w > 0.0) {
    const auto d = decay_params(cfg.model, kb.phi_min, kb.phi_max);
    result = decay_params_json(d);
    result["applicable"] = true;
    result["r_max"] = r_max;
    checks.push_back({"condition_c12", d.condition_holds ? CheckStatus::Pass : CheckStatus::Fail,
                      d.c12_rhs - d.c12_lhs,
                      d.condition_holds ? "smallness condition holds" : "smallness condition violated"});
  } else {
    result = {{"applicable", false},
              {"reason", "weighted decay rate unavailable: lambda_x, lambda_v and lambda_w must "
                         "all be positive; rate-free herding still applies when lambda_w > 0, "
                         "lambda_v > 0 and phi_min > 0"},
              {"model", io::model_json(cfg.model)},
              {"phi_min", kb.phi_min},
              {"phi_max", kb.phi_max},
              {"r_max", r_max}};
    checks.push_back({"condition_c12", CheckStatus::NotApplicable, 0.0,
                      "weighted decay parameters undefined for these strengths"});
  }
  io::atomic_write_text(out_dir / "decay_params.json", result.dump(2) + "\n");
  write_manifest(cfg, out_dir, "check-params", {"decay_params.json", "summary.json"});
  write_summary(out_dir, "check-params", checks, {{"decay", result}});
  return checks_ok(checks) ? 0 : 1;
}

int cmd_wasserstein(const RunConfig& cfg, const std::filesystem::path& out_dir, int /*threads*/) {
  EmpiricalMeasure mu, nu;
  try {
    mu = io::parse_measure_csv(io::read_text(cfg.wasserstein.file_a));
  } catch (const std::exception& e) {
    throw ConfigError("wasserstein.file_a (" + cfg.wasserstein.file_a.string() + "): " + e.what());
  }
  try {
    nu = io::parse_measure_csv(io::read_text(cfg.wasserstein.file_b));
  } catch (const std::exception& e) {
    throw ConfigError("wasserstein.file_b (" + cfg.wasserstein.file_b.string() + "): " + e.what());
  }
  double w1 = 0.0;
  try {
    w1 = w1_exact(mu, nu);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("wasserstein: ") + e.what());
  }
  const json record = {{"format_version", io::kFormatVersion},
                       {"n", mu.count()},
                       {"m", nu.count()},
                       {"t", nullptr},
                       {"w1", w1}};
  io::atomic_write_text(out_dir / "w1.json", record.dump(2) + "\n");
  write_manifest(cfg, out_dir, "wasserstein", {"w1.json", "summary.json"});
  write_summary(out_dir, "wasserstein", {}, {{"w1", w1}});
  return 0;
}

int cmd_meanfield(const RunConfig& cfg, const std::filesystem::path& out_dir, int threads) {
  MeanfieldResult res;
  try {
    res = meanfield_convergence(*cfg.initial.sampler, cfg.meanfield.sizes, cfg.meanfield.seeds,
                                cfg.model, cfg.kernel, cfg.time.dt, cfg.meanfield.checkpoints,
                                threads);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("meanfield: ") + e.what());
  }

  std::string rows = "seed,n,t,w1\n";
  for (const auto& r : res.rows) {
    rows += std::to_string(r.seed) + "," + std::to_string(r.n) + "," + io::format_double(r.t) +
            "," + io::format_double(r.w1) + "\n";
  }
  io::atomic_write_text(out_dir / "meanfield.csv", rows);

  std::string medians = "n,t,w1_median\n";
  json medians_json = json::array();
  for (const auto& m : res.medians) {
    medians += std::to_string(m.n) + "," + io::format_double(m.t) + "," +
               io::format_double(m.w1_median) + "\n";
    medians_json.push_back({{"n", m.n}, {"t", m.t}, {"w1_median", m.w1_median}});
  }
  io::atomic_write_text(out_dir / "meanfield_medians.csv", medians);

  std::vector<SuiteCheck> checks;
  checks.push_back({"meanfield_median_monotone",
                    res.medians_strictly_decreasing ? CheckStatus::Pass : CheckStatus::Fail, 0.0,
                    "median W1 against the largest size must decrease strictly in n"});
  write_manifest(cfg, out_dir, "meanfield",
                 {"meanfield.csv", "meanfield_medians.csv", "summary.json"});
  write_summary(out_dir, "meanfield", checks, {{"medians", medians_json}});
  return checks_ok(checks) ? 0 : 1;
}

int cmd_suite(const RunConfig& cfg, const std::filesystem::path& out_dir, int /*threads*/) {
  const ParticleStated init = initial_state(cfg);
  const SuiteReport rep =
      herding_suite(init, cfg.model, cfg.kernel, cfg.time.dt, cfg.time.t_end, cfg.suite);

  io::atomic_write_text(out_dir / "functionals.csv", io::functionals_csv(rep.series));

  json extras = {{"r_max", rep.r_max_used},
                 {"phi_min", rep.phi_min_used},
                 {"phi_max", rep.phi_max_used},
                 {"tail_x", rep.tail_x},
                 {"tail_v", rep.tail_v}};
  extras["decay"] = rep.rate ? decay_params_json(*rep.rate) : json(nullptr);
  if (rep.fit) {
    extras["fit"] = {{"beta_emp", rep.fit->beta_emp},
                     {"r2", rep.fit->r2},
                     {"t_lo", rep.fit->t_lo},
                     {"t_hi", rep.fit->t_hi},
                     {"points", rep.fit->points}};
  } else {
    extras["fit"] = nullptr;
  }
  if (rep.tail) {
    json cps = json::array();
    for (const auto& c : rep.tail->checkpoints) cps.push_back({{"t", c.t}, {"ratio", c.ratio}});
    extras["tail"] = {{"reached", rep.tail->reached},
                      {"final_t", rep.tail->final_t},
                      {"final_ratio", rep.tail->final_ratio},
                      {"doublings_used", rep.tail->doublings_used},
                      {"checkpoints", std::move(cps)}};
  } else {
    extras["tail"] = nullptr;
  }

  write_manifest(cfg, out_dir, "suite", {"functionals.csv", "summary.json"});
  write_summary(out_dir, "suite", rep.checks, std::move(extras));
  return rep.all_pass() ? 0 : 1;
}

}  // namespace herd::cli
