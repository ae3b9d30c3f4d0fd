#include "config.hpp"

#include <fstream>

#include "io.hpp"

namespace herd::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw ConfigError("config error at " + path + ": " + why);
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing required field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double number_at(const json& obj, const std::string& key, const std::string& path) {
  return number(member(obj, key, path), path + "." + key);
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long long>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Vecd vector_at(const json& obj, const std::string& key, const std::string& path) {
  const json& j = member(obj, key, path);
  const std::string p = path + "." + key;
  if (!j.is_array() || j.empty()) fail(p, "expected a nonempty array of numbers");
  Vecd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number(j[i], p + "[" + std::to_string(i) + "]");
  }
  return v;
}

Matd box_at(const json& obj, const std::string& key, const std::string& path) {
  const json& j = member(obj, key, path);
  const std::string p = path + "." + key;
  if (!j.is_array() || j.empty()) fail(p, "expected an array of [lo, hi] pairs");
  Matd m(static_cast<Eigen::Index>(j.size()), 2);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& row = j[i];
    const std::string rp = p + "[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != 2) fail(rp, "expected [lo, hi]");
    m(static_cast<Eigen::Index>(i), 0) = number(row[0], rp + "[0]");
    m(static_cast<Eigen::Index>(i), 1) = number(row[1], rp + "[1]");
  }
  return m;
}

ModelParamsd parse_model(const json& doc) {
  const json& m = member(doc, "model", "config");
  ModelParamsd p;
  p.lambda_w = number_at(m, "lambda_w", "model");
  p.lambda_x = number_at(m, "lambda_x", "model");
  p.lambda_v = number_at(m, "lambda_v", "model");
  try {
    validate(p);
  } catch (const std::invalid_argument& e) {
    fail("model", e.what());
  }
  return p;
}

KernelSpecd parse_kernel(const json& doc) {
  const json& k = member(doc, "kernel", "config");
  const std::string family = text(member(k, "family", "kernel"), "kernel.family");
  KernelSpecd spec;
  if (family == "constant") {
    spec = KernelSpecd::constant(number_at(k, "c", "kernel"));
  } else if (family == "cucker_smale") {
    spec = KernelSpecd::cucker_smale(number_at(k, "gamma", "kernel"));
  } else if (family == "tabulated") {
    const json& knots = member(k, "knots", "kernel");
    if (!knots.is_array() || knots.empty()) fail("kernel.knots", "expected [[r, phi], ...]");
    Matd table(static_cast<Eigen::Index>(knots.size()), 2);
    for (std::size_t i = 0; i < knots.size(); ++i) {
      const std::string rp = "kernel.knots[" + std::to_string(i) + "]";
      if (!knots[i].is_array() || knots[i].size() != 2) fail(rp, "expected [r, phi]");
      table(static_cast<Eigen::Index>(i), 0) = number(knots[i][0], rp + "[0]");
      table(static_cast<Eigen::Index>(i), 1) = number(knots[i][1], rp + "[1]");
    }
    spec = KernelSpecd::tabulated(std::move(table));
  } else {
    fail("kernel.family", "unknown family '" + family +
                              "' (expected constant, cucker_smale or tabulated)");
  }
  const auto issues = validate_kernel(spec);
  if (!issues.empty()) fail("kernel", issues.front());
  return spec;
}

DistributionSpec parse_sampler(const json& s, const std::string& path) {
  const std::string family = text(member(s, "family", path), path + ".family");
  if (family == "uniform_box") {
    UniformBoxSpec u;
    u.position_box = box_at(s, "position_box", path);
    u.velocity_box = box_at(s, "velocity_box", path);
    return u;
  }
  if (family == "gaussian") {
    GaussianSpec g;
    g.mean_x = vector_at(s, "mean_x", path);
    g.sd_x = vector_at(s, "sd_x", path);
    g.mean_v = vector_at(s, "mean_v", path);
    g.sd_v = vector_at(s, "sd_v", path);
    return g;
  }
  if (family == "two_cluster") {
    TwoClusterSpec t;
    t.offset_x = vector_at(s, "offset_x", path);
    t.offset_v = vector_at(s, "offset_v", path);
    t.spread = number_at(s, "spread", path);
    return t;
  }
  fail(path + ".family",
       "unknown family '" + family + "' (expected uniform_box, gaussian or two_cluster)");
}

InitialConfig parse_initial(const json& doc, const std::filesystem::path& dir, bool need_n) {
  const json& ini = member(doc, "initial", "config");
  InitialConfig c;
  const bool has_sampler = ini.contains("sampler");
  const bool has_csv = ini.contains("state_csv");
  if (has_sampler == has_csv) {
    fail("initial", "provide exactly one of sampler or state_csv");
  }
  if (has_csv) {
    c.state_csv = dir / text(ini["state_csv"], "initial.state_csv");
    return c;
  }
  c.sampler = parse_sampler(ini["sampler"], "initial.sampler");
  try {
    herd::detail::validate_spec(*c.sampler);
  } catch (const std::invalid_argument& e) {
    fail("initial.sampler", e.what());
  }
  if (need_n) {
    c.n = integer(member(ini, "n", "initial"), "initial.n");
    if (c.n < 1) fail("initial.n", "must be at least 1");
    const long long seed = integer(member(ini, "seed", "initial"), "initial.seed");
    if (seed < 0) fail("initial.seed", "must be nonnegative");
    c.seed = static_cast<std::uint64_t>(seed);
  }
  return c;
}

TimeConfig parse_time(const json& doc, bool need_t_end) {
  const json& t = member(doc, "time", "config");
  TimeConfig c;
  c.dt = number_at(t, "dt", "time");
  if (!(c.dt > 0.0)) fail("time.dt", "must be positive");
  if (need_t_end) {
    c.t_end = number_at(t, "t_end", "time");
    if (!(c.t_end > 0.0)) fail("time.t_end", "must be positive");
  }
  if (t.contains("record_every")) {
    c.record_every = integer(t["record_every"], "time.record_every");
    if (c.record_every < 1) fail("time.record_every", "must be at least 1");
  }
  return c;
}

}  // namespace

RunConfig parse_config(const json& doc, const std::filesystem::path& dir, Command cmd) {
  if (!doc.is_object()) throw ConfigError("config error at config: expected a JSON object");
  const long long version = integer(member(doc, "version", "config"), "version");
  if (version != 1) fail("version", "unsupported config version " + std::to_string(version));

  RunConfig cfg;
  cfg.raw = doc;
  cfg.dir = dir;

  switch (cmd) {
    case Command::Simulate:
    case Command::Suite: {
      cfg.model = parse_model(doc);
      cfg.kernel = parse_kernel(doc);
      cfg.initial = parse_initial(doc, dir, true);
      cfg.time = parse_time(doc, true);
      if (cmd == Command::Suite && doc.contains("suite")) {
        const json& s = doc["suite"];
        if (s.contains("tail_threshold")) {
          cfg.suite.tail_threshold = number(s["tail_threshold"], "suite.tail_threshold");
          if (!(cfg.suite.tail_threshold > 0.0)) fail("suite.tail_threshold", "must be positive");
        }
        if (s.contains("tail_doublings")) {
          const long long b = integer(s["tail_doublings"], "suite.tail_doublings");
          if (b < 0) fail("suite.tail_doublings", "must be nonnegative");
          cfg.suite.tail_doublings = static_cast<int>(b);
        }
        if (s.contains("fit_window")) {
          const json& w = s["fit_window"];
          if (!w.is_array() || w.size() != 2) fail("suite.fit_window", "expected [lo, hi]");
          cfg.suite.fit_lo_frac = number(w[0], "suite.fit_window[0]");
          cfg.suite.fit_hi_frac = number(w[1], "suite.fit_window[1]");
          if (!(0.0 <= cfg.suite.fit_lo_frac && cfg.suite.fit_lo_frac < cfg.suite.fit_hi_frac &&
                cfg.suite.fit_hi_frac <= 1.0)) {
            fail("suite.fit_window", "need 0 <= lo < hi <= 1");
          }
        }
      }
      break;
    }
    case Command::CheckParams: {
      cfg.model = parse_model(doc);
      cfg.kernel = parse_kernel(doc);
      if (doc.contains("bounds")) {
        cfg.bounds_r_max = number_at(member(doc, "bounds", "config"), "r_max", "bounds");
        if (!(*cfg.bounds_r_max > 0.0)) fail("bounds.r_max", "must be positive");
      } else if (cfg.kernel.family != KernelFamily::Constant) {
        fail("bounds.r_max", "required for non-constant kernels");
      } else {
        cfg.bounds_r_max = 1.0;  // constant kernels have radius-independent bounds
      }
      break;
    }
    case Command::Wasserstein: {
      const json& w = member(doc, "wasserstein", "config");
      cfg.wasserstein.file_a = dir / text(member(w, "file_a", "wasserstein"), "wasserstein.file_a");
      cfg.wasserstein.file_b = dir / text(member(w, "file_b", "wasserstein"), "wasserstein.file_b");
      break;
    }
    case Command::Meanfield: {
      cfg.model = parse_model(doc);
      cfg.kernel = parse_kernel(doc);
      cfg.initial = parse_initial(doc, dir, false);
      if (!cfg.initial.sampler) fail("initial", "meanfield needs a sampler, not state_csv");
      cfg.time = parse_time(doc, false);
      const json& m = member(doc, "meanfield", "config");
      const json& sizes = member(m, "sizes", "meanfield");
      if (!sizes.is_array() || sizes.size() < 2) {
        fail("meanfield.sizes", "expected an array of at least two sizes");
      }
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        const long long n = integer(sizes[i], "meanfield.sizes[" + std::to_string(i) + "]");
        if (n < 1) fail("meanfield.sizes[" + std::to_string(i) + "]", "must be at least 1");
        cfg.meanfield.sizes.push_back(static_cast<Eigen::Index>(n));
      }
      const json& seeds = member(m, "seeds", "meanfield");
      if (!seeds.is_array() || seeds.empty()) {
        fail("meanfield.seeds", "expected a nonempty array of seeds");
      }
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        const long long s = integer(seeds[i], "meanfield.seeds[" + std::to_string(i) + "]");
        if (s < 0) fail("meanfield.seeds[" + std::to_string(i) + "]", "must be nonnegative");
        cfg.meanfield.seeds.push_back(static_cast<std::uint64_t>(s));
      }
      const json& cps = member(m, "checkpoints", "meanfield");
      if (!cps.is_array() || cps.empty()) {
        fail("meanfield.checkpoints", "expected a nonempty array of times");
      }
      for (std::size_t i = 0; i < cps.size(); ++i) {
        cfg.meanfield.checkpoints.push_back(
            number(cps[i], "meanfield.checkpoints[" + std::to_string(i) + "]"));
      }
      break;
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file, Command cmd) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + file.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc, file.has_parent_path() ? file.parent_path() : ".", cmd);
}

}  // namespace herd::cli
