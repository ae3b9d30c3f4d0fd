#include "io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace herd::io {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::invalid_argument("parse_double: bad number '" + text + "'");
  }
  return v;
}

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::vector<std::string> nonempty_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void append_phase_header(std::string& out, Eigen::Index d) {
  for (Eigen::Index k = 0; k < d; ++k) out += ",x_" + std::to_string(k + 1);
  for (Eigen::Index k = 0; k < d; ++k) out += ",v_" + std::to_string(k + 1);
}

// Header layout id,x_1..x_d,v_1..v_d(,extra); returns d.
Eigen::Index parse_phase_header(const std::vector<std::string>& cols, std::size_t first,
                                std::size_t reserved_tail, const char* what) {
  const std::size_t usable = cols.size() - first - reserved_tail;
  if (usable == 0 || usable % 2 != 0) {
    throw std::invalid_argument(std::string(what) + ": header needs x_1..x_d,v_1..v_d columns");
  }
  const auto d = static_cast<Eigen::Index>(usable / 2);
  for (Eigen::Index k = 0; k < d; ++k) {
    if (cols[first + static_cast<std::size_t>(k)] != "x_" + std::to_string(k + 1) ||
        cols[first + static_cast<std::size_t>(d + k)] != "v_" + std::to_string(k + 1)) {
      throw std::invalid_argument(std::string(what) + ": unexpected header column order");
    }
  }
  return d;
}

}  // namespace

std::string state_csv(const ParticleStated& s) {
  validate(s);
  std::string out = "id";
  append_phase_header(out, s.dim());
  out += "\n";
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    out += std::to_string(i);
    for (Eigen::Index k = 0; k < s.dim(); ++k) out += "," + format_double(s.positions(i, k));
    for (Eigen::Index k = 0; k < s.dim(); ++k) out += "," + format_double(s.velocities(i, k));
    out += "\n";
  }
  return out;
}

ParticleStated parse_state_csv(const std::string& text) {
  const auto lines = nonempty_lines(text);
  if (lines.size() < 2) throw std::invalid_argument("state csv: need a header and at least one row");
  const auto header = split_csv_line(lines[0]);
  if (header.empty() || header[0] != "id") {
    throw std::invalid_argument("state csv: first header column must be id");
  }
  const Eigen::Index d = parse_phase_header(header, 1, 0, "state csv");
  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  ParticleStated s;
  s.t = 0.0;
  s.positions.resize(n, d);
  s.velocities.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto cols = split_csv_line(lines[static_cast<std::size_t>(i) + 1]);
    if (static_cast<Eigen::Index>(cols.size()) != 1 + 2 * d) {
      throw std::invalid_argument("state csv: row " + std::to_string(i) + " has wrong column count");
    }
    for (Eigen::Index k = 0; k < d; ++k) {
      s.positions(i, k) = parse_double(cols[static_cast<std::size_t>(1 + k)]);
      s.velocities(i, k) = parse_double(cols[static_cast<std::size_t>(1 + d + k)]);
    }
  }
  validate(s);
  return s;
}

std::string trajectory_csv(const Trajectoryd& traj) {
  if (traj.states.empty()) throw std::invalid_argument("trajectory_csv: empty trajectory");
  std::string out = "t,id";
  append_phase_header(out, traj.states.front().dim());
  out += "\n";
  for (const auto& s : traj.states) {
    const std::string t = format_double(s.t);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      out += t + "," + std::to_string(i);
      for (Eigen::Index k = 0; k < s.dim(); ++k) out += "," + format_double(s.positions(i, k));
      for (Eigen::Index k = 0; k < s.dim(); ++k) out += "," + format_double(s.velocities(i, k));
      out += "\n";
    }
  }
  return out;
}

nlohmann::json trajectory_json(const Trajectoryd& traj) {
  nlohmann::json snaps = nlohmann::json::array();
  for (const auto& s : traj.states) {
    nlohmann::json pos = nlohmann::json::array(), vel = nlohmann::json::array();
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      nlohmann::json prow = nlohmann::json::array(), vrow = nlohmann::json::array();
      for (Eigen::Index k = 0; k < s.dim(); ++k) {
        prow.push_back(s.positions(i, k));
        vrow.push_back(s.velocities(i, k));
      }
      pos.push_back(std::move(prow));
      vel.push_back(std::move(vrow));
    }
    snaps.push_back({{"t", s.t}, {"positions", std::move(pos)}, {"velocities", std::move(vel)}});
  }
  return {{"format_version", kFormatVersion},
          {"dt", traj.dt},
          {"record_every", traj.record_every},
          {"model", model_json(traj.params)},
          {"kernel", kernel_json(traj.kernel)},
          {"snapshots", std::move(snaps)}};
}

std::string functionals_csv(const std::vector<FunctionalSample<double>>& series) {
  std::string out = "t,X,V,C,M,X_phi,V_phi,C_phi,E,K\n";
  for (const auto& f : series) {
    out += format_double(f.t) + "," + format_double(f.X) + "," + format_double(f.V) + "," +
           format_double(f.C) + "," + format_double(f.M) + "," + format_double(f.X_phi) + "," +
           format_double(f.V_phi) + "," + format_double(f.C_phi) + "," + format_double(f.E) +
           "," + format_double(f.K) + "\n";
  }
  return out;
}

std::string measure_csv(const EmpiricalMeasure& m) {
  validate(m);
  const Eigen::Index d = m.phase_dim() / 2;
  std::string out = "id";
  append_phase_header(out, d);
  out += ",weight\n";
  for (Eigen::Index i = 0; i < m.count(); ++i) {
    out += std::to_string(i);
    for (Eigen::Index k = 0; k < m.phase_dim(); ++k) out += "," + format_double(m.atoms(i, k));
    out += "," + to_string(m.weights[static_cast<std::size_t>(i)]) + "\n";
  }
  return out;
}

EmpiricalMeasure parse_measure_csv(const std::string& text) {
  const auto lines = nonempty_lines(text);
  if (lines.size() < 2) throw std::invalid_argument("measure csv: need a header and at least one row");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header[0] != "id" || header.back() != "weight") {
    throw std::invalid_argument("measure csv: header must run id,x_1..,v_1..,weight");
  }
  const Eigen::Index d = parse_phase_header(header, 1, 1, "measure csv");
  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  EmpiricalMeasure m;
  m.atoms.resize(n, 2 * d);
  m.weights.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto cols = split_csv_line(lines[static_cast<std::size_t>(i) + 1]);
    if (static_cast<Eigen::Index>(cols.size()) != 2 + 2 * d) {
      throw std::invalid_argument("measure csv: row " + std::to_string(i) +
                                  " has wrong column count");
    }
    for (Eigen::Index k = 0; k < 2 * d; ++k) {
      m.atoms(i, k) = parse_double(cols[static_cast<std::size_t>(1 + k)]);
    }
    m.weights[static_cast<std::size_t>(i)] = parse_rational(cols.back());
  }
  validate(m);
  return m;
}

nlohmann::json model_json(const ModelParamsd& p) {
  return {{"lambda_w", p.lambda_w}, {"lambda_x", p.lambda_x}, {"lambda_v", p.lambda_v}};
}

nlohmann::json kernel_json(const KernelSpecd& k) {
  switch (k.family) {
    case KernelFamily::Constant:
      return {{"family", "constant"}, {"c", k.c}};
    case KernelFamily::CuckerSmale:
      return {{"family", "cucker_smale"}, {"gamma", k.gamma}};
    case KernelFamily::Tabulated: {
      nlohmann::json knots = nlohmann::json::array();
      for (Eigen::Index i = 0; i < k.knots.rows(); ++i) {
        knots.push_back({k.knots(i, 0), k.knots(i, 1)});
      }
      return {{"family", "tabulated"}, {"knots", std::move(knots)}};
    }
  }
  throw std::logic_error("kernel_json: unknown family");
}

}  // namespace herd::io
