#pragma once

// File formats of the toolkit. All numbers are written with the shortest
// decimal representation that round-trips (std::to_chars), so identical
// in-memory results serialize to identical bytes. Writes go through a
// temporary file plus rename, so readers never see a half-written file.
//
// CSV schemas (format version 1):
//   state:       id,x_1..x_d,v_1..v_d
//   trajectory:  t,id,x_1..x_d,v_1..v_d          (one row per time and agent)
//   functionals: t,X,V,C,M,X_phi,V_phi,C_phi,E,K
//   measure:     id,x_1..x_d,v_1..v_d,weight     (weight as exact rational)
//   meanfield:   seed,n,t,w1 / n,t,w1_median

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "herd/dynamics.hpp"
#include "herd/functionals.hpp"
#include "herd/transport.hpp"
#include "herd/types.hpp"

namespace herd::io {

inline constexpr int kFormatVersion = 1;

std::string format_double(double v);
double parse_double(const std::string& text);

void atomic_write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

std::string state_csv(const ParticleStated& s);
ParticleStated parse_state_csv(const std::string& text);

std::string trajectory_csv(const Trajectoryd& traj);
nlohmann::json trajectory_json(const Trajectoryd& traj);

std::string functionals_csv(const std::vector<FunctionalSample<double>>& series);

std::string measure_csv(const EmpiricalMeasure& m);
EmpiricalMeasure parse_measure_csv(const std::string& text);

nlohmann::json model_json(const ModelParamsd& p);
nlohmann::json kernel_json(const KernelSpecd& k);

}  // namespace herd::io
