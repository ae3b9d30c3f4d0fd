#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "herd/transport.hpp"
#include "io.hpp"

namespace fs = std::filesystem;
using herd::Rational;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("herd_io_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("doubles serialize shortest and round trip exactly") {
  const double values[] = {0.0,  0.1, 1.0 / 3.0, 2.0 / std::exp(1.0), 1e-300, -17.25,
                           1e17, 123456789.123456789};
  for (const double v : values) {
    const std::string s = herd::io::format_double(v);
    CHECK(herd::io::parse_double(s) == v);
  }
  CHECK(herd::io::format_double(0.5) == "0.5");
  CHECK(herd::io::format_double(-0.25) == "-0.25");
  CHECK_THROWS_AS(herd::io::parse_double("12x"), std::invalid_argument);
  CHECK_THROWS_AS(herd::io::parse_double(""), std::invalid_argument);
}

TEST_CASE("state csv round trips bitwise") {
  herd::ParticleStated s;
  s.t = 0.0;
  s.positions.resize(3, 2);
  s.positions << 0.1, -0.2, 1.0 / 3.0, 0.7, -1e-10, 2.5;
  s.velocities.resize(3, 2);
  s.velocities << -0.5, 0.25, 0.125, -1.0 / 7.0, 3.25, 0.0;
  const std::string text = herd::io::state_csv(s);
  CHECK(text.rfind("id,x_1,x_2,v_1,v_2\n", 0) == 0);
  const auto back = herd::io::parse_state_csv(text);
  CHECK((back.positions - s.positions).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.velocities - s.velocities).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(herd::io::parse_state_csv("id,x_1\n0,1\n"), std::invalid_argument);
  CHECK_THROWS_AS(herd::io::parse_state_csv("nope\n"), std::invalid_argument);
}

TEST_CASE("trajectory csv is laid out row per time and agent") {
  herd::Trajectoryd traj;
  traj.params = herd::ModelParamsd{1.0, 0.5, 2.0};
  traj.kernel = herd::KernelSpecd::constant(1.0);
  traj.dt = 0.5;
  traj.record_every = 1;
  herd::ParticleStated a;
  a.t = 0.0;
  a.positions.resize(2, 1);
  a.positions << 0.5, -0.5;
  a.velocities.resize(2, 1);
  a.velocities << 0.25, -0.25;
  herd::ParticleStated b = a;
  b.t = 0.5;
  b.positions << 0.625, -0.625;
  traj.states = {a, b};
  CHECK(herd::io::trajectory_csv(traj) ==
        "t,id,x_1,v_1\n"
        "0,0,0.5,0.25\n"
        "0,1,-0.5,-0.25\n"
        "0.5,0,0.625,0.25\n"
        "0.5,1,-0.625,-0.25\n");

  const auto doc = herd::io::trajectory_json(traj);
  CHECK(doc["format_version"] == herd::io::kFormatVersion);
  CHECK(doc["dt"] == 0.5);
  CHECK(doc["snapshots"].size() == 2);
  CHECK(doc["snapshots"][1]["positions"][0][0] == 0.625);
}

TEST_CASE("functionals csv carries the fixed header") {
  herd::FunctionalSample<double> f{};
  f.t = 0.25;
  f.X = 1.5;
  const std::string text = herd::io::functionals_csv({f});
  CHECK(text ==
        "t,X,V,C,M,X_phi,V_phi,C_phi,E,K\n"
        "0.25,1.5,0,0,0,0,0,0,0,0\n");
}

TEST_CASE("measure csv round trips rational weights") {
  herd::EmpiricalMeasure m;
  m.atoms.resize(2, 2);
  m.atoms << 0.5, 1.25, -0.75, 2.0;
  m.weights = {Rational(1, 3), Rational(2, 3)};
  const std::string text = herd::io::measure_csv(m);
  CHECK(text.rfind("id,x_1,v_1,weight\n", 0) == 0);
  CHECK(text.find("1/3") != std::string::npos);
  const auto back = herd::io::parse_measure_csv(text);
  CHECK((back.atoms - m.atoms).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.weights[0] == Rational(1, 3));
  CHECK(back.weights[1] == Rational(2, 3));

  // Weights failing to sum to one are rejected at parse time.
  CHECK_THROWS_AS(herd::io::parse_measure_csv("id,x_1,v_1,weight\n0,0,0,1/2\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(herd::io::parse_measure_csv("id,x_1,v_1,weight\n0,0,0,1/0\n"),
                  std::invalid_argument);
}

TEST_CASE("atomic writes create parents and replace contents") {
  const fs::path dir = fresh_dir("atomic");
  const fs::path file = dir / "nested" / "out.txt";
  herd::io::atomic_write_text(file, "first\n");
  CHECK(herd::io::read_text(file) == "first\n");
  herd::io::atomic_write_text(file, "second\n");
  CHECK(herd::io::read_text(file) == "second\n");
  CHECK(!fs::exists(file.string() + ".tmp"));
  CHECK_THROWS_AS(herd::io::read_text(dir / "missing.txt"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("model and kernel serialize to json") {
  const auto mj = herd::io::model_json(herd::ModelParamsd{1.0, 0.1, 10.0});
  CHECK(mj["lambda_w"] == 1.0);
  CHECK(mj["lambda_x"] == 0.1);
  CHECK(mj["lambda_v"] == 10.0);

  const auto cj = herd::io::kernel_json(herd::KernelSpecd::constant(2.0));
  CHECK(cj["family"] == "constant");
  CHECK(cj["c"] == 2.0);
  const auto gj = herd::io::kernel_json(herd::KernelSpecd::cucker_smale(1.5));
  CHECK(gj["family"] == "cucker_smale");
  CHECK(gj["gamma"] == 1.5);
  herd::Matd knots(2, 2);
  knots << 0.0, 1.0, 2.0, 0.0;
  const auto tj = herd::io::kernel_json(herd::KernelSpecd::tabulated(knots));
  CHECK(tj["family"] == "tabulated");
  CHECK(tj["knots"].size() == 2);
  CHECK(tj["knots"][1][0] == 2.0);
}

}  // TEST_SUITE
