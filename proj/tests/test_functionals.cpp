#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "herd/functionals.hpp"

using herd::KernelSpecd;
using herd::ModelParamsd;
using herd::ParticleStated;

namespace {

ParticleStated antipodal_pair() {
  ParticleStated s;
  s.t = 0.0;
  s.positions.resize(2, 1);
  s.positions << 1.0, -1.0;
  s.velocities.resize(2, 1);
  s.velocities << 1.0, -1.0;
  return s;
}

ParticleStated random_state(Eigen::Index n, Eigen::Index d, unsigned seed) {
  std::mt19937 eng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ParticleStated s;
  s.t = 0.0;
  s.positions.resize(n, d);
  s.velocities.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      s.positions(i, k) = u(eng);
      s.velocities(i, k) = u(eng);
    }
  }
  return s;
}

}  // namespace

TEST_SUITE("functionals") {

TEST_CASE("pair functionals on an antipodal two-agent state") {
  const auto s = antipodal_pair();
  const auto e = herd::deviation_energies(s);
  CHECK(e.X == 1.0);
  CHECK(e.V == 1.0);
  CHECK(e.C == 1.0);

  const auto w1 = herd::weighted_functionals(s, KernelSpecd::constant(1.0));
  CHECK(w1.X_phi == 2.0);  // ordered pairs, diagonal terms vanish
  CHECK(w1.V_phi == 2.0);
  CHECK(w1.C_phi == 2.0);
  CHECK(w1.M == 1.0);  // Phi(2) = 2 at unit constant kernel, two off-diagonal pairs

  const auto w2 = herd::weighted_functionals(s, KernelSpecd::cucker_smale(1.0));
  CHECK(w2.X_phi == doctest::Approx(0.4).epsilon(1e-15));  // phi(2) = 1/5
  CHECK(w2.M == doctest::Approx(0.25 * std::log(5.0)).epsilon(1e-13));

  CHECK(herd::herding_energy(s, ModelParamsd{1.0, 1.0, 1.0}, KernelSpecd::constant(1.0)) == 3.0);
}

TEST_CASE("cauchy-schwarz and sandwich hold on random states") {
  const auto k = KernelSpecd::cucker_smale(1.0);
  for (unsigned seed = 0; seed < 20; ++seed) {
    const auto s = random_state(6, 2, 100 + seed);
    const auto e = herd::deviation_energies(s);
    const auto w = herd::weighted_functionals(s, k);
    CHECK(e.C * e.C <= e.X * e.V * (1.0 + 1e-12));
    CHECK(w.C_phi * w.C_phi <= w.X_phi * w.V_phi * (1.0 + 1e-12));

    const double diam = 2.0 * herd::support_radii(s).position;
    const auto b = herd::kernel_bounds(k, std::max(diam, 1e-9));
    CHECK(w.X_phi >= b.phi_min * 2.0 * e.X * (1.0 - 1e-12));
    CHECK(w.X_phi <= b.phi_max * 2.0 * e.X * (1.0 + 1e-12));
    CHECK(w.V_phi >= b.phi_min * 2.0 * e.V * (1.0 - 1e-12));
    CHECK(w.V_phi <= b.phi_max * 2.0 * e.V * (1.0 + 1e-12));
    CHECK(w.M >= b.phi_min * e.X * (1.0 - 1e-12));
    CHECK(w.M <= b.phi_max * e.X * (1.0 + 1e-12));
  }
}

TEST_CASE("decay parameters at the reference strengths") {
  const auto d = herd::decay_params(ModelParamsd{1.0, 0.1, 10.0}, 1.0, 1.0);
  CHECK(d.theta == 0.5);
  const double alpha_expect = 0.2 / 110.0;
  CHECK(d.alpha == doctest::Approx(alpha_expect).epsilon(1e-15));
  CHECK(d.c12_lhs == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(d.c12_rhs == 0.5);
  CHECK(d.condition_holds);
  const double delta_expect = 0.99 * 2.0 / (2.0 + alpha_expect);
  CHECK(d.delta == doctest::Approx(delta_expect).epsilon(1e-15));
  CHECK(d.beta == doctest::Approx(0.5 * alpha_expect * delta_expect).epsilon(1e-15));
  CHECK(d.beta == doctest::Approx(8.9918e-4).epsilon(1e-4));

  const auto c = herd::check_condition_c12(ModelParamsd{1.0, 0.1, 10.0}, 1.0, 1.0);
  CHECK(c.holds);
  CHECK(c.margin == doctest::Approx(0.4999).epsilon(1e-10));
}

TEST_CASE("decay parameters guard their hypotheses") {
  CHECK_THROWS_WITH_AS(herd::decay_params(ModelParamsd{1.0, 0.0, 1.0}, 1.0, 1.0),
                       doctest::Contains("rate-free"), std::invalid_argument);
  CHECK_THROWS_AS(herd::decay_params(ModelParamsd{1.0, 1.0, 0.0}, 1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(herd::decay_params(ModelParamsd{0.0, 1.0, 1.0}, 1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(herd::decay_params(ModelParamsd{1.0, 1.0, 1.0}, 2.0, 1.0),
                  std::invalid_argument);

  // A vanishing kernel floor leaves the condition unsatisfiable.
  const auto d = herd::decay_params(ModelParamsd{1.0, 1.0, 1.0}, 0.0, 1.0);
  CHECK(std::isinf(d.c12_lhs));
  CHECK(!d.condition_holds);
  CHECK(d.beta < 0.0);
  CHECK_THROWS_WITH_AS(herd::check_condition_c12(ModelParamsd{1.0, 1.0, 1.0}, 0.0, 1.0),
                       doctest::Contains("does not apply"), std::invalid_argument);
}

TEST_CASE("condition margin scales as expected") {
  // Strong velocity alignment satisfies the smallness condition, weak violates.
  CHECK(herd::check_condition_c12(ModelParamsd{1.0, 0.5, 2.0}, 1.0, 1.0).holds);
  CHECK(!herd::check_condition_c12(ModelParamsd{1.0, 1.0, 1.0}, 1.0, 1.0).holds);
}

TEST_CASE("balance identities hold along an integrated run") {
  const auto init = random_state(8, 2, 7);
  const ModelParamsd p{1.0, 0.5, 1.0};
  const auto k = KernelSpecd::cucker_smale(1.0);
  const auto traj = herd::simulate(init, p, k, 5e-4, 0.5);

  const auto r = herd::derivative_residuals(traj);
  for (int i = 0; i < 4; ++i) {
    CHECK(r.max_rel[i] <= 1e-4);
  }

  const auto e = herd::energy_dissipation_residual(traj);
  CHECK(e.max_rel <= 1e-4);

  const auto series = herd::functional_series(traj, 0.0);
  for (std::size_t j = 0; j + 1 < series.size(); ++j) {
    CHECK(series[j + 1].E <= series[j].E + 1e-12 * (1.0 + series.front().E));
  }
}

TEST_CASE("a vanishing kernel conserves the reduced energy") {
  herd::Matd zero_knots(2, 2);
  zero_knots << 0.0, 0.0, 1.0, 0.0;
  const auto k = KernelSpecd::tabulated(zero_knots);
  const ModelParamsd p{1.0, 0.7, 0.3};
  const auto traj = herd::simulate(random_state(5, 2, 8), p, k, 1e-3, 1.0);
  const auto series = herd::functional_series(traj, 0.0);
  const double e0 = series.front().E;
  for (const auto& f : series) {
    CHECK(std::abs(f.E - e0) <= 1e-9 * (1.0 + e0));
    CHECK(f.M == 0.0);
    CHECK(f.X_phi == 0.0);
    CHECK(f.V_phi == 0.0);
    CHECK(f.C_phi == 0.0);
  }
}

TEST_CASE("alpha enters only the weighted energy K") {
  const auto s = random_state(6, 2, 9);
  const ModelParamsd p{1.0, 0.5, 1.0};
  const auto k = KernelSpecd::cucker_smale(1.0);
  const auto f0 = herd::sample_functionals(s, p, k, 0.0);
  const auto f1 = herd::sample_functionals(s, p, k, 0.3);
  CHECK(f0.X == f1.X);
  CHECK(f0.V == f1.V);
  CHECK(f0.C == f1.C);
  CHECK(f0.E == f1.E);
  CHECK(f1.K - f0.K == doctest::Approx(0.3 * f0.C).epsilon(1e-12));
}

TEST_CASE("residual computation needs three recorded states") {
  const auto traj = herd::simulate(random_state(3, 1, 10), ModelParamsd{1.0, 0.5, 1.0},
                                   KernelSpecd::constant(1.0), 0.1, 0.1);
  CHECK_THROWS_AS(herd::derivative_residuals(traj), std::invalid_argument);
  CHECK_THROWS_AS(herd::energy_dissipation_residual(traj), std::invalid_argument);
}

}  // TEST_SUITE
