#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "herd/experiments.hpp"
#include "herd/suite.hpp"

using herd::DistributionSpec;
using herd::GaussianSpec;
using herd::InitialSampler;
using herd::KernelSpecd;
using herd::ModelParamsd;
using herd::ParticleStated;
using herd::TwoClusterSpec;
using herd::UniformBoxSpec;

namespace {

UniformBoxSpec unit_box(Eigen::Index d) {
  UniformBoxSpec u;
  u.position_box.resize(d, 2);
  u.velocity_box.resize(d, 2);
  for (Eigen::Index k = 0; k < d; ++k) {
    u.position_box.row(k) << -1.0, 1.0;
    u.velocity_box.row(k) << -1.0, 1.0;
  }
  return u;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("sampler prefixes coincide across sizes") {
  GaussianSpec g;
  g.mean_x = herd::Vecd::Zero(2);
  g.sd_x = herd::Vecd::Ones(2);
  g.mean_v = herd::Vecd::Zero(2);
  g.sd_v = herd::Vecd::Ones(2);
  TwoClusterSpec tc;
  tc.offset_x = (herd::Vecd(2) << 1.0, 0.0).finished();
  tc.offset_v = (herd::Vecd(2) << 0.0, 0.5).finished();
  tc.spread = 0.1;
  const DistributionSpec specs[] = {unit_box(2), g, tc};
  for (const auto& spec : specs) {
    const auto small = herd::sample(InitialSampler{spec, 7}, 5);
    const auto large = herd::sample(InitialSampler{spec, 7}, 50);
    CHECK((large.positions.topRows(5) - small.positions).cwiseAbs().maxCoeff() == 0.0);
    CHECK((large.velocities.topRows(5) - small.velocities).cwiseAbs().maxCoeff() == 0.0);
  }
  // A different seed produces a different draw.
  const auto other = herd::sample(InitialSampler{specs[0], 8}, 5);
  const auto base = herd::sample(InitialSampler{specs[0], 7}, 5);
  CHECK((other.positions - base.positions).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("uniform box respects its bounds") {
  UniformBoxSpec u;
  u.position_box.resize(2, 2);
  u.position_box << -1.0, 2.0, 0.0, 1.0;
  u.velocity_box.resize(2, 2);
  u.velocity_box << -0.5, 0.5, -2.0, -1.0;
  const auto s = herd::sample(InitialSampler{u, 3}, 200);
  CHECK(s.positions.col(0).minCoeff() >= -1.0);
  CHECK(s.positions.col(0).maxCoeff() < 2.0);
  CHECK(s.positions.col(1).minCoeff() >= 0.0);
  CHECK(s.positions.col(1).maxCoeff() < 1.0);
  CHECK(s.velocities.col(1).minCoeff() >= -2.0);
  CHECK(s.velocities.col(1).maxCoeff() < -1.0);
}

TEST_CASE("two-cluster sampler splits by parity") {
  TwoClusterSpec tc;
  tc.offset_x = (herd::Vecd(1) << 2.0).finished();
  tc.offset_v = (herd::Vecd(1) << 1.0).finished();
  tc.spread = 0.25;
  const auto s = herd::sample(InitialSampler{tc, 11}, 40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    CHECK(std::abs(s.positions(i, 0) - sign * 2.0) <= 0.25);
    CHECK(std::abs(s.velocities(i, 0) - sign * 1.0) <= 0.25);
  }
}

TEST_CASE("gaussian sampler is centered and truncated") {
  GaussianSpec g;
  g.mean_x = (herd::Vecd(1) << 3.0).finished();
  g.sd_x = (herd::Vecd(1) << 1.0).finished();
  g.mean_v = (herd::Vecd(1) << -1.0).finished();
  g.sd_v = (herd::Vecd(1) << 0.5).finished();
  const auto s = herd::sample(InitialSampler{g, 99}, 4000);
  CHECK(std::abs(s.positions.col(0).mean() - 3.0) <= 0.1);
  CHECK(std::abs(s.velocities.col(0).mean() + 1.0) <= 0.05);
  CHECK((s.positions.col(0).array() - 3.0).abs().maxCoeff() <= 6.0);
  CHECK((s.velocities.col(0).array() + 1.0).abs().maxCoeff() <= 3.0);
}

TEST_CASE("sampler specs are validated") {
  UniformBoxSpec bad = unit_box(2);
  bad.position_box(0, 1) = -2.0;  // lo > hi
  CHECK_THROWS_AS(herd::sample(InitialSampler{bad, 1}, 4), std::invalid_argument);
  GaussianSpec g;
  g.mean_x = herd::Vecd::Zero(2);
  g.sd_x = (herd::Vecd(2) << 1.0, -1.0).finished();
  g.mean_v = herd::Vecd::Zero(2);
  g.sd_v = herd::Vecd::Ones(2);
  CHECK_THROWS_AS(herd::sample(InitialSampler{g, 1}, 4), std::invalid_argument);
  CHECK_THROWS_AS(herd::sample(InitialSampler{unit_box(2), 1}, 0), std::invalid_argument);
}

TEST_CASE("snapshot helper matches the recording integrator") {
  const auto init = herd::sample(InitialSampler{unit_box(2), 17}, 4);
  const ModelParamsd p{1.0, 0.5, 1.0};
  const auto k = KernelSpecd::constant(1.0);
  const double dt = 0.01;
  const auto snaps = herd::detail::states_at_steps(init, p, k, dt, {0, 5, 10});
  const auto traj = herd::simulate(init, p, k, dt, 0.1, 5);
  REQUIRE(snaps.size() == 3);
  REQUIRE(traj.states.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((snaps[i].positions - traj.states[i].positions).cwiseAbs().maxCoeff() == 0.0);
    CHECK((snaps[i].velocities - traj.states[i].velocities).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("meanfield study couples runs and aggregates medians") {
  const std::vector<Eigen::Index> sizes = {4, 8, 16};
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const ModelParamsd p{1.0, 0.5, 1.0};
  const auto k = KernelSpecd::constant(1.0);
  const auto res = herd::meanfield_convergence(unit_box(2), sizes, seeds, p, k, 0.01,
                                               {0.05, 0.1}, 1);
  REQUIRE(res.rows.size() == 12);  // 3 seeds x 2 small sizes x 2 checkpoints
  REQUIRE(res.medians.size() == 4);
  CHECK(res.rows[0].seed == 1);
  CHECK(res.rows[0].n == 4);
  CHECK(res.rows[0].t == doctest::Approx(0.05).epsilon(1e-12));
  for (const auto& row : res.rows) CHECK(row.w1 > 0.0);

  // Medians aggregate the per-seed values of one (size, time) cell.
  for (std::size_t zi = 0; zi < 2; ++zi) {
    for (std::size_t ci = 0; ci < 2; ++ci) {
      std::vector<double> vals;
      for (std::size_t si = 0; si < seeds.size(); ++si) {
        vals.push_back(res.rows[si * 4 + zi * 2 + ci].w1);
      }
      std::sort(vals.begin(), vals.end());
      CHECK(res.medians[zi * 2 + ci].w1_median == vals[1]);
    }
  }

  // Run-level parallelism only changes scheduling, never results.
  const auto res4 = herd::meanfield_convergence(unit_box(2), sizes, seeds, p, k, 0.01,
                                                {0.05, 0.1}, 4);
  REQUIRE(res4.rows.size() == res.rows.size());
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    CHECK(res4.rows[i].w1 == res.rows[i].w1);
  }
  CHECK(res4.medians_strictly_decreasing == res.medians_strictly_decreasing);
}

TEST_CASE("meanfield study validates its arguments") {
  const ModelParamsd p{1.0, 0.5, 1.0};
  const auto k = KernelSpecd::constant(1.0);
  const auto box = unit_box(1);
  CHECK_THROWS_AS(herd::meanfield_convergence(box, {8}, {1}, p, k, 0.01, {0.1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(herd::meanfield_convergence(box, {8, 8}, {1}, p, k, 0.01, {0.1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(herd::meanfield_convergence(box, {4, 8}, {}, p, k, 0.01, {0.1}),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(herd::meanfield_convergence(box, {4, 8}, {1}, p, k, 0.01, {0.1, 0.1}),
                       doctest::Contains("strictly increasing"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(herd::meanfield_convergence(box, {4, 8}, {1}, p, k, 0.01, {0.033}),
                       doctest::Contains("multiples of dt"), std::invalid_argument);
}

TEST_CASE("decay fit recovers an exact exponential") {
  std::vector<double> ts, vs;
  for (int i = 0; i <= 100; ++i) {
    ts.push_back(0.1 * i);
    vs.push_back(3.0 * std::exp(-0.37 * 0.1 * i));
  }
  const auto fit = herd::fit_decay_rate(ts, vs, 1.0, 6.0);
  CHECK(fit.beta_emp == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.points == 51);

  // flat data has no trend to explain, so only the rate is pinned down
  std::vector<double> flat(ts.size(), 2.0);
  const auto fit0 = herd::fit_decay_rate(ts, flat, 1.0, 6.0);
  CHECK(std::abs(fit0.beta_emp) <= 1e-14);

  CHECK_THROWS_WITH_AS(herd::fit_decay_rate(ts, vs, 9.99, 10.0),
                       doctest::Contains("five"), std::invalid_argument);
  CHECK_THROWS_AS(herd::fit_decay_rate({0, 1}, {1.0}, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("stability ratio tracks coupled runs") {
  const auto a = herd::sample(InitialSampler{unit_box(2), 31}, 6);
  ParticleStated b = a;
  b.positions.array() += 1e-3;
  const ModelParamsd p{1.0, 0.5, 1.0};
  const auto k = KernelSpecd::constant(1.0);
  const auto res = herd::stability_ratio(a, b, p, k, 0.01, {0.2, 0.4});
  CHECK(res.w1_initial > 0.0);
  REQUIRE(res.points.size() == 2);
  for (const auto& pt : res.points) {
    CHECK(pt.ratio > 0.0);
    CHECK(pt.ratio < 10.0);
  }
  CHECK(res.sup_ratio >= res.points[0].ratio);
  CHECK_THROWS_WITH_AS(herd::stability_ratio(a, a, p, k, 0.01, {0.2}),
                       doctest::Contains("coincide"), std::invalid_argument);
}

TEST_CASE("tail harness reaches the threshold under full herding hypotheses") {
  const auto init = herd::sample(InitialSampler{unit_box(1), 13}, 4);
  const ModelParamsd p{1.0, 1.0, 1.0};
  const auto res = herd::tail_decay(init, p, KernelSpecd::constant(1.0), 1e-2, 2.0, 0.05, 6);
  CHECK(res.reached);
  CHECK(res.final_ratio <= 0.05);
  CHECK(res.checkpoints.size() == std::size_t(res.doublings_used) + 1);
  CHECK(res.final_t == doctest::Approx(2.0 * std::pow(2.0, res.doublings_used)).epsilon(1e-9));

  ParticleStated consensus;
  consensus.t = 0.0;
  consensus.positions = herd::Matd::Zero(3, 1);
  consensus.velocities = herd::Matd::Zero(3, 1);
  CHECK_THROWS_WITH_AS(herd::tail_decay(consensus, p, KernelSpecd::constant(1.0), 1e-2, 1.0,
                                        0.05, 2),
                       doctest::Contains("consensus"), std::invalid_argument);
}

TEST_CASE("verification suite passes when the smallness condition holds") {
  const auto init = herd::sample(InitialSampler{unit_box(2), 3}, 8);
  const ModelParamsd p{1.0, 0.5, 2.0};  // condition margin 0.5 - 0.0625
  herd::SuiteOptions opt;
  const auto rep = herd::herding_suite(init, p, KernelSpecd::constant(1.0), 1e-3, 2.0, opt);
  REQUIRE(rep.rate.has_value());
  CHECK(rep.rate->condition_holds);
  CHECK(rep.all_pass());
  const char* expected[] = {"conservation_velocity", "conservation_center", "energy_monotone",
                            "cauchy_schwarz", "weighted_sandwich", "k_positivity",
                            "velocity_integral_bound", "condition_c12", "k_envelope",
                            "x_envelope", "decay_fit", "tail_decay"};
  for (const char* name : expected) {
    bool found = false;
    for (const auto& c : rep.checks) {
      if (c.name == name) {
        found = true;
        CHECK(c.status == herd::CheckStatus::Pass);
      }
    }
    CHECK_MESSAGE(found, name);
  }
}

TEST_CASE("verification suite reports not-applicable when the condition fails") {
  const auto init = herd::sample(InitialSampler{unit_box(2), 3}, 8);
  const ModelParamsd p{1.0, 1.0, 1.0};  // smallness condition violated
  const auto rep = herd::herding_suite(init, p, KernelSpecd::constant(1.0), 1e-3, 2.0);
  REQUIRE(rep.rate.has_value());
  CHECK(!rep.rate->condition_holds);
  CHECK(rep.all_pass());  // a violated hypothesis is not a defect of the run
  for (const auto& c : rep.checks) {
    if (c.name == "condition_c12" || c.name == "k_envelope" || c.name == "x_envelope" ||
        c.name == "decay_fit") {
      CHECK(c.status == herd::CheckStatus::NotApplicable);
    }
    if (c.name == "tail_decay") CHECK(c.status == herd::CheckStatus::Pass);
  }
}

TEST_CASE("verification suite handles consensus and disabled harness") {
  ParticleStated consensus;
  consensus.t = 0.0;
  consensus.positions = herd::Matd::Zero(4, 2);
  consensus.velocities = herd::Matd::Zero(4, 2);
  herd::SuiteOptions opt;
  opt.run_tail_harness = false;
  const auto rep = herd::herding_suite(consensus, ModelParamsd{1.0, 0.5, 2.0},
                                       KernelSpecd::constant(1.0), 1e-2, 0.1, opt);
  CHECK(rep.all_pass());
  for (const auto& c : rep.checks) {
    if (c.name == "tail_decay") CHECK(c.status == herd::CheckStatus::NotApplicable);
  }
}

}  // TEST_SUITE
