#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "stripnet/mc.hpp"

using namespace stripnet;
using linktime::Direction;

namespace {

// CDF of the position density exp(m x)/norm on [0, d], used as an
// independent reference for the inverse-CDF sampler.
double position_cdf(double m, double d, double x) {
  if (m == 0.0) return x / d;
  return std::expm1(m * x) / std::expm1(m * d);
}

}  // namespace

TEST_CASE("McConfig validation") {
  mc::McConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.samples = 100;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.batch_count = 5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("sample_segment_position stays inside its segment") {
  CounterRng rng(11);
  for (double m : {-0.05, 0.0, 0.004, 8.0}) {
    for (int s = 0; s < 2000; ++s) {
      const double x = mc::sample_segment_position(m, 100.0, 3, rng);
      CHECK(x >= 200.0);
      CHECK(x <= 300.0);
    }
  }
  CHECK_THROWS_AS(mc::sample_segment_position(0.1, 0.0, 1, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(mc::sample_segment_position(0.1, 10.0, 0, rng),
                  std::invalid_argument);
}

TEST_CASE("sample_segment_position reproduces mean and CDF of the density") {
  const double d = 100.0;
  const int n = 100000;
  struct Case {
    double m;
    double mean;  // computed with an external integrator
  };
  // Increasing density (m > 0) concentrates mass toward the segment's end.
  for (const Case& c : {Case{-0.05, 19.321634509370}, Case{0.004, 53.324478171974},
                        Case{8.0, 99.875}}) {
    CounterRng rng(21);
    double sum = 0.0;
    std::vector<double> offsets;
    offsets.reserve(n);
    for (int s = 0; s < n; ++s) {
      const double x = mc::sample_segment_position(c.m, d, 2, rng) - d;
      sum += x;
      offsets.push_back(x);
    }
    const double mean = sum / n;
    // Offsets live in [0, d], so the sd is bounded by d/2.
    CHECK(std::fabs(mean - c.mean) < 5.0 * (d / 2.0) / std::sqrt(double(n)));

    for (double q : {25.0, 50.0, 75.0}) {
      const double expected = position_cdf(c.m, d, q);
      const double empirical =
          std::count_if(offsets.begin(), offsets.end(),
                        [&](double x) { return x <= q; }) /
          static_cast<double>(n);
      const double se =
          std::sqrt(std::max(expected * (1.0 - expected), 1e-12) / n);
      CHECK(std::fabs(empirical - expected) < 5.0 * se + 1e-9);
    }
  }
}

TEST_CASE("estimate_direct_prob agrees with the exact one half") {
  mc::McConfig cfg;
  cfg.samples = 200000;
  cfg.seed = 1234;
  const mc::McEstimate est = mc::estimate_direct_prob(0.01, 100.0, 2, cfg);
  CHECK(est.samples == 200000);
  CHECK(est.std_error > 0.0);
  CHECK(std::fabs(est.mean - 0.5) <= 4.0 * est.std_error);
}

TEST_CASE("chi_square_critical_1pct tracks exact quantiles") {
  // Reference values from an external statistics library; the cube
  // approximation is weakest at one degree of freedom.
  CHECK(mc::chi_square_critical_1pct(1) == doctest::Approx(6.634897).epsilon(0.01));
  CHECK(mc::chi_square_critical_1pct(5) == doctest::Approx(15.086272).epsilon(0.004));
  CHECK(mc::chi_square_critical_1pct(10) == doctest::Approx(23.209251).epsilon(0.003));
  CHECK(mc::chi_square_critical_1pct(30) == doctest::Approx(50.892181).epsilon(0.002));
  CHECK(mc::chi_square_critical_1pct(60) == doctest::Approx(88.379419).epsilon(0.001));
  CHECK_THROWS_AS(mc::chi_square_critical_1pct(0), std::invalid_argument);
}

TEST_CASE("simulate_population rejects a horizon without steady state") {
  mc::McConfig cfg;
  cfg.samples = 2000;
  // Warm-up alone needs 5 * 50 s; 100 s cannot cover the window.
  CHECK_THROWS_AS(mc::simulate_population(0.5, 10.0, 0.0, 500.0, 100.0, cfg),
                  std::invalid_argument);
}

TEST_CASE("simulate_population with no arrivals is trivially Poisson") {
  mc::McConfig cfg;
  cfg.samples = 1000;
  cfg.batch_count = 10;
  const double horizon = (5.0 + 1001.0) * 50.0;
  const mc::PopulationResult r =
      mc::simulate_population(0.0, 10.0, 0.0, 500.0, horizon, cfg);
  CHECK(r.analytic_phi == 0.0);
  CHECK(r.mean_count.mean == 0.0);
  CHECK(r.poisson_fit_ok);
}

TEST_CASE("simulate_population passes the Poisson cross-check") {
  // rate 0.5/s across a 500 m strip at 10 m/s: occupancy is Poisson(25).
  mc::McConfig cfg;
  cfg.samples = 2000;
  cfg.seed = 7;
  const double horizon = (5.0 + 2001.0) * 50.0;
  const mc::PopulationResult r =
      mc::simulate_population(0.5, 10.0, 0.0, 500.0, horizon, cfg);

  CHECK(r.analytic_phi == doctest::Approx(25.0).epsilon(1e-6));
  const double z = (r.mean_count.mean - r.analytic_phi) / r.mean_count.std_error;
  CHECK(std::fabs(z) <= 4.0);

  double pmf_sum = 0.0;
  for (double p : r.empirical_pmf) pmf_sum += p;
  CHECK(pmf_sum == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(r.chi_square_dof >= 1);
  CHECK(r.chi_square_critical > 0.0);
  CHECK(r.poisson_fit_ok);

  // PGF at 1/2 should sit near exp(-phi/2), a very small number.
  const double pgf_expected = std::exp(-r.analytic_phi / 2.0);
  CHECK(std::fabs(r.pgf_half.mean - pgf_expected) <=
        std::max(4.0 * r.pgf_half.std_error, 1e-5));
}

TEST_CASE("simulate_link_duration matches closed-form kinematics") {
  const double step = 1e-3;

  // Same direction: gap grows at |v1 - v2|; link ends at (t_r - sep)/gap.
  double t = mc::simulate_link_duration(10.0, 15.0, 100.0, 50.0, Direction::Same);
  CHECK(t >= (100.0 - 50.0) / 5.0);
  CHECK(t <= (100.0 - 50.0) / 5.0 + 2.0 * step);

  // Equal speeds never separate.
  CHECK(mc::simulate_link_duration(12.0, 12.0, 100.0, 30.0, Direction::Same) ==
        std::numeric_limits<double>::infinity());

  // Opposite direction: closing speed v1 + v2, the in-range window spans
  // (2 t_r - sep) of relative travel.
  t = mc::simulate_link_duration(10.0, 15.0, 100.0, 50.0, Direction::Opposite);
  CHECK(t >= (100.0 + 50.0) / 25.0);
  CHECK(t <= (100.0 + 50.0) / 25.0 + 2.0 * step);

  t = mc::simulate_link_duration(10.0, 15.0, 100.0, 0.0, Direction::Opposite);
  CHECK(t >= 200.0 / 25.0);
  CHECK(t <= 200.0 / 25.0 + 2.0 * step);

  // Both parked: the pair never separates.
  CHECK(mc::simulate_link_duration(0.0, 0.0, 100.0, 50.0, Direction::Opposite) ==
        std::numeric_limits<double>::infinity());

  CHECK_THROWS_AS(mc::simulate_link_duration(10.0, 15.0, 100.0, 150.0, Direction::Same),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      mc::simulate_link_duration(10.0, 15.0, 100.0, 250.0, Direction::Opposite),
      std::invalid_argument);
}

TEST_CASE("estimate_ct reproduces the analytic lattice means") {
  const linktime::KinematicsConfig cfg{10.0, 20.0, 5.0, 100.0, 50.0, 900.0};
  mc::McConfig mcc;

  const mc::CtEstimate same = mc::estimate_ct(cfg, Direction::Same, mcc);
  CHECK_FALSE(same.degenerate);
  // 6 ordered distinct-speed pairs, offsets m = 1..2.
  CHECK(same.lattice_points == 12);
  const double same_ref = linktime::t_comm_diff(cfg, Direction::Same) / 6.0;
  CHECK(std::fabs(same.estimate.mean - same_ref) < 5e-3);

  const mc::CtEstimate opp = mc::estimate_ct(cfg, Direction::Opposite, mcc);
  CHECK(opp.lattice_points == 30);  // offsets m = 0..4
  const double opp_ref = linktime::t_comm_diff(cfg, Direction::Opposite) / 6.0;
  CHECK(std::fabs(opp.estimate.mean - opp_ref) < 5e-3);

  const linktime::KinematicsConfig single{12.0, 12.0, 3.0, 100.0, 50.0, 900.0};
  CHECK(mc::estimate_ct(single, Direction::Same, mcc).degenerate);
}
