#pragma once

#include <cstdint>
#include <vector>

#include "stripnet/linktime.hpp"
#include "stripnet/rng.hpp"

namespace stripnet::mc {

struct McConfig {
  std::int64_t samples = 100000;
  std::uint64_t seed = 1;
  int batch_count = 20;  // batch-means groups for std errors

  void validate() const;  // samples >= 1000, batch_count >= 10
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
};

// Inverse-CDF draw from the truncated-exponential position density of
// segment i; always lands inside [(i-1)d, id].
double sample_segment_position(double m, double d, int i, CounterRng& rng);

// Monte Carlo estimate of Pr(x_{i+1} - x_i < d) with batch-means errors.
McEstimate estimate_direct_prob(double m, double d, int i, const McConfig& cfg);

// Empirical population study of a strip fed by Poisson arrivals that
// traverse it at a speed drawn once per node (deterministic traversal).
struct PopulationResult {
  McEstimate mean_count;
  std::vector<double> empirical_pmf;     // index = node count
  double analytic_phi = 0.0;             // steady-state intensity used for GOF
  double chi_square = 0.0;
  double chi_square_critical = 0.0;      // 1% significance threshold
  int chi_square_dof = 0;
  bool poisson_fit_ok = false;
  McEstimate pgf_half;                   // empirical PGF at z = 1/2
};

PopulationResult simulate_population(double rate, double mu, double sigma2,
                                     double strip_len, double horizon,
                                     const McConfig& cfg);

// Upper 1% quantile of the chi-square distribution (Wilson-Hilferty).
double chi_square_critical_1pct(int dof);

// Stepped two-node kinematic simulation (default 1 ms steps); returns the
// time the pair stays within t_r, +infinity when the geometry never
// separates (equal speeds, zero closing speed).
double simulate_link_duration(double v1, double v2, double t_r, double initial_sep,
                              linktime::Direction dir, double step_s = 1e-3);

// Mean simulated link duration over the same (speed pair, offset) lattice the
// analytic distinct-speed sums enumerate; matches t_comm_diff divided by the
// number of distinct-speed pairs.
struct CtEstimate {
  McEstimate estimate;
  std::int64_t lattice_points = 0;
  bool degenerate = false;  // no distinct-speed pairs (V_c = 0)
};

CtEstimate estimate_ct(const linktime::KinematicsConfig& cfg, linktime::Direction dir,
                       const McConfig& mc);

}  // namespace stripnet::mc
