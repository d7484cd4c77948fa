#include "stripnet/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "stripnet/connectivity.hpp"

namespace stripnet::mc {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

McEstimate from_batches(const std::vector<double>& batch_means, std::int64_t samples) {
  const int b = static_cast<int>(batch_means.size());
  double mean = 0.0;
  for (double v : batch_means) mean += v;
  mean /= b;
  double var = 0.0;
  for (double v : batch_means) var += (v - mean) * (v - mean);
  var /= (b - 1);
  return {mean, std::sqrt(var / b), samples};
}

}  // namespace

void McConfig::validate() const {
  if (samples < 1000) fail("McConfig: samples must be >= 1000");
  if (batch_count < 10) fail("McConfig: batch_count must be >= 10");
  if (samples < batch_count) fail("McConfig: samples must cover every batch");
}

double sample_segment_position(double m, double d, int i, CounterRng& rng) {
  if (!(d > 0.0)) fail("sample_segment_position: d must be > 0");
  if (i < 1) fail("sample_segment_position: i must be >= 1");

  const double u = rng.uniform();
  const double lo = (i - 1) * d;
  if (m == 0.0) return lo + u * d;

  double x;  // offset within the segment
  if (m > 0.0) {
    // F^{-1}(u) = d + ln(u + (1-u) e^{-m d}) / m, stable for any m d > 0
    x = d + std::log(u + (1.0 - u) * std::exp(-m * d)) / m;
  } else {
    // e^{m d} < 1 here, so the direct form cannot overflow
    x = std::log1p(u * std::expm1(m * d)) / m;
  }
  return lo + std::clamp(x, 0.0, d);
}

McEstimate estimate_direct_prob(double m, double d, int i, const McConfig& cfg) {
  cfg.validate();
  const std::int64_t per_batch = cfg.samples / cfg.batch_count;
  const CounterRng root(cfg.seed);

  std::vector<double> batch_means;
  batch_means.reserve(cfg.batch_count);
  for (int b = 0; b < cfg.batch_count; ++b) {
    CounterRng rng = root.substream(b);
    std::int64_t hits = 0;
    for (std::int64_t s = 0; s < per_batch; ++s) {
      const double x = sample_segment_position(m, d, i, rng);
      const double y = sample_segment_position(m, d, i + 1, rng);
      if (y - x < d) ++hits;
    }
    batch_means.push_back(static_cast<double>(hits) / per_batch);
  }
  return from_batches(batch_means, per_batch * cfg.batch_count);
}

double chi_square_critical_1pct(int dof) {
  if (dof < 1) fail("chi_square_critical_1pct: dof must be >= 1");
  // Wilson-Hilferty cube approximation at the 99th percentile.
  const double z99 = 2.3263478740408408;
  const double t = 2.0 / (9.0 * dof);
  const double c = 1.0 - t + z99 * std::sqrt(t);
  return dof * c * c * c;
}

PopulationResult simulate_population(double rate, double mu, double sigma2,
                                     double strip_len, double horizon,
                                     const McConfig& cfg) {
  cfg.validate();
  if (rate < 0.0) fail("simulate_population: rate must be >= 0");
  if (!(mu > 0.0)) fail("simulate_population: mu must be > 0");
  if (sigma2 < 0.0) fail("simulate_population: sigma2 must be >= 0");
  if (!(strip_len > 0.0)) fail("simulate_population: strip_len must be > 0");

  const double traversal = strip_len / mu;
  const double warmup = 5.0 * traversal;
  const std::int64_t observations = cfg.samples;
  const double obs_spacing = traversal;  // decorrelates successive counts
  if (horizon < warmup + observations * obs_spacing)
    throw std::invalid_argument(
        "simulate_population: steady state not reached, horizon must cover "
        "warm-up plus the observation window");

  PopulationResult out;
  {
    conn::StreamSpec spec{rate, 0.0, strip_len, sigma2};
    out.analytic_phi =
        (rate == 0.0) ? 0.0 : conn::stream_intensity_steady(spec, mu, 4096);
  }

  // Arrival process: Poisson(rate); each node crosses at one sampled speed.
  CounterRng root(cfg.seed);
  CounterRng arrivals = root.substream(0);
  CounterRng speeds = root.substream(1);
  const double span = warmup + observations * obs_spacing;

  std::vector<std::pair<double, int>> edges;  // (time, +1 enter / -1 leave)
  if (rate > 0.0) {
    double t = 0.0;
    const double sd = std::sqrt(sigma2);
    while (true) {
      t += arrivals.exponential(rate);
      if (t > span) break;
      double v = mu;
      if (sd > 0.0) {
        int tries = 0;
        do {
          v = speeds.normal(mu, sd);
        } while (v <= 0.0 && ++tries < 1000);
        if (v <= 0.0) throw std::runtime_error("simulate_population: speed draw stuck");
      }
      edges.emplace_back(t, +1);
      edges.emplace_back(t + strip_len / v, -1);
    }
  }
  std::sort(edges.begin(), edges.end());

  // Sweep the occupancy over the observation grid.
  std::vector<int> counts(observations, 0);
  {
    std::size_t e = 0;
    int population = 0;
    for (std::int64_t k = 0; k < observations; ++k) {
      const double when = warmup + k * obs_spacing;
      while (e < edges.size() && edges[e].first <= when) population += edges[e++].second;
      counts[k] = population;
    }
  }

  // Drift guard: halves of the observation window should agree.
  {
    const std::int64_t half = observations / 2;
    double m1 = 0.0, m2 = 0.0;
    for (std::int64_t k = 0; k < half; ++k) m1 += counts[k];
    for (std::int64_t k = half; k < observations; ++k) m2 += counts[k];
    m1 /= half;
    m2 /= observations - half;
    const double sd_bound = std::sqrt(std::max(out.analytic_phi, 1.0));
    if (std::fabs(m1 - m2) > 8.0 * sd_bound / std::sqrt(static_cast<double>(half)))
      throw std::runtime_error("simulate_population: mean still drifting after warm-up");
  }

  // Batch means for count and PGF(1/2).
  {
    const std::int64_t per_batch = observations / cfg.batch_count;
    std::vector<double> count_means, pgf_means;
    for (int b = 0; b < cfg.batch_count; ++b) {
      double cm = 0.0, pm = 0.0;
      for (std::int64_t k = 0; k < per_batch; ++k) {
        const int c = counts[b * per_batch + k];
        cm += c;
        pm += std::pow(0.5, c);
      }
      count_means.push_back(cm / per_batch);
      pgf_means.push_back(pm / per_batch);
    }
    const std::int64_t used = per_batch * cfg.batch_count;
    out.mean_count = from_batches(count_means, used);
    out.pgf_half = from_batches(pgf_means, used);
  }

  // Empirical pmf and chi-square GOF against Poisson(analytic phi), pooling
  // bins with expected count below 5.
  {
    int max_count = 0;
    for (int c : counts) max_count = std::max(max_count, c);
    out.empirical_pmf.assign(max_count + 1, 0.0);
    for (int c : counts) out.empirical_pmf[c] += 1.0;
    for (double& p : out.empirical_pmf) p /= observations;

    if (rate == 0.0) {
      out.chi_square = 0.0;
      out.chi_square_dof = 0;
      out.chi_square_critical = 0.0;
      out.poisson_fit_ok = true;
    } else {
      conn::SegmentDistribution dist{out.analytic_phi};
      std::vector<double> observed, expected;
      double obs_acc = 0.0, exp_acc = 0.0, exp_tail = observations;
      for (int c = 0; c <= max_count; ++c) {
        const double e = observations * conn::population_pmf(dist, c);
        obs_acc += observations * out.empirical_pmf[c];
        exp_acc += e;
        exp_tail -= e;
        if (exp_acc >= 5.0) {
          observed.push_back(obs_acc);
          expected.push_back(exp_acc);
          obs_acc = exp_acc = 0.0;
        }
      }
      // Right tail (everything above max_count plus any unpooled remainder).
      obs_acc += 0.0;
      exp_acc += std::max(exp_tail, 0.0);
      if (!expected.empty() && exp_acc > 0.0) {
        observed.back() += obs_acc;
        expected.back() += exp_acc;
      }

      double stat = 0.0;
      for (std::size_t k = 0; k < expected.size(); ++k) {
        const double diff = observed[k] - expected[k];
        stat += diff * diff / expected[k];
      }
      out.chi_square = stat;
      out.chi_square_dof = std::max(1, static_cast<int>(expected.size()) - 1);
      out.chi_square_critical = chi_square_critical_1pct(out.chi_square_dof);
      out.poisson_fit_ok = stat <= out.chi_square_critical;
    }
  }
  return out;
}

double simulate_link_duration(double v1, double v2, double t_r, double initial_sep,
                              linktime::Direction dir, double step_s) {
  if (v1 < 0.0 || v2 < 0.0) fail("simulate_link_duration: speeds must be >= 0");
  if (!(t_r > 0.0)) fail("simulate_link_duration: t_r must be > 0");
  if (!(step_s > 0.0)) fail("simulate_link_duration: step must be > 0");

  if (dir == linktime::Direction::Same) {
    if (initial_sep < 0.0 || initial_sep > t_r)
      fail("simulate_link_duration: same-direction pair starts out of range");
    const double gap_rate = std::fabs(v1 - v2);
    if (gap_rate == 0.0) return std::numeric_limits<double>::infinity();

    // Leader moves at the faster speed, follower trails by initial_sep.
    double follower = 0.0, leader = initial_sep;
    const double v_slow = std::min(v1, v2), v_fast = std::max(v1, v2);
    double t = 0.0;
    while (leader - follower <= t_r) {
      t += step_s;
      follower = v_slow * t;
      leader = initial_sep + v_fast * t;
    }
    return t;
  }

  if (initial_sep < 0.0 || initial_sep > 2.0 * t_r)
    fail("simulate_link_duration: opposite-direction pair never meets in range");
  const double closing = v1 + v2;
  if (closing == 0.0) return std::numeric_limits<double>::infinity();

  // Head-on: b starts t_r - initial_sep ahead and drives toward a.
  double t = 0.0;
  double xa = 0.0, xb = t_r - initial_sep;
  while (std::fabs(xb - xa) <= t_r) {
    t += step_s;
    xa = v1 * t;
    xb = (t_r - initial_sep) - v2 * t;
  }
  return t;
}

CtEstimate estimate_ct(const linktime::KinematicsConfig& cfg, linktime::Direction dir,
                       const McConfig& mc) {
  mc.validate();
  const int vc = linktime::speed_levels(cfg);
  CtEstimate out;
  if (vc == 0) {
    out.degenerate = true;  // only same-speed pairs exist; durations unbounded
    return out;
  }

  const int n = linktime::nodes_in_range(cfg.t_r, cfg.spacing, dir);
  std::vector<double> durations;
  for (int i = 0; i <= vc; ++i) {
    for (int j = 0; j <= vc; ++j) {
      if (i == j) continue;
      const double vi = cfg.v_min + i * cfg.delta_v;
      const double vj = cfg.v_min + j * cfg.delta_v;
      if (dir == linktime::Direction::Same) {
        for (int m = 1; m <= n; ++m) {
          const double sep = m * cfg.spacing;
          durations.push_back(sep > cfg.t_r
                                  ? 0.0
                                  : simulate_link_duration(vi, vj, cfg.t_r, sep, dir));
        }
      } else {
        for (int m = 0; m <= n; ++m) {
          const double sep = m * cfg.spacing;
          durations.push_back(sep > 2.0 * cfg.t_r
                                  ? 0.0
                                  : simulate_link_duration(vi, vj, cfg.t_r, sep, dir));
        }
      }
    }
  }

  out.lattice_points = static_cast<std::int64_t>(durations.size());
  double mean = 0.0;
  for (double v : durations) mean += v;
  mean /= durations.size();
  double var = 0.0;
  for (double v : durations) var += (v - mean) * (v - mean);
  var = durations.size() > 1 ? var / (durations.size() - 1) : 0.0;
  out.estimate = {mean, std::sqrt(var / durations.size()),
                  static_cast<std::int64_t>(durations.size())};
  return out;
}

}  // namespace stripnet::mc
