#include "stripnet/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "stripnet/quadrature.hpp"

namespace stripnet::conn {
namespace {

constexpr double kLogSpaceExponent = 500.0;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// log(e^x - 1) for x > 0, stable for both tiny and huge x.
double log_expm1(double x) {
  if (x <= 0.0) fail("log_expm1: requires x > 0");
  if (x > 36.0) return x + std::log1p(-std::exp(-x));  // e^-x below 2^-52
  return std::log(std::expm1(x));
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Probability mass of the truncated exponential exp(m*r)/norm on [0, L]
// restricted to [lo, hi] (0 <= lo <= hi <= L). Handles m of either sign and
// arbitrarily large |m|*L by switching to log space.
double truncated_exp_mass(double m, double lo, double hi, double L) {
  if (hi <= lo) return 0.0;
  if (m == 0.0) return (hi - lo) / L;
  if (m < 0.0) return truncated_exp_mass(-m, L - hi, L - lo, L);
  // mass = e^{m*lo} * (e^{m*(hi-lo)} - 1) / (e^{m*L} - 1)
  if (m * L <= kLogSpaceExponent) {
    return std::exp(m * lo) * std::expm1(m * (hi - lo)) / std::expm1(m * L);
  }
  const double log_mass = m * lo + log_expm1(m * (hi - lo)) - log_expm1(m * L);
  const double mass = std::exp(log_mass);
  if (!std::isfinite(mass)) fail("truncated_exp_mass: non-finite result");
  return mass;
}

}  // namespace

void StripModel::validate() const {
  if (!(d > 0.0)) fail("StripModel: d must be > 0");
  if (n_segments < 1) fail("StripModel: n_segments must be >= 1");
  if (mu < 0.0) fail("StripModel: mu must be >= 0");
  if (sigma2 < 0.0) fail("StripModel: sigma2 must be >= 0");
  if (mu == 0.0 && sigma2 == 0.0) fail("StripModel: degenerate motion (mu = sigma2 = 0)");
}

double StripModel::m() const {
  validate();
  return derive_m(mu, sigma2, beta);
}

void StreamSpec::validate() const {
  if (rate < 0.0) fail("StreamSpec: rate must be >= 0");
  if (strip_offset < 0.0) fail("StreamSpec: strip_offset must be >= 0");
  if (!(strip_length > 0.0)) fail("StreamSpec: strip_length must be > 0");
  if (variance_scale < 0.0) fail("StreamSpec: variance_scale must be >= 0");
}

void ConnectivityReport::validate() const {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  for (double p : per_segment_direct)
    if (!in_unit(p)) fail("ConnectivityReport: direct probability outside [0,1]");
  for (double p : pairwise_indirect)
    if (!in_unit(p)) fail("ConnectivityReport: indirect probability outside [0,1]");
  for (double e : efficiency_pct)
    if (e < 0.0 || e > 100.0) fail("ConnectivityReport: efficiency outside [0,100]");
  if (!in_unit(chain)) fail("ConnectivityReport: chain probability outside [0,1]");
}

double derive_m(double mu, double sigma2, double beta) {
  if (mu < 0.0) fail("derive_m: mu must be >= 0");
  if (sigma2 < 0.0) fail("derive_m: sigma2 must be >= 0");
  const double denom = 2.0 * sigma2 + mu * mu;
  if (denom == 0.0) fail("derive_m: degenerate motion (mu = sigma2 = 0)");
  return mu * beta / denom;
}

namespace {

// Integral over [tau_lo, tau_hi] of the probability that a node that entered
// tau seconds ago still sits inside [0, R]: Gaussian displacement with mean
// mu*tau and variance theta(tau). Substituting tau = u^2 removes the
// sqrt(tau) cusp the dispersion kernel has at tau = 0, which otherwise
// spoils composite Simpson convergence.
double inside_integral(const StreamSpec& s, double mu, double tau_lo, double tau_hi,
                       int steps, const VarianceFn& theta) {
  const double R = s.strip_length;
  auto variance = [&](double tau) {
    return theta ? theta(tau) : s.variance_scale * tau;
  };
  auto inside = [&](double tau) -> double {
    if (tau <= 0.0) return 0.5;  // boundary mass convention at y = 0
    const double var = variance(tau);
    if (var < 0.0) fail("stream_intensity: theta(tau) < 0 at tau=" + std::to_string(tau));
    if (var == 0.0) {
      const double y = mu * tau;
      if (y == 0.0 || y == R) return 0.5;
      return (y > 0.0 && y < R) ? 1.0 : 0.0;
    }
    const double sd = std::sqrt(var);
    const double p = norm_cdf((R - mu * tau) / sd) - norm_cdf((0.0 - mu * tau) / sd);
    if (!std::isfinite(p))
      throw std::runtime_error("stream_intensity: non-finite integrand at tau=" +
                               std::to_string(tau));
    return p;
  };
  auto inside_sub = [&](double u) { return 2.0 * u * inside(u * u); };
  return simpson(inside_sub, std::sqrt(tau_lo), std::sqrt(tau_hi), steps);
}

}  // namespace

double stream_intensity(const StreamSpec& s, double mu, double horizon,
                        int quadrature_steps, const VarianceFn& theta) {
  s.validate();
  if (mu < 0.0) fail("stream_intensity: mu must be >= 0");
  if (!(horizon > 0.0)) fail("stream_intensity: horizon must be > 0");
  if (quadrature_steps < 2) fail("stream_intensity: quadrature_steps must be >= 2");
  if (s.rate == 0.0) return 0.0;

  // Dispersionless motion: the survivor probability is an indicator, so the
  // integral is the occupied time itself and quadrature would only smear the
  // discontinuity.
  if (!theta && s.variance_scale == 0.0) {
    if (mu == 0.0) return s.rate * 0.5 * horizon;  // parked at the entry edge
    return s.rate * std::min(horizon, s.strip_length / mu);
  }

  const double value =
      s.rate * inside_integral(s, mu, 0.0, horizon, quadrature_steps, theta);
  if (!std::isfinite(value))
    throw std::runtime_error("stream_intensity: non-finite integral");
  return value;
}

double stream_intensity_steady(const StreamSpec& s, double mu, int quadrature_steps,
                               double rel_tol, const VarianceFn& theta) {
  s.validate();
  if (s.rate == 0.0) return 0.0;
  if (mu <= 0.0 && s.variance_scale == 0.0 && !theta)
    fail("stream_intensity_steady: motionless stream never drains the strip");
  if (!theta && s.variance_scale == 0.0) return s.rate * s.strip_length / mu;

  // Start from a horizon a few traversal times long, then extend it octave by
  // octave, each tail integrated on its own grid so early spans keep their
  // resolution. Settled once an octave stops contributing.
  double horizon = (mu > 0.0) ? 8.0 * s.strip_length / mu : 8.0 * s.strip_length;
  double total = stream_intensity(s, mu, horizon, quadrature_steps, theta);
  for (int round = 0; round < 40; ++round) {
    const double tail =
        s.rate *
        inside_integral(s, mu, horizon, 2.0 * horizon, quadrature_steps, theta);
    total += tail;
    horizon *= 2.0;
    if (!std::isfinite(total))
      throw std::runtime_error("stream_intensity_steady: non-finite integral");
    if (std::fabs(tail) <= rel_tol * std::max(std::fabs(total), 1e-300)) return total;
  }
  throw std::runtime_error("stream_intensity_steady: horizon doubling did not converge");
}

double stream_segment_probability(double m, double d, int i, double offset,
                                  double stream_len) {
  if (!(d > 0.0)) fail("stream_segment_probability: d must be > 0");
  if (i < 1) fail("stream_segment_probability: i must be >= 1");
  if (offset < 0.0) fail("stream_segment_probability: offset must be >= 0");
  if (!(stream_len > 0.0)) fail("stream_segment_probability: stream_len must be > 0");
  if (!std::isfinite(m)) fail("stream_segment_probability: m must be finite");

  // Segment window in the stream's own coordinates, clipped to the sub-strip.
  const double lo = std::clamp((i - 1) * d - offset, 0.0, stream_len);
  const double hi = std::clamp(i * d - offset, 0.0, stream_len);
  return truncated_exp_mass(m, lo, hi, stream_len);
}

double stream_coverage_probability(double m, double d, int n_total, double offset,
                                   double stream_len) {
  if (!(d > 0.0)) fail("stream_coverage_probability: d must be > 0");
  if (n_total < 1) fail("stream_coverage_probability: n_total must be >= 1");
  if (offset < 0.0) fail("stream_coverage_probability: offset must be >= 0");
  if (!(stream_len > 0.0)) fail("stream_coverage_probability: stream_len must be > 0");

  const double hi = std::clamp(n_total * d - offset, 0.0, stream_len);
  return truncated_exp_mass(m, 0.0, hi, stream_len);
}

double segment_intensity(std::span<const std::pair<double, double>> stream_phi_p) {
  double phi = 0.0;
  for (const auto& [stream_phi, p] : stream_phi_p) {
    if (stream_phi < 0.0) fail("segment_intensity: stream intensity must be >= 0");
    if (p < 0.0 || p > 1.0) fail("segment_intensity: probability outside [0,1]");
    phi += stream_phi * p;
  }
  return phi;
}

double total_intensity(std::span<const double> per_segment_phi) {
  if (per_segment_phi.empty()) fail("total_intensity: needs at least one segment");
  double total = 0.0;
  for (double phi : per_segment_phi) {
    if (phi < 0.0) fail("total_intensity: segment intensity must be >= 0");
    total += phi;
  }
  return total;
}

double total_intensity_from_streams(std::span<const StreamContribution> streams,
                                    double m, double d, int n_total) {
  double total = 0.0;
  for (const auto& s : streams) {
    if (s.phi < 0.0) fail("total_intensity_from_streams: phi must be >= 0");
    total += s.phi * stream_coverage_probability(m, d, n_total, s.offset, s.length);
  }
  return total;
}

double population_pmf(const SegmentDistribution& dist, int n) {
  if (dist.phi < 0.0) fail("population_pmf: phi must be >= 0");
  if (n < 0) fail("population_pmf: n must be >= 0");
  if (dist.phi == 0.0) return n == 0 ? 1.0 : 0.0;
  const double log_p = -dist.phi + n * std::log(dist.phi) - std::lgamma(n + 1.0);
  return std::exp(log_p);
}

double population_pgf(const SegmentDistribution& dist, double z) {
  if (dist.phi < 0.0) fail("population_pgf: phi must be >= 0");
  if (z < 0.0 || z > 1.0) fail("population_pgf: z must lie in [0,1]");
  return std::exp(-dist.phi * (1.0 - z));
}

double segment_position_pdf(double m, double d, int i, double r) {
  if (!(d > 0.0)) fail("segment_position_pdf: d must be > 0");
  if (i < 1) fail("segment_position_pdf: i must be >= 1");
  const double lo = (i - 1) * d;
  const double hi = i * d;
  if (r < lo || r > hi) fail("segment_position_pdf: r outside segment");
  if (m == 0.0) return 1.0 / d;

  const double x = r - lo;  // position within the segment, in [0, d]
  if (m > 0.0 && m * d > kLogSpaceExponent) {
    // m e^{m x} / (e^{m d} - 1) = m e^{m (x - d)} / (1 - e^{-m d})
    return m * std::exp(m * (x - d)) / (-std::expm1(-m * d));
  }
  return m * std::exp(m * x) / std::expm1(m * d);
}

double direct_comm_probability(double m, double d, int i, int quadrature_steps) {
  if (!(d > 0.0)) fail("direct_comm_probability: d must be > 0");
  if (i < 1) fail("direct_comm_probability: i must be >= 1");
  if (quadrature_steps < 4) fail("direct_comm_probability: quadrature_steps must be >= 4");

  const double a = (i - 1) * d;
  const double b = i * d;

  // Pr(x_{i+1} - x_i < d) with x_i in segment i and x_{i+1} in segment i+1.
  // The inner mass of x_{i+1} over [id, x_i + d] is the truncated-exponential
  // CDF in closed form, so only the outer variable needs a grid.
  auto outer = [&](double x) {
    return segment_position_pdf(m, d, i, x) * truncated_exp_mass(m, 0.0, x - a, d);
  };

  double coarse = simpson(outer, a, b, quadrature_steps);
  int steps = quadrature_steps;
  for (int round = 0; round < 8; ++round) {
    steps *= 2;
    const double fine = simpson(outer, a, b, steps);
    if (std::fabs(fine - coarse) <= 1e-8 * std::max(std::fabs(fine), 1e-300)) return fine;
    coarse = fine;
  }
  throw QuadratureError("direct_comm_probability: refinement did not converge",
                        coarse, simpson(outer, a, b, steps * 2));
}

double indirect_comm_probability(double p_i, double p_next) {
  if (p_i < 0.0 || p_i > 1.0 || p_next < 0.0 || p_next > 1.0)
    fail("indirect_comm_probability: probabilities must lie in [0,1]");
  return p_i * p_next;
}

double efficiency(double p) {
  if (p < 0.0 || p > 1.0) fail("efficiency: probability must lie in [0,1]");
  return 100.0 * p;
}

double chain_comm_probability(std::span<const double> per_segment, int n_total) {
  if (n_total < 1) fail("chain_comm_probability: n_total must be >= 1");
  if (per_segment.size() < static_cast<std::size_t>(n_total))
    fail("chain_comm_probability: list shorter than n_total");
  for (double p : per_segment)
    if (p < 0.0 || p > 1.0) fail("chain_comm_probability: probability outside [0,1]");

  double prod = 1.0;
  for (int i = 1; i <= n_total - 1; ++i) {
    prod *= per_segment[i - 1] * per_segment[i];
  }
  return prod;
}

double density_heuristic(int n) {
  if (n < 1) fail("density_heuristic: n must be >= 1");
  return 1.0 / n;
}

ConnectivityReport build_report(double m, double d, int n_segments,
                                int quadrature_steps) {
  if (n_segments < 2) fail("build_report: needs at least 2 segments");
  ConnectivityReport rep;
  for (int i = 1; i <= n_segments - 1; ++i) {
    rep.per_segment_direct.push_back(direct_comm_probability(m, d, i, quadrature_steps));
  }
  for (std::size_t i = 0; i + 1 < rep.per_segment_direct.size(); ++i) {
    const double pp = indirect_comm_probability(rep.per_segment_direct[i],
                                                rep.per_segment_direct[i + 1]);
    rep.pairwise_indirect.push_back(pp);
    rep.efficiency_pct.push_back(efficiency(pp));
  }
  rep.chain = chain_comm_probability(rep.per_segment_direct,
                                     static_cast<int>(rep.per_segment_direct.size()));
  rep.validate();
  return rep;
}

}  // namespace stripnet::conn
