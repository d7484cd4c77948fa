#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace stripnet::conn {

// One-dimensional service strip cut into n_segments segments of length d,
// where d equals the transmission range. Node positions inside a segment
// follow a truncated exponential with decay rate m derived from the motion
// parameters.
struct StripModel {
  double d = 0.0;        // segment length = transmission range (m)
  int n_segments = 0;    // number of segments in the strip
  double mu = 0.0;       // mean drift speed (m/s)
  double sigma2 = 0.0;   // motion variance (m^2/s^2)
  double beta = 0.0;     // decay constant of the position model (1/m)

  void validate() const;
  double m() const;  // decay rate, computed on demand
};

// A traffic stream feeding the strip: Poisson arrivals at `rate` entering a
// sub-strip that starts `strip_offset` metres into the topology and spans
// `strip_length` metres.
struct StreamSpec {
  double rate = 0.0;            // arrival intensity (nodes/s)
  double strip_offset = 0.0;    // entry point of the sub-strip (m)
  double strip_length = 0.0;    // sub-strip length (m)
  double variance_scale = 0.0;  // sigma^2 driving the dispersion kernel

  void validate() const;
};

// Poisson population of one segment.
struct SegmentDistribution {
  double phi = 0.0;  // mean node count
};

// Per-segment connectivity summary for a strip with I segments: direct
// probabilities P_i for the I-1 adjacent pairs, three-segment products
// P_i'' = P_i * P_{i+1}, their percentage efficiencies, and the literal
// chain product across the strip.
struct ConnectivityReport {
  std::vector<double> per_segment_direct;
  std::vector<double> pairwise_indirect;
  std::vector<double> efficiency_pct;
  double chain = 1.0;

  void validate() const;
};

// Decay rate m = mu*beta / (2*sigma2 + mu^2). Degenerate motion
// (mu = 0 and sigma2 = 0) has no defined rate and throws.
double derive_m(double mu, double sigma2, double beta);

// Dispersion kernel hook: theta(tau) is the positional variance after time
// tau in the stream's frame. Default is Brownian scaling sigma2 * tau.
using VarianceFn = std::function<double(double)>;

// Mean node count contributed by one stream: rate times the integrated
// probability that a node that entered tau seconds ago still sits inside the
// sub-strip, accumulated over [0, horizon]. quadrature_steps controls the
// outer grid. Monotone nondecreasing in horizon.
double stream_intensity(const StreamSpec& s, double mu, double horizon,
                        int quadrature_steps, const VarianceFn& theta = {});

// stream_intensity with the horizon doubled until the value settles to
// rel_tol; models the steady-state limit.
double stream_intensity_steady(const StreamSpec& s, double mu, int quadrature_steps,
                               double rel_tol = 1e-6, const VarianceFn& theta = {});

// Probability that a node of a stream occupying [offset, offset+stream_len]
// sits in absolute segment i (the window [(i-1)d, id], clipped to the
// sub-strip). Exponents beyond 500 are evaluated in log space.
double stream_segment_probability(double m, double d, int i, double offset,
                                  double stream_len);

// Probability that such a node sits anywhere in the first n_total segments;
// closed-form telescoped sum of stream_segment_probability over i=1..n_total.
double stream_coverage_probability(double m, double d, int n_total, double offset,
                                   double stream_len);

// phi_i = sum over streams of phi_stream * P_stream(i); pairs are
// (phi_stream, P_stream(i)).
double segment_intensity(std::span<const std::pair<double, double>> stream_phi_p);

// Topology-wide intensity by additivity over segments.
double total_intensity(std::span<const double> per_segment_phi);

// Topology-wide intensity via the per-stream aggregate route; equals the
// per-segment sum when the segment grid tiles the stream coverage.
struct StreamContribution {
  double phi = 0.0;     // stream_intensity result
  double offset = 0.0;  // sub-strip entry point (m)
  double length = 0.0;  // sub-strip length (m)
};
double total_intensity_from_streams(std::span<const StreamContribution> streams,
                                    double m, double d, int n_total);

// Poisson pmf / pgf of the segment population. pmf is evaluated in log space
// so large n do not overflow.
double population_pmf(const SegmentDistribution& dist, int n);
double population_pgf(const SegmentDistribution& dist, double z);

// Truncated-exponential position density of a node known to sit in segment
// i; r is the absolute position and must lie inside the segment. m = 0
// degenerates to the uniform density 1/d.
double segment_position_pdf(double m, double d, int i, double r);

// Probability that nodes in adjacent segments i and i+1 are within range d
// of each other, evaluated as a numeric double integral of the two position
// densities (grid refined until converged). The pdf family forces the exact
// value 1/2 for every (m, d, i).
double direct_comm_probability(double m, double d, int i, int quadrature_steps);

// Relay product across three consecutive segments.
double indirect_comm_probability(double p_i, double p_next);

// Percentage form of a probability.
double efficiency(double p);

// Literal chain product Prod_{i=1..n_total-1} P_i * P_{i+1}; interior factors
// appear twice by construction, so the list must supply at least n_total
// probabilities.
double chain_comm_probability(std::span<const double> per_segment, int n_total);

// Uniform relay-selection probability 1/n.
double density_heuristic(int n);

// Direct/indirect/efficiency/chain summary for a strip with the given decay
// rate; the chain is taken over all I-1 defined adjacent links.
ConnectivityReport build_report(double m, double d, int n_segments,
                                int quadrature_steps);

}  // namespace stripnet::conn
