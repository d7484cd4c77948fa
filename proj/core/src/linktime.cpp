#include "stripnet/linktime.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stripnet::linktime {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double lattice_speed(const KinematicsConfig& cfg, int k) {
  return cfg.v_min + k * cfg.delta_v;
}

}  // namespace

void KinematicsConfig::validate() const {
  if (v_min < 0.0) fail("KinematicsConfig: v_min must be >= 0");
  if (v_max < v_min) fail("KinematicsConfig: v_max must be >= v_min");
  if (!(delta_v > 0.0)) fail("KinematicsConfig: delta_v must be > 0");
  if (!(t_r > 0.0)) fail("KinematicsConfig: t_r must be > 0");
  if (!(spacing > 0.0)) fail("KinematicsConfig: spacing must be > 0");
  if (!(horizon > 0.0)) fail("KinematicsConfig: horizon must be > 0");
  const double ratio = (v_max - v_min) / delta_v;
  if (std::fabs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, std::fabs(ratio)))
    fail("KinematicsConfig: (v_max - v_min)/delta_v must be an integer");
}

int speed_levels(const KinematicsConfig& cfg) {
  cfg.validate();
  return static_cast<int>(std::llround((cfg.v_max - cfg.v_min) / cfg.delta_v));
}

int nodes_in_range(double t_r, double spacing, Direction dir) {
  if (!(t_r > 0.0)) fail("nodes_in_range: t_r must be > 0");
  if (!(spacing > 0.0)) fail("nodes_in_range: spacing must be > 0");
  const double reach = (dir == Direction::Same) ? t_r : 2.0 * t_r;
  return std::max(1, static_cast<int>(std::floor(reach / spacing)));
}

double t_comm_same(const KinematicsConfig& cfg, Direction dir) {
  const int vc = speed_levels(cfg);
  const double T = cfg.horizon;
  const int n = nodes_in_range(cfg.t_r, cfg.spacing, dir);

  // Literal evaluation of the double sum, then the closed form; the two must
  // agree to rounding.
  double literal = 0.0;
  const double denom = (dir == Direction::Same) ? n : n + 1;
  for (int k = 0; k <= vc; ++k) {
    double inner = 0.0;
    for (int m = 1; m <= n; ++m) inner += T;
    literal += inner / denom;
  }

  const double closed = (dir == Direction::Same)
                            ? (vc + 1) * T
                            : (vc + 1) * n * T / (n + 1.0);
  if (std::fabs(literal - closed) > 1e-12 * std::max(1.0, std::fabs(closed)))
    throw std::logic_error("t_comm_same: literal sum and closed form disagree");
  return closed;
}

double t_comm_diff(const KinematicsConfig& cfg, Direction dir,
                   bool literal_relative_speed) {
  const int vc = speed_levels(cfg);
  const double d = cfg.spacing;
  const double t_r = cfg.t_r;

  const int n = nodes_in_range(t_r, d, dir);
  double total = 0.0;
  for (int i = 0; i <= vc; ++i) {
    for (int j = 0; j <= vc; ++j) {
      if (i == j) continue;  // same-speed pairs live in t_comm_same
      const double vi = lattice_speed(cfg, i);
      const double vj = lattice_speed(cfg, j);

      double inner = 0.0;
      if (dir == Direction::Same) {
        for (int m = 1; m <= n; ++m) inner += std::max(0.0, t_r - m * d);
        total += inner / std::fabs(vi - vj) / n;
      } else {
        for (int m = 0; m <= n; ++m) inner += std::max(0.0, 2.0 * t_r - m * d);
        const double closing = literal_relative_speed ? std::fabs(vi - vj) : vi + vj;
        if (!(closing > 0.0))
          fail("t_comm_diff: zero closing speed for a distinct-speed pair");
        total += inner / closing / (n + 1.0);
      }
    }
  }
  return total;
}

double ct(const KinematicsConfig& cfg, Direction dir, bool literal_relative_speed) {
  const int vc = speed_levels(cfg);
  const double levels = vc + 1.0;
  return (t_comm_same(cfg, dir) + t_comm_diff(cfg, dir, literal_relative_speed)) /
         (levels * levels);
}

PLink p_link_from(double ct_value, double horizon) {
  if (!(ct_value > 0.0)) fail("p_link: CT must be > 0");
  if (!(horizon > 0.0)) fail("p_link: horizon must be > 0");
  PLink out;
  out.raw = 1.0 - horizon / ct_value;
  out.value = std::clamp(out.raw, 0.0, 1.0);
  return out;
}

PLink p_link(const KinematicsConfig& cfg, Direction dir, bool literal_relative_speed) {
  return p_link_from(ct(cfg, dir, literal_relative_speed), cfg.horizon);
}

double coupled_indirect(double p_i, double p_next, double p_link) {
  if (p_i < 0.0 || p_i > 1.0 || p_next < 0.0 || p_next > 1.0 || p_link < 0.0 ||
      p_link > 1.0)
    fail("coupled_indirect: probabilities must lie in [0,1]");
  return p_i * p_next * p_link;
}

double coupled_chain(std::span<const double> per_segment, int n_total, double p_link) {
  if (n_total < 1) fail("coupled_chain: n_total must be >= 1");
  if (per_segment.size() < static_cast<std::size_t>(n_total))
    fail("coupled_chain: list shorter than n_total");
  if (p_link < 0.0 || p_link > 1.0) fail("coupled_chain: p_link must lie in [0,1]");

  double prod = 1.0;
  for (int i = 1; i <= n_total - 1; ++i) {
    const double p_i = per_segment[i - 1];
    const double p_next = per_segment[i];
    if (p_i < 0.0 || p_i > 1.0 || p_next < 0.0 || p_next > 1.0)
      fail("coupled_chain: probability outside [0,1]");
    prod *= p_i * p_next * p_link;
  }
  return prod;
}

LinkTimeReport build_report(const KinematicsConfig& cfg, Direction dir,
                            bool literal_relative_speed) {
  LinkTimeReport rep;
  rep.direction = dir;
  rep.degenerate = speed_levels(cfg) == 0;
  rep.t_comm_same = t_comm_same(cfg, dir);
  rep.t_comm_diff = t_comm_diff(cfg, dir, literal_relative_speed);
  rep.ct = ct(cfg, dir, literal_relative_speed);
  rep.p_break = cfg.horizon / rep.ct;
  rep.p_link = p_link_from(rep.ct, cfg.horizon);
  return rep;
}

}  // namespace stripnet::linktime
