#pragma once

#include <span>

namespace stripnet::linktime {

enum class Direction { Same, Opposite };

// Discrete kinematic picture behind the link-time sums: speeds form a
// lattice v_min, v_min+delta_v, ..., v_max (V_c+1 levels), neighbours sit at
// multiples of `spacing`, and `horizon` is the observation time T.
struct KinematicsConfig {
  double v_min = 0.0;    // slowest lattice speed (m/s)
  double v_max = 0.0;    // fastest lattice speed (m/s)
  double delta_v = 0.0;  // lattice step (m/s); (v_max-v_min)/delta_v must be integral
  double t_r = 0.0;      // transmission range (m)
  double spacing = 0.0;  // inter-node separation d (m)
  double horizon = 0.0;  // observation time T (s)

  void validate() const;
};

// Raw value of 1 - T/CT together with its clamp to [0,1]; the raw value is
// kept so reports can show how far a configuration is from sustaining links.
struct PLink {
  double raw = 0.0;
  double value = 0.0;
};

struct LinkTimeReport {
  double t_comm_same = 0.0;
  double t_comm_diff = 0.0;
  double ct = 0.0;
  double p_break = 0.0;  // T / CT
  PLink p_link;
  Direction direction = Direction::Same;
  bool degenerate = false;  // single speed level: no distinct-speed pairs
};

// Number of speed levels above v_min: V_c = (v_max - v_min)/delta_v.
int speed_levels(const KinematicsConfig& cfg);

// floor(t_r/spacing) for same direction, floor(2 t_r/spacing) for opposite,
// never less than one node.
int nodes_in_range(double t_r, double spacing, Direction dir);

// Same-speed communication time. Same direction: the double sum collapses to
// (V_c+1)*T (asserted against the literal evaluation). Opposite direction:
// (V_c+1) * N_o * T / (N_o + 1) per the opposite-direction sum.
double t_comm_same(const KinematicsConfig& cfg, Direction dir = Direction::Same);

// Distinct-speed communication time: double sum over speed pairs i != j of
// per-offset link durations. Opposite direction closes at v_i + v_j by
// default; literal_relative_speed switches to the |v_i - v_j| convention for
// comparison runs.
double t_comm_diff(const KinematicsConfig& cfg, Direction dir,
                   bool literal_relative_speed = false);

// CT = (t_comm_same + t_comm_diff) / (V_c + 1)^2 for the given direction.
double ct(const KinematicsConfig& cfg, Direction dir,
          bool literal_relative_speed = false);

// Link sustainability 1 - T/CT, clamped to [0,1]; raw value preserved.
PLink p_link(const KinematicsConfig& cfg, Direction dir,
             bool literal_relative_speed = false);

// Clamping helper shared by p_link and the report path; exposed because the
// raw/clamped split is part of the contract.
PLink p_link_from(double ct_value, double horizon);

// Link-aware relay products: the connectivity factors scaled by p_link.
double coupled_indirect(double p_i, double p_next, double p_link);
double coupled_chain(std::span<const double> per_segment, int n_total, double p_link);

LinkTimeReport build_report(const KinematicsConfig& cfg, Direction dir,
                            bool literal_relative_speed = false);

}  // namespace stripnet::linktime
