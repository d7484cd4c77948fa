#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stripnet/config.hpp"
#include "stripnet/des.hpp"

namespace stripnet::harness {

// Report/CSV number formatting: shortest %.10g form, nan prints as "nan".
std::string fmt(double v);

// ---------------------------------------------------------------------------
// Protocol registry

// aodv, dsr, fsr plus their *_mod variants.
const std::vector<std::string>& protocol_names();

// Build a protocol factory by name; keys `<name>.<field>` in cfg override
// the variant's defaults (e.g. aodv_mod.route_lifetime = 1000).
des::ProtocolFactory make_protocol(const std::string& name,
                                   const config::Config& cfg);

// ---------------------------------------------------------------------------
// Scenario assembly (sim.* keys)

des::SimScenario scenario_from_config(const config::Config& cfg);

// ---------------------------------------------------------------------------
// Reports

// Closed-form strip connectivity and kinematic link-time tables. Requires
// strip.* or kin.* keys (either section may be omitted).
void run_analytic(const config::Config& cfg, std::ostream& out);

// Sampling cross-checks against the closed forms. Returns true when all
// checks agree: |z| <= 3 for sampled estimates, relative error <= 2% for the
// stepped kinematic lattice, chi-square acceptance for the population fit.
// samples_override > 0 replaces mc.samples; seed_override > 0 replaces
// mc.seed.
bool run_mc(const config::Config& cfg, std::int64_t samples_override,
            std::uint64_t seed_override, std::ostream& out);

// One simulation run. protocol_override/seed_override/trace_path fall back
// to the config (empty/zero = keep config values). Writes the event trace to
// trace_path when given.
void run_sim(const config::Config& cfg, const std::string& protocol_override,
             std::uint64_t seed_override, const std::string& trace_path,
             std::ostream& out);

// ---------------------------------------------------------------------------
// Sweeps (plan.* keys)

struct ExperimentPlan {
  std::string axis;             // "scalability" (node count) | "mobility" (v_max)
  std::vector<double> levels;   // axis values
  std::vector<std::string> protocols;
  int replications = 1;
  std::uint64_t base_seed = 1;
  std::string output;           // CSV destination; empty = stdout only
};

ExperimentPlan plan_from_config(const config::Config& cfg);

struct SweepRow {
  std::string protocol;
  std::string axis;
  double level = 0.0;
  int replication = 0;
  std::uint64_t seed = 0;
  bool ok = false;              // false rows carry nan metric fields
  des::SimMetrics metrics;
};

// Row seed from (base, level index, protocol name, replication); stable under
// reordering or extension of the protocol list.
std::uint64_t derive_run_seed(std::uint64_t base, std::size_t level_idx,
                              const std::string& protocol, std::size_t rep_idx);

std::string csv_header();
std::string csv_row(const SweepRow& row);

// Runs the full plan against the sim.* scenario, `jobs` rows in parallel.
// Row order and contents are independent of the thread count.
std::vector<SweepRow> run_sweep(const config::Config& cfg,
                                const ExperimentPlan& plan, int jobs);

// Per-protocol, per-level means over the successful replications.
void write_sweep_summary(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace stripnet::harness
