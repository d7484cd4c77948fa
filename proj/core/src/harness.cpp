#include "stripnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "stripnet/connectivity.hpp"
#include "stripnet/linktime.hpp"
#include "stripnet/mc.hpp"
#include "stripnet/protocols/aodv.hpp"
#include "stripnet/protocols/dsr.hpp"
#include "stripnet/protocols/fsr.hpp"

namespace stripnet::harness {
namespace {

using config::Config;
using config::ConfigError;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

double parse_number(const std::string& item, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument(item);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got `" + item + "`");
  }
}

std::pair<double, double> parse_xy(const std::string& item, const std::string& key) {
  const std::size_t colon = item.find(':');
  if (colon == std::string::npos)
    throw ConfigError(key + ": expected `x:y`, got `" + item + "`");
  try {
    std::size_t used = 0;
    const double x = std::stod(item.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument(item);
    const double y = std::stod(item.substr(colon + 1), &used);
    if (used != item.size() - colon - 1) throw std::invalid_argument(item);
    return {x, y};
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected `x:y`, got `" + item + "`");
  }
}

std::pair<int, int> parse_flow(const std::string& item) {
  const auto [a, b] = parse_xy(item, "sim.traffic.flows");
  return {static_cast<int>(a), static_cast<int>(b)};
}

// ---------------------------------------------------------------------------
// Protocol registry

proto::AodvConfig aodv_from(const Config& cfg, const std::string& name,
                            proto::AodvConfig base) {
  base.ttl_start = static_cast<int>(cfg.get_int(name + ".ttl_start", base.ttl_start));
  base.ttl_increment =
      static_cast<int>(cfg.get_int(name + ".ttl_increment", base.ttl_increment));
  base.ttl_threshold =
      static_cast<int>(cfg.get_int(name + ".ttl_threshold", base.ttl_threshold));
  base.net_diameter =
      static_cast<int>(cfg.get_int(name + ".net_diameter", base.net_diameter));
  base.hello_interval = cfg.get_double(name + ".hello_interval", base.hello_interval);
  base.route_lifetime = cfg.get_double(name + ".route_lifetime", base.route_lifetime);
  base.local_repair = cfg.get_bool(name + ".local_repair", base.local_repair);
  base.gratuitous_rrep =
      cfg.get_bool(name + ".gratuitous_rrep", base.gratuitous_rrep);
  return base;
}

proto::DsrConfig dsr_from(const Config& cfg, const std::string& name,
                          proto::DsrConfig base) {
  base.cache_capacity = static_cast<std::size_t>(
      cfg.get_int(name + ".cache_capacity",
                  static_cast<long long>(base.cache_capacity)));
  base.salvaging = cfg.get_bool(name + ".salvaging", base.salvaging);
  return base;
}

proto::FsrConfig fsr_from(const Config& cfg, const std::string& name,
                          proto::FsrConfig base) {
  base.inner_scope_hops = static_cast<int>(
      cfg.get_int(name + ".inner_scope_hops", base.inner_scope_hops));
  base.inner_interval = cfg.get_double(name + ".inner_interval", base.inner_interval);
  base.outer_interval = cfg.get_double(name + ".outer_interval", base.outer_interval);
  return base;
}

// ---------------------------------------------------------------------------
// Scenario assembly

des::SimScenario build_scenario(const Config& cfg, std::optional<int> nodes_override,
                                std::optional<double> v_max_override) {
  des::SimScenario sc;
  sc.node_count = static_cast<int>(cfg.get_int("sim.nodes", sc.node_count));
  if (nodes_override) sc.node_count = *nodes_override;
  sc.duration_s = cfg.get_double("sim.duration_s", sc.duration_s);
  sc.seed = cfg.get_uint64("sim.seed", sc.seed);

  const std::string field = cfg.get_string("sim.field", "rectangle");
  if (field == "rectangle") {
    sc.field.kind = des::Field::Kind::Rectangle;
    sc.field.width = cfg.get_double("sim.field.width_m", sc.field.width);
    sc.field.height = cfg.get_double("sim.field.height_m", sc.field.height);
  } else if (field == "strip") {
    sc.field.kind = des::Field::Kind::Strip;
    sc.field.length = cfg.get_double("sim.field.length_m", sc.field.length);
    sc.field.lanes = static_cast<int>(cfg.get_int("sim.field.lanes", sc.field.lanes));
  } else {
    throw ConfigError("sim.field: expected rectangle or strip, got `" + field + "`");
  }

  const std::string mobility = cfg.get_string("sim.mobility", "waypoint");
  if (mobility == "waypoint") {
    des::RandomWaypointMobility rwp;
    rwp.v_min = cfg.get_double("sim.mobility.v_min_mps", rwp.v_min);
    rwp.v_max = cfg.get_double("sim.mobility.v_max_mps", rwp.v_max);
    rwp.pause = cfg.get_double("sim.mobility.pause_s", rwp.pause);
    if (v_max_override) {
      rwp.v_max = *v_max_override;
      rwp.v_min = std::min(rwp.v_min, rwp.v_max);
    }
    sc.mobility = rwp;
  } else if (mobility == "highway") {
    des::HighwayMobility hw;
    for (const std::string& item : cfg.get_list("sim.mobility.lane_speeds_mps"))
      hw.lane_speeds.push_back(parse_number(item, "sim.mobility.lane_speeds_mps"));
    if (cfg.has("sim.mobility.lane_dirs")) {
      for (const std::string& item : cfg.get_list("sim.mobility.lane_dirs"))
        hw.lane_dirs.push_back(
            static_cast<int>(parse_number(item, "sim.mobility.lane_dirs")));
    } else {
      for (std::size_t k = 0; k < hw.lane_speeds.size(); ++k)
        hw.lane_dirs.push_back(k % 2 == 0 ? +1 : -1);
    }
    hw.lane_gap_m = cfg.get_double("sim.mobility.lane_gap_m", hw.lane_gap_m);
    // Without an explicit lane count the strip follows the speed list.
    if (!cfg.has("sim.field.lanes") && !hw.lane_speeds.empty())
      sc.field.lanes = static_cast<int>(hw.lane_speeds.size());
    if (v_max_override)
      throw ConfigError("plan.axis mobility needs waypoint mobility");
    sc.mobility = hw;
  } else if (mobility == "static") {
    des::FixedPositions fixed;
    for (const std::string& item : cfg.get_list("sim.mobility.positions")) {
      const auto [x, y] = parse_xy(item, "sim.mobility.positions");
      fixed.positions.push_back({x, y});
    }
    if (v_max_override)
      throw ConfigError("plan.axis mobility needs waypoint mobility");
    sc.mobility = fixed;
  } else {
    throw ConfigError("sim.mobility: expected waypoint, highway or static, got `" +
                      mobility + "`");
  }

  const std::string radio = cfg.get_string("sim.radio", "mac80211");
  if (radio == "mac80211") {
    sc.radio = des::RadioConfig::mac80211();
  } else if (radio == "mac80211p") {
    sc.radio = des::RadioConfig::mac80211p();
  } else if (radio == "custom") {
    sc.radio.preset = des::RadioPreset::Custom;
  } else {
    throw ConfigError("sim.radio: expected mac80211, mac80211p or custom, got `" +
                      radio + "`");
  }
  sc.radio.range_m = cfg.get_double("sim.radio.range_m", sc.radio.range_m);
  sc.radio.bitrate_bps = cfg.get_double("sim.radio.bitrate_bps", sc.radio.bitrate_bps);
  sc.radio.loss_prob = cfg.get_double("sim.radio.loss_prob", sc.radio.loss_prob);

  if (cfg.has("sim.traffic.flows") && cfg.has("sim.traffic.flow_count"))
    throw ConfigError("sim.traffic: flows and flow_count are mutually exclusive");
  if (cfg.has("sim.traffic.flows")) {
    for (const std::string& item : cfg.get_list("sim.traffic.flows")) {
      const auto [src, dst] = parse_flow(item);
      sc.traffic.flows.push_back({src, dst});
    }
  } else {
    const int count =
        static_cast<int>(cfg.get_int("sim.traffic.flow_count", 1));
    if (count < 0 || count > sc.node_count)
      throw ConfigError("sim.traffic.flow_count: must lie in [0, sim.nodes]");
    for (int k = 0; k < count; ++k)
      sc.traffic.flows.push_back(
          {k, (k + sc.node_count / 2) % sc.node_count});
  }
  sc.traffic.packet_bytes = static_cast<int>(
      cfg.get_int("sim.traffic.packet_bytes", sc.traffic.packet_bytes));
  sc.traffic.interval_s = cfg.get_double("sim.traffic.interval_s", sc.traffic.interval_s);

  sc.validate();
  return sc;
}

// ---------------------------------------------------------------------------
// Analytic helpers

struct StreamRow {
  int index = 0;
  conn::StreamSpec spec;
  double phi = 0.0;
};

std::vector<StreamRow> streams_from_config(const Config& cfg, double mu,
                                           int steps) {
  std::vector<int> indices;
  for (const std::string& key : cfg.keys_with_prefix("stream.")) {
    const std::size_t dot = key.find('.', 7);
    if (dot == std::string::npos) continue;
    const std::string idx = key.substr(7, dot - 7);
    try {
      const int k = std::stoi(idx);
      if (indices.empty() || indices.back() != k) indices.push_back(k);
    } catch (const std::exception&) {
      throw ConfigError("stream keys must look like stream.<index>.<field>, got `" +
                        key + "`");
    }
  }
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());

  std::vector<StreamRow> rows;
  const double horizon = cfg.get_double("stream.horizon_s", 0.0);
  for (int k : indices) {
    const std::string p = "stream." + std::to_string(k) + ".";
    StreamRow row;
    row.index = k;
    row.spec.rate = cfg.get_double(p + "rate");
    row.spec.strip_offset = cfg.get_double(p + "offset_m", 0.0);
    row.spec.strip_length = cfg.get_double(p + "length_m");
    row.spec.variance_scale = cfg.get_double(p + "variance", 0.0);
    row.spec.validate();
    row.phi = horizon > 0.0
                  ? conn::stream_intensity(row.spec, mu, horizon, steps)
                  : conn::stream_intensity_steady(row.spec, mu, steps);
    rows.push_back(row);
  }
  return rows;
}

linktime::KinematicsConfig kin_from_config(const Config& cfg) {
  linktime::KinematicsConfig kc;
  kc.v_min = cfg.get_double("kin.v_min_mps");
  kc.v_max = cfg.get_double("kin.v_max_mps");
  kc.delta_v = cfg.get_double("kin.delta_v_mps");
  kc.t_r = cfg.get_double("kin.t_r_m");
  kc.spacing = cfg.get_double("kin.spacing_m");
  kc.horizon = cfg.get_double("kin.horizon_s");
  kc.validate();
  return kc;
}

const char* dir_name(linktime::Direction dir) {
  return dir == linktime::Direction::Same ? "same" : "opposite";
}

}  // namespace

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

const std::vector<std::string>& protocol_names() {
  static const std::vector<std::string> names = {"aodv",     "dsr",     "fsr",
                                                 "aodv_mod", "dsr_mod", "fsr_mod"};
  return names;
}

des::ProtocolFactory make_protocol(const std::string& name, const Config& cfg) {
  if (name == "aodv") return proto::make_aodv(aodv_from(cfg, name, proto::AodvConfig::defaults()));
  if (name == "aodv_mod") return proto::make_aodv(aodv_from(cfg, name, proto::AodvConfig::mod()));
  if (name == "dsr") return proto::make_dsr(dsr_from(cfg, name, proto::DsrConfig::defaults()));
  if (name == "dsr_mod") return proto::make_dsr(dsr_from(cfg, name, proto::DsrConfig::mod()));
  if (name == "fsr") return proto::make_fsr(fsr_from(cfg, name, proto::FsrConfig::defaults()));
  if (name == "fsr_mod") return proto::make_fsr(fsr_from(cfg, name, proto::FsrConfig::mod()));
  throw ConfigError("unknown protocol `" + name + "`");
}

des::SimScenario scenario_from_config(const Config& cfg) {
  return build_scenario(cfg, std::nullopt, std::nullopt);
}

void run_analytic(const Config& cfg, std::ostream& out) {
  bool any = false;

  if (cfg.has("strip.d_m")) {
    any = true;
    const double d = cfg.get_double("strip.d_m");
    const int segments = static_cast<int>(cfg.get_int("strip.segments"));
    const double mu = cfg.get_double("strip.mu_mps");
    const double sigma2 = cfg.get_double("strip.sigma2");
    const double beta = cfg.get_double("strip.beta");
    const int steps = static_cast<int>(cfg.get_int("strip.quadrature_steps", 256));
    const double m = conn::derive_m(mu, sigma2, beta);

    out << "== strip connectivity ==\n";
    out << "segments = " << segments << "\n";
    out << "segment_len_m = " << fmt(d) << "\n";
    out << "decay_rate = " << fmt(m) << "\n";

    const auto streams = streams_from_config(cfg, mu, steps);
    if (!streams.empty()) {
      double total = 0.0;
      for (const StreamRow& row : streams) {
        out << "stream " << row.index << ": phi = " << fmt(row.phi) << "\n";
        total += row.phi;
      }
      out << "phi_total = " << fmt(total) << "\n";
      std::vector<double> per_segment(segments, 0.0);
      for (int i = 1; i <= segments; ++i) {
        double phi_i = 0.0;
        for (const StreamRow& row : streams)
          phi_i += row.phi * conn::stream_segment_probability(
                                 m, d, i, row.spec.strip_offset,
                                 row.spec.strip_length);
        per_segment[i - 1] = phi_i;
        out << "segment " << i << ": phi = " << fmt(phi_i) << "\n";
      }
      const conn::SegmentDistribution first{per_segment[0]};
      for (int n = 0; n <= 4; ++n)
        out << "segment 1: P(N=" << n << ") = " << fmt(conn::population_pmf(first, n))
            << "\n";
    }

    const conn::ConnectivityReport report = conn::build_report(m, d, segments, steps);
    for (std::size_t i = 0; i < report.per_segment_direct.size(); ++i)
      out << "direct P_" << (i + 1) << " = " << fmt(report.per_segment_direct[i])
          << "\n";
    for (std::size_t i = 0; i < report.pairwise_indirect.size(); ++i)
      out << "indirect P_" << (i + 1) << "'' = " << fmt(report.pairwise_indirect[i])
          << "\n";
    for (std::size_t i = 0; i < report.efficiency_pct.size(); ++i)
      out << "efficiency_pct_" << (i + 1) << " = " << fmt(report.efficiency_pct[i])
          << "\n";
    out << "chain = " << fmt(report.chain) << "\n";
  }

  if (cfg.has("kin.v_min_mps")) {
    any = true;
    const linktime::KinematicsConfig kc = kin_from_config(cfg);
    const bool literal = cfg.get_bool("kin.literal_relative_speed", false);

    out << "== link kinematics ==\n";
    out << "speed_levels = " << linktime::speed_levels(kc) << "\n";
    for (const auto dir : {linktime::Direction::Same, linktime::Direction::Opposite}) {
      const linktime::LinkTimeReport rep = linktime::build_report(kc, dir, literal);
      const char* tag = dir_name(dir);
      out << tag << ": nodes_in_range = "
          << linktime::nodes_in_range(kc.t_r, kc.spacing, dir) << "\n";
      out << tag << ": t_comm_same = " << fmt(rep.t_comm_same) << "\n";
      out << tag << ": t_comm_diff = " << fmt(rep.t_comm_diff) << "\n";
      out << tag << ": ct = " << fmt(rep.ct) << "\n";
      out << tag << ": p_break = " << fmt(rep.p_break) << "\n";
      out << tag << ": p_link_raw = " << fmt(rep.p_link.raw) << "\n";
      out << tag << ": p_link = " << fmt(rep.p_link.value) << "\n";
      if (rep.degenerate) out << tag << ": degenerate = true\n";
    }
  }

  if (!any)
    throw ConfigError("analytic report needs strip.* or kin.* keys in the config");
}

bool run_mc(const Config& cfg, std::int64_t samples_override,
            std::uint64_t seed_override, std::ostream& out) {
  mc::McConfig mcc;
  mcc.samples = cfg.get_int("mc.samples", mcc.samples);
  mcc.seed = cfg.get_uint64("mc.seed", mcc.seed);
  mcc.batch_count = static_cast<int>(cfg.get_int("mc.batches", mcc.batch_count));
  if (samples_override > 0) mcc.samples = samples_override;
  if (seed_override > 0) mcc.seed = seed_override;
  mcc.validate();

  bool ok = true;
  bool any = false;
  auto z_row = [&](const std::string& name, double analytic, const mc::McEstimate& est) {
    const double gap = est.mean - analytic;
    const double z = gap == 0.0 ? 0.0 : gap / est.std_error;
    const bool pass = std::isfinite(z) && std::fabs(z) <= 3.0;
    ok = ok && pass;
    out << name << ": analytic = " << fmt(analytic) << ", estimate = "
        << fmt(est.mean) << ", stderr = " << fmt(est.std_error) << ", z = "
        << fmt(z) << (pass ? "  [ok]" : "  [DISAGREES]") << "\n";
  };

  if (cfg.has("strip.d_m")) {
    any = true;
    const double d = cfg.get_double("strip.d_m");
    const int segments = static_cast<int>(cfg.get_int("strip.segments"));
    const double mu = cfg.get_double("strip.mu_mps");
    const double sigma2 = cfg.get_double("strip.sigma2");
    const double beta = cfg.get_double("strip.beta");
    const int steps = static_cast<int>(cfg.get_int("strip.quadrature_steps", 256));
    const double m = conn::derive_m(mu, sigma2, beta);

    for (int i = 1; i <= std::min(segments - 1, 2); ++i) {
      const double analytic = conn::direct_comm_probability(m, d, i, steps);
      z_row("direct P_" + std::to_string(i), analytic,
            mc::estimate_direct_prob(m, d, i, mcc));
    }

    // The node-level population simulation disperses by a per-node speed
    // draw; that coincides with the displacement kernel only when the
    // variance is zero, so the cross-check defaults to that regime.
    const double rate = cfg.get_double("mc.population.rate", 0.5);
    const double length = cfg.get_double("mc.population.length_m", d * segments);
    const double pop_mu = cfg.get_double("mc.population.mu_mps", mu);
    const double pop_sigma2 = cfg.get_double("mc.population.sigma2", 0.0);
    mc::McConfig pop_cfg = mcc;
    pop_cfg.samples = cfg.get_int("mc.population.samples", 2000);
    pop_cfg.validate();
    const double traversal = length / pop_mu;
    const double horizon = (5.0 + pop_cfg.samples + 1.0) * traversal;
    const mc::PopulationResult pop =
        mc::simulate_population(rate, pop_mu, pop_sigma2, length, horizon, pop_cfg);
    z_row("population mean", pop.analytic_phi, pop.mean_count);
    z_row("population pgf(1/2)",
          conn::population_pgf({pop.analytic_phi}, 0.5), pop.pgf_half);
    ok = ok && pop.poisson_fit_ok;
    out << "population gof: chi2 = " << fmt(pop.chi_square) << ", critical_1pct = "
        << fmt(pop.chi_square_critical) << ", dof = " << pop.chi_square_dof
        << (pop.poisson_fit_ok ? "  [ok]" : "  [DISAGREES]") << "\n";
  }

  if (cfg.has("kin.v_min_mps")) {
    any = true;
    const linktime::KinematicsConfig kc = kin_from_config(cfg);
    const int vc = linktime::speed_levels(kc);
    for (const auto dir : {linktime::Direction::Same, linktime::Direction::Opposite}) {
      const mc::CtEstimate est = mc::estimate_ct(kc, dir, mcc);
      if (est.degenerate) {
        out << "lattice " << dir_name(dir) << ": degenerate (single speed)\n";
        continue;
      }
      const double pairs = static_cast<double>(vc + 1) * vc;
      const double analytic = linktime::t_comm_diff(kc, dir) / pairs;
      const double rel = analytic == 0.0
                             ? std::fabs(est.estimate.mean)
                             : std::fabs(est.estimate.mean - analytic) /
                                   std::fabs(analytic);
      const bool pass = rel <= 0.02;
      ok = ok && pass;
      out << "lattice " << dir_name(dir) << ": analytic = " << fmt(analytic)
          << ", stepped = " << fmt(est.estimate.mean) << ", rel_err = " << fmt(rel)
          << (pass ? "  [ok]" : "  [DISAGREES]") << "\n";
    }
  }

  if (!any)
    throw ConfigError("mc checks need strip.* or kin.* keys in the config");
  out << (ok ? "all checks agree" : "CHECKS DISAGREE") << "\n";
  return ok;
}

void run_sim(const Config& cfg, const std::string& protocol_override,
             std::uint64_t seed_override, const std::string& trace_path,
             std::ostream& out) {
  des::SimScenario sc = scenario_from_config(cfg);
  if (seed_override > 0) sc.seed = seed_override;
  const std::string name = protocol_override.empty()
                               ? cfg.get_string("sim.protocol", "aodv")
                               : protocol_override;
  const des::ProtocolFactory factory = make_protocol(name, cfg);

  des::RunOptions options;
  options.record_trace = !trace_path.empty();
  const des::SimResult res = des::run(sc, factory, options);

  if (!trace_path.empty()) {
    std::ofstream trace(trace_path, std::ios::binary);
    if (!trace) throw std::runtime_error("cannot write trace file: " + trace_path);
    trace << des::format_trace(res.trace);
  }

  const des::SimMetrics& m = res.metrics;
  out << "protocol = " << name << "\n";
  out << "nodes = " << sc.node_count << "\n";
  out << "duration_s = " << fmt(sc.duration_s) << "\n";
  out << "seed = " << sc.seed << "\n";
  out << "data_sent = " << m.data_sent << "\n";
  out << "data_delivered = " << m.data_delivered << "\n";
  out << "bytes_delivered = " << m.bytes_delivered << "\n";
  out << "throughput_Bps = " << fmt(m.throughput_Bps) << "\n";
  out << "e2ed_s = " << fmt(m.e2ed_s) << "\n";
  out << "nrl = " << (m.nrl_defined ? fmt(m.nrl) : "nan") << "\n";
  out << "control_tx = " << m.control_transmissions << "\n";
  for (const auto& [key, value] : m.protocol_stats)
    out << "stat." << key << " = " << fmt(value) << "\n";
}

ExperimentPlan plan_from_config(const Config& cfg) {
  ExperimentPlan plan;
  plan.axis = cfg.get_string("plan.axis");
  if (plan.axis != "scalability" && plan.axis != "mobility")
    throw ConfigError("plan.axis: expected scalability or mobility, got `" +
                      plan.axis + "`");
  for (const std::string& item : cfg.get_list("plan.levels"))
    plan.levels.push_back(parse_number(item, "plan.levels"));
  plan.protocols = cfg.get_list("plan.protocols");
  const auto& known = protocol_names();
  for (const std::string& name : plan.protocols)
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw ConfigError("plan.protocols: unknown protocol `" + name + "`");
  plan.replications = static_cast<int>(cfg.get_int("plan.replications", 1));
  if (plan.replications < 1)
    throw ConfigError("plan.replications: must be >= 1");
  plan.base_seed = cfg.get_uint64("plan.base_seed", 1);
  plan.output = cfg.get_string("plan.output", "");
  return plan;
}

std::uint64_t derive_run_seed(std::uint64_t base, std::size_t level_idx,
                              const std::string& protocol, std::size_t rep_idx) {
  std::uint64_t x = splitmix(base);
  x = splitmix(x ^ splitmix(level_idx + 1));
  x = splitmix(x ^ fnv1a(protocol));
  x = splitmix(x ^ splitmix(rep_idx + 1));
  return x == 0 ? 0x9E3779B97F4A7C15ull : x;
}

std::string csv_header() {
  return "protocol,axis,level,replication,seed,data_sent,data_delivered,"
         "bytes_delivered,throughput_Bps,e2ed_s,nrl,control_tx";
}

std::string csv_row(const SweepRow& row) {
  std::ostringstream out;
  out << row.protocol << ',' << row.axis << ',' << fmt(row.level) << ','
      << row.replication << ',' << row.seed << ',';
  if (!row.ok) {
    out << "nan,nan,nan,nan,nan,nan,nan";
    return out.str();
  }
  const des::SimMetrics& m = row.metrics;
  out << m.data_sent << ',' << m.data_delivered << ',' << m.bytes_delivered << ','
      << fmt(m.throughput_Bps) << ',' << fmt(m.e2ed_s) << ','
      << (m.nrl_defined ? fmt(m.nrl) : "nan") << ',' << m.control_transmissions;
  return out.str();
}

std::vector<SweepRow> run_sweep(const Config& cfg, const ExperimentPlan& plan,
                                int jobs) {
  std::vector<SweepRow> rows;
  for (std::size_t li = 0; li < plan.levels.size(); ++li) {
    for (const std::string& name : plan.protocols) {
      for (int rep = 0; rep < plan.replications; ++rep) {
        SweepRow row;
        row.protocol = name;
        row.axis = plan.axis;
        row.level = plan.levels[li];
        row.replication = rep;
        row.seed = derive_run_seed(plan.base_seed, li, name,
                                   static_cast<std::size_t>(rep));
        rows.push_back(std::move(row));
      }
    }
  }

  const int worker_count =
      std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(rows.size(), 1)));
  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t idx = cursor.fetch_add(1);
      if (idx >= rows.size()) return;
      SweepRow& row = rows[idx];
      try {
        std::optional<int> nodes;
        std::optional<double> v_max;
        if (plan.axis == "scalability")
          nodes = static_cast<int>(row.level);
        else
          v_max = row.level;
        des::SimScenario sc = build_scenario(cfg, nodes, v_max);
        sc.seed = row.seed;
        des::RunOptions options;
        options.record_trace = false;
        const des::SimResult res =
            des::run(sc, make_protocol(row.protocol, cfg), options);
        row.metrics = res.metrics;
        row.ok = true;
      } catch (const std::exception&) {
        row.ok = false;
      }
    }
  };

  std::vector<std::thread> pool;
  for (int t = 1; t < worker_count; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  return rows;
}

void write_sweep_summary(const std::vector<SweepRow>& rows, std::ostream& out) {
  struct Bucket {
    std::string protocol;
    double level = 0.0;
    int ok = 0;
    int total = 0;
    double throughput = 0.0;
    double e2ed = 0.0;
    double nrl = 0.0;
    int nrl_rows = 0;
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
  };
  std::vector<Bucket> buckets;
  auto find = [&](const SweepRow& row) -> Bucket& {
    for (Bucket& b : buckets)
      if (b.protocol == row.protocol && b.level == row.level) return b;
    buckets.push_back({row.protocol, row.level});
    return buckets.back();
  };
  for (const SweepRow& row : rows) {
    Bucket& b = find(row);
    b.total += 1;
    if (!row.ok) continue;
    b.ok += 1;
    b.throughput += row.metrics.throughput_Bps;
    b.e2ed += row.metrics.e2ed_s;
    if (row.metrics.nrl_defined) {
      b.nrl += row.metrics.nrl;
      b.nrl_rows += 1;
    }
    b.sent += row.metrics.data_sent;
    b.delivered += row.metrics.data_delivered;
  }
  out << "protocol  level  runs  throughput_Bps  e2ed_s  nrl  delivery\n";
  for (const Bucket& b : buckets) {
    const double n = b.ok > 0 ? b.ok : 1;
    const double delivery =
        b.sent > 0 ? static_cast<double>(b.delivered) / b.sent : 0.0;
    out << b.protocol << "  " << fmt(b.level) << "  " << b.ok << "/" << b.total
        << "  " << fmt(b.throughput / n) << "  " << fmt(b.e2ed / n) << "  "
        << (b.nrl_rows > 0 ? fmt(b.nrl / b.nrl_rows) : "nan") << "  "
        << fmt(delivery) << "\n";
  }
}

}  // namespace stripnet::harness
