#pragma once

#include <any>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "stripnet/rng.hpp"

namespace stripnet::des {

using NodeId = int;
using PacketId = std::uint64_t;

constexpr NodeId kBroadcast = -1;

enum class PacketKind { Data, Control };

struct Packet {
  PacketId id = 0;
  PacketKind kind = PacketKind::Data;
  std::string subtype;        // protocol tag, e.g. "cbr", "rreq"
  int bytes = 0;
  double origin_time = 0.0;   // application send time for data
  int hop_count = 0;
  NodeId origin = -1;         // originating node
  NodeId dst = -1;            // final destination; kBroadcast for floods
  std::any payload;           // protocol-opaque
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// ---------------------------------------------------------------------------
// Scenario description

struct RandomWaypointMobility {
  double v_min = 1.0;
  double v_max = 1.0;
  double pause = 0.0;  // dwell at each waypoint (s)
};

struct HighwayMobility {
  std::vector<double> lane_speeds;  // one entry per lane (m/s)
  std::vector<int> lane_dirs;       // +1 / -1 per lane
  double lane_gap_m = 5.0;
};

struct FixedPositions {
  std::vector<Vec2> positions;  // one per node
};

using MobilityConfig =
    std::variant<RandomWaypointMobility, HighwayMobility, FixedPositions>;

struct Field {
  enum class Kind { Rectangle, Strip };
  Kind kind = Kind::Rectangle;
  double width = 1000.0;   // rectangle extent (m)
  double height = 1000.0;  // rectangle extent (m)
  double length = 1000.0;  // strip length (m)
  int lanes = 2;           // strip lanes
};

enum class RadioPreset { Custom, Mac80211, Mac80211p };

struct RadioConfig {
  double range_m = 250.0;
  double bitrate_bps = 2e6;
  double loss_prob = 0.0;  // independent per-reception drop probability
  RadioPreset preset = RadioPreset::Mac80211;

  static RadioConfig mac80211();   // 250 m, 2 Mb/s
  static RadioConfig mac80211p();  // 300 m, 6 Mb/s
};

struct Flow {
  NodeId src = 0;
  NodeId dst = 1;
};

struct TrafficConfig {
  std::vector<Flow> flows;
  int packet_bytes = 512;
  double interval_s = 0.03;
};

struct SimScenario {
  int node_count = 2;
  Field field;
  MobilityConfig mobility = RandomWaypointMobility{};
  RadioConfig radio;
  TrafficConfig traffic;
  double duration_s = 100.0;
  std::uint64_t seed = 1;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Results

struct SimMetrics {
  std::uint64_t data_sent = 0;
  std::uint64_t data_delivered = 0;
  std::uint64_t bytes_delivered = 0;
  std::uint64_t control_transmissions = 0;  // per-hop control sends
  double sum_delay_s = 0.0;
  double duration_s = 0.0;
  double throughput_Bps = 0.0;  // bytes_delivered / duration
  double e2ed_s = 0.0;          // sum_delay / data_delivered; 0 when none
  double nrl = 0.0;             // control_transmissions / data_delivered
  bool nrl_defined = false;
  std::map<std::string, double> protocol_stats;
};

enum class TraceEvent { Origin, Tx, Rx, Drop, Deliver };

const char* to_string(TraceEvent e);
const char* to_string(PacketKind k);

struct TraceRecord {
  double time_s = 0.0;
  TraceEvent event = TraceEvent::Tx;
  NodeId node = -1;
  PacketId packet = 0;
  PacketKind kind = PacketKind::Data;
  std::string subtype;
  int bytes = 0;
  NodeId peer = -1;
};

// Tab-separated serialization: time_s, event, node, packet_id, kind, subtype,
// bytes, peer; rows sorted by time. Times use %.17g so the file round-trips
// doubles exactly.
std::string format_trace(const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> parse_trace(const std::string& tsv);

// Rebuild throughput/E2ED/NRL and the raw counters from a trace; equals the
// engine's SimMetrics (minus protocol_stats) on traced runs.
SimMetrics recompute_metrics(const std::vector<TraceRecord>& trace, double duration_s);

// ---------------------------------------------------------------------------
// Protocol interface

class Api {
public:
  virtual ~Api() = default;
  virtual double now() const = 0;
  virtual NodeId self() const = 0;
  virtual int node_count() const = 0;
  virtual PacketId new_packet_id() = 0;
  virtual void send_unicast(NodeId next_hop, Packet pkt) = 0;
  virtual void send_broadcast(Packet pkt) = 0;
  virtual void schedule(double delay_s, std::int64_t timer_id) = 0;
  virtual void deliver_local(const Packet& pkt) = 0;  // data reached its dst
  virtual void drop(const Packet& pkt) = 0;           // terminal failure
  virtual void stat_add(const std::string& key, double delta) = 0;
  virtual void stat_max(const std::string& key, double value) = 0;
};

class RoutingProtocol {
public:
  virtual ~RoutingProtocol() = default;
  virtual void start(Api& api) = 0;
  virtual void on_receive(Api& api, const Packet& pkt, NodeId from) = 0;
  virtual void on_timer(Api& api, std::int64_t timer_id) = 0;
  virtual void on_send_failure(Api& api, const Packet& pkt, NodeId next_hop) = 0;
  virtual void on_app_send(Api& api, Packet pkt) = 0;  // pkt.dst is set
};

using ProtocolFactory = std::function<std::unique_ptr<RoutingProtocol>(NodeId)>;

struct RunOptions {
  bool record_trace = true;
  // Invoked per node after the clock stops, while protocol state is alive.
  std::function<void(NodeId, RoutingProtocol&)> at_end;
};

struct SimResult {
  SimMetrics metrics;
  std::vector<TraceRecord> trace;
};

SimResult run(const SimScenario& scenario, const ProtocolFactory& make_protocol,
              const RunOptions& options = {});

// Node placement at t = 0 under the scenario's mobility model and seed;
// matches what run() uses.
std::vector<Vec2> initial_positions(const SimScenario& scenario);

// ---------------------------------------------------------------------------
// Mobility (exposed for direct testing; the engine drives the same model)

class MobilityModel {
public:
  MobilityModel(const SimScenario& scenario, std::uint64_t seed);
  void advance_to(double t);  // continuous-time advance, t must not go back
  const std::vector<Vec2>& positions() const { return pos_; }

private:
  struct Waypoint {
    Vec2 dest;
    double speed = 0.0;
    double pause_until = 0.0;
    bool paused = false;
  };

  void advance_waypoint(std::size_t n, double from, double to);

  const SimScenario scenario_;
  std::vector<Vec2> pos_;
  std::vector<Waypoint> wp_;
  std::vector<double> highway_dir_;
  std::vector<double> highway_speed_;
  double clock_ = 0.0;
  CounterRng rng_;  // waypoint legs keep drawing after construction
};

}  // namespace stripnet::des
