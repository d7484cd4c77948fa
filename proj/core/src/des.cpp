#include "stripnet/des.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace stripnet::des {
namespace {

constexpr double kMobilityTick = 0.1;    // s
constexpr double kPropagation = 1e-6;    // s, fixed per-hop latency
constexpr std::size_t kTxQueueCap = 50;  // DropTail depth per node

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double distance(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RadioConfig RadioConfig::mac80211() {
  return {250.0, 2e6, 0.0, RadioPreset::Mac80211};
}

RadioConfig RadioConfig::mac80211p() {
  return {300.0, 6e6, 0.0, RadioPreset::Mac80211p};
}

void SimScenario::validate() const {
  if (node_count < 1) fail("SimScenario: node_count must be >= 1");
  if (!(duration_s > 0.0)) fail("SimScenario: duration_s must be > 0");
  if (!(radio.range_m > 0.0)) fail("SimScenario: radio range must be > 0");
  if (!(radio.bitrate_bps > 0.0)) fail("SimScenario: radio bitrate must be > 0");
  if (radio.loss_prob < 0.0 || radio.loss_prob > 1.0)
    fail("SimScenario: loss_prob must lie in [0,1]");
  if (traffic.packet_bytes < 1) fail("SimScenario: packet_bytes must be >= 1");
  if (!(traffic.interval_s > 0.0)) fail("SimScenario: traffic interval must be > 0");
  for (const Flow& f : traffic.flows) {
    if (f.src < 0 || f.src >= node_count || f.dst < 0 || f.dst >= node_count)
      fail("SimScenario: flow endpoint outside node range");
    if (f.src == f.dst) fail("SimScenario: flow src == dst");
  }

  if (std::holds_alternative<RandomWaypointMobility>(mobility)) {
    const auto& m = std::get<RandomWaypointMobility>(mobility);
    if (m.v_min < 0.0 || m.v_max < m.v_min)
      fail("SimScenario: waypoint speeds must satisfy 0 <= v_min <= v_max");
    if (m.pause < 0.0) fail("SimScenario: waypoint pause must be >= 0");
    if (field.kind != Field::Kind::Rectangle)
      fail("SimScenario: random waypoint needs a rectangle field");
    if (!(field.width > 0.0) || !(field.height > 0.0))
      fail("SimScenario: rectangle extents must be > 0");
  } else if (std::holds_alternative<HighwayMobility>(mobility)) {
    const auto& m = std::get<HighwayMobility>(mobility);
    if (field.kind != Field::Kind::Strip)
      fail("SimScenario: highway mobility needs a strip field");
    if (!(field.length > 0.0)) fail("SimScenario: strip length must be > 0");
    if (field.lanes < 1) fail("SimScenario: strip needs at least one lane");
    if (m.lane_speeds.size() != static_cast<std::size_t>(field.lanes))
      fail("SimScenario: lane_speeds must list one speed per lane");
    if (m.lane_dirs.size() != static_cast<std::size_t>(field.lanes))
      fail("SimScenario: lane_dirs must list one direction per lane");
    for (double v : m.lane_speeds)
      if (v < 0.0) fail("SimScenario: lane speed must be >= 0");
    for (int d : m.lane_dirs)
      if (d != 1 && d != -1) fail("SimScenario: lane direction must be +1 or -1");
  } else {
    const auto& m = std::get<FixedPositions>(mobility);
    if (m.positions.size() != static_cast<std::size_t>(node_count))
      fail("SimScenario: fixed positions must list one position per node");
  }
}

// ---------------------------------------------------------------------------
// Mobility

MobilityModel::MobilityModel(const SimScenario& scenario, std::uint64_t seed)
    : scenario_(scenario), rng_(CounterRng(seed)) {
  const int n = scenario_.node_count;
  pos_.resize(n);

  if (const auto* fixed = std::get_if<FixedPositions>(&scenario_.mobility)) {
    pos_ = fixed->positions;
    return;
  }

  if (const auto* hw = std::get_if<HighwayMobility>(&scenario_.mobility)) {
    highway_dir_.resize(n);
    highway_speed_.resize(n);
    for (int k = 0; k < n; ++k) {
      const int lane = k % scenario_.field.lanes;
      pos_[k] = {rng_.uniform(0.0, scenario_.field.length), lane * hw->lane_gap_m};
      highway_dir_[k] = hw->lane_dirs[lane];
      highway_speed_[k] = hw->lane_speeds[lane];
    }
    return;
  }

  const auto& rwp = std::get<RandomWaypointMobility>(scenario_.mobility);
  wp_.resize(n);
  for (int k = 0; k < n; ++k) {
    pos_[k] = {rng_.uniform(0.0, scenario_.field.width),
               rng_.uniform(0.0, scenario_.field.height)};
    wp_[k].dest = {rng_.uniform(0.0, scenario_.field.width),
                   rng_.uniform(0.0, scenario_.field.height)};
    wp_[k].speed = rng_.uniform(rwp.v_min, rwp.v_max);
    wp_[k].paused = false;
  }
}

void MobilityModel::advance_waypoint(std::size_t n, double from, double to) {
  const auto& rwp = std::get<RandomWaypointMobility>(scenario_.mobility);
  double t = from;
  while (t < to) {
    Waypoint& w = wp_[n];
    if (w.paused) {
      if (w.pause_until >= to) return;  // still dwelling at the waypoint
      t = w.pause_until;
      w.paused = false;
      w.dest = {rng_.uniform(0.0, scenario_.field.width),
                rng_.uniform(0.0, scenario_.field.height)};
      w.speed = rng_.uniform(rwp.v_min, rwp.v_max);
      continue;
    }
    const double dist = distance(pos_[n], w.dest);
    if (w.speed <= 0.0) return;  // motionless node
    const double arrival = t + dist / w.speed;
    if (arrival > to) {
      const double frac = (to - t) * w.speed / dist;
      pos_[n].x += (w.dest.x - pos_[n].x) * frac;
      pos_[n].y += (w.dest.y - pos_[n].y) * frac;
      return;
    }
    // Reach the waypoint exactly, then dwell for the configured pause.
    pos_[n] = w.dest;
    w.paused = true;
    w.pause_until = arrival + rwp.pause;
    t = arrival;
  }
}

void MobilityModel::advance_to(double t) {
  if (t < clock_ - 1e-12) throw std::logic_error("MobilityModel: time went backwards");
  if (t <= clock_) return;

  if (std::holds_alternative<FixedPositions>(scenario_.mobility)) {
    clock_ = t;
    return;
  }
  if (std::holds_alternative<HighwayMobility>(scenario_.mobility)) {
    const double L = scenario_.field.length;
    const double dt = t - clock_;
    for (std::size_t k = 0; k < pos_.size(); ++k) {
      double x = std::fmod(pos_[k].x + highway_dir_[k] * highway_speed_[k] * dt, L);
      if (x < 0.0) x += L;
      pos_[k].x = x;
    }
    clock_ = t;
    return;
  }
  for (std::size_t k = 0; k < pos_.size(); ++k) advance_waypoint(k, clock_, t);
  clock_ = t;
}

std::vector<Vec2> initial_positions(const SimScenario& scenario) {
  scenario.validate();
  MobilityModel model(scenario, CounterRng(scenario.seed).substream(0).next_u64());
  return model.positions();
}

// ---------------------------------------------------------------------------
// Trace helpers

const char* to_string(TraceEvent e) {
  switch (e) {
    case TraceEvent::Origin: return "origin";
    case TraceEvent::Tx: return "tx";
    case TraceEvent::Rx: return "rx";
    case TraceEvent::Drop: return "drop";
    case TraceEvent::Deliver: return "deliver";
  }
  return "?";
}

const char* to_string(PacketKind k) {
  return k == PacketKind::Data ? "data" : "control";
}

std::string format_trace(const std::vector<TraceRecord>& trace) {
  std::string out;
  out.reserve(trace.size() * 48 + 64);
  out += "time_s\tevent\tnode\tpacket_id\tkind\tsubtype\tbytes\tpeer\n";
  for (const TraceRecord& r : trace) {
    out += format_double(r.time_s);
    out += '\t';
    out += to_string(r.event);
    out += '\t';
    out += std::to_string(r.node);
    out += '\t';
    out += std::to_string(r.packet);
    out += '\t';
    out += to_string(r.kind);
    out += '\t';
    out += r.subtype;
    out += '\t';
    out += std::to_string(r.bytes);
    out += '\t';
    out += std::to_string(r.peer);
    out += '\n';
  }
  return out;
}

std::vector<TraceRecord> parse_trace(const std::string& tsv) {
  std::vector<TraceRecord> out;
  std::istringstream in(tsv);
  std::string line;
  bool first = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (first) {  // header row
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, '\t')) fields.push_back(field);
    if (fields.size() != 8)
      throw std::runtime_error("parse_trace: malformed row at line " +
                               std::to_string(line_no));
    TraceRecord r;
    r.time_s = std::stod(fields[0]);
    const std::string& ev = fields[1];
    if (ev == "origin") r.event = TraceEvent::Origin;
    else if (ev == "tx") r.event = TraceEvent::Tx;
    else if (ev == "rx") r.event = TraceEvent::Rx;
    else if (ev == "drop") r.event = TraceEvent::Drop;
    else if (ev == "deliver") r.event = TraceEvent::Deliver;
    else throw std::runtime_error("parse_trace: unknown event at line " +
                                  std::to_string(line_no));
    r.node = std::stoi(fields[2]);
    r.packet = std::stoull(fields[3]);
    r.kind = fields[4] == "data" ? PacketKind::Data : PacketKind::Control;
    r.subtype = fields[5];
    r.bytes = std::stoi(fields[6]);
    r.peer = std::stoi(fields[7]);
    out.push_back(std::move(r));
  }
  return out;
}

SimMetrics recompute_metrics(const std::vector<TraceRecord>& trace, double duration_s) {
  SimMetrics m;
  m.duration_s = duration_s;
  std::map<PacketId, double> origin_time;
  for (const TraceRecord& r : trace) {
    switch (r.event) {
      case TraceEvent::Origin:
        ++m.data_sent;
        origin_time[r.packet] = r.time_s;
        break;
      case TraceEvent::Tx:
        if (r.kind == PacketKind::Control) ++m.control_transmissions;
        break;
      case TraceEvent::Deliver: {
        ++m.data_delivered;
        m.bytes_delivered += r.bytes;
        auto it = origin_time.find(r.packet);
        if (it == origin_time.end())
          throw std::runtime_error("recompute_metrics: deliver without origin");
        m.sum_delay_s += r.time_s - it->second;
        break;
      }
      default:
        break;
    }
  }
  m.throughput_Bps = m.bytes_delivered / duration_s;
  m.e2ed_s = m.data_delivered ? m.sum_delay_s / m.data_delivered : 0.0;
  m.nrl_defined = m.data_delivered > 0;
  m.nrl = m.nrl_defined
              ? static_cast<double>(m.control_transmissions) / m.data_delivered
              : std::numeric_limits<double>::quiet_NaN();
  return m;
}

// ---------------------------------------------------------------------------
// Engine

namespace {

struct Outgoing {
  Packet pkt;
  NodeId next_hop = kBroadcast;  // kBroadcast marks a broadcast
};

class Engine;

class NodeApi final : public Api {
public:
  NodeApi() = default;
  void bind(Engine* eng, NodeId self) {
    eng_ = eng;
    self_ = self;
  }
  double now() const override;
  NodeId self() const override { return self_; }
  int node_count() const override;
  PacketId new_packet_id() override;
  void send_unicast(NodeId next_hop, Packet pkt) override;
  void send_broadcast(Packet pkt) override;
  void schedule(double delay_s, std::int64_t timer_id) override;
  void deliver_local(const Packet& pkt) override;
  void drop(const Packet& pkt) override;
  void stat_add(const std::string& key, double delta) override;
  void stat_max(const std::string& key, double value) override;

private:
  Engine* eng_ = nullptr;
  NodeId self_ = -1;
};

struct NodeState {
  std::unique_ptr<RoutingProtocol> protocol;
  NodeApi api;
  std::deque<Outgoing> txq;
  bool tx_busy = false;
};

enum class Disposition : char { InFlight, Delivered, Dropped };

class Engine {
public:
  Engine(const SimScenario& sc, const ProtocolFactory& factory, const RunOptions& opt)
      : sc_(sc),
        opt_(opt),
        mobility_(sc, CounterRng(sc.seed).substream(0).next_u64()),
        loss_rng_(CounterRng(sc.seed).substream(1)) {
    nodes_.resize(sc.node_count);
    for (NodeId n = 0; n < sc.node_count; ++n) {
      nodes_[n].protocol = factory(n);
      if (!nodes_[n].protocol) fail("run: protocol factory returned null");
      nodes_[n].api.bind(this, n);
    }
  }

  SimResult run() {
    for (NodeId n = 0; n < sc_.node_count; ++n) {
      nodes_[n].protocol->start(nodes_[n].api);
    }
    schedule_mobility(kMobilityTick);
    for (std::size_t f = 0; f < sc_.traffic.flows.size(); ++f) {
      // Deterministic stagger keeps flows from hitting the radio in lockstep.
      schedule_flow(f, 1.0 + 0.001 * static_cast<double>(f));
    }

    while (!events_.empty()) {
      const Event& top = events_.top();
      if (top.t > sc_.duration_s) break;
      if (top.t < clock_ - 1e-9)
        throw std::logic_error("event queue time regression");
      clock_ = top.t;
      auto fn = std::move(top.fn);  // fn is mutable; safe through the const ref
      events_.pop();
      fn();
    }
    clock_ = sc_.duration_s;

    if (opt_.at_end) {
      for (NodeId n = 0; n < sc_.node_count; ++n) opt_.at_end(n, *nodes_[n].protocol);
    }

    metrics_.duration_s = sc_.duration_s;
    metrics_.throughput_Bps = metrics_.bytes_delivered / sc_.duration_s;
    metrics_.e2ed_s =
        metrics_.data_delivered ? metrics_.sum_delay_s / metrics_.data_delivered : 0.0;
    metrics_.nrl_defined = metrics_.data_delivered > 0;
    metrics_.nrl = metrics_.nrl_defined
                       ? static_cast<double>(metrics_.control_transmissions) /
                             metrics_.data_delivered
                       : std::numeric_limits<double>::quiet_NaN();
    return {std::move(metrics_), std::move(trace_)};
  }

  // --- services used by NodeApi ----------------------------------------

  double now() const { return clock_; }
  int node_count() const { return sc_.node_count; }
  PacketId new_packet_id() { return ++packet_ids_; }

  void schedule(double t, std::function<void()> fn) {
    if (t < clock_ - 1e-9) throw std::logic_error("schedule: event in the past");
    events_.push(Event{t, ++event_seq_, std::move(fn)});
  }

  void schedule_timer(NodeId n, double delay, std::int64_t timer_id) {
    schedule(clock_ + delay, [this, n, timer_id] {
      nodes_[n].protocol->on_timer(nodes_[n].api, timer_id);
    });
  }

  void enqueue(NodeId n, Packet pkt, NodeId next_hop) {
    if (pkt.bytes < 1) fail("send: packet bytes must be >= 1");
    if (next_hop == n) fail("send: next hop is the sender");
    NodeState& node = nodes_[n];
    if (node.txq.size() >= kTxQueueCap) {
      record(TraceEvent::Drop, n, pkt, kBroadcast);
      mark_terminal(pkt, Disposition::Dropped);
      return;
    }
    node.txq.push_back(Outgoing{std::move(pkt), next_hop});
    if (!node.tx_busy) start_tx(n);
  }

  void deliver_local(NodeId n, const Packet& pkt) {
    if (pkt.kind != PacketKind::Data)
      throw std::logic_error("deliver_local: only data packets are delivered");
    if (pkt.dst != n) throw std::logic_error("deliver_local: packet not addressed here");
    mark_terminal(pkt, Disposition::Delivered);
    ++metrics_.data_delivered;
    metrics_.bytes_delivered += pkt.bytes;
    metrics_.sum_delay_s += clock_ - pkt.origin_time;
    record(TraceEvent::Deliver, n, pkt, pkt.origin);
  }

  void protocol_drop(NodeId n, const Packet& pkt) {
    record(TraceEvent::Drop, n, pkt, kBroadcast);
    mark_terminal(pkt, Disposition::Dropped);
  }

  void stat_add(const std::string& key, double delta) {
    metrics_.protocol_stats[key] += delta;
  }

  void stat_max(const std::string& key, double value) {
    auto [it, inserted] = metrics_.protocol_stats.emplace(key, value);
    if (!inserted && value > it->second) it->second = value;
  }

  // --- traffic -----------------------------------------------------------

  void schedule_flow(std::size_t flow_idx, double when) {
    if (when > sc_.duration_s) return;
    schedule(when, [this, flow_idx, when] {
      const Flow& flow = sc_.traffic.flows[flow_idx];
      Packet pkt;
      pkt.id = new_packet_id();
      pkt.kind = PacketKind::Data;
      pkt.subtype = "cbr";
      pkt.bytes = sc_.traffic.packet_bytes;
      pkt.origin_time = clock_;
      pkt.origin = flow.src;
      pkt.dst = flow.dst;
      ++metrics_.data_sent;
      disposition_[pkt.id] = Disposition::InFlight;
      record(TraceEvent::Origin, flow.src, pkt, flow.dst);
      nodes_[flow.src].protocol->on_app_send(nodes_[flow.src].api, std::move(pkt));
      schedule_flow(flow_idx, when + sc_.traffic.interval_s);
    });
  }

private:
  struct Event {
    double t;
    std::uint64_t seq;
    mutable std::function<void()> fn;
    bool operator<(const Event& o) const {  // min-heap via operator>
      return t > o.t || (t == o.t && seq > o.seq);
    }
  };

  void schedule_mobility(double t) {
    if (t > sc_.duration_s) return;
    schedule(t, [this, t] {
      mobility_.advance_to(t);
      schedule_mobility(t + kMobilityTick);
    });
  }

  void record(TraceEvent ev, NodeId node, const Packet& pkt, NodeId peer) {
    if (!opt_.record_trace) return;
    trace_.push_back(
        TraceRecord{clock_, ev, node, pkt.id, pkt.kind, pkt.subtype, pkt.bytes, peer});
  }

  void mark_terminal(const Packet& pkt, Disposition d) {
    if (pkt.kind != PacketKind::Data) return;
    auto it = disposition_.find(pkt.id);
    if (it == disposition_.end())
      throw std::logic_error("engine: data packet without origin record");
    if (it->second != Disposition::InFlight)
      throw std::logic_error("engine: data packet disposed twice");
    it->second = d;
  }

  void start_tx(NodeId n) {
    NodeState& node = nodes_[n];
    if (node.txq.empty()) {
      node.tx_busy = false;
      return;
    }
    node.tx_busy = true;
    Outgoing out = std::move(node.txq.front());
    node.txq.pop_front();

    const double serialize = out.pkt.bytes * 8.0 / sc_.radio.bitrate_bps;
    const double done = clock_ + serialize;
    const double arrival = done + kPropagation;

    record(TraceEvent::Tx, n, out.pkt, out.next_hop);
    if (out.pkt.kind == PacketKind::Control) ++metrics_.control_transmissions;

    const auto& pos = mobility_.positions();
    if (out.next_hop == kBroadcast) {
      for (NodeId peer = 0; peer < sc_.node_count; ++peer) {
        if (peer == n) continue;
        if (distance(pos[n], pos[peer]) > sc_.radio.range_m) continue;
        const bool lost =
            sc_.radio.loss_prob > 0.0 && loss_rng_.uniform() < sc_.radio.loss_prob;
        if (lost) {
          schedule(arrival, [this, peer, pkt = out.pkt] {
            record(TraceEvent::Drop, peer, pkt, kBroadcast);
            mark_terminal(pkt, Disposition::Dropped);
          });
        } else {
          schedule(arrival, [this, n, peer, pkt = out.pkt] {
            record(TraceEvent::Rx, peer, pkt, n);
            nodes_[peer].protocol->on_receive(nodes_[peer].api, pkt, n);
          });
        }
      }
    } else {
      const NodeId peer = out.next_hop;
      if (peer < 0 || peer >= sc_.node_count) fail("send: next hop outside node range");
      if (distance(pos[n], pos[peer]) <= sc_.radio.range_m) {
        const bool lost =
            sc_.radio.loss_prob > 0.0 && loss_rng_.uniform() < sc_.radio.loss_prob;
        if (lost) {
          schedule(arrival, [this, peer, pkt = out.pkt] {
            record(TraceEvent::Drop, peer, pkt, kBroadcast);
            mark_terminal(pkt, Disposition::Dropped);
          });
        } else {
          schedule(arrival, [this, n, peer, pkt = out.pkt] {
            record(TraceEvent::Rx, peer, pkt, n);
            nodes_[peer].protocol->on_receive(nodes_[peer].api, pkt, n);
          });
        }
      } else {
        // Out of range at send time: the transmission happens but nobody
        // hears it; the protocol learns via the failure callback.
        schedule(done, [this, n, peer, pkt = out.pkt] {
          nodes_[n].protocol->on_send_failure(nodes_[n].api, pkt, peer);
        });
      }
    }

    schedule(done, [this, n] { start_tx(n); });
  }

  const SimScenario sc_;
  const RunOptions opt_;
  MobilityModel mobility_;
  CounterRng loss_rng_;
  std::vector<NodeState> nodes_;
  std::priority_queue<Event> events_;
  std::uint64_t event_seq_ = 0;
  std::uint64_t packet_ids_ = 0;
  double clock_ = 0.0;
  SimMetrics metrics_;
  std::vector<TraceRecord> trace_;
  std::map<PacketId, Disposition> disposition_;

  friend class NodeApi;
};

double NodeApi::now() const { return eng_->now(); }
int NodeApi::node_count() const { return eng_->node_count(); }
PacketId NodeApi::new_packet_id() { return eng_->new_packet_id(); }
void NodeApi::send_unicast(NodeId next_hop, Packet pkt) {
  eng_->enqueue(self_, std::move(pkt), next_hop);
}
void NodeApi::send_broadcast(Packet pkt) {
  eng_->enqueue(self_, std::move(pkt), kBroadcast);
}
void NodeApi::schedule(double delay_s, std::int64_t timer_id) {
  eng_->schedule_timer(self_, delay_s, timer_id);
}
void NodeApi::deliver_local(const Packet& pkt) { eng_->deliver_local(self_, pkt); }
void NodeApi::drop(const Packet& pkt) { eng_->protocol_drop(self_, pkt); }
void NodeApi::stat_add(const std::string& key, double delta) {
  eng_->stat_add(key, delta);
}
void NodeApi::stat_max(const std::string& key, double value) {
  eng_->stat_max(key, value);
}

}  // namespace

SimResult run(const SimScenario& scenario, const ProtocolFactory& make_protocol,
              const RunOptions& options) {
  scenario.validate();
  if (!make_protocol) fail("run: protocol factory required");
  Engine engine(scenario, make_protocol, options);
  return engine.run();
}

}  // namespace stripnet::des
