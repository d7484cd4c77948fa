#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <vector>

#include "stripnet/des.hpp"

namespace stripnet::proto {

struct AodvConfig {
  int ttl_start = 1;
  int ttl_increment = 2;
  int ttl_threshold = 7;
  int net_diameter = 35;
  double hello_interval = 1.0;   // seconds; 0 disables HELLO beacons
  double route_lifetime = 10.0;  // active-route expiry, refreshed on use
  bool local_repair = true;
  bool gratuitous_rrep = true;

  void validate() const;
  static AodvConfig defaults();
  static AodvConfig mod();  // expanding-ring variant (2, 4, 9)
};

// Expanding-ring TTL sequence: ttl_start, +increment while <= threshold,
// then one network-wide attempt at net_diameter.
std::vector<int> ers_ttl_schedule(const AodvConfig& cfg);

// On-demand distance-vector routing: expanding-ring RREQ floods, reverse
// path RREPs with sequence-number freshness, RERR invalidation, optional
// local repair and gratuitous RREPs, periodic HELLO liveness.
class Aodv final : public des::RoutingProtocol {
public:
  explicit Aodv(AodvConfig cfg);

  void start(des::Api& api) override;
  void on_receive(des::Api& api, const des::Packet& pkt, des::NodeId from) override;
  void on_timer(des::Api& api, std::int64_t timer_id) override;
  void on_send_failure(des::Api& api, const des::Packet& pkt,
                       des::NodeId next_hop) override;
  void on_app_send(des::Api& api, des::Packet pkt) override;

  struct RouteEntry {
    des::NodeId next_hop = -1;
    int hop_count = 0;
    std::uint32_t dest_seq = 0;
    bool seq_known = false;
    double expiry = 0.0;
    bool valid = false;
  };

  const std::map<des::NodeId, RouteEntry>& table() const { return table_; }

  // Message payloads (des::Packet::payload)
  struct Rreq {
    std::uint32_t rreq_id = 0;
    des::NodeId origin = -1;
    std::uint32_t origin_seq = 0;
    des::NodeId dest = -1;
    std::uint32_t dest_seq = 0;
    bool dest_seq_known = false;
    int hop_count = 0;
    int ttl = 1;
  };
  struct Rrep {
    des::NodeId consumer = -1;    // node the reply travels to
    des::NodeId route_dest = -1;  // node the carried route leads to
    std::uint32_t dest_seq = 0;
    int hop_count = 0;
  };
  struct Rerr {
    std::vector<std::pair<des::NodeId, std::uint32_t>> unreachable;
  };
  struct Hello {};

private:
  struct Pending {
    std::deque<des::Packet> queue;
    std::size_t ring_idx = 0;
    std::uint32_t rreq_id = 0;
    bool repairing = false;
    int repair_ttl = 0;
    double deadline = 0.0;  // rejects timers left over from erased discoveries
  };

  void update_route(des::Api& api, des::NodeId dest, des::NodeId via, int hops,
                    std::uint32_t seq, bool seq_known);
  RouteEntry* active_route(des::Api& api, des::NodeId dest);
  void begin_discovery(des::Api& api, des::NodeId dest);
  void send_ring_rreq(des::Api& api, des::NodeId dest, int ttl);
  void forward_data(des::Api& api, des::Packet pkt);
  bool try_local_repair(des::Api& api, const des::Packet& pkt);
  void handle_broken_routes(des::Api& api, des::NodeId via);
  void flush_pending(des::Api& api, des::NodeId dest);
  void drop_pending(des::Api& api, des::NodeId dest);
  void send_rerr(des::Api& api, std::vector<std::pair<des::NodeId, std::uint32_t>> lost);

  AodvConfig cfg_;
  std::vector<int> schedule_;
  std::map<des::NodeId, RouteEntry> table_;
  std::map<des::NodeId, Pending> pending_;
  std::set<std::pair<des::NodeId, std::uint32_t>> seen_rreqs_;
  std::map<des::NodeId, double> neighbors_;  // last time heard
  std::uint32_t own_seq_ = 0;
  std::uint32_t next_rreq_id_ = 0;
};

des::ProtocolFactory make_aodv(const AodvConfig& cfg);

}  // namespace stripnet::proto
