#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "stripnet/des.hpp"

namespace stripnet::proto {

struct FsrConfig {
  int inner_scope_hops = 2;
  double inner_interval = 5.0;   // seconds between in-scope exchanges
  double outer_interval = 15.0;  // seconds between full-table exchanges

  void validate() const;
  static FsrConfig defaults();
  static FsrConfig mod();  // fast variant (1 s / 3 s)
};

// Proactive link-state routing with scoped dissemination: nearby rows are
// refreshed on a short period, the full table on a long one. Rows merge by
// sequence number; shortest paths come from a breadth-first sweep over the
// merged topology.
class Fsr final : public des::RoutingProtocol {
public:
  explicit Fsr(FsrConfig cfg);

  void start(des::Api& api) override;
  void on_receive(des::Api& api, const des::Packet& pkt, des::NodeId from) override;
  void on_timer(des::Api& api, std::int64_t timer_id) override;
  void on_send_failure(des::Api& api, const des::Packet& pkt,
                       des::NodeId next_hop) override;
  void on_app_send(des::Api& api, des::Packet pkt) override;

  // Destination to next-hop table, recomputed when topology changed.
  const std::map<des::NodeId, des::NodeId>& routes();

  // Message payload (des::Packet::payload)
  struct Row {
    des::NodeId origin = -1;
    std::uint32_t seq = 0;
    std::vector<des::NodeId> neighbors;
  };
  struct Lsu {
    std::vector<Row> rows;
  };

private:
  struct LinkState {
    std::uint32_t seq = 0;
    std::vector<des::NodeId> neighbors;
  };

  void refresh_own_row();
  void rebuild_if_dirty();
  void send_lsu(des::Api& api, bool full_table);
  void forward_data(des::Api& api, des::Packet pkt);

  FsrConfig cfg_;
  std::map<des::NodeId, LinkState> topo_;
  std::map<des::NodeId, double> neighbors_;  // last time heard
  std::map<des::NodeId, int> distance_;
  std::map<des::NodeId, des::NodeId> next_hop_;
  std::uint32_t own_seq_ = 0;
  des::NodeId self_ = -1;
  bool dirty_ = true;
};

des::ProtocolFactory make_fsr(const FsrConfig& cfg);

}  // namespace stripnet::proto
