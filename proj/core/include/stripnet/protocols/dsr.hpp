#pragma once

#include <cstdint>
#include <deque>
#include <list>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "stripnet/des.hpp"

namespace stripnet::proto {

struct DsrConfig {
  std::size_t cache_capacity = 1024;
  bool salvaging = true;

  void validate() const;
  static DsrConfig defaults();
  static DsrConfig mod();  // small-cache variant (256 entries)
};

// Path cache for source routing. Entries are full routes starting at the
// owning node; lookup serves any destination contained in a stored route by
// truncation. Eviction is least-recently-used, no time-based expiry.
class DsrRouteCache {
public:
  explicit DsrRouteCache(std::size_t capacity);

  // Returns true if a new entry was stored. Duplicate paths refresh their
  // LRU position instead; paths with repeated nodes or fewer than two nodes
  // are rejected.
  bool insert(const std::vector<des::NodeId>& path);

  // Shortest truncated route to dest, ties broken lexicographically.
  // Touches the winning entry's LRU position.
  std::optional<std::vector<des::NodeId>> lookup(des::NodeId dest);

  // Erases every entry in which a and b are adjacent (either order).
  void remove_link(des::NodeId a, des::NodeId b);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }

private:
  struct Entry {
    std::vector<des::NodeId> path;
    std::uint64_t last_use = 0;
  };

  void evict_lru();

  std::size_t capacity_;
  std::uint64_t use_clock_ = 0;
  std::list<Entry> entries_;
};

// Source routing: flooded route requests accumulate the traversed path,
// replies return the complete route, data packets carry it hop by hop.
// Every route seen in flight is cached; broken links trigger salvaging
// from the cache and route-error notification back to the source.
class Dsr final : public des::RoutingProtocol {
public:
  explicit Dsr(DsrConfig cfg);

  void start(des::Api& api) override;
  void on_receive(des::Api& api, const des::Packet& pkt, des::NodeId from) override;
  void on_timer(des::Api& api, std::int64_t timer_id) override;
  void on_send_failure(des::Api& api, const des::Packet& pkt,
                       des::NodeId next_hop) override;
  void on_app_send(des::Api& api, des::Packet pkt) override;

  const DsrRouteCache& cache() const { return cache_; }

  // Message payloads (des::Packet::payload)
  struct Rreq {
    std::uint32_t rreq_id = 0;
    des::NodeId origin = -1;
    des::NodeId dest = -1;
    std::vector<des::NodeId> path;  // origin .. last forwarder
  };
  struct Rrep {
    des::NodeId origin = -1;
    des::NodeId dest = -1;
    std::vector<des::NodeId> path;  // origin .. dest
  };
  struct Rerr {
    des::NodeId broken_a = -1;
    des::NodeId broken_b = -1;
    std::vector<des::NodeId> route;  // reporting node .. source
    std::size_t next_idx = 0;
  };
  struct DataHeader {
    std::vector<des::NodeId> route;  // origin .. dest
    std::size_t next_idx = 0;        // position of the node holding the packet
    int salvage_count = 0;
  };

private:
  struct Pending {
    std::deque<des::Packet> queue;
    int attempt = 0;
    double deadline = 0.0;
  };

  void learn_from_route(des::Api& api, const std::vector<des::NodeId>& path);
  void cache_insert(des::Api& api, const std::vector<des::NodeId>& path);
  void begin_discovery(des::Api& api, des::NodeId dest);
  void send_rreq(des::Api& api, des::NodeId dest);
  void send_with_route(des::Api& api, des::Packet pkt,
                       std::vector<des::NodeId> route, int salvage_count);
  void flush_pending(des::Api& api, des::NodeId dest);
  void drop_pending(des::Api& api, des::NodeId dest);
  void send_rerr(des::Api& api, des::NodeId broken_a, des::NodeId broken_b,
                 std::vector<des::NodeId> back_route);

  DsrConfig cfg_;
  DsrRouteCache cache_;
  std::map<des::NodeId, Pending> pending_;
  std::set<std::pair<des::NodeId, std::uint32_t>> seen_rreqs_;
  std::uint32_t next_rreq_id_ = 0;
};

des::ProtocolFactory make_dsr(const DsrConfig& cfg);

}  // namespace stripnet::proto
