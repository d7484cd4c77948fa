#include <any>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "stripnet/protocols/aodv.hpp"
#include "stripnet/protocols/dsr.hpp"
#include "stripnet/protocols/fsr.hpp"

using namespace stripnet;

namespace {

// Records every interaction a protocol has with the node and lets the test
// shuttle packets between instances by hand.
struct FakeApi final : des::Api {
  explicit FakeApi(des::NodeId self, int count = 16) : self_(self), count_(count) {}

  struct Sent {
    des::Packet pkt;
    des::NodeId next_hop;
    bool broadcast;
  };

  double now_ = 0.0;
  std::vector<Sent> sent;
  std::vector<std::pair<double, std::int64_t>> timers;
  std::vector<des::Packet> delivered;
  std::vector<des::Packet> dropped;
  std::map<std::string, double> stats;

  double now() const override { return now_; }
  des::NodeId self() const override { return self_; }
  int node_count() const override { return count_; }
  des::PacketId new_packet_id() override { return ++next_id_; }
  void send_unicast(des::NodeId next_hop, des::Packet pkt) override {
    sent.push_back({std::move(pkt), next_hop, false});
  }
  void send_broadcast(des::Packet pkt) override {
    sent.push_back({std::move(pkt), des::kBroadcast, true});
  }
  void schedule(double delay_s, std::int64_t timer_id) override {
    timers.emplace_back(delay_s, timer_id);
  }
  void deliver_local(const des::Packet& pkt) override { delivered.push_back(pkt); }
  void drop(const des::Packet& pkt) override { dropped.push_back(pkt); }
  void stat_add(const std::string& key, double delta) override { stats[key] += delta; }
  void stat_max(const std::string& key, double value) override {
    auto [it, inserted] = stats.emplace(key, value);
    if (!inserted && value > it->second) it->second = value;
  }

 private:
  des::NodeId self_;
  int count_;
  des::PacketId next_id_ = 100;
};

des::Packet data_packet(des::NodeId src, des::NodeId dst, des::PacketId id = 1) {
  des::Packet pkt;
  pkt.id = id;
  pkt.kind = des::PacketKind::Data;
  pkt.subtype = "cbr";
  pkt.bytes = 512;
  pkt.origin = src;
  pkt.dst = dst;
  return pkt;
}

des::Packet control_packet(des::NodeId origin, const std::string& subtype,
                           std::any payload, des::NodeId dst = des::kBroadcast) {
  des::Packet pkt;
  pkt.id = 999;
  pkt.kind = des::PacketKind::Control;
  pkt.subtype = subtype;
  pkt.bytes = 20;
  pkt.origin = origin;
  pkt.dst = dst;
  pkt.payload = std::move(payload);
  return pkt;
}

proto::AodvConfig quiet_aodv() {
  proto::AodvConfig cfg = proto::AodvConfig::defaults();
  cfg.hello_interval = 0.0;
  return cfg;
}

}  // namespace

// ---------------------------------------------------------------------------
// AODV

TEST_CASE("expanding-ring schedules") {
  CHECK(proto::ers_ttl_schedule(proto::AodvConfig::defaults()) ==
        std::vector<int>{1, 3, 5, 7, 35});
  CHECK(proto::ers_ttl_schedule(proto::AodvConfig::mod()) ==
        std::vector<int>{2, 6, 35});

  proto::AodvConfig flood;
  flood.ttl_start = 4;
  flood.ttl_threshold = 4;
  flood.net_diameter = 4;
  CHECK(proto::ers_ttl_schedule(flood) == std::vector<int>{4});

  proto::AodvConfig bad;
  bad.ttl_threshold = 0;
  CHECK_THROWS_AS(proto::ers_ttl_schedule(bad), std::invalid_argument);
}

TEST_CASE("aodv three-node discovery and forwarding") {
  proto::AodvConfig cfg = quiet_aodv();
  cfg.ttl_start = 2;  // reach the middle hop's reflood on the first ring
  proto::Aodv a(cfg), b(cfg), c(cfg);
  FakeApi A(0), B(1), C(2);
  a.start(A);
  b.start(B);
  c.start(C);
  CHECK(A.sent.empty());  // hello disabled

  a.on_app_send(A, data_packet(0, 2));
  REQUIRE(A.sent.size() == 1);
  CHECK(A.sent[0].broadcast);
  CHECK(A.sent[0].pkt.subtype == "rreq");
  CHECK(A.stats["aodv.rreq_tx"] == 1.0);
  const auto rq = std::any_cast<proto::Aodv::Rreq>(A.sent[0].pkt.payload);
  CHECK(rq.ttl == 2);
  CHECK(rq.origin == 0);
  CHECK(rq.dest == 2);

  b.on_receive(B, A.sent[0].pkt, 0);
  REQUIRE(B.sent.size() == 1);  // reflood with one less hop of life
  const auto rf = std::any_cast<proto::Aodv::Rreq>(B.sent[0].pkt.payload);
  CHECK(rf.ttl == 1);
  CHECK(rf.hop_count == 1);

  c.on_receive(C, B.sent[0].pkt, 1);
  REQUIRE(C.sent.size() == 1);  // destination answers
  CHECK_FALSE(C.sent[0].broadcast);
  CHECK(C.sent[0].next_hop == 1);
  const auto rp = std::any_cast<proto::Aodv::Rrep>(C.sent[0].pkt.payload);
  CHECK(rp.consumer == 0);
  CHECK(rp.route_dest == 2);
  CHECK(rp.hop_count == 0);

  b.on_receive(B, C.sent[0].pkt, 2);
  REQUIRE(B.sent.size() == 2);  // reply relayed along the reverse path
  CHECK(B.sent[1].next_hop == 0);

  a.on_receive(A, B.sent[1].pkt, 1);
  REQUIRE(A.sent.size() == 2);  // pending data flushed onto the fresh route
  CHECK(A.sent[1].pkt.kind == des::PacketKind::Data);
  CHECK(A.sent[1].next_hop == 1);

  const proto::Aodv::RouteEntry& entry = a.table().at(2);
  CHECK(entry.valid);
  CHECK(entry.next_hop == 1);
  CHECK(entry.hop_count == 2);
  CHECK(entry.seq_known);

  b.on_receive(B, A.sent[1].pkt, 0);
  REQUIRE(B.sent.size() == 3);
  CHECK(B.sent[2].next_hop == 2);
  c.on_receive(C, B.sent[2].pkt, 1);
  REQUIRE(C.delivered.size() == 1);
  CHECK(C.delivered[0].id == A.sent[1].pkt.id);
}

TEST_CASE("aodv duplicate requests are flooded once") {
  proto::AodvConfig cfg = quiet_aodv();
  cfg.ttl_start = 3;
  proto::Aodv b(cfg);
  FakeApi B(1);
  b.start(B);

  proto::Aodv::Rreq rreq;
  rreq.rreq_id = 9;
  rreq.origin = 0;
  rreq.origin_seq = 4;
  rreq.dest = 7;
  rreq.ttl = 3;
  const des::Packet pkt = control_packet(0, "rreq", rreq);
  b.on_receive(B, pkt, 0);
  CHECK(B.sent.size() == 1);
  b.on_receive(B, pkt, 3);  // same flood arriving over another edge
  CHECK(B.sent.size() == 1);
}

TEST_CASE("aodv route freshness prefers sequence, then hop count") {
  proto::Aodv node(quiet_aodv());
  FakeApi api(0);
  node.start(api);

  auto rrep_from = [&](des::NodeId via, std::uint32_t seq, int hops) {
    proto::Aodv::Rrep r;
    r.consumer = 0;
    r.route_dest = 5;
    r.dest_seq = seq;
    r.hop_count = hops;
    node.on_receive(api, control_packet(via, "rrep", r, 0), via);
  };

  rrep_from(1, 10, 3);
  CHECK(node.table().at(5).next_hop == 1);
  CHECK(node.table().at(5).hop_count == 4);

  rrep_from(2, 9, 0);  // stale sequence, shorter path: rejected
  CHECK(node.table().at(5).next_hop == 1);

  rrep_from(2, 10, 1);  // same sequence, fewer hops: accepted
  CHECK(node.table().at(5).next_hop == 2);
  CHECK(node.table().at(5).hop_count == 2);

  rrep_from(3, 11, 8);  // fresher sequence wins regardless of length
  CHECK(node.table().at(5).next_hop == 3);
  CHECK(node.table().at(5).hop_count == 9);
}

TEST_CASE("aodv sequence comparison survives wrap-around") {
  proto::Aodv node(quiet_aodv());
  FakeApi api(0);
  node.start(api);

  proto::Aodv::Rrep old_side;
  old_side.consumer = 0;
  old_side.route_dest = 5;
  old_side.dest_seq = 0xFFFFFFFFu;
  old_side.hop_count = 2;
  node.on_receive(api, control_packet(1, "rrep", old_side, 0), 1);

  proto::Aodv::Rrep wrapped;
  wrapped.consumer = 0;
  wrapped.route_dest = 5;
  wrapped.dest_seq = 1;  // numerically smaller but logically newer
  wrapped.hop_count = 6;
  node.on_receive(api, control_packet(2, "rrep", wrapped, 0), 2);

  CHECK(node.table().at(5).next_hop == 2);
  CHECK(node.table().at(5).dest_seq == 1);
}

TEST_CASE("aodv invalidates routes on matching route errors") {
  proto::Aodv node(quiet_aodv());
  FakeApi api(0);
  node.start(api);

  proto::Aodv::Rrep seed;
  seed.consumer = 0;
  seed.route_dest = 5;
  seed.dest_seq = 3;
  seed.hop_count = 1;
  node.on_receive(api, control_packet(1, "rrep", seed, 0), 1);
  REQUIRE(node.table().at(5).valid);
  api.sent.clear();

  proto::Aodv::Rerr rerr;
  rerr.unreachable = {{5, 4}};
  node.on_receive(api, control_packet(3, "rerr", rerr), 3);
  CHECK(node.table().at(5).valid);  // node 3 is not our next hop toward 5
  CHECK(api.sent.empty());

  node.on_receive(api, control_packet(1, "rerr", rerr), 1);
  CHECK_FALSE(node.table().at(5).valid);
  REQUIRE(api.sent.size() == 1);  // break propagated downstream once
  CHECK(api.sent[0].pkt.subtype == "rerr");
}

TEST_CASE("aodv hello sweep reports silent neighbors") {
  proto::AodvConfig cfg = quiet_aodv();
  cfg.hello_interval = 1.0;
  proto::Aodv node(cfg);
  FakeApi api(0);
  node.start(api);
  REQUIRE(api.timers.size() == 1);
  CHECK(api.timers[0] == std::pair<double, std::int64_t>{1.0, 1});

  proto::Aodv::Rrep seed;
  seed.consumer = 0;
  seed.route_dest = 9;
  seed.dest_seq = 2;
  seed.hop_count = 0;
  node.on_receive(api, control_packet(7, "rrep", seed, 0), 7);  // heard at t = 0
  api.sent.clear();

  api.now_ = 3.0;  // two full hello intervals of silence
  node.on_timer(api, 1);
  REQUIRE(api.sent.size() == 2);
  CHECK(api.sent[0].pkt.subtype == "hello");
  CHECK(api.sent[1].pkt.subtype == "rerr");
  CHECK_FALSE(node.table().at(9).valid);
}

TEST_CASE("aodv local repair floods a scoped request and gives up cleanly") {
  proto::Aodv node(quiet_aodv());
  FakeApi api(1);
  node.start(api);

  proto::Aodv::Rrep seed;
  seed.consumer = 1;
  seed.route_dest = 9;
  seed.dest_seq = 5;
  seed.hop_count = 2;  // route of three hops via node 4
  node.on_receive(api, control_packet(4, "rrep", seed, 1), 4);
  api.sent.clear();

  node.on_send_failure(api, data_packet(0, 9), 4);
  REQUIRE(api.sent.size() == 2);
  CHECK(api.sent[0].pkt.subtype == "rerr");
  CHECK(api.sent[1].pkt.subtype == "rreq");
  const auto repair = std::any_cast<proto::Aodv::Rreq>(api.sent[1].pkt.payload);
  CHECK(repair.ttl == 3 + 2);  // stale hop count plus two
  CHECK(api.stats["aodv.local_repairs"] == 1.0);
  REQUIRE(api.timers.size() == 1);
  CHECK(api.timers[0].second == (2ll << 32) + 9);

  api.now_ = api.timers[0].first + 1e-9;
  node.on_timer(api, (2ll << 32) + 9);
  REQUIRE(api.dropped.size() == 1);  // repair failed, packet surrendered
  CHECK(api.sent.back().pkt.subtype == "rerr");
}

TEST_CASE("aodv answers from cache and teaches the destination") {
  proto::AodvConfig cfg = quiet_aodv();
  proto::Aodv node(cfg);
  FakeApi api(1);
  node.start(api);

  proto::Aodv::Rrep seed;
  seed.consumer = 1;
  seed.route_dest = 9;
  seed.dest_seq = 5;
  seed.hop_count = 1;
  node.on_receive(api, control_packet(2, "rrep", seed, 1), 2);
  api.sent.clear();

  proto::Aodv::Rreq rreq;
  rreq.rreq_id = 3;
  rreq.origin = 0;
  rreq.origin_seq = 7;
  rreq.dest = 9;
  rreq.ttl = 5;
  node.on_receive(api, control_packet(0, "rreq", rreq), 0);
  REQUIRE(api.sent.size() == 2);
  CHECK(api.sent[0].next_hop == 0);  // answer toward the requester
  const auto answer = std::any_cast<proto::Aodv::Rrep>(api.sent[0].pkt.payload);
  CHECK(answer.route_dest == 9);
  CHECK(answer.dest_seq == 5);
  CHECK(api.sent[1].next_hop == 2);  // gratuitous reply toward the destination
  const auto grat = std::any_cast<proto::Aodv::Rrep>(api.sent[1].pkt.payload);
  CHECK(grat.consumer == 9);
  CHECK(grat.route_dest == 0);

  proto::AodvConfig no_grat = quiet_aodv();
  no_grat.gratuitous_rrep = false;
  proto::Aodv other(no_grat);
  FakeApi api2(1);
  other.start(api2);
  other.on_receive(api2, control_packet(2, "rrep", seed, 1), 2);
  api2.sent.clear();
  other.on_receive(api2, control_packet(0, "rreq", rreq), 0);
  CHECK(api2.sent.size() == 1);
}

// ---------------------------------------------------------------------------
// DSR route cache

TEST_CASE("dsr cache evicts the least recently used entry") {
  proto::DsrRouteCache cache(2);
  CHECK(cache.insert({0, 1, 4}));
  CHECK(cache.insert({0, 2, 5}));
  CHECK(cache.size() == 2);

  // Touch the first entry so the second becomes the eviction victim.
  CHECK(cache.lookup(4).has_value());
  CHECK(cache.insert({0, 3, 6}));
  CHECK(cache.size() == 2);
  CHECK(cache.lookup(4).has_value());
  CHECK_FALSE(cache.lookup(5).has_value());
  CHECK(cache.lookup(6).has_value());
}

TEST_CASE("dsr cache lookup truncates and prefers short then lexicographic") {
  proto::DsrRouteCache cache(8);
  CHECK(cache.insert({0, 3, 2, 5}));
  CHECK(cache.insert({0, 1, 5}));
  auto got = cache.lookup(5);
  REQUIRE(got.has_value());
  CHECK(*got == std::vector<des::NodeId>{0, 1, 5});

  CHECK(cache.insert({0, 1, 2, 3, 4}));
  got = cache.lookup(2);
  REQUIRE(got.has_value());
  CHECK(*got == std::vector<des::NodeId>{0, 1, 2});

  proto::DsrRouteCache tie(8);
  CHECK(tie.insert({0, 2, 5}));
  CHECK(tie.insert({0, 1, 5}));
  got = tie.lookup(5);
  REQUIRE(got.has_value());
  CHECK(*got == std::vector<des::NodeId>{0, 1, 5});
}

TEST_CASE("dsr cache rejects degenerate paths and refreshes duplicates") {
  proto::DsrRouteCache cache(2);
  CHECK_FALSE(cache.insert({0}));
  CHECK_FALSE(cache.insert({0, 1, 0}));
  CHECK(cache.insert({0, 1}));
  CHECK_FALSE(cache.insert({0, 1}));  // duplicate refreshes instead
  CHECK(cache.insert({0, 2}));

  // The duplicate refresh made {0,1} most recent, so {0,2} is evicted.
  CHECK_FALSE(cache.insert({0, 1}));
  CHECK(cache.insert({0, 3}));
  CHECK(cache.lookup(1).has_value());
  CHECK_FALSE(cache.lookup(2).has_value());
}

TEST_CASE("dsr cache removes entries containing a broken link") {
  proto::DsrRouteCache cache(8);
  CHECK(cache.insert({0, 1, 2, 3}));
  CHECK(cache.insert({0, 2, 1, 4}));  // same link traversed backwards
  CHECK(cache.insert({0, 3, 4}));
  cache.remove_link(1, 2);
  CHECK(cache.size() == 1);
  CHECK_FALSE(cache.lookup(1).has_value());
  CHECK(cache.lookup(4).has_value());
}

// ---------------------------------------------------------------------------
// DSR protocol

TEST_CASE("dsr three-node discovery carries the full source route") {
  const proto::DsrConfig cfg = proto::DsrConfig::defaults();
  proto::Dsr a(cfg), b(cfg), c(cfg);
  FakeApi A(0), B(1), C(2);
  a.start(A);
  b.start(B);
  c.start(C);

  a.on_app_send(A, data_packet(0, 2));
  REQUIRE(A.sent.size() == 1);
  CHECK(A.sent[0].broadcast);
  CHECK(A.sent[0].pkt.subtype == "rreq");
  CHECK(A.stats["dsr.rreq_tx"] == 1.0);

  b.on_receive(B, A.sent[0].pkt, 0);
  REQUIRE(B.sent.size() == 1);  // reflood with the path extended
  const auto rf = std::any_cast<proto::Dsr::Rreq>(B.sent[0].pkt.payload);
  CHECK(rf.path == std::vector<des::NodeId>{0, 1});

  c.on_receive(C, B.sent[0].pkt, 1);
  REQUIRE(C.sent.size() == 1);  // destination returns the complete route
  CHECK(C.sent[0].next_hop == 1);
  const auto rp = std::any_cast<proto::Dsr::Rrep>(C.sent[0].pkt.payload);
  CHECK(rp.path == std::vector<des::NodeId>{0, 1, 2});

  b.on_receive(B, C.sent[0].pkt, 2);
  REQUIRE(B.sent.size() == 2);
  CHECK(B.sent[1].next_hop == 0);

  a.on_receive(A, B.sent[1].pkt, 1);
  REQUIRE(A.sent.size() == 2);  // pending data leaves with the route attached
  CHECK(A.sent[1].next_hop == 1);
  const auto header =
      std::any_cast<proto::Dsr::DataHeader>(A.sent[1].pkt.payload);
  CHECK(header.route == std::vector<des::NodeId>{0, 1, 2});
  CHECK(header.next_idx == 1);

  b.on_receive(B, A.sent[1].pkt, 0);
  REQUIRE(B.sent.size() == 3);
  CHECK(B.sent[2].next_hop == 2);

  c.on_receive(C, B.sent[2].pkt, 1);
  REQUIRE(C.delivered.size() == 1);

  // Everyone picked up routes from the packets that passed through.
  CHECK(A.stats["dsr.cache_peak"] >= 1.0);
  CHECK(B.stats["dsr.cache_peak"] >= 2.0);
}

TEST_CASE("dsr salvages from an alternate cached route") {
  proto::Dsr node(proto::DsrConfig::defaults());
  FakeApi api(0);
  node.start(api);

  // Prime the cache through overheard replies.
  proto::Dsr::Rrep r1;
  r1.origin = 0;
  r1.dest = 4;
  r1.path = {0, 1, 4};
  node.on_receive(api, control_packet(1, "rrep", r1, 0), 1);
  proto::Dsr::Rrep r2;
  r2.origin = 0;
  r2.dest = 4;
  r2.path = {0, 2, 3, 4};
  node.on_receive(api, control_packet(2, "rrep", r2, 0), 2);

  node.on_app_send(api, data_packet(0, 4));
  REQUIRE(api.sent.size() == 1);
  CHECK(api.sent[0].next_hop == 1);  // shortest route first

  node.on_send_failure(api, api.sent[0].pkt, 1);
  REQUIRE(api.sent.size() == 2);  // no reverse prefix to warn, just a retry
  CHECK(api.sent[1].next_hop == 2);
  const auto header =
      std::any_cast<proto::Dsr::DataHeader>(api.sent[1].pkt.payload);
  CHECK(header.route == std::vector<des::NodeId>{0, 2, 3, 4});
  CHECK(header.salvage_count == 1);
  CHECK(api.stats["dsr.salvages"] == 1.0);
  CHECK(api.dropped.empty());
}

TEST_CASE("dsr reports breaks back along the traversed prefix") {
  proto::Dsr node(proto::DsrConfig::defaults());
  FakeApi api(1);
  node.start(api);

  des::Packet pkt = data_packet(0, 4);
  proto::Dsr::DataHeader header;
  header.route = {0, 1, 4};
  header.next_idx = 2;  // in flight from node 1 toward node 4
  pkt.payload = header;

  node.on_send_failure(api, pkt, 4);
  REQUIRE(api.sent.size() == 1);
  CHECK(api.sent[0].pkt.subtype == "rerr");
  CHECK(api.sent[0].next_hop == 0);
  const auto rerr = std::any_cast<proto::Dsr::Rerr>(api.sent[0].pkt.payload);
  CHECK(rerr.broken_a == 1);
  CHECK(rerr.broken_b == 4);
  CHECK(rerr.route == std::vector<des::NodeId>{1, 0});
  REQUIRE(api.dropped.size() == 1);  // nothing cached to salvage with

  // The source prunes its cache when the error arrives.
  proto::Dsr source(proto::DsrConfig::defaults());
  FakeApi src_api(0);
  source.start(src_api);
  proto::Dsr::Rrep seed;
  seed.origin = 0;
  seed.dest = 4;
  seed.path = {0, 1, 4};
  source.on_receive(src_api, control_packet(1, "rrep", seed, 0), 1);
  REQUIRE(source.cache().size() == 1);
  source.on_receive(src_api, api.sent[0].pkt, 1);
  CHECK(source.cache().size() == 0);
}

TEST_CASE("dsr salvage attempts are capped") {
  proto::Dsr node(proto::DsrConfig::defaults());
  FakeApi api(0);
  node.start(api);

  proto::Dsr::Rrep seed;
  seed.origin = 0;
  seed.dest = 4;
  seed.path = {0, 2, 4};
  node.on_receive(api, control_packet(2, "rrep", seed, 0), 2);

  des::Packet pkt = data_packet(0, 4);
  proto::Dsr::DataHeader header;
  header.route = {0, 1, 4};
  header.next_idx = 1;
  header.salvage_count = 4;  // already at the cap
  pkt.payload = header;

  node.on_send_failure(api, pkt, 1);
  CHECK(api.sent.empty());
  CHECK(api.dropped.size() == 1);
}

// ---------------------------------------------------------------------------
// FSR

TEST_CASE("fsr merges link-state rows by sequence and routes via bfs") {
  proto::Fsr node(proto::FsrConfig::defaults());
  FakeApi api(0);
  node.start(api);

  proto::Fsr::Lsu lsu;
  lsu.rows.push_back({1, 5, {0, 2}});
  lsu.rows.push_back({2, 3, {1, 3}});
  node.on_receive(api, control_packet(1, "lsu", lsu), 1);

  const auto& routes = node.routes();
  REQUIRE(routes.count(1) == 1);
  CHECK(routes.at(1) == 1);
  CHECK(routes.at(2) == 1);
  CHECK(routes.at(3) == 1);  // three hops down the chain

  // A stale row must not shrink the known topology.
  proto::Fsr::Lsu stale;
  stale.rows.push_back({2, 2, {1}});
  node.on_receive(api, control_packet(1, "lsu", stale), 1);
  CHECK(node.routes().count(3) == 1);

  // A fresher row replaces the neighbor list.
  proto::Fsr::Lsu fresh;
  fresh.rows.push_back({2, 4, {1}});
  node.on_receive(api, control_packet(1, "lsu", fresh), 1);
  CHECK(node.routes().count(3) == 0);
}

TEST_CASE("fsr breadth-first search breaks ties toward the smaller neighbor") {
  proto::Fsr node(proto::FsrConfig::defaults());
  FakeApi api(0);
  node.start(api);

  proto::Fsr::Lsu from1;
  from1.rows.push_back({1, 1, {0, 3}});
  node.on_receive(api, control_packet(1, "lsu", from1), 1);
  proto::Fsr::Lsu from2;
  from2.rows.push_back({2, 1, {0, 3}});
  node.on_receive(api, control_packet(2, "lsu", from2), 2);

  CHECK(node.routes().at(3) == 1);  // both reach node 3; node 1 discovered first
}

TEST_CASE("fsr scopes inner updates and skips the covered outer instant") {
  proto::FsrConfig cfg;  // inner 5 s, outer 15 s, scope 2
  proto::Fsr node(cfg);
  FakeApi api(0);
  node.start(api);

  proto::Fsr::Lsu lsu;
  lsu.rows.push_back({1, 5, {0, 2}});
  lsu.rows.push_back({2, 3, {1, 3}});
  lsu.rows.push_back({3, 2, {2}});
  node.on_receive(api, control_packet(1, "lsu", lsu), 1);
  api.sent.clear();

  api.now_ = 5.0;
  node.on_timer(api, 1);  // inner tick
  REQUIRE(api.sent.size() == 1);
  {
    const auto payload = std::any_cast<proto::Fsr::Lsu>(api.sent[0].pkt.payload);
    std::vector<des::NodeId> origins;
    for (const auto& row : payload.rows) origins.push_back(row.origin);
    // Node 3 sits three hops out, beyond the two-hop inner scope.
    CHECK(origins == std::vector<des::NodeId>{0, 1, 2});
    // 8 header bytes plus 8 per row plus 4 per listed neighbor.
    CHECK(api.sent[0].pkt.bytes == 8 + (8 + 4) + (8 + 8) + (8 + 8));
  }

  api.sent.clear();
  api.now_ = 15.0;
  node.on_timer(api, 1);  // inner tick on an outer boundary: stays quiet
  CHECK(api.sent.empty());

  node.on_timer(api, 2);  // outer tick ships the full table
  REQUIRE(api.sent.size() == 1);
  {
    const auto payload = std::any_cast<proto::Fsr::Lsu>(api.sent[0].pkt.payload);
    std::vector<des::NodeId> origins;
    for (const auto& row : payload.rows) origins.push_back(row.origin);
    CHECK(origins == std::vector<des::NodeId>{0, 1, 2, 3});
  }
}

TEST_CASE("fsr refreshes its own row when links come and go") {
  proto::Fsr node(proto::FsrConfig::defaults());
  FakeApi api(0);
  node.start(api);

  proto::Fsr::Lsu hello;  // empty update still announces the sender
  node.on_receive(api, control_packet(1, "lsu", hello), 1);

  api.sent.clear();
  api.now_ = 15.0;
  node.on_timer(api, 2);
  REQUIRE(api.sent.size() == 1);
  const auto before = std::any_cast<proto::Fsr::Lsu>(api.sent[0].pkt.payload);
  std::uint32_t own_seq_before = 0;
  for (const auto& row : before.rows)
    if (row.origin == 0) {
      own_seq_before = row.seq;
      CHECK(row.neighbors == std::vector<des::NodeId>{1});
    }

  // A failed transmission evicts the neighbor and bumps the row.
  node.on_send_failure(api, data_packet(0, 1), 1);
  CHECK(api.dropped.size() == 1);

  api.sent.clear();
  api.now_ = 30.0;
  node.on_timer(api, 2);
  REQUIRE(api.sent.size() == 1);
  const auto after = std::any_cast<proto::Fsr::Lsu>(api.sent[0].pkt.payload);
  for (const auto& row : after.rows)
    if (row.origin == 0) {
      CHECK(row.seq > own_seq_before);
      CHECK(row.neighbors.empty());
    }
}

TEST_CASE("fsr delivers local traffic and drops unroutable packets") {
  proto::Fsr node(proto::FsrConfig::defaults());
  FakeApi api(0);
  node.start(api);

  node.on_app_send(api, data_packet(1, 0));
  CHECK(api.delivered.size() == 1);

  node.on_app_send(api, data_packet(0, 9));  // no topology yet
  CHECK(api.dropped.size() == 1);
}
