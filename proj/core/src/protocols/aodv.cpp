#include "stripnet/protocols/aodv.hpp"

#include <algorithm>
#include <stdexcept>

namespace stripnet::proto {
namespace {

// RFC 3561 flavored constants; message sizes follow the wire formats.
constexpr double kNodeTraversal = 0.04;  // s
constexpr int kRreqBytes = 24;
constexpr int kRrepBytes = 20;
constexpr int kRerrBytes = 20;
constexpr int kHelloBytes = 20;
constexpr std::size_t kPendingCap = 50;
constexpr int kMaxDataHops = 64;

constexpr std::int64_t kHelloTimer = 1;
constexpr std::int64_t kDiscoveryTimerBase = 1ll << 32;
constexpr std::int64_t kRepairTimerBase = 2ll << 32;

double ring_timeout(int ttl) { return 2.0 * kNodeTraversal * (ttl + 2); }

bool fresher(std::uint32_t a, std::uint32_t b) {
  // Sequence comparison with wrap tolerance.
  return static_cast<std::int32_t>(a - b) > 0;
}

}  // namespace

void AodvConfig::validate() const {
  if (ttl_start < 1) throw std::invalid_argument("AodvConfig: ttl_start must be >= 1");
  if (ttl_increment < 1)
    throw std::invalid_argument("AodvConfig: ttl_increment must be >= 1");
  if (ttl_threshold < ttl_start)
    throw std::invalid_argument("AodvConfig: ttl_threshold must be >= ttl_start");
  if (net_diameter < ttl_threshold)
    throw std::invalid_argument("AodvConfig: net_diameter must be >= ttl_threshold");
  if (hello_interval < 0.0)
    throw std::invalid_argument("AodvConfig: hello_interval must be >= 0");
  if (!(route_lifetime > 0.0))
    throw std::invalid_argument("AodvConfig: route_lifetime must be > 0");
}

AodvConfig AodvConfig::defaults() { return AodvConfig{}; }

AodvConfig AodvConfig::mod() {
  AodvConfig cfg;
  cfg.ttl_start = 2;
  cfg.ttl_increment = 4;
  cfg.ttl_threshold = 9;
  return cfg;
}

std::vector<int> ers_ttl_schedule(const AodvConfig& cfg) {
  cfg.validate();
  std::vector<int> out;
  for (int ttl = cfg.ttl_start; ttl <= cfg.ttl_threshold; ttl += cfg.ttl_increment)
    out.push_back(ttl);
  if (out.empty() || out.back() != cfg.net_diameter) out.push_back(cfg.net_diameter);
  return out;
}

Aodv::Aodv(AodvConfig cfg) : cfg_(cfg), schedule_(ers_ttl_schedule(cfg)) {}

void Aodv::start(des::Api& api) {
  if (cfg_.hello_interval > 0.0) api.schedule(cfg_.hello_interval, kHelloTimer);
}

void Aodv::update_route(des::Api& api, des::NodeId dest, des::NodeId via, int hops,
                        std::uint32_t seq, bool seq_known) {
  if (dest == api.self()) return;
  RouteEntry& e = table_[dest];
  const bool take = !e.valid || (seq_known && e.seq_known && fresher(seq, e.dest_seq)) ||
                    ((!e.seq_known || (seq_known && seq == e.dest_seq)) &&
                     hops < e.hop_count);
  if (!take) return;
  e.next_hop = via;
  e.hop_count = hops;
  if (seq_known) {
    e.dest_seq = seq;
    e.seq_known = true;
  }
  e.expiry = api.now() + cfg_.route_lifetime;
  e.valid = true;
}

Aodv::RouteEntry* Aodv::active_route(des::Api& api, des::NodeId dest) {
  auto it = table_.find(dest);
  if (it == table_.end()) return nullptr;
  if (!it->second.valid) return nullptr;
  if (it->second.expiry <= api.now()) {
    it->second.valid = false;
    return nullptr;
  }
  return &it->second;
}

void Aodv::on_app_send(des::Api& api, des::Packet pkt) {
  if (pkt.dst == api.self()) {
    api.deliver_local(pkt);
    return;
  }
  if (RouteEntry* route = active_route(api, pkt.dst)) {
    route->expiry = api.now() + cfg_.route_lifetime;
    api.send_unicast(route->next_hop, std::move(pkt));
    return;
  }
  const des::NodeId dest = pkt.dst;
  Pending& p = pending_[dest];
  if (p.queue.size() >= kPendingCap) {
    api.drop(pkt);
  } else {
    p.queue.push_back(std::move(pkt));
  }
  if (p.queue.size() == 1 && !p.repairing && p.ring_idx == 0) begin_discovery(api, dest);
}

void Aodv::begin_discovery(des::Api& api, des::NodeId dest) {
  Pending& p = pending_[dest];
  p.ring_idx = 0;
  p.repairing = false;
  p.deadline = api.now() + ring_timeout(schedule_[0]);
  send_ring_rreq(api, dest, schedule_[0]);
  api.schedule(ring_timeout(schedule_[0]), kDiscoveryTimerBase + dest);
}

void Aodv::send_ring_rreq(des::Api& api, des::NodeId dest, int ttl) {
  ++own_seq_;
  Pending& p = pending_[dest];
  p.rreq_id = ++next_rreq_id_;

  Rreq rreq;
  rreq.rreq_id = p.rreq_id;
  rreq.origin = api.self();
  rreq.origin_seq = own_seq_;
  rreq.dest = dest;
  rreq.ttl = ttl;
  auto it = table_.find(dest);
  if (it != table_.end() && it->second.seq_known) {
    rreq.dest_seq = it->second.dest_seq;
    rreq.dest_seq_known = true;
  }
  seen_rreqs_.emplace(api.self(), rreq.rreq_id);

  des::Packet pkt;
  pkt.id = api.new_packet_id();
  pkt.kind = des::PacketKind::Control;
  pkt.subtype = "rreq";
  pkt.bytes = kRreqBytes;
  pkt.origin = api.self();
  pkt.dst = des::kBroadcast;
  pkt.payload = rreq;
  api.stat_add("aodv.rreq_tx", 1.0);
  api.send_broadcast(std::move(pkt));
}

void Aodv::on_receive(des::Api& api, const des::Packet& pkt, des::NodeId from) {
  neighbors_[from] = api.now();

  if (pkt.kind == des::PacketKind::Data) {
    if (pkt.dst == api.self()) {
      api.deliver_local(pkt);
      return;
    }
    forward_data(api, pkt);
    return;
  }

  if (pkt.subtype == "hello") {
    return;  // liveness already refreshed above
  }

  if (pkt.subtype == "rreq") {
    const auto& rreq = std::any_cast<const Rreq&>(pkt.payload);
    if (!seen_rreqs_.emplace(rreq.origin, rreq.rreq_id).second) return;  // duplicate
    update_route(api, rreq.origin, from, rreq.hop_count + 1, rreq.origin_seq, true);

    if (rreq.dest == api.self()) {
      own_seq_ = fresher(rreq.dest_seq, own_seq_ + 1) ? rreq.dest_seq : own_seq_ + 1;
      Rrep rrep;
      rrep.consumer = rreq.origin;
      rrep.route_dest = api.self();
      rrep.dest_seq = own_seq_;
      rrep.hop_count = 0;
      des::Packet reply;
      reply.id = api.new_packet_id();
      reply.kind = des::PacketKind::Control;
      reply.subtype = "rrep";
      reply.bytes = kRrepBytes;
      reply.origin = api.self();
      reply.dst = rreq.origin;
      reply.payload = rrep;
      api.send_unicast(from, std::move(reply));
      return;
    }

    RouteEntry* cached = active_route(api, rreq.dest);
    const bool can_answer = cached && cached->seq_known &&
                            (!rreq.dest_seq_known ||
                             !fresher(rreq.dest_seq, cached->dest_seq));
    if (can_answer) {
      Rrep rrep;
      rrep.consumer = rreq.origin;
      rrep.route_dest = rreq.dest;
      rrep.dest_seq = cached->dest_seq;
      rrep.hop_count = cached->hop_count;
      des::Packet reply;
      reply.id = api.new_packet_id();
      reply.kind = des::PacketKind::Control;
      reply.subtype = "rrep";
      reply.bytes = kRrepBytes;
      reply.origin = api.self();
      reply.dst = rreq.origin;
      reply.payload = rrep;
      api.send_unicast(from, std::move(reply));

      if (cfg_.gratuitous_rrep) {
        // Teach the destination the reverse route to the requester.
        Rrep grat;
        grat.consumer = rreq.dest;
        grat.route_dest = rreq.origin;
        grat.dest_seq = rreq.origin_seq;
        grat.hop_count = rreq.hop_count + 1;
        des::Packet gratuitous;
        gratuitous.id = api.new_packet_id();
        gratuitous.kind = des::PacketKind::Control;
        gratuitous.subtype = "rrep";
        gratuitous.bytes = kRrepBytes;
        gratuitous.origin = api.self();
        gratuitous.dst = rreq.dest;
        gratuitous.payload = grat;
        api.send_unicast(cached->next_hop, std::move(gratuitous));
      }
      return;
    }

    if (rreq.ttl > 1) {
      Rreq fwd = rreq;
      fwd.hop_count += 1;
      fwd.ttl -= 1;
      des::Packet flood = pkt;
      flood.payload = fwd;
      flood.hop_count += 1;
      api.stat_add("aodv.rreq_tx", 1.0);
      api.send_broadcast(std::move(flood));
    }
    return;
  }

  if (pkt.subtype == "rrep") {
    const auto& rrep = std::any_cast<const Rrep&>(pkt.payload);
    update_route(api, rrep.route_dest, from, rrep.hop_count + 1, rrep.dest_seq, true);

    if (rrep.consumer == api.self()) {
      flush_pending(api, rrep.route_dest);
      return;
    }
    if (RouteEntry* back = active_route(api, rrep.consumer)) {
      Rrep fwd = rrep;
      fwd.hop_count += 1;
      des::Packet relay = pkt;
      relay.payload = fwd;
      relay.hop_count += 1;
      api.send_unicast(back->next_hop, std::move(relay));
    } else {
      api.drop(pkt);
    }
    return;
  }

  if (pkt.subtype == "rerr") {
    const auto& rerr = std::any_cast<const Rerr&>(pkt.payload);
    std::vector<std::pair<des::NodeId, std::uint32_t>> invalidated;
    for (const auto& [dest, seq] : rerr.unreachable) {
      auto it = table_.find(dest);
      if (it == table_.end() || !it->second.valid) continue;
      if (it->second.next_hop != from) continue;
      it->second.valid = false;
      if (fresher(seq, it->second.dest_seq)) {
        it->second.dest_seq = seq;
        it->second.seq_known = true;
      }
      invalidated.emplace_back(dest, seq);
    }
    if (!invalidated.empty()) send_rerr(api, std::move(invalidated));
    return;
  }
}

void Aodv::forward_data(des::Api& api, des::Packet pkt) {
  if (pkt.hop_count >= kMaxDataHops) {
    api.drop(pkt);
    return;
  }
  if (RouteEntry* route = active_route(api, pkt.dst)) {
    route->expiry = api.now() + cfg_.route_lifetime;
    if (RouteEntry* back = active_route(api, pkt.origin)) {
      back->expiry = api.now() + cfg_.route_lifetime;
    }
    pkt.hop_count += 1;
    api.send_unicast(route->next_hop, std::move(pkt));
    return;
  }
  if (try_local_repair(api, pkt)) return;

  auto stale = table_.find(pkt.dst);
  std::uint32_t seq = 0;
  if (stale != table_.end()) seq = stale->second.dest_seq + 1;
  send_rerr(api, {{pkt.dst, seq}});
  api.drop(pkt);
}

bool Aodv::try_local_repair(des::Api& api, const des::Packet& pkt) {
  auto stale = table_.find(pkt.dst);
  if (!cfg_.local_repair || stale == table_.end()) return false;
  const des::NodeId dest = pkt.dst;
  Pending& p = pending_[dest];
  if (p.queue.size() >= kPendingCap) {
    api.drop(pkt);
    return true;
  }
  p.queue.push_back(pkt);
  if (!p.repairing) {
    p.repairing = true;
    p.repair_ttl = stale->second.hop_count + 2;
    p.deadline = api.now() + ring_timeout(p.repair_ttl);
    api.stat_add("aodv.local_repairs", 1.0);
    send_ring_rreq(api, dest, p.repair_ttl);
    api.schedule(ring_timeout(p.repair_ttl), kRepairTimerBase + dest);
  }
  return true;
}

void Aodv::on_send_failure(des::Api& api, const des::Packet& pkt,
                           des::NodeId next_hop) {
  neighbors_.erase(next_hop);
  handle_broken_routes(api, next_hop);

  if (pkt.kind != des::PacketKind::Data) return;

  // The break was just reported; the data packet retries via repair or is lost.
  if (try_local_repair(api, pkt)) return;
  api.drop(pkt);
}

void Aodv::handle_broken_routes(des::Api& api, des::NodeId via) {
  std::vector<std::pair<des::NodeId, std::uint32_t>> lost;
  for (auto& [dest, entry] : table_) {
    if (!entry.valid || entry.next_hop != via) continue;
    entry.valid = false;
    entry.dest_seq += 1;  // future info must be fresher than the break
    lost.emplace_back(dest, entry.dest_seq);
  }
  if (!lost.empty()) send_rerr(api, std::move(lost));
}

void Aodv::send_rerr(des::Api& api,
                     std::vector<std::pair<des::NodeId, std::uint32_t>> lost) {
  Rerr rerr;
  rerr.unreachable = std::move(lost);
  des::Packet pkt;
  pkt.id = api.new_packet_id();
  pkt.kind = des::PacketKind::Control;
  pkt.subtype = "rerr";
  pkt.bytes = kRerrBytes + 8 * static_cast<int>(rerr.unreachable.size());
  pkt.origin = api.self();
  pkt.dst = des::kBroadcast;
  pkt.payload = rerr;
  api.send_broadcast(std::move(pkt));
}

void Aodv::flush_pending(des::Api& api, des::NodeId dest) {
  auto it = pending_.find(dest);
  if (it == pending_.end()) return;
  std::deque<des::Packet> queue = std::move(it->second.queue);
  pending_.erase(it);
  for (des::Packet& pkt : queue) {
    if (RouteEntry* route = active_route(api, dest)) {
      route->expiry = api.now() + cfg_.route_lifetime;
      pkt.hop_count += 1;
      api.send_unicast(route->next_hop, std::move(pkt));
    } else {
      api.drop(pkt);
    }
  }
}

void Aodv::drop_pending(des::Api& api, des::NodeId dest) {
  auto it = pending_.find(dest);
  if (it == pending_.end()) return;
  std::deque<des::Packet> queue = std::move(it->second.queue);
  pending_.erase(it);
  for (const des::Packet& pkt : queue) api.drop(pkt);
}

void Aodv::on_timer(des::Api& api, std::int64_t timer_id) {
  if (timer_id == kHelloTimer) {
    des::Packet hello;
    hello.id = api.new_packet_id();
    hello.kind = des::PacketKind::Control;
    hello.subtype = "hello";
    hello.bytes = kHelloBytes;
    hello.origin = api.self();
    hello.dst = des::kBroadcast;
    hello.payload = Hello{};
    api.send_broadcast(std::move(hello));

    // Two missed beacons mark the neighbor lost.
    const double deadline = api.now() - 2.0 * cfg_.hello_interval;
    std::vector<des::NodeId> gone;
    for (const auto& [id, heard] : neighbors_)
      if (heard < deadline) gone.push_back(id);
    for (des::NodeId id : gone) {
      neighbors_.erase(id);
      handle_broken_routes(api, id);
    }
    api.schedule(cfg_.hello_interval, kHelloTimer);
    return;
  }

  if (timer_id >= kRepairTimerBase) {
    const des::NodeId dest = static_cast<des::NodeId>(timer_id - kRepairTimerBase);
    auto it = pending_.find(dest);
    if (it == pending_.end()) return;
    if (api.now() + 1e-12 < it->second.deadline) return;  // stale timer
    if (active_route(api, dest)) {
      flush_pending(api, dest);
    } else {
      drop_pending(api, dest);
      std::uint32_t seq = 0;
      auto entry = table_.find(dest);
      if (entry != table_.end()) seq = entry->second.dest_seq + 1;
      send_rerr(api, {{dest, seq}});
    }
    return;
  }

  if (timer_id >= kDiscoveryTimerBase) {
    const des::NodeId dest = static_cast<des::NodeId>(timer_id - kDiscoveryTimerBase);
    auto it = pending_.find(dest);
    if (it == pending_.end()) return;
    if (api.now() + 1e-12 < it->second.deadline) return;  // stale timer
    if (active_route(api, dest)) {
      flush_pending(api, dest);
      return;
    }
    Pending& p = it->second;
    p.ring_idx += 1;
    if (p.ring_idx >= schedule_.size()) {
      drop_pending(api, dest);  // every ring exhausted
      return;
    }
    const int ttl = schedule_[p.ring_idx];
    p.deadline = api.now() + ring_timeout(ttl);
    send_ring_rreq(api, dest, ttl);
    api.schedule(ring_timeout(ttl), kDiscoveryTimerBase + dest);
    return;
  }
}

des::ProtocolFactory make_aodv(const AodvConfig& cfg) {
  cfg.validate();
  return [cfg](des::NodeId) { return std::make_unique<Aodv>(cfg); };
}

}  // namespace stripnet::proto
