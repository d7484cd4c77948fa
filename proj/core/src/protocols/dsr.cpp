#include "stripnet/protocols/dsr.hpp"

#include <algorithm>
#include <stdexcept>

namespace stripnet::proto {
namespace {

constexpr std::size_t kRouteCap = 16;
constexpr int kSalvageCap = 4;
constexpr int kDiscoveryAttempts = 3;
constexpr double kDiscoveryBaseTimeout = 0.5;  // doubles per attempt
constexpr std::size_t kPendingCap = 50;
constexpr int kRouteMsgBaseBytes = 16;  // + 4 per listed node
constexpr int kRerrBytes = 20;

constexpr std::int64_t kDiscoveryTimerBase = 1ll << 32;

int route_msg_bytes(std::size_t path_len) {
  return kRouteMsgBaseBytes + 4 * static_cast<int>(path_len);
}

bool has_repeats(const std::vector<des::NodeId>& path) {
  for (std::size_t i = 0; i < path.size(); ++i)
    for (std::size_t j = i + 1; j < path.size(); ++j)
      if (path[i] == path[j]) return true;
  return false;
}

}  // namespace

void DsrConfig::validate() const {
  if (cache_capacity < 1)
    throw std::invalid_argument("DsrConfig: cache_capacity must be >= 1");
}

DsrConfig DsrConfig::defaults() { return DsrConfig{}; }

DsrConfig DsrConfig::mod() {
  DsrConfig cfg;
  cfg.cache_capacity = 256;
  return cfg;
}

DsrRouteCache::DsrRouteCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity < 1)
    throw std::invalid_argument("DsrRouteCache: capacity must be >= 1");
}

bool DsrRouteCache::insert(const std::vector<des::NodeId>& path) {
  if (path.size() < 2 || has_repeats(path)) return false;
  for (Entry& e : entries_) {
    if (e.path == path) {
      e.last_use = ++use_clock_;
      return false;
    }
  }
  if (entries_.size() >= capacity_) evict_lru();
  entries_.push_back(Entry{path, ++use_clock_});
  return true;
}

std::optional<std::vector<des::NodeId>> DsrRouteCache::lookup(des::NodeId dest) {
  Entry* best = nullptr;
  std::size_t best_len = 0;
  for (Entry& e : entries_) {
    auto it = std::find(e.path.begin() + 1, e.path.end(), dest);
    if (it == e.path.end()) continue;
    const std::size_t len = static_cast<std::size_t>(it - e.path.begin()) + 1;
    if (best == nullptr || len < best_len ||
        (len == best_len &&
         std::lexicographical_compare(e.path.begin(), e.path.begin() + len,
                                      best->path.begin(),
                                      best->path.begin() + best_len))) {
      best = &e;
      best_len = len;
    }
  }
  if (best == nullptr) return std::nullopt;
  best->last_use = ++use_clock_;
  return std::vector<des::NodeId>(best->path.begin(), best->path.begin() + best_len);
}

void DsrRouteCache::remove_link(des::NodeId a, des::NodeId b) {
  entries_.remove_if([&](const Entry& e) {
    for (std::size_t i = 0; i + 1 < e.path.size(); ++i) {
      if ((e.path[i] == a && e.path[i + 1] == b) ||
          (e.path[i] == b && e.path[i + 1] == a))
        return true;
    }
    return false;
  });
}

void DsrRouteCache::evict_lru() {
  auto victim = entries_.begin();
  for (auto it = entries_.begin(); it != entries_.end(); ++it)
    if (it->last_use < victim->last_use) victim = it;
  entries_.erase(victim);
}

Dsr::Dsr(DsrConfig cfg) : cfg_(cfg), cache_(cfg.cache_capacity) {}

void Dsr::start(des::Api&) {}

void Dsr::cache_insert(des::Api& api, const std::vector<des::NodeId>& path) {
  if (cache_.insert(path))
    api.stat_max("dsr.cache_peak", static_cast<double>(cache_.size()));
}

void Dsr::learn_from_route(des::Api& api, const std::vector<des::NodeId>& path) {
  auto it = std::find(path.begin(), path.end(), api.self());
  if (it == path.end()) return;
  const std::size_t idx = static_cast<std::size_t>(it - path.begin());
  if (path.size() - idx >= 2)
    cache_insert(api, std::vector<des::NodeId>(path.begin() + idx, path.end()));
  if (idx + 1 >= 2) {
    std::vector<des::NodeId> back(path.begin(), path.begin() + idx + 1);
    std::reverse(back.begin(), back.end());
    cache_insert(api, back);
  }
}

void Dsr::on_app_send(des::Api& api, des::Packet pkt) {
  if (pkt.dst == api.self()) {
    api.deliver_local(pkt);
    return;
  }
  if (auto route = cache_.lookup(pkt.dst)) {
    send_with_route(api, std::move(pkt), std::move(*route), 0);
    return;
  }
  const des::NodeId dest = pkt.dst;
  Pending& p = pending_[dest];
  if (p.queue.size() >= kPendingCap) {
    api.drop(pkt);
  } else {
    p.queue.push_back(std::move(pkt));
  }
  if (p.queue.size() == 1 && p.attempt == 0 && p.deadline == 0.0)
    begin_discovery(api, dest);
}

void Dsr::send_with_route(des::Api& api, des::Packet pkt,
                          std::vector<des::NodeId> route, int salvage_count) {
  if (route.size() < 2) {
    api.drop(pkt);
    return;
  }
  DataHeader header;
  header.route = std::move(route);
  header.next_idx = 1;
  header.salvage_count = salvage_count;
  const des::NodeId next = header.route[1];
  pkt.payload = std::move(header);
  pkt.hop_count += 1;
  api.send_unicast(next, std::move(pkt));
}

void Dsr::begin_discovery(des::Api& api, des::NodeId dest) {
  Pending& p = pending_[dest];
  p.attempt = 0;
  p.deadline = api.now() + kDiscoveryBaseTimeout;
  send_rreq(api, dest);
  api.schedule(kDiscoveryBaseTimeout, kDiscoveryTimerBase + dest);
}

void Dsr::send_rreq(des::Api& api, des::NodeId dest) {
  Rreq rreq;
  rreq.rreq_id = ++next_rreq_id_;
  rreq.origin = api.self();
  rreq.dest = dest;
  rreq.path = {api.self()};
  seen_rreqs_.emplace(api.self(), rreq.rreq_id);

  des::Packet pkt;
  pkt.id = api.new_packet_id();
  pkt.kind = des::PacketKind::Control;
  pkt.subtype = "rreq";
  pkt.bytes = route_msg_bytes(rreq.path.size());
  pkt.origin = api.self();
  pkt.dst = des::kBroadcast;
  pkt.payload = rreq;
  api.stat_add("dsr.rreq_tx", 1.0);
  api.send_broadcast(std::move(pkt));
}

void Dsr::on_receive(des::Api& api, const des::Packet& pkt, des::NodeId from) {
  (void)from;

  if (pkt.kind == des::PacketKind::Data) {
    if (!pkt.payload.has_value()) {
      if (pkt.dst == api.self())
        api.deliver_local(pkt);
      else
        api.drop(pkt);
      return;
    }
    const auto& header = std::any_cast<const DataHeader&>(pkt.payload);
    learn_from_route(api, header.route);
    if (pkt.dst == api.self() ||
        header.next_idx + 1 >= header.route.size()) {
      api.deliver_local(pkt);
      return;
    }
    DataHeader fwd = header;
    fwd.next_idx += 1;
    const des::NodeId next = fwd.route[fwd.next_idx];
    des::Packet relay = pkt;
    relay.payload = std::move(fwd);
    relay.hop_count += 1;
    api.send_unicast(next, std::move(relay));
    return;
  }

  if (pkt.subtype == "rreq") {
    const auto& rreq = std::any_cast<const Rreq&>(pkt.payload);
    if (rreq.origin == api.self()) return;
    if (!seen_rreqs_.emplace(rreq.origin, rreq.rreq_id).second) return;
    if (std::find(rreq.path.begin(), rreq.path.end(), api.self()) !=
        rreq.path.end())
      return;

    std::vector<des::NodeId> full = rreq.path;
    full.push_back(api.self());
    learn_from_route(api, full);

    if (rreq.dest == api.self()) {
      Rrep rrep;
      rrep.origin = rreq.origin;
      rrep.dest = api.self();
      rrep.path = full;
      des::Packet reply;
      reply.id = api.new_packet_id();
      reply.kind = des::PacketKind::Control;
      reply.subtype = "rrep";
      reply.bytes = route_msg_bytes(rrep.path.size());
      reply.origin = api.self();
      reply.dst = rreq.origin;
      reply.payload = rrep;
      api.send_unicast(full[full.size() - 2], std::move(reply));
      return;
    }

    if (full.size() >= kRouteCap) return;
    Rreq fwd = rreq;
    fwd.path = full;
    des::Packet flood = pkt;
    flood.bytes = route_msg_bytes(fwd.path.size());
    flood.payload = std::move(fwd);
    flood.hop_count += 1;
    api.stat_add("dsr.rreq_tx", 1.0);
    api.send_broadcast(std::move(flood));
    return;
  }

  if (pkt.subtype == "rrep") {
    const auto& rrep = std::any_cast<const Rrep&>(pkt.payload);
    learn_from_route(api, rrep.path);
    if (rrep.origin == api.self()) {
      flush_pending(api, rrep.dest);
      return;
    }
    auto it = std::find(rrep.path.begin(), rrep.path.end(), api.self());
    if (it == rrep.path.end() || it == rrep.path.begin()) {
      api.drop(pkt);
      return;
    }
    des::Packet relay = pkt;
    relay.hop_count += 1;
    api.send_unicast(*(it - 1), std::move(relay));
    return;
  }

  if (pkt.subtype == "rerr") {
    const auto& rerr = std::any_cast<const Rerr&>(pkt.payload);
    cache_.remove_link(rerr.broken_a, rerr.broken_b);
    if (rerr.next_idx + 1 >= rerr.route.size()) return;  // reached the source
    Rerr fwd = rerr;
    fwd.next_idx += 1;
    const des::NodeId next = fwd.route[fwd.next_idx];
    des::Packet relay = pkt;
    relay.payload = std::move(fwd);
    relay.hop_count += 1;
    api.send_unicast(next, std::move(relay));
    return;
  }
}

void Dsr::on_send_failure(des::Api& api, const des::Packet& pkt,
                          des::NodeId next_hop) {
  cache_.remove_link(api.self(), next_hop);

  if (pkt.kind != des::PacketKind::Data) return;
  if (!pkt.payload.has_value()) {
    api.drop(pkt);
    return;
  }
  const auto& header = std::any_cast<const DataHeader&>(pkt.payload);

  // Tell the traversed prefix about the break.
  if (header.next_idx >= 1) {
    const std::size_t my_idx = header.next_idx - 1;
    std::vector<des::NodeId> back(header.route.begin(),
                                  header.route.begin() + my_idx + 1);
    std::reverse(back.begin(), back.end());
    if (back.size() >= 2) send_rerr(api, api.self(), next_hop, std::move(back));
  }

  if (cfg_.salvaging && header.salvage_count < kSalvageCap) {
    if (auto route = cache_.lookup(pkt.dst)) {
      api.stat_add("dsr.salvages", 1.0);
      des::Packet retry = pkt;
      send_with_route(api, std::move(retry), std::move(*route),
                      header.salvage_count + 1);
      return;
    }
  }
  api.drop(pkt);
}

void Dsr::send_rerr(des::Api& api, des::NodeId broken_a, des::NodeId broken_b,
                    std::vector<des::NodeId> back_route) {
  Rerr rerr;
  rerr.broken_a = broken_a;
  rerr.broken_b = broken_b;
  rerr.route = std::move(back_route);
  rerr.next_idx = 1;
  const des::NodeId next = rerr.route[1];
  const des::NodeId source = rerr.route.back();

  des::Packet pkt;
  pkt.id = api.new_packet_id();
  pkt.kind = des::PacketKind::Control;
  pkt.subtype = "rerr";
  pkt.bytes = kRerrBytes;
  pkt.origin = api.self();
  pkt.dst = source;
  pkt.payload = rerr;
  api.send_unicast(next, std::move(pkt));
}

void Dsr::flush_pending(des::Api& api, des::NodeId dest) {
  auto it = pending_.find(dest);
  if (it == pending_.end()) return;
  std::deque<des::Packet> queue = std::move(it->second.queue);
  pending_.erase(it);
  for (des::Packet& pkt : queue) {
    if (auto route = cache_.lookup(dest)) {
      send_with_route(api, std::move(pkt), std::move(*route), 0);
    } else {
      api.drop(pkt);
    }
  }
}

void Dsr::drop_pending(des::Api& api, des::NodeId dest) {
  auto it = pending_.find(dest);
  if (it == pending_.end()) return;
  std::deque<des::Packet> queue = std::move(it->second.queue);
  pending_.erase(it);
  for (const des::Packet& pkt : queue) api.drop(pkt);
}

void Dsr::on_timer(des::Api& api, std::int64_t timer_id) {
  if (timer_id < kDiscoveryTimerBase) return;
  const des::NodeId dest = static_cast<des::NodeId>(timer_id - kDiscoveryTimerBase);
  auto it = pending_.find(dest);
  if (it == pending_.end()) return;
  Pending& p = it->second;
  if (api.now() + 1e-12 < p.deadline) return;  // stale timer
  if (cache_.lookup(dest)) {
    flush_pending(api, dest);
    return;
  }
  p.attempt += 1;
  if (p.attempt >= kDiscoveryAttempts) {
    drop_pending(api, dest);
    return;
  }
  const double timeout = kDiscoveryBaseTimeout * (1 << p.attempt);
  p.deadline = api.now() + timeout;
  send_rreq(api, dest);
  api.schedule(timeout, kDiscoveryTimerBase + dest);
}

des::ProtocolFactory make_dsr(const DsrConfig& cfg) {
  cfg.validate();
  return [cfg](des::NodeId) { return std::make_unique<Dsr>(cfg); };
}

}  // namespace stripnet::proto
