#include "stripnet/protocols/fsr.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace stripnet::proto {
namespace {

constexpr std::int64_t kInnerTimer = 1;
constexpr std::int64_t kOuterTimer = 2;
constexpr int kMaxDataHops = 64;
constexpr int kNeighborTimeoutTicks = 3;  // inner intervals without a word

bool near_multiple(double t, double period) {
  const double r = std::fmod(t, period);
  return r < 1e-9 || period - r < 1e-9;
}

}  // namespace

void FsrConfig::validate() const {
  if (inner_scope_hops < 1)
    throw std::invalid_argument("FsrConfig: inner_scope_hops must be >= 1");
  if (!(inner_interval > 0.0))
    throw std::invalid_argument("FsrConfig: inner_interval must be > 0");
  if (outer_interval < inner_interval)
    throw std::invalid_argument("FsrConfig: outer_interval must be >= inner_interval");
}

FsrConfig FsrConfig::defaults() { return FsrConfig{}; }

FsrConfig FsrConfig::mod() {
  FsrConfig cfg;
  cfg.inner_interval = 1.0;
  cfg.outer_interval = 3.0;
  return cfg;
}

Fsr::Fsr(FsrConfig cfg) : cfg_(cfg) {}

void Fsr::start(des::Api& api) {
  self_ = api.self();
  refresh_own_row();
  api.schedule(cfg_.inner_interval, kInnerTimer);
  api.schedule(cfg_.outer_interval, kOuterTimer);
}

void Fsr::refresh_own_row() {
  ++own_seq_;
  LinkState& own = topo_[self_];
  own.seq = own_seq_;
  own.neighbors.clear();
  for (const auto& [id, heard] : neighbors_) own.neighbors.push_back(id);
  dirty_ = true;
}

void Fsr::rebuild_if_dirty() {
  if (!dirty_) return;
  dirty_ = false;
  distance_.clear();
  next_hop_.clear();

  // Union adjacency: a link counts if either endpoint reports it.
  std::set<des::NodeId> nodes;
  nodes.insert(self_);
  for (const auto& [origin, state] : topo_) {
    nodes.insert(origin);
    for (des::NodeId n : state.neighbors) nodes.insert(n);
  }
  auto adjacent = [&](des::NodeId u, des::NodeId v) {
    auto lists = [&](des::NodeId a, des::NodeId b) {
      auto it = topo_.find(a);
      if (it == topo_.end()) return false;
      const auto& ns = it->second.neighbors;
      return std::find(ns.begin(), ns.end(), b) != ns.end();
    };
    return lists(u, v) || lists(v, u);
  };

  distance_[self_] = 0;
  std::vector<des::NodeId> frontier{self_};
  int depth = 0;
  while (!frontier.empty()) {
    ++depth;
    std::vector<des::NodeId> next;
    // Frontier stays sorted so the first discoverer has the smallest id.
    for (des::NodeId u : frontier) {
      for (des::NodeId v : nodes) {
        if (distance_.count(v) || !adjacent(u, v)) continue;
        distance_[v] = depth;
        next_hop_[v] = (depth == 1) ? v : next_hop_[u];
        next.push_back(v);
      }
    }
    std::sort(next.begin(), next.end());
    frontier = std::move(next);
  }
}

const std::map<des::NodeId, des::NodeId>& Fsr::routes() {
  rebuild_if_dirty();
  return next_hop_;
}

void Fsr::send_lsu(des::Api& api, bool full_table) {
  rebuild_if_dirty();
  Lsu lsu;
  for (const auto& [origin, state] : topo_) {
    if (!full_table) {
      auto it = distance_.find(origin);
      if (it == distance_.end() || it->second > cfg_.inner_scope_hops) continue;
    }
    Row row;
    row.origin = origin;
    row.seq = state.seq;
    row.neighbors = state.neighbors;
    lsu.rows.push_back(std::move(row));
  }
  int bytes = 8;
  for (const Row& row : lsu.rows)
    bytes += 8 + 4 * static_cast<int>(row.neighbors.size());

  des::Packet pkt;
  pkt.id = api.new_packet_id();
  pkt.kind = des::PacketKind::Control;
  pkt.subtype = "lsu";
  pkt.bytes = bytes;
  pkt.origin = api.self();
  pkt.dst = des::kBroadcast;
  pkt.payload = std::move(lsu);
  api.send_broadcast(std::move(pkt));
}

void Fsr::on_receive(des::Api& api, const des::Packet& pkt, des::NodeId from) {
  if (pkt.kind == des::PacketKind::Data) {
    if (pkt.dst == api.self()) {
      api.deliver_local(pkt);
      return;
    }
    forward_data(api, pkt);
    return;
  }
  if (pkt.subtype != "lsu") return;

  const bool known = neighbors_.count(from) > 0;
  neighbors_[from] = api.now();
  if (!known) refresh_own_row();

  const auto& lsu = std::any_cast<const Lsu&>(pkt.payload);
  for (const Row& row : lsu.rows) {
    if (row.origin == self_) continue;
    auto it = topo_.find(row.origin);
    if (it != topo_.end() && row.seq <= it->second.seq) continue;
    LinkState& state = topo_[row.origin];
    state.seq = row.seq;
    state.neighbors = row.neighbors;
    dirty_ = true;
  }
}

void Fsr::forward_data(des::Api& api, des::Packet pkt) {
  if (pkt.hop_count >= kMaxDataHops) {
    api.drop(pkt);
    return;
  }
  rebuild_if_dirty();
  auto it = next_hop_.find(pkt.dst);
  if (it == next_hop_.end()) {
    api.drop(pkt);
    return;
  }
  pkt.hop_count += 1;
  api.send_unicast(it->second, std::move(pkt));
}

void Fsr::on_app_send(des::Api& api, des::Packet pkt) {
  if (pkt.dst == api.self()) {
    api.deliver_local(pkt);
    return;
  }
  forward_data(api, std::move(pkt));
}

void Fsr::on_send_failure(des::Api& api, const des::Packet& pkt,
                          des::NodeId next_hop) {
  if (neighbors_.erase(next_hop) > 0) refresh_own_row();
  // Proactive tables recover on the next exchange; the packet is lost.
  if (pkt.kind == des::PacketKind::Data) api.drop(pkt);
}

void Fsr::on_timer(des::Api& api, std::int64_t timer_id) {
  if (timer_id == kInnerTimer) {
    const double deadline =
        api.now() - kNeighborTimeoutTicks * cfg_.inner_interval;
    bool lost = false;
    for (auto it = neighbors_.begin(); it != neighbors_.end();) {
      if (it->second < deadline) {
        it = neighbors_.erase(it);
        lost = true;
      } else {
        ++it;
      }
    }
    if (lost) refresh_own_row();

    // The full-table exchange covers this instant.
    if (!near_multiple(api.now(), cfg_.outer_interval)) send_lsu(api, false);
    api.schedule(cfg_.inner_interval, kInnerTimer);
    return;
  }
  if (timer_id == kOuterTimer) {
    send_lsu(api, true);
    api.schedule(cfg_.outer_interval, kOuterTimer);
    return;
  }
}

des::ProtocolFactory make_fsr(const FsrConfig& cfg) {
  cfg.validate();
  return [cfg](des::NodeId) { return std::make_unique<Fsr>(cfg); };
}

}  // namespace stripnet::proto
