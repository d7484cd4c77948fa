#include <benchmark/benchmark.h>

#include "stripnet/connectivity.hpp"
#include "stripnet/des.hpp"
#include "stripnet/linktime.hpp"
#include "stripnet/mc.hpp"
#include "stripnet/protocols/aodv.hpp"
#include "stripnet/rng.hpp"

namespace {

using namespace stripnet;

void BM_DirectProbQuadrature(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(conn::direct_comm_probability(0.004, 100.0, 1, steps));
  }
}
BENCHMARK(BM_DirectProbQuadrature)->Arg(64)->Arg(256)->Arg(1024);

void BM_StreamIntensity(benchmark::State& state) {
  conn::StreamSpec spec;
  spec.rate = 0.2;
  spec.strip_length = 500.0;
  spec.variance_scale = 10.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        conn::stream_intensity(spec, 20.0, 10.0, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_StreamIntensity)->Arg(256)->Arg(1024);

void BM_SegmentPositionSampling(benchmark::State& state) {
  CounterRng rng(17);
  double acc = 0.0;
  for (auto _ : state) {
    acc += mc::sample_segment_position(0.004, 100.0, 1, rng);
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_SegmentPositionSampling);

void BM_DirectProbEstimate(benchmark::State& state) {
  mc::McConfig cfg;
  cfg.samples = static_cast<int>(state.range(0));
  cfg.seed = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc::estimate_direct_prob(0.004, 100.0, 1, cfg));
  }
  state.SetItemsProcessed(state.iterations() * cfg.samples);
}
BENCHMARK(BM_DirectProbEstimate)->Arg(10000)->Arg(100000);

void BM_LinkTimeReport(benchmark::State& state) {
  linktime::KinematicsConfig kc;
  kc.v_min = 2.0;
  kc.v_max = 30.0;
  kc.delta_v = 0.5;
  kc.t_r = 150.0;
  kc.spacing = 40.0;
  kc.horizon = 900.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(linktime::build_report(kc, linktime::Direction::Same, false));
  }
}
BENCHMARK(BM_LinkTimeReport);

void BM_SmallSimRun(benchmark::State& state) {
  des::SimScenario sc;
  sc.node_count = static_cast<int>(state.range(0));
  sc.field.width = 600.0;
  sc.field.height = 600.0;
  des::RandomWaypointMobility rwp;
  rwp.v_min = 1.0;
  rwp.v_max = 5.0;
  rwp.pause = 2.0;
  sc.mobility = rwp;
  sc.radio = des::RadioConfig::mac80211();
  sc.duration_s = 30.0;
  sc.seed = 9;
  sc.traffic.interval_s = 0.5;
  for (int k = 0; k < 3; ++k)
    sc.traffic.flows.push_back({k, (k + sc.node_count / 2) % sc.node_count});
  des::RunOptions opt;
  opt.record_trace = false;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        des::run(sc, proto::make_aodv(proto::AodvConfig::defaults()), opt));
  }
}
BENCHMARK(BM_SmallSimRun)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
