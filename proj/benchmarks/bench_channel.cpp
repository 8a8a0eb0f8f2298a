#include <benchmark/benchmark.h>

#include <random>

#include "oddm/channel.hpp"
#include "oddm/rng.hpp"
#include "oddm/transform.hpp"

using namespace oddm;

namespace {

ChannelRealization make_channel(int m, int n, int taps, std::uint64_t seed) {
  ChannelModel model;
  model.taps = taps;
  model.ue_speed_mps = 500 / 3.6;
  std::mt19937_64 rng(seed);
  return gen_channel(model, m, n, rng);
}

CVec random_vec(int mn, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CVec s(mn);
  for (int i = 0; i < mn; ++i) s[i] = crandn(rng, 1.0);
  return s;
}

void BM_gmatrix_apply(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int n = 32;
  ChannelRealization ch = make_channel(m, n, 5, 11);
  GMatrix g(ch);
  CVec s = random_vec(m * n, 12);
  for (auto _ : state) {
    CVec r = g.apply(s);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * m * n);
}

void BM_build_subchannel(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int n = 32;
  ChannelRealization ch = make_channel(m, n, 5, 11);
  GMatrix g(ch);
  int q = 0;
  for (auto _ : state) {
    CMat sub = build_subchannel(g, q);
    benchmark::DoNotOptimize(sub.data());
    q = (q + 1) % g.mn();
  }
}

void BM_dd_time_roundtrip(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int n = 32;
  std::mt19937_64 rng(13);
  CMat x(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) x(i, j) = crandn(rng, 1.0);
  for (auto _ : state) {
    CMat back = time_to_dd(dd_to_time(x), m, n);
    benchmark::DoNotOptimize(back.data());
  }
}

}  // namespace

BENCHMARK(BM_gmatrix_apply)->Arg(32)->Arg(64)->Arg(128)->Arg(256)->ArgNames({"M"});
BENCHMARK(BM_build_subchannel)->Arg(32)->Arg(256)->ArgNames({"M"});
BENCHMARK(BM_dd_time_roundtrip)->Arg(32)->Arg(256)->ArgNames({"M"});

BENCHMARK_MAIN();
