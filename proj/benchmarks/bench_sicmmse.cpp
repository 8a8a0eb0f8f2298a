#include <benchmark/benchmark.h>

#include <random>

#include "oddm/channel.hpp"
#include "oddm/detectors.hpp"
#include "oddm/hmim.hpp"
#include "oddm/hqc.hpp"
#include "oddm/rng.hpp"
#include "oddm/transform.hpp"

using namespace oddm;

namespace {

struct Scene {
  FrameConfig cfg;
  ChannelRealization ch;
  CVec r;
};

// One noisy received frame at Eb/N0 = 12 dB, SE 2 layered setup.
Scene make_scene(int m, int n) {
  Scene sc;
  sc.cfg.m_delay = m;
  sc.cfg.n_doppler = n;
  sc.cfg.n_block = 1;
  sc.cfg.constellation = build_hqc(2, 2, 1.0);

  ChannelModel model;
  model.taps = 5;
  model.ue_speed_mps = 500 / 3.6;
  std::mt19937_64 rng(21);
  sc.ch = gen_channel(model, m, n, rng);
  const double gamma =
      sc.cfg.spectral_efficiency() * std::pow(10.0, 12.0 / 10.0);
  sc.ch.set_snr(gamma);

  Bits bits(static_cast<size_t>(sc.cfg.total_bits()));
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1);
  CVec s = dd_to_time(map_frame(bits, sc.cfg).symbols);
  sc.r = GMatrix(sc.ch).apply(s);
  for (int i = 0; i < sc.r.size(); ++i)
    sc.r[i] += crandn(rng, sc.ch.noise_var);
  return sc;
}

void BM_detect_sicmmse(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Scene sc = make_scene(m, 32);
  SicOptions opt;
  opt.n_ite = 2;
  opt.exit_tol = 0.0;  // fixed iteration count for stable comparisons
  for (auto _ : state) {
    DetectionResult res = detect_sicmmse(sc.r, sc.ch, sc.cfg, opt);
    benchmark::DoNotOptimize(res.bits.data());
  }
  state.SetItemsProcessed(state.iterations() * m * 32);
}

void BM_detect_mmse_blockwise(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Scene sc = make_scene(m, 32);
  for (auto _ : state) {
    DetectionResult res = detect_mmse_blockwise(sc.r, sc.ch, sc.cfg);
    benchmark::DoNotOptimize(res.bits.data());
  }
  state.SetItemsProcessed(state.iterations() * m * 32);
}

void BM_sic_sweep(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Scene sc = make_scene(m, 32);
  GMatrix g(sc.ch);
  SicMmseState st;
  st.s_hat = CVec::Zero(g.mn());
  st.err_vars = RVec::Constant(g.mn(), 1.0);
  for (auto _ : state) {
    SicSweep sweep = sic_sweep(sc.r, g, sc.ch.noise_var, st);
    benchmark::DoNotOptimize(sweep.x_hat.data());
  }
  state.SetItemsProcessed(state.iterations() * m * 32);
}

}  // namespace

BENCHMARK(BM_detect_sicmmse)->Arg(32)->Arg(64)->Arg(128)->ArgNames({"M"})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_detect_mmse_blockwise)->Arg(32)->Arg(64)->ArgNames({"M"})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sic_sweep)->Arg(32)->Arg(128)->Arg(256)->ArgNames({"M"})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
