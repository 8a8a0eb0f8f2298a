#include <benchmark/benchmark.h>

#include <random>

#include "oddm/hqc.hpp"
#include "oddm/map_estimator.hpp"
#include "oddm/rng.hpp"

using namespace oddm;

namespace {

BlockObservation make_obs(const Constellation& c, int n_block,
                          std::mt19937_64& rng) {
  BlockObservation obs;
  obs.constellation = &c;
  obs.x_tilde = CVec(n_block);
  obs.noise_vars = RVec::Constant(n_block, 0.15);
  for (int i = 0; i < n_block; ++i) obs.x_tilde[i] = crandn(rng, 1.1);
  return obs;
}

void BM_block_posterior(benchmark::State& state) {
  const int q = static_cast<int>(state.range(0));
  const int nb = static_cast<int>(state.range(1));
  Constellation c = build_hqc(q, q, 1.1);
  std::mt19937_64 rng(7);
  BlockObservation obs = make_obs(c, nb, rng);
  for (auto _ : state) {
    BlockPosterior post = block_posterior(obs);
    benchmark::DoNotOptimize(post.mode_pmf.data());
  }
  state.SetItemsProcessed(state.iterations() * nb);
}

void BM_symbol_likelihoods(benchmark::State& state) {
  const int q = static_cast<int>(state.range(0));
  Constellation c = build_hqc(q, q, 1.1);
  std::mt19937_64 rng(7);
  BlockObservation obs = make_obs(c, 8, rng);
  for (auto _ : state) {
    RMat xi = symbol_likelihoods(obs);
    benchmark::DoNotOptimize(xi.data());
  }
}

}  // namespace

BENCHMARK(BM_block_posterior)
    ->ArgsProduct({{2, 4}, {1, 2, 4, 8}})
    ->ArgNames({"Q", "Nb"});
BENCHMARK(BM_symbol_likelihoods)->Arg(2)->Arg(4)->ArgNames({"Q"});

BENCHMARK_MAIN();
