#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oddm/ber_analysis.hpp"
#include "oddm/rng.hpp"

using namespace oddm;

namespace {

FrameConfig make_cfg(int m, int n, int q1, int q2, int nb, double rho) {
  FrameConfig cfg;
  cfg.m_delay = m;
  cfg.n_doppler = n;
  cfg.n_block = nb;
  cfg.constellation = build_hqc(q1, q2, rho);
  return cfg;
}

ChannelRealization two_path_geometry(int m, int n) {
  ChannelRealization ch;
  ch.m_delay = m;
  ch.n_doppler = n;
  ch.paths = {{cplx(0.82, -0.31), 0, 0}, {cplx(-0.35, 0.47), 1, 1}};
  return ch;
}

Bits bits_of_value(std::uint64_t v, int n) {
  Bits b;
  bits_from_uint(v, n, b);
  return b;
}

CMat frame_of_value(std::uint64_t v, const FrameConfig& cfg) {
  return map_frame(bits_of_value(v, static_cast<int>(cfg.total_bits())), cfg)
      .symbols;
}

double q_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Exact Rayleigh-averaged pairwise error probability for two distinct
// eigenvalues: in eigencoordinates the quadratic form is hypoexponential,
// w = l1 e1 + l2 e2 with e_r ~ Exp(P) iid, so
//   pdf(w) = r1 r2 / (r1 - r2) * (exp(-r2 w) - exp(-r1 w)),  r_i = P / l_i,
// and E[Q(sqrt(gamma w / 2))] reduces to a 1-D integral. Integrated in
// t = sqrt(w) so the Q-function's decay near zero stays resolved at high
// SNR. This replaces a raw Monte Carlo average, whose estimate is dominated
// by rare small-norm draws once the probability drops below ~1e-5.
double exact_upep_rank2(double l1, double l2, int p_paths, double gamma) {
  REQUIRE(std::abs(l1 - l2) > 1e-9 * (l1 + l2));
  const double r1 = p_paths / l1, r2 = p_paths / l2;
  const double c = r1 * r2 / (r1 - r2);
  auto f = [&](double t) {
    const double w = t * t;
    return q_tail(std::sqrt(0.5 * gamma * w)) * c *
           (std::exp(-r2 * w) - std::exp(-r1 * w)) * 2.0 * t;
  };
  const double tmax = std::sqrt(60.0 / std::min(r1, r2));
  const int n = 400001;
  const double h = tmax / (n - 1);
  double acc = f(0.0) + f(tmax);
  for (int i = 1; i < n - 1; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

// ------------------------------------------------------------ conditional_pep

TEST_CASE("conditional PEP matches a two-hypothesis Monte Carlo error rate") {
  FrameConfig cfg = make_cfg(2, 2, 2, 2, 2, 1.4);
  ChannelRealization ch = two_path_geometry(2, 2);

  for (auto [va, vb] : {std::pair<int, int>{5, 4}, {0, 32}}) {
    CMat xa = frame_of_value(va, cfg);
    CMat xb = frame_of_value(vb, cfg);

    // Oracle: simulate the genie two-hypothesis ML test directly in the
    // model y = Phi(X)h + w and count how often the wrong hypothesis wins.
    CVec h(2);
    h << ch.paths[0].gain, ch.paths[1].gain;
    CVec mean_a = build_phi(ch, xa) * h;
    CVec mean_b = build_phi(ch, xb) * h;

    for (double gamma : {1.0, 2.0}) {
      const double pep = conditional_pep(xa, xb, ch, gamma);
      REQUIRE(pep > 0.003);  // regimes chosen so the MC estimate resolves
      REQUIRE(pep < 0.45);
      auto rng = frame_rng(101, gamma, va, vb);
      const int draws = 100000;
      long errs = 0;
      for (int i = 0; i < draws; ++i) {
        CVec y = mean_a;
        for (int q = 0; q < y.size(); ++q) y[q] += crandn(rng, 1.0 / gamma);
        errs += (y - mean_b).squaredNorm() < (y - mean_a).squaredNorm();
      }
      const double p_mc = static_cast<double>(errs) / draws;
      const double sigma = std::sqrt(pep * (1.0 - pep) / draws);
      CHECK(std::abs(p_mc - pep) <= 3.0 * sigma);
    }
  }
}

TEST_CASE("conditional PEP limits") {
  FrameConfig cfg = make_cfg(2, 2, 2, 2, 2, 1.4);
  ChannelRealization ch = two_path_geometry(2, 2);
  CMat xa = frame_of_value(9, cfg);
  CMat xb = frame_of_value(54, cfg);
  // Identical frames sit at the Q(0) limit; huge SNR kills any real gap.
  CHECK(conditional_pep(xa, xa, ch, 10.0) == doctest::Approx(0.5));
  CHECK(conditional_pep(xa, xb, ch, 1e12) < 1e-12);
  double lo = conditional_pep(xa, xb, ch, 4.0);
  double hi = conditional_pep(xa, xb, ch, 16.0);
  CHECK(hi < lo);
}

// ---------------------------------------------------------- unconditional_pep

TEST_CASE("unconditional PEP agrees with the exact Rayleigh average") {
  FrameConfig cfg = make_cfg(2, 2, 2, 2, 2, 1.4);
  ChannelRealization geom = two_path_geometry(2, 2);

  for (auto [va, vb] : {std::pair<int, int>{5, 38}, {9, 54}, {0, 63}}) {
    Bits ba = bits_of_value(va, 6), bb = bits_of_value(vb, 6);
    PairwiseTerm t = pair_term(ba, bb, cfg, geom);
    REQUIRE(t.rank == 2);

    // The closed form sits above the truth and tightens with SNR: measured
    // ~23-28% high at 15 dB, within 25% from 18 dB, and approaching the
    // (1/12 * 16 + 1/4 * 9) / 3 = 1.194 asymptote.
    auto ratio = [&](double db) {
      const double gamma = std::pow(10.0, db / 10.0);
      return unconditional_pep(t, 2, gamma) /
             exact_upep_rank2(t.eigenvalues[0], t.eigenvalues[1], 2, gamma);
    };
    CHECK(ratio(15.0) > 1.0);
    CHECK(ratio(15.0) < 1.30);
    CHECK(ratio(18.0) < 1.25);
    CHECK(ratio(30.0) > 1.10);
    CHECK(ratio(30.0) < 1.25);
  }
}

TEST_CASE("pairwise terms are Hermitian PSD with consistent rank") {
  auto rng = frame_rng(33, 0.0, 0, 1);
  FrameConfig cfg = make_cfg(2, 2, 2, 2, 2, 1.4);
  const int b = static_cast<int>(cfg.total_bits());
  for (int rep = 0; rep < 50; ++rep) {
    ChannelRealization geom;
    geom.m_delay = 2;
    geom.n_doppler = 2;
    for (int p = 0; p < 3; ++p) {
      int doppler = static_cast<int>(rng() % 5) - 2;
      geom.paths.push_back({crandn(rng, 1.0 / 3), p, doppler});
    }
    const std::uint64_t va = rng() & 63u;
    std::uint64_t vb = rng() & 63u;
    if (vb == va) vb = (vb + 1) & 63u;
    PairwiseTerm t = pair_term(bits_of_value(va, b), bits_of_value(vb, b), cfg,
                               geom);

    const double lmax = t.eigenvalues.maxCoeff();
    CHECK((t.gamma_matrix - t.gamma_matrix.adjoint()).cwiseAbs().maxCoeff() <=
          1e-13 * (1.0 + lmax));
    CHECK(t.eigenvalues.minCoeff() >= -1e-10);
    CHECK(std::abs(t.eigenvalues.sum() - t.gamma_matrix.trace().real()) <=
          1e-9 * (1.0 + lmax));
    int above = 0;
    for (int i = 0; i < t.eigenvalues.size(); ++i)
      above += t.eigenvalues[i] > 1e-9 * lmax;
    CHECK(t.rank == above);
    CHECK(t.rank >= 1);

    // Swapping the hypothesis roles changes nothing.
    PairwiseTerm s = pair_term(bits_of_value(vb, b), bits_of_value(va, b), cfg,
                               geom);
    CHECK((t.gamma_matrix - s.gamma_matrix).cwiseAbs().maxCoeff() <=
          1e-12 * (1.0 + lmax));
    CHECK(t.bit_errors == s.bit_errors);
    CHECK(t.bit_errors >= 1);
  }
}

TEST_CASE("unconditional PEP depends only on rank and eigenvalue product") {
  PairwiseTerm a;
  a.eigenvalues = RVec(2);
  a.eigenvalues << 3.0, 3.0;
  a.rank = 2;
  PairwiseTerm b;
  b.eigenvalues = RVec(2);
  b.eigenvalues << 1.0, 9.0;  // same product
  b.rank = 2;
  const double gamma = 25.0;
  CHECK(unconditional_pep(a, 2, gamma) ==
        doctest::Approx(unconditional_pep(b, 2, gamma)).epsilon(1e-12));

  // gamma^-R scaling: rank 2 quarters, rank 1 halves.
  CHECK(unconditional_pep(a, 2, 2.0 * gamma) ==
        doctest::Approx(unconditional_pep(a, 2, gamma) / 4.0).epsilon(1e-12));
  PairwiseTerm c;
  c.eigenvalues = RVec(2);
  c.eigenvalues << 0.0, 5.0;
  c.rank = 1;
  CHECK(unconditional_pep(c, 2, 2.0 * gamma) ==
        doctest::Approx(unconditional_pep(c, 2, gamma) / 2.0).epsilon(1e-12));
}

// ------------------------------------------------------------- average_ber

TEST_CASE("average BER enumerates the full valid-frame space") {
  FrameConfig cfg = make_cfg(2, 2, 2, 2, 2, 1.4);
  ChannelRealization geom = two_path_geometry(2, 2);
  BerSummary s = average_ber_detail(cfg, geom, std::pow(10.0, 1.2));
  CHECK(s.frames == 64);        // Q1^MN * Q2^(MN/Nb) = 2^4 * 2^2
  CHECK(s.pairs == 64 * 63);
  CHECK(s.ber > 0.0);
  CHECK(average_ber(cfg, geom, std::pow(10.0, 1.2)) ==
        doctest::Approx(s.ber).epsilon(1e-15));
}

TEST_CASE("average BER falls monotonically in SNR and vanishes") {
  FrameConfig cfg = make_cfg(2, 2, 2, 2, 2, 1.4);
  ChannelRealization geom = two_path_geometry(2, 2);
  double prev = std::numeric_limits<double>::infinity();
  for (double db : {4.0, 8.0, 12.0, 16.0, 20.0}) {
    double v = average_ber(cfg, geom, std::pow(10.0, db / 10.0));
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(average_ber(cfg, geom, 1e6) < 1e-9);
}

TEST_CASE("average BER refuses oversized pair enumerations") {
  ChannelRealization geom = two_path_geometry(2, 2);
  FrameConfig big = make_cfg(2, 2, 4, 4, 1, 1.1);  // 2^16 frames
  CHECK_THROWS_AS(average_ber(big, geom, 10.0), ConfigError);
  FrameConfig small = make_cfg(2, 2, 2, 2, 2, 1.4);
  CHECK_THROWS_AS(average_ber(small, geom, 10.0, 100), ConfigError);
}

// -------------------------------------------------------------- search_rho

TEST_CASE("rho search returns the grid argmin with ties to the smaller rho") {
  ChannelRealization geom = two_path_geometry(2, 2);
  FrameConfig cfg = make_cfg(2, 2, 2, 2, 2, 1.4);
  CHECK(search_rho(cfg, geom, 10.0, {1.3}) == doctest::Approx(1.3));

  // Plain QAM ignores rho entirely -> flat landscape -> smallest wins.
  FrameConfig flat = make_cfg(2, 2, 4, 1, 1, 1.0);
  CHECK(search_rho(flat, geom, 10.0, {1.6, 1.0, 1.2}) == doctest::Approx(1.0));
}

TEST_CASE("rho search skips infeasible grid points") {
  ChannelRealization geom = two_path_geometry(2, 2);
  FrameConfig cfg = make_cfg(2, 2, 2, 2, 2, 1.4);
  double best = search_rho(cfg, geom, 10.0, {1e-12, 1.4});
  CHECK(best == doctest::Approx(1.4));
  CHECK_THROWS_AS(search_rho(cfg, geom, 10.0, {1e-12}), ConfigError);
}

TEST_CASE("rho search lands near the published operating point") {
  ChannelRealization geom = two_path_geometry(2, 2);
  FrameConfig cfg = make_cfg(2, 2, 2, 2, 2, 1.4);
  std::vector<double> grid;
  for (double r = 1.0; r < 2.05; r += 0.1) grid.push_back(r);
  double best = search_rho(cfg, geom, std::pow(10.0, 1.7), grid);
  CHECK(best >= 1.05);
  CHECK(best <= 1.85);
}
