#include "oddm/ber_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include <Eigen/Eigenvalues>

namespace oddm {

namespace {

double q_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

PairwiseTerm term_from_diff(const CMat& dphi) {
  PairwiseTerm t;
  t.gamma_matrix = dphi.adjoint() * dphi;
  Eigen::SelfAdjointEigenSolver<CMat> eig(t.gamma_matrix);
  t.eigenvalues = eig.eigenvalues();
  const double lmax = t.eigenvalues.maxCoeff();
  t.rank = 0;
  for (int i = 0; i < t.eigenvalues.size(); ++i)
    t.rank += t.eigenvalues[i] > 1e-9 * lmax;
  return t;
}

long hamming(const Bits& a, const Bits& b) {
  long d = 0;
  for (size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace

PairwiseTerm pair_term(const Bits& payload, const Bits& payload_hat,
                       const FrameConfig& cfg,
                       const ChannelRealization& geometry) {
  const CMat phi = build_phi(geometry, map_frame(payload, cfg).symbols);
  const CMat phi_hat =
      build_phi(geometry, map_frame(payload_hat, cfg).symbols);
  PairwiseTerm t = term_from_diff(phi_hat - phi);
  t.bit_errors = hamming(payload, payload_hat);
  return t;
}

double conditional_pep(const CMat& x, const CMat& x_hat,
                       const ChannelRealization& ch, double gamma) {
  CVec h(static_cast<long>(ch.paths.size()));
  for (size_t p = 0; p < ch.paths.size(); ++p) h[p] = ch.paths[p].gain;
  const CMat dphi = build_phi(ch, x_hat) - build_phi(ch, x);
  return q_tail(std::sqrt(0.5 * gamma * (dphi * h).squaredNorm()));
}

double unconditional_pep(const PairwiseTerm& t, int p_paths, double gamma) {
  // Product over the rank-counted (largest) eigenvalues.
  RVec sorted = t.eigenvalues;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  double prod = 1.0;
  for (int i = 0; i < t.rank; ++i) prod *= sorted[sorted.size() - 1 - i];
  const double r = static_cast<double>(t.rank);
  const double a = std::pow(gamma / (4.0 * p_paths), -r);
  const double b = std::pow(gamma / (3.0 * p_paths), -r);
  return (a / 12.0 + b / 4.0) / prod;
}

BerSummary average_ber_detail(const FrameConfig& cfg,
                              const ChannelRealization& geometry, double gamma,
                              long pair_cap) {
  cfg.validate();
  const int b = static_cast<int>(cfg.total_bits());
  if (b > 30) throw ConfigError("average_ber: frame space too large");
  const long v = 1L << b;
  BerSummary s;
  s.frames = v;
  s.pairs = v * (v - 1);
  if (s.pairs > pair_cap)
    throw ConfigError("average_ber: pair count " + std::to_string(s.pairs) +
                      " exceeds cap " + std::to_string(pair_cap));

  const int p_paths = static_cast<int>(geometry.paths.size());
  std::vector<CMat> phi(v);
  std::vector<Bits> payload(v);
  for (long i = 0; i < v; ++i) {
    bits_from_uint(static_cast<std::uint64_t>(i), b, payload[i]);
    phi[i] = build_phi(geometry, map_frame(payload[i], cfg).symbols);
  }

  double acc = 0.0;
  for (long i = 0; i < v; ++i)
    for (long j = 0; j < v; ++j) {
      if (i == j) continue;
      PairwiseTerm t = term_from_diff(phi[j] - phi[i]);
      acc += unconditional_pep(t, p_paths, gamma) *
             hamming(payload[i], payload[j]);
    }
  s.ber = acc / (static_cast<double>(b) * static_cast<double>(v));
  return s;
}

double average_ber(const FrameConfig& cfg, const ChannelRealization& geometry,
                   double gamma, long pair_cap) {
  return average_ber_detail(cfg, geometry, gamma, pair_cap).ber;
}

double search_rho(const FrameConfig& cfg, const ChannelRealization& geometry,
                  double gamma_ref, const std::vector<double>& rho_grid,
                  long pair_cap) {
  std::vector<double> grid = rho_grid;
  std::sort(grid.begin(), grid.end());
  const Constellation& base = cfg.constellation;
  double best_rho = 0.0;
  double best_ber = std::numeric_limits<double>::infinity();
  bool any = false;
  for (double rho : grid) {
    FrameConfig probe = cfg;
    try {
      probe.constellation = build_hqc(base.q1_order, base.q2_order, rho);
    } catch (const ConstellationError& e) {
      std::cerr << "search_rho: skipping rho=" << rho << " (" << e.what()
                << ")\n";
      continue;
    }
    const double ber = average_ber(probe, geometry, gamma_ref, pair_cap);
    if (ber < best_ber) {
      best_ber = ber;
      best_rho = rho;
      any = true;
    }
  }
  if (!any) throw ConfigError("search_rho: no feasible rho in grid");
  return best_rho;
}

}  // namespace oddm
