#pragma once

#include "oddm/channel.hpp"
#include "oddm/hmim.hpp"

namespace oddm {

// One ordered frame pair (X -> X_hat) reduced to what the union bound needs:
// the P x P Gram matrix of the path-response difference, its eigenvalues
// (ascending), the rank, and the number of differing information bits.
struct PairwiseTerm {
  CMat gamma_matrix;  // (Phi(X_hat)-Phi(X))^H (Phi(X_hat)-Phi(X))
  RVec eigenvalues;   // real, >= 0 up to roundoff
  int rank = 0;       // eigenvalues above 1e-9 * max
  long bit_errors = 0;
};

PairwiseTerm pair_term(const Bits& payload, const Bits& payload_hat,
                       const FrameConfig& cfg,
                       const ChannelRealization& geometry);

// Pairwise error probability given the realized path gains in ch:
// Q(sqrt(gamma/2 * ||(Phi(X_hat)-Phi(X)) h||^2)). Identical frames sit at
// the Q(0) = 1/2 limit; callers enumerate distinct pairs only.
double conditional_pep(const CMat& x, const CMat& x_hat,
                       const ChannelRealization& ch, double gamma);

// Rayleigh-averaged pairwise error probability for uniform path power 1/P:
//   1/12 * (gamma/4P)^-R / prod(lambda) + 1/4 * (gamma/3P)^-R / prod(lambda)
// over the rank-counted eigenvalues.
double unconditional_pep(const PairwiseTerm& t, int p_paths, double gamma);

struct BerSummary {
  double ber = 0.0;
  long frames = 0;  // valid-frame count Q1^MN * Q2^(MN/Nb)
  long pairs = 0;   // ordered pairs evaluated
};

// Closed-form BER prediction by exhaustive pair enumeration over every valid
// frame: (1/B) * (1/V) * sum over ordered pairs of UPEP * bit_errors. Only
// the delay/Doppler geometry of `geometry` matters; gains are ignored.
// Throws ConfigError when the ordered-pair count exceeds pair_cap.
BerSummary average_ber_detail(const FrameConfig& cfg,
                              const ChannelRealization& geometry, double gamma,
                              long pair_cap = 10000000);
double average_ber(const FrameConfig& cfg, const ChannelRealization& geometry,
                   double gamma, long pair_cap = 10000000);

// Argmin of average_ber over the rho grid, constellation rebuilt per probe;
// ties resolve to the smaller rho. Grid points no constellation can realize
// are skipped with a note on stderr; throws ConfigError when none remain.
double search_rho(const FrameConfig& cfg, const ChannelRealization& geometry,
                  double gamma_ref, const std::vector<double>& rho_grid,
                  long pair_cap = 10000000);

}  // namespace oddm
