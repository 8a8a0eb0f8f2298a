#pragma once

#include <utility>

#include "oddm/hqc.hpp"
#include "oddm/types.hpp"

namespace oddm {

// One block of N_b equalized symbols in (assumed) Gaussian noise with known
// per-symbol variances. noise_vars generalizes the usual scalar variance so
// iterative equalizers can feed per-symbol reliabilities; with equal entries
// it reduces to the textbook single-variance case.
struct BlockObservation {
  CVec x_tilde;                           // N_b observations
  RVec noise_vars;                        // N_b variances, > 0
  const Constellation* constellation = nullptr;
  RVec prior_mode;                        // Q2 prior PMF; empty = uniform
};

struct BlockPosterior {
  RMat symbol_pmfs;  // N_b × (Q1·Q2), flat column index q1·Q2 + q2
  RVec mode_pmf;     // Q2
};

struct MapStats {
  std::uint64_t likelihood_evals = 0;  // one per (symbol, point) pair
};

// Per-symbol point likelihoods ξ, normalized per row. Log-domain with
// max-shift internally, so extreme SNRs stay finite.
RMat symbol_likelihoods(const BlockObservation& obs, MapStats* stats = nullptr);

// Per-symbol mode evidence u[n][q2] = Σ_{q1} ξ[n][q1,q2].
RMat mode_messages(const RMat& xi, int q2_order);

// Leave-one-out mode messages v[n][q2] ∝ prior[q2]·Π_{n'≠n} u[n'][q2],
// each row normalized. Log-domain full-sum-minus-self; zero factors
// (−∞ logs) are tracked explicitly so a single zero elsewhere kills the
// product but a symbol's own zero does not.
RMat extrinsic_messages(const RMat& u, const RVec& prior_mode);

// Exact block posteriors: symbol PMFs ∝ ξ·v, mode PMF ∝ prior·Π u. The
// block's factor graph is a tree, so these equal the brute-force joint
// enumeration marginals.
BlockPosterior block_posterior(const BlockObservation& obs,
                               MapStats* stats = nullptr);

// Posterior mean and variance per symbol from its PMF.
std::pair<CVec, RVec> soft_statistics(const BlockPosterior& post,
                                      const Constellation& c);

}  // namespace oddm
