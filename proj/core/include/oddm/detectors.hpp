#pragma once

#include "oddm/channel.hpp"
#include "oddm/hmim.hpp"
#include "oddm/map_estimator.hpp"
#include "oddm/transform.hpp"

namespace oddm {

// Prior state threaded through SIC-MMSE: time-domain symbol means and error
// variances, refreshed per delay row from the MAP posteriors.
struct SicMmseState {
  CVec s_hat;     // MN prior means
  RVec err_vars;  // MN prior variances, each in [0, E_s]
  int iteration = 0;
};

struct SicOptions {
  int n_ite = 10;
  double exit_tol = 1e-6;  // on the mean |err_var change| between iterations
};

struct DetectorDiagnostics {
  int iterations_run = 0;
  long hypotheses = 0;     // ML enumeration size
  long complex_macs = 0;   // arithmetic proxy for the SIC-MMSE cost model
  int jitter_events = 0;   // window solves rescued by diagonal jitter
  std::vector<double> mean_err_var;    // per iteration
  std::vector<double> residual_power;  // ‖r − G·ŝ‖² per iteration
};

struct DetectionResult {
  Bits bits;
  CMat x_dd;    // equalized / posterior-mean DD grid (empty for ML hard output)
  RMat var_dd;  // matching per-symbol variances
  std::vector<BlockPosterior> posteriors;  // delay-major; SIC-MMSE only
  double ml_metric = 0.0;
  DetectorDiagnostics diag;
};

// Brute-force ML over every valid frame: argmin ‖vec(Y) − Φ(X')h‖², ties to
// the lowest enumeration index (frames ordered by their bit strings).
// Refuses when the hypothesis count exceeds max_hypotheses.
DetectionResult detect_ml(const CMat& y, const ChannelRealization& ch,
                          const FrameConfig& cfg,
                          long max_hypotheses = 1L << 20);

// The unbiased-MMSE error variance E_s(1−μ)/μ. Swappable in one place if a
// different post-equalization noise model is ever wanted.
double post_equalization_variance(double mu, double es = 1.0);

// Full linear MMSE for r = G s + z: x_hat unbiased, μ_q = 1 − σ_z²(A⁻¹)_qq
// with A = G^H G + σ_z² I, err_var from post_equalization_variance.
struct MmseEqualized {
  CVec x_hat;
  RVec err_var;
  RVec mu;
};
MmseEqualized mmse_equalize(const CVec& r, const GMatrix& g, double noise_var);

// Joint block-wise ML over a hypothesis table with per-symbol Gaussian
// weights Σ_i |x̃ − hyp_i|²/σ_i²; ties to the lowest table index. Blocks run
// delay-major; returns the concatenated bits.
Bits decide_blocks_ml(const CMat& x_dd, const RMat& var_dd, int n_block,
                      const std::vector<BlockHypothesis>& table);

// Linear MMSE equalization + block-wise ML decision. Grid capped at
// MN ≤ 4096; the iterative detector is the large-frame path.
DetectionResult detect_mmse_blockwise(const CVec& r,
                                      const ChannelRealization& ch,
                                      const FrameConfig& cfg);
DetectionResult detect_mmse_im(const CVec& r, const ChannelRealization& ch,
                               int m_delay, int n_doppler,
                               const ImBaselineConfig& cfg);

// One windowed-filter sweep of the SIC inner loop with frozen priors: for
// each q, cancel prior-mean interference in the window around s[q], apply
// w = g₀^H(G_q V_q G_q^H + σ_z² I)⁻¹ with the self-entry of V_q at E_s, and
// bias-normalize. The building block of detect_sicmmse and its test hook.
struct SicSweep {
  CVec x_hat;
  RVec err_var;
  RVec mu;
};
SicSweep sic_sweep(const CVec& r, const GMatrix& g, double noise_var,
                   const SicMmseState& state, long* macs = nullptr);

// Iterative SIC-MMSE: ascending-q sweeps; each delay row, once fully
// equalized, goes through the block MAP and feeds refreshed means/variances
// back into the remaining cancellations. Bits come from the final posteriors.
DetectionResult detect_sicmmse(const CVec& r, const ChannelRealization& ch,
                               const FrameConfig& cfg,
                               const SicOptions& opt = {});

}  // namespace oddm
