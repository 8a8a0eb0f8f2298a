#include "oddm/detectors.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/SparseLU>

namespace oddm {

namespace {

void check_grid(const ChannelRealization& ch, int m, int n, const char* who) {
  if (ch.m_delay != m || ch.n_doppler != n)
    throw ConfigError(std::string(who) +
                      ": channel grid does not match the frame");
}

void check_noise(const ChannelRealization& ch, const char* who) {
  if (!(ch.noise_var > 0))
    throw ConfigError(std::string(who) + ": needs a positive noise variance");
}

// Scratch for the per-symbol windowed filter; reused across the MN sweep.
struct WindowScratch {
  CMat gq, scaled, cov;
  CVec g0, rt, ci;
};

// Cancel-and-filter for one symbol: w = g0^H (G_q V_q G_q^H + σ_z² I)^{-1}
// with the self entry of V_q at E_s, then bias-normalize by μ = w·g0.
void equalize_one(const GMatrix& g, const CVec& r, double noise_var,
                  const CVec& means, const RVec& vars, int q,
                  WindowScratch& w, cplx& x_hat, double& err_var, double& mu,
                  long& macs, int& jitter_events) {
  const int mn = g.mn(), lmax = g.l_max(), lr = lmax + 1, lc = 2 * lmax + 1;
  w.gq = build_subchannel(g, q);
  w.g0 = w.gq.col(lmax);

  w.scaled = w.gq;
  for (int c = 0; c < lc; ++c)
    w.scaled.col(c) *= (c == lmax) ? 1.0 : vars[(q + c - lmax + mn) % mn];
  w.cov = w.scaled * w.gq.adjoint();
  w.cov.diagonal().array() += noise_var;

  w.rt.resize(lr);
  for (int l = 0; l < lr; ++l) {
    cplx cancel = 0;
    for (int c = 0; c < lc; ++c)
      if (c != lmax) cancel += w.gq(l, c) * means[(q + c - lmax + mn) % mn];
    w.rt[l] = r[(q + l) % mn] - cancel;
  }

  macs += static_cast<long>(lr) * lr * lc + static_cast<long>(lr) * lr * lr / 3 +
          2L * lr * lr + static_cast<long>(lr) * lc + 2L * lr;

  for (int attempt = 0; attempt < 2; ++attempt) {
    Eigen::LDLT<CMat> ldlt(w.cov);
    if (ldlt.info() == Eigen::Success) {
      w.ci = ldlt.solve(w.g0);
      mu = w.g0.dot(w.ci).real();
      if (std::isfinite(mu) && mu > 1e-15) {
        x_hat = w.ci.dot(w.rt) / mu;
        err_var = std::max(post_equalization_variance(mu), 0.0);
        return;
      }
    }
    if (attempt == 0) {
      w.cov.diagonal().array() += 1e-6 * noise_var;
      ++jitter_events;
    }
  }
  // No usable observation of s[q]: fall back to the prior.
  x_hat = 0.0;
  err_var = 1.0;
  mu = 0.0;
}

}  // namespace

double post_equalization_variance(double mu, double es) {
  return es * (1.0 - mu) / mu;
}

DetectionResult detect_ml(const CMat& y, const ChannelRealization& ch,
                          const FrameConfig& cfg, long max_hypotheses) {
  cfg.validate();
  check_grid(ch, cfg.m_delay, cfg.n_doppler, "detect_ml");
  if (y.rows() != cfg.m_delay || y.cols() != cfg.n_doppler)
    throw ConfigError("detect_ml: received grid has the wrong shape");

  auto table = hmim_block_hypotheses(cfg.constellation, cfg.n_block);
  const long h = static_cast<long>(table.size());
  const long nb = cfg.num_blocks();
  double total_d = std::pow(static_cast<double>(h), static_cast<double>(nb));
  if (!(total_d <= static_cast<double>(max_hypotheses)))
    throw ConfigError(
        "detect_ml: hypothesis count exceeds the cap; shrink the frame or use "
        "the mmse/sicmmse detectors");
  const long total = std::lround(total_d);

  const int bpr = cfg.blocks_per_row();
  CMat x = CMat::Zero(cfg.m_delay, cfg.n_doppler);
  std::vector<int> idx(nb, 0), best_idx(nb, 0);
  double best = std::numeric_limits<double>::infinity();

  // Odometer with the last block fastest: frames are visited in ascending
  // payload order, so strict < keeps the lowest enumeration index on ties.
  std::function<void(long)> visit = [&](long b) {
    const int m = static_cast<int>(b / bpr);
    const int col0 = static_cast<int>(b % bpr) * cfg.n_block;
    for (int hh = 0; hh < h; ++hh) {
      for (int i = 0; i < cfg.n_block; ++i)
        x(m, col0 + i) = table[hh].symbols[i];
      idx[b] = hh;
      if (b + 1 == nb) {
        double metric = (y - apply_channel_dd(ch, x)).squaredNorm();
        if (metric < best) {
          best = metric;
          best_idx = idx;
        }
      } else {
        visit(b + 1);
      }
    }
  };
  visit(0);

  DetectionResult out;
  out.x_dd.resize(cfg.m_delay, cfg.n_doppler);
  for (long b = 0; b < nb; ++b) {
    const int m = static_cast<int>(b / bpr);
    const int col0 = static_cast<int>(b % bpr) * cfg.n_block;
    const BlockHypothesis& hyp = table[best_idx[b]];
    for (int i = 0; i < cfg.n_block; ++i) out.x_dd(m, col0 + i) = hyp.symbols[i];
    out.bits.insert(out.bits.end(), hyp.bits.begin(), hyp.bits.end());
  }
  out.ml_metric = best;
  out.diag.hypotheses = total;
  return out;
}

MmseEqualized mmse_equalize(const CVec& r, const GMatrix& g, double noise_var) {
  if (!(noise_var > 0))
    throw ConfigError("mmse_equalize: needs a positive noise variance");
  const int mn = g.mn();
  if (mn > 4096)
    throw ConfigError(
        "mmse_equalize: grid too large for the full solve; use the iterative "
        "detector");
  if (r.size() != mn) throw ConfigError("mmse_equalize: length mismatch");

  Eigen::SparseMatrix<cplx> gs = g.sparse();
  Eigen::SparseMatrix<cplx> a =
      Eigen::SparseMatrix<cplx>(gs.adjoint()) * gs;
  Eigen::SparseMatrix<cplx> iden(mn, mn);
  iden.setIdentity();
  a = a + Eigen::SparseMatrix<cplx>(noise_var * iden);
  a.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu(a);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error(
        "mmse_equalize: factorization failed; the system is singular and "
        "needs explicit regularization");

  MmseEqualized out;
  out.x_hat = lu.solve(g.apply_adjoint(r));
  out.mu.resize(mn);
  out.err_var.resize(mn);
  CVec e = CVec::Zero(mn);
  for (int q = 0; q < mn; ++q) {
    e[q] = 1.0;
    CVec col = lu.solve(e);
    e[q] = 0.0;
    double mu = 1.0 - noise_var * col[q].real();
    mu = std::max(std::min(mu, 1.0), 1e-15);
    out.mu[q] = mu;
    out.x_hat[q] /= mu;
    out.err_var[q] = std::max(post_equalization_variance(mu), 0.0);
  }
  return out;
}

Bits decide_blocks_ml(const CMat& x_dd, const RMat& var_dd, int n_block,
                      const std::vector<BlockHypothesis>& table) {
  const int m = static_cast<int>(x_dd.rows());
  const int n = static_cast<int>(x_dd.cols());
  if (table.empty()) throw ConfigError("decide_blocks_ml: empty hypothesis table");
  if (n_block < 1 || n % n_block != 0 || var_dd.rows() != m || var_dd.cols() != n)
    throw ConfigError("decide_blocks_ml: shape mismatch");
  for (const auto& hyp : table)
    if (static_cast<int>(hyp.symbols.size()) != n_block)
      throw ConfigError("decide_blocks_ml: table/block size mismatch");

  Bits bits;
  for (int mm = 0; mm < m; ++mm)
    for (int beta = 0; beta < n / n_block; ++beta) {
      size_t besti = 0;
      double best = std::numeric_limits<double>::infinity();
      for (size_t hh = 0; hh < table.size(); ++hh) {
        double metric = 0;
        for (int i = 0; i < n_block; ++i) {
          const int col = beta * n_block + i;
          metric += std::norm(x_dd(mm, col) - table[hh].symbols[i]) /
                    std::max(var_dd(mm, col), 1e-300);
        }
        if (metric < best) {
          best = metric;
          besti = hh;
        }
      }
      bits.insert(bits.end(), table[besti].bits.begin(),
                  table[besti].bits.end());
    }
  return bits;
}

namespace {

// Shared tail of the two linear detectors: equalize, go to DD with
// row-averaged variances, decide blockwise.
DetectionResult mmse_detect_common(const CVec& r, const ChannelRealization& ch,
                                   int m_delay, int n_doppler, int n_block,
                                   const std::vector<BlockHypothesis>& table) {
  GMatrix g(ch);
  MmseEqualized eq = mmse_equalize(r, g, ch.noise_var);
  DetectionResult out;
  out.x_dd = time_to_dd(eq.x_hat, m_delay, n_doppler);
  out.var_dd.resize(m_delay, n_doppler);
  for (int m = 0; m < m_delay; ++m) {
    double avg = 0;
    for (int n = 0; n < n_doppler; ++n) avg += eq.err_var[n * m_delay + m];
    out.var_dd.row(m).setConstant(avg / n_doppler);
  }
  out.bits = decide_blocks_ml(out.x_dd, out.var_dd, n_block, table);
  out.diag.iterations_run = 1;
  return out;
}

}  // namespace

DetectionResult detect_mmse_blockwise(const CVec& r,
                                      const ChannelRealization& ch,
                                      const FrameConfig& cfg) {
  cfg.validate();
  check_grid(ch, cfg.m_delay, cfg.n_doppler, "detect_mmse_blockwise");
  check_noise(ch, "detect_mmse_blockwise");
  auto table = hmim_block_hypotheses(cfg.constellation, cfg.n_block);
  return mmse_detect_common(r, ch, cfg.m_delay, cfg.n_doppler, cfg.n_block,
                            table);
}

DetectionResult detect_mmse_im(const CVec& r, const ChannelRealization& ch,
                               int m_delay, int n_doppler,
                               const ImBaselineConfig& cfg) {
  cfg.validate();
  if (n_doppler % cfg.n_block != 0)
    throw ConfigError("detect_mmse_im: N must be a multiple of N_b");
  check_grid(ch, m_delay, n_doppler, "detect_mmse_im");
  check_noise(ch, "detect_mmse_im");
  auto table = im_block_hypotheses(cfg);
  return mmse_detect_common(r, ch, m_delay, n_doppler, cfg.n_block, table);
}

SicSweep sic_sweep(const CVec& r, const GMatrix& g, double noise_var,
                   const SicMmseState& state, long* macs) {
  const int mn = g.mn();
  if (!(noise_var > 0))
    throw ConfigError("sic_sweep: needs a positive noise variance");
  if (2 * g.l_max() + 1 > mn)
    throw ConfigError("sic_sweep: window wider than the frame");
  if (r.size() != mn || state.s_hat.size() != mn || state.err_vars.size() != mn)
    throw ConfigError("sic_sweep: length mismatch");

  SicSweep out;
  out.x_hat.resize(mn);
  out.err_var.resize(mn);
  out.mu.resize(mn);
  WindowScratch w;
  long count = 0;
  int jitter = 0;
  for (int q = 0; q < mn; ++q)
    equalize_one(g, r, noise_var, state.s_hat, state.err_vars, q, w,
                 out.x_hat[q], out.err_var[q], out.mu[q], count, jitter);
  if (macs) *macs += count;
  return out;
}

DetectionResult detect_sicmmse(const CVec& r, const ChannelRealization& ch,
                               const FrameConfig& cfg, const SicOptions& opt) {
  cfg.validate();
  check_grid(ch, cfg.m_delay, cfg.n_doppler, "detect_sicmmse");
  check_noise(ch, "detect_sicmmse");
  if (opt.n_ite < 1) throw ConfigError("detect_sicmmse: n_ite must be >= 1");

  GMatrix g(ch);
  const int mn = g.mn(), m_rows = cfg.m_delay, n_cols = cfg.n_doppler;
  const int nb = cfg.n_block, bpr = cfg.blocks_per_row();
  if (2 * g.l_max() + 1 > mn)
    throw ConfigError("detect_sicmmse: window wider than the frame");
  if (r.size() != mn) throw ConfigError("detect_sicmmse: length mismatch");

  const Constellation& c = cfg.constellation;
  const CMat f = dft_matrix(n_cols);
  const CMat fc = f.conjugate();

  SicMmseState st;
  st.s_hat = CVec::Zero(mn);
  st.err_vars = RVec::Constant(mn, 1.0);

  DetectionResult out;
  out.posteriors.resize(cfg.num_blocks());
  out.x_dd = CMat::Zero(m_rows, n_cols);
  out.var_dd = RMat::Constant(m_rows, n_cols, 1.0);

  CVec stage_x(mn);
  RVec stage_var(mn), prev_vars(mn);
  Eigen::RowVectorXcd row_t(n_cols), row_dd(n_cols), dd_means(n_cols),
      time_means(n_cols);
  Eigen::RowVectorXd dd_vars(n_cols);
  WindowScratch w;
  long macs = 0;
  int jitter = 0;

  for (int it = 1; it <= opt.n_ite; ++it) {
    st.iteration = it;
    prev_vars = st.err_vars;
    for (int q = 0; q < mn; ++q) {
      double mu = 0;
      equalize_one(g, r, ch.noise_var, st.s_hat, st.err_vars, q, w, stage_x[q],
                   stage_var[q], mu, macs, jitter);
      if (q < (n_cols - 1) * m_rows) continue;

      // Delay row m is fully equalized: MAP it and refresh the priors.
      const int m = q - (n_cols - 1) * m_rows;
      double tvar = 0;
      for (int n = 0; n < n_cols; ++n) {
        row_t[n] = stage_x[n * m_rows + m];
        tvar += stage_var[n * m_rows + m];
      }
      tvar /= n_cols;
      row_dd = row_t * f;
      macs += static_cast<long>(n_cols) * n_cols;

      for (int beta = 0; beta < bpr; ++beta) {
        BlockObservation obs;
        obs.x_tilde = row_dd.segment(beta * nb, nb).transpose();
        obs.noise_vars = RVec::Constant(nb, std::max(tvar, 1e-300));
        obs.constellation = &c;
        MapStats ms;
        BlockPosterior post = block_posterior(obs, &ms);
        auto [pm, pv] = soft_statistics(post, c);
        for (int i = 0; i < nb; ++i) {
          dd_means[beta * nb + i] = pm[i];
          dd_vars[beta * nb + i] = pv[i];
        }
        out.posteriors[m * bpr + beta] = std::move(post);
        macs += static_cast<long>(ms.likelihood_evals) * 4;
      }
      out.x_dd.row(m) = dd_means;
      out.var_dd.row(m) = dd_vars;

      time_means = dd_means * fc;
      macs += static_cast<long>(n_cols) * n_cols;
      const double pavg =
          std::min(std::max(dd_vars.mean(), 0.0), 1.0);  // err_vars ∈ [0, E_s]
      for (int n = 0; n < n_cols; ++n) {
        st.s_hat[n * m_rows + m] = time_means[n];
        st.err_vars[n * m_rows + m] = pavg;
      }
    }
    out.diag.mean_err_var.push_back(st.err_vars.mean());
    out.diag.residual_power.push_back((r - g.apply(st.s_hat)).squaredNorm());
    macs += static_cast<long>(mn) * static_cast<long>(g.delays().size());
    out.diag.iterations_run = it;
    if ((st.err_vars - prev_vars).cwiseAbs().mean() < opt.exit_tol) break;
  }

  for (long b = 0; b < cfg.num_blocks(); ++b) {
    Bits bb = demap_block_hard(out.posteriors[b], c, nb);
    out.bits.insert(out.bits.end(), bb.begin(), bb.end());
  }
  out.diag.complex_macs = macs;
  out.diag.jitter_events = jitter;
  return out;
}

}  // namespace oddm
