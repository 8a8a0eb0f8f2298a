#include "oddm/map_estimator.hpp"

#include <cmath>
#include <limits>

namespace oddm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void validate(const BlockObservation& obs) {
  if (!obs.constellation) throw std::invalid_argument("block observation: no constellation");
  if (obs.x_tilde.size() == 0 || obs.x_tilde.size() != obs.noise_vars.size())
    throw std::invalid_argument("block observation: size mismatch");
  for (int n = 0; n < obs.noise_vars.size(); ++n)
    if (!(obs.noise_vars(n) > 0))
      throw std::invalid_argument("block observation: noise variance must be > 0");
  if (obs.prior_mode.size() != 0) {
    if (obs.prior_mode.size() != obs.constellation->q2_order)
      throw std::invalid_argument("block observation: prior size != Q2");
    if (obs.prior_mode.minCoeff() < 0 || !(obs.prior_mode.sum() > 0))
      throw std::invalid_argument("block observation: invalid prior");
  }
}

// Unnormalised log-likelihoods, row max shifted to 0.
RMat log_likelihoods(const BlockObservation& obs, MapStats* stats) {
  const Constellation& c = *obs.constellation;
  const int nb = static_cast<int>(obs.x_tilde.size());
  RMat lg(nb, c.num_points());
  for (int n = 0; n < nb; ++n) {
    for (int q1 = 0; q1 < c.q1_order; ++q1)
      for (int q2 = 0; q2 < c.q2_order; ++q2) {
        lg(n, q1 * c.q2_order + q2) =
            -std::norm(obs.x_tilde(n) - c.point(q1, q2)) / obs.noise_vars(n);
        if (stats) ++stats->likelihood_evals;
      }
    lg.row(n).array() -= lg.row(n).maxCoeff();
  }
  return lg;
}

// Normalise log values into a linear PMF, writing through an accessor.
template <typename Get, typename Set>
void to_pmf(int n, Get get, Set set) {
  double mx = kNegInf;
  for (int i = 0; i < n; ++i) mx = std::max(mx, get(i));
  if (mx == kNegInf)
    throw std::invalid_argument("posterior degenerate: all hypotheses excluded");
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(get(i) - mx);
  for (int i = 0; i < n; ++i) set(i, std::exp(get(i) - mx) / s);
}

RVec log_prior(const BlockObservation& obs, int q2n) {
  RVec lp(q2n);
  if (obs.prior_mode.size() == 0) {
    lp.setConstant(-std::log(static_cast<double>(q2n)));
  } else {
    for (int q2 = 0; q2 < q2n; ++q2)
      lp(q2) = obs.prior_mode(q2) > 0 ? std::log(obs.prior_mode(q2)) : kNegInf;
  }
  return lp;
}

}  // namespace

RMat symbol_likelihoods(const BlockObservation& obs, MapStats* stats) {
  validate(obs);
  RMat xi = log_likelihoods(obs, stats);
  for (int n = 0; n < xi.rows(); ++n)
    to_pmf(
        static_cast<int>(xi.cols()), [&](int i) { return xi(n, i); },
        [&](int i, double v) { xi(n, i) = v; });
  return xi;
}

RMat mode_messages(const RMat& xi, int q2_order) {
  if (q2_order < 1 || xi.cols() % q2_order != 0)
    throw std::invalid_argument("mode_messages: columns not divisible by Q2");
  const int q1n = static_cast<int>(xi.cols()) / q2_order;
  RMat u = RMat::Zero(xi.rows(), q2_order);
  for (int n = 0; n < xi.rows(); ++n)
    for (int q1 = 0; q1 < q1n; ++q1)
      for (int q2 = 0; q2 < q2_order; ++q2) u(n, q2) += xi(n, q1 * q2_order + q2);
  return u;
}

RMat extrinsic_messages(const RMat& u, const RVec& prior_mode) {
  const int nb = static_cast<int>(u.rows());
  const int q2n = static_cast<int>(u.cols());
  if (prior_mode.size() != q2n)
    throw std::invalid_argument("extrinsic_messages: prior size mismatch");

  // Full log-sum per mode plus a zero-factor census, so the leave-one-out
  // value never subtracts -inf from -inf.
  RVec logsum = RVec::Zero(q2n);
  Eigen::VectorXi zeros = Eigen::VectorXi::Zero(q2n);
  for (int q2 = 0; q2 < q2n; ++q2)
    for (int n = 0; n < nb; ++n) {
      if (u(n, q2) > 0)
        logsum(q2) += std::log(u(n, q2));
      else
        ++zeros(q2);
    }

  RMat v(nb, q2n);
  for (int n = 0; n < nb; ++n) {
    for (int q2 = 0; q2 < q2n; ++q2) {
      int zeros_other = zeros(q2) - (u(n, q2) > 0 ? 0 : 1);
      if (prior_mode(q2) <= 0 || zeros_other > 0) {
        v(n, q2) = kNegInf;
      } else {
        double own = u(n, q2) > 0 ? std::log(u(n, q2)) : 0.0;
        v(n, q2) = std::log(prior_mode(q2)) + logsum(q2) - own;
      }
    }
    if (v.row(n).maxCoeff() == kNegInf) {
      // Contradictory factors: fall back to the prior alone.
      for (int q2 = 0; q2 < q2n; ++q2)
        v(n, q2) = prior_mode(q2) > 0 ? std::log(prior_mode(q2)) : kNegInf;
    }
    to_pmf(
        q2n, [&](int i) { return v(n, i); },
        [&](int i, double val) { v(n, i) = val; });
  }
  return v;
}

BlockPosterior block_posterior(const BlockObservation& obs, MapStats* stats) {
  validate(obs);
  const Constellation& c = *obs.constellation;
  const int nb = static_cast<int>(obs.x_tilde.size());
  const int q1n = c.q1_order, q2n = c.q2_order;

  RMat lg = log_likelihoods(obs, stats);

  // log u[n][q2] = logsumexp over q1 — finite after the max shift.
  RMat ulog(nb, q2n);
  for (int n = 0; n < nb; ++n)
    for (int q2 = 0; q2 < q2n; ++q2) {
      double mx = kNegInf;
      for (int q1 = 0; q1 < q1n; ++q1)
        mx = std::max(mx, lg(n, q1 * q2n + q2));
      double s = 0.0;
      for (int q1 = 0; q1 < q1n; ++q1)
        s += std::exp(lg(n, q1 * q2n + q2) - mx);
      ulog(n, q2) = mx + std::log(s);
    }

  RVec plog = log_prior(obs, q2n);
  RVec slog = ulog.colwise().sum();

  BlockPosterior post;
  post.mode_pmf.resize(q2n);
  to_pmf(
      q2n, [&](int i) { return plog(i) + slog(i); },
      [&](int i, double val) { post.mode_pmf(i) = val; });

  post.symbol_pmfs.resize(nb, q1n * q2n);
  for (int n = 0; n < nb; ++n) {
    auto joint = [&](int i) {
      int q2 = i % q2n;
      double vlog = plog(q2) + slog(q2) - ulog(n, q2);  // leave-one-out
      return lg(n, i) + vlog;
    };
    to_pmf(q1n * q2n, joint,
           [&](int i, double val) { post.symbol_pmfs(n, i) = val; });
  }
  return post;
}

std::pair<CVec, RVec> soft_statistics(const BlockPosterior& post,
                                      const Constellation& c) {
  const int nb = static_cast<int>(post.symbol_pmfs.rows());
  if (post.symbol_pmfs.cols() != c.num_points())
    throw std::invalid_argument("soft_statistics: PMF width != constellation size");
  CVec mean(nb);
  RVec var(nb);
  for (int n = 0; n < nb; ++n) {
    cplx m(0, 0);
    for (int i = 0; i < c.num_points(); ++i)
      m += post.symbol_pmfs(n, i) * c.points[i];
    double v = 0.0;
    for (int i = 0; i < c.num_points(); ++i)
      v += post.symbol_pmfs(n, i) * std::norm(c.points[i] - m);
    mean(n) = m;
    var(n) = v;
  }
  return {mean, var};
}

}  // namespace oddm
