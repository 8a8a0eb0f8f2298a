#include "oddm/channel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "oddm/rng.hpp"

namespace oddm {

int ChannelRealization::l_max() const {
  int l = 0;
  for (const auto& p : paths) l = std::max(l, p.delay_idx);
  return l;
}

std::vector<int> ChannelRealization::delay_set() const {
  std::vector<int> ls;
  for (const auto& p : paths) ls.push_back(p.delay_idx);
  std::sort(ls.begin(), ls.end());
  ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
  return ls;
}

void ChannelRealization::set_snr(double gamma) {
  if (!(gamma > 0)) throw std::invalid_argument("set_snr: gamma must be positive");
  snr = gamma;
  noise_var = 1.0 / gamma;  // E_s == 1 throughout
}

namespace {

// 3GPP Extended Vehicular A power delay profile.
constexpr double kEvaDelayNs[] = {0, 30, 150, 310, 370, 710, 1090, 1730, 2510};
constexpr double kEvaPowerDb[] = {0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9};

}  // namespace

TapProfile resolve_profile(const ChannelModel& model, int m_delay) {
  TapProfile prof;
  if (model.profile == Profile::Uniform) {
    if (model.taps < 1 || model.taps > m_delay)
      throw ConfigError("uniform profile: need 1 <= taps <= M");
    for (int l = 0; l < model.taps; ++l) {
      prof.delays.push_back(l);
      prof.powers.push_back(1.0 / model.taps);
    }
    return prof;
  }
  // EVA: quantize each tap to the nearest sample l = round(τ·M·Δf), merge
  // taps landing on one delay, normalise total power to 1.
  std::map<int, double> merged;
  double total = 0.0;
  for (size_t i = 0; i < std::size(kEvaDelayNs); ++i) {
    double lin = std::pow(10.0, kEvaPowerDb[i] / 10.0);
    int l = static_cast<int>(
        std::lround(kEvaDelayNs[i] * 1e-9 * m_delay * model.subcarrier_hz));
    if (l >= m_delay)
      throw ConfigError("EVA profile: delay spread exceeds the frame's delay span");
    merged[l] += lin;
    total += lin;
  }
  for (const auto& [l, p] : merged) {
    prof.delays.push_back(l);
    prof.powers.push_back(p / total);
  }
  return prof;
}

ChannelRealization gen_channel(const ChannelModel& model, int m_delay,
                               int n_doppler, std::mt19937_64& rng) {
  TapProfile prof = resolve_profile(model, m_delay);
  const double nu_max = model.ue_speed_mps / kSpeedOfLight * model.carrier_hz;
  const double nt = n_doppler / model.subcarrier_hz;  // N·T

  ChannelRealization ch;
  ch.m_delay = m_delay;
  ch.n_doppler = n_doppler;
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  for (size_t i = 0; i < prof.delays.size(); ++i) {
    ChannelPath p;
    p.delay_idx = prof.delays[i];
    double nu = nu_max * std::cos(angle(rng));
    p.doppler_idx = static_cast<int>(std::lround(nu * nt));
    p.gain = crandn(rng, prof.powers[i]);
    ch.paths.push_back(p);
  }
  return ch;
}

GMatrix::GMatrix(const ChannelRealization& ch)
    : mn_(ch.mn()), m_delay_(ch.m_delay) {
  if (mn_ <= 0) throw std::invalid_argument("GMatrix: empty grid");
  delays_ = ch.delay_set();
  l_max_ = delays_.empty() ? 0 : delays_.back();
  if (l_max_ >= m_delay_)
    throw std::invalid_argument("GMatrix: l_max must be < M");
  delay_pos_.assign(l_max_ + 1, -1);
  for (size_t i = 0; i < delays_.size(); ++i) delay_pos_[delays_[i]] = static_cast<int>(i);
  taps_.resize(delays_.size());
  for (const auto& p : ch.paths)
    taps_[delay_pos_[p.delay_idx]].emplace_back(p.doppler_idx, p.gain);
}

cplx GMatrix::coeff(int l, int t) const {
  if (l < 0 || l > l_max_ || delay_pos_[l] < 0) return {0, 0};
  cplx acc(0, 0);
  for (const auto& [k, h] : taps_[delay_pos_[l]])
    acc += h * std::exp(cplx(0, 2.0 * kPi * k * (t - l) / mn_));
  return acc;
}

cplx GMatrix::entry(int q, int col) const {
  int l = ((q - col) % mn_ + mn_) % mn_;
  if (l > l_max_) return {0, 0};
  return coeff(l, q);
}

CVec GMatrix::apply(const CVec& s) const {
  if (s.size() != mn_) throw std::invalid_argument("GMatrix::apply: size mismatch");
  CVec r = CVec::Zero(mn_);
  for (int q = 0; q < mn_; ++q) {
    cplx acc(0, 0);
    for (int l : delays_) acc += coeff(l, q) * s((q - l + mn_) % mn_);
    r(q) = acc;
  }
  return r;
}

CVec GMatrix::apply_adjoint(const CVec& r) const {
  if (r.size() != mn_) throw std::invalid_argument("GMatrix::apply_adjoint: size mismatch");
  CVec s = CVec::Zero(mn_);
  for (int q = 0; q < mn_; ++q)
    for (int l : delays_)
      s((q - l + mn_) % mn_) += std::conj(coeff(l, q)) * r(q);
  return s;
}

Eigen::SparseMatrix<cplx> GMatrix::sparse() const {
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<size_t>(mn_) * delays_.size());
  for (int q = 0; q < mn_; ++q)
    for (int l : delays_)
      trip.emplace_back(q, (q - l + mn_) % mn_, coeff(l, q));
  Eigen::SparseMatrix<cplx> g(mn_, mn_);
  g.setFromTriplets(trip.begin(), trip.end());
  return g;
}

CMat GMatrix::dense() const {
  if (mn_ > 4096)
    throw std::invalid_argument("GMatrix::dense: grid too large, use sparse()");
  CMat g = CMat::Zero(mn_, mn_);
  for (int q = 0; q < mn_; ++q)
    for (int l : delays_) g(q, (q - l + mn_) % mn_) = coeff(l, q);
  return g;
}

const CMat& GMatrix::tap_table() const {
  if (table_.size() == 0) {
    table_.resize(static_cast<Eigen::Index>(delays_.size()), mn_);
    for (size_t i = 0; i < delays_.size(); ++i)
      for (int t = 0; t < mn_; ++t) table_(i, t) = coeff(delays_[i], t);
  }
  return table_;
}

CMat build_subchannel(const GMatrix& g, int q) {
  const int lmax = g.l_max();
  const int mn = g.mn();
  CMat gq = CMat::Zero(lmax + 1, 2 * lmax + 1);
  for (int l = 0; l <= lmax; ++l)
    for (int c = 0; c < 2 * lmax + 1; ++c) {
      int dl = c - lmax;
      gq(l, c) = g.coeff(l - dl, (q + l) % mn);
    }
  return gq;
}

CVec apply_channel(const ChannelRealization& ch, const CVec& s,
                   std::mt19937_64& rng) {
  GMatrix g(ch);
  CVec r = g.apply(s);
  if (ch.noise_var > 0.0)
    for (int q = 0; q < r.size(); ++q) r(q) += crandn(rng, ch.noise_var);
  return r;
}

CMat apply_channel_dd(const ChannelRealization& ch, const CMat& x) {
  const int m = ch.m_delay, n = ch.n_doppler;
  if (x.rows() != m || x.cols() != n)
    throw std::invalid_argument("apply_channel_dd: grid size mismatch");
  const int mn = m * n;
  CMat y = CMat::Zero(m, n);
  for (const auto& p : ch.paths) {
    for (int mm = 0; mm < m; ++mm) {
      cplx ph = p.gain * std::exp(cplx(
          0, 2.0 * kPi * p.doppler_idx * (mm - p.delay_idx) / mn));
      int src_m = ((mm - p.delay_idx) % m + m) % m;
      for (int nn = 0; nn < n; ++nn) {
        int src_n = ((nn - p.doppler_idx) % n + n) % n;
        cplx alpha(1, 0);
        if (mm < p.delay_idx)
          alpha = std::exp(cplx(0, -2.0 * kPi * src_n / n));
        y(mm, nn) += ph * alpha * x(src_m, src_n);
      }
    }
  }
  return y;
}

CMat build_phi(const ChannelRealization& geometry, const CMat& x) {
  const int m = geometry.m_delay, n = geometry.n_doppler;
  if (x.rows() != m || x.cols() != n)
    throw std::invalid_argument("build_phi: grid size mismatch");
  const int mn = m * n;
  CMat phi = CMat::Zero(mn, static_cast<Eigen::Index>(geometry.paths.size()));
  for (size_t pi = 0; pi < geometry.paths.size(); ++pi) {
    const auto& p = geometry.paths[pi];
    for (int mm = 0; mm < m; ++mm) {
      cplx ph = std::exp(cplx(
          0, 2.0 * kPi * p.doppler_idx * (mm - p.delay_idx) / mn));
      int src_m = ((mm - p.delay_idx) % m + m) % m;
      for (int nn = 0; nn < n; ++nn) {
        int src_n = ((nn - p.doppler_idx) % n + n) % n;
        cplx alpha(1, 0);
        if (mm < p.delay_idx)
          alpha = std::exp(cplx(0, -2.0 * kPi * src_n / n));
        phi(nn * m + mm, pi) = ph * alpha * x(src_m, src_n);
      }
    }
  }
  return phi;
}

void dump_channel(const ChannelRealization& ch, std::ostream& os) {
  os.precision(17);
  os << "# l k re im\n";
  for (const auto& p : ch.paths)
    os << p.delay_idx << ' ' << p.doppler_idx << ' ' << p.gain.real() << ' '
       << p.gain.imag() << "\n";
}

ChannelRealization load_channel(std::istream& is, int m_delay, int n_doppler) {
  ChannelRealization ch;
  ch.m_delay = m_delay;
  ch.n_doppler = n_doppler;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ChannelPath p;
    double re, im;
    if (!(ls >> p.delay_idx >> p.doppler_idx >> re >> im))
      throw ConfigError("load_channel: malformed row: " + line);
    p.gain = cplx(re, im);
    ch.paths.push_back(p);
  }
  return ch;
}

}  // namespace oddm
