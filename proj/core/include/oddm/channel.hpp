#pragma once

#include <iosfwd>
#include <limits>
#include <random>

#include <Eigen/SparseCore>

#include "oddm/types.hpp"

namespace oddm {

// One on-grid propagation path: delay l_p samples (of T/M), Doppler k_p bins
// (of 1/(NT)), complex gain h_p.
struct ChannelPath {
  cplx gain;
  int delay_idx = 0;    // l_p >= 0
  int doppler_idx = 0;  // k_p, signed
};

struct ChannelRealization {
  std::vector<ChannelPath> paths;
  int m_delay = 0;
  int n_doppler = 0;
  double noise_var = 0.0;  // σ_z²; 0 = noiseless
  double snr = std::numeric_limits<double>::infinity();  // γ = E_s/σ_z²

  int mn() const { return m_delay * n_doppler; }
  int l_max() const;
  std::vector<int> delay_set() const;  // sorted unique delays ℒ
  void set_snr(double gamma);          // noise_var = 1/γ (E_s == 1)
};

enum class Profile { Uniform, Eva };

struct ChannelModel {
  Profile profile = Profile::Uniform;
  int taps = 5;                  // P for the uniform profile
  double ue_speed_mps = 0.0;     // converted from km/h by the caller
  double carrier_hz = 5.0e9;
  double subcarrier_hz = 15.0e3;
};

// Tap powers and delays before gains are drawn: uniform = P consecutive taps
// at 1/P each; EVA = the standard profile quantized to the T/M grid, taps
// landing on one delay merged, total power normalised to 1.
struct TapProfile {
  std::vector<int> delays;
  std::vector<double> powers;
};
TapProfile resolve_profile(const ChannelModel& model, int m_delay);

// Draws one block-fading realization: per tap, a Jakes Doppler
// ν = ν_max·cos(θ), θ uniform, quantized to k = round(ν·N·T), then a
// CN(0, power) gain. ν_max = (speed/c)·carrier.
ChannelRealization gen_channel(const ChannelModel& model, int m_delay,
                               int n_doppler, std::mt19937_64& rng);

// Time-domain operator r = G s (+ z). Row q has one nonzero per distinct
// delay, at column [q-l] mod MN:
//   G[q, [q-l]] = Σ_{k ∈ K_l} h[l,k] · exp(j2πk(q-l)/MN).
class GMatrix {
 public:
  explicit GMatrix(const ChannelRealization& ch);

  // Coefficient multiplying s[[t-l] mod MN] in r[t]; 0 when l ∉ ℒ.
  cplx coeff(int l, int t) const;
  cplx entry(int q, int col) const;  // dense element view

  CVec apply(const CVec& s) const;          // G·s, O(MN·|ℒ|)
  CVec apply_adjoint(const CVec& r) const;  // G^H·r
  Eigen::SparseMatrix<cplx> sparse() const;
  CMat dense() const;  // MN ≤ 4096 only (tests / small solves)

  // T(i, t) = coeff(delays[i], t), precomputed for the hot detector paths.
  const CMat& tap_table() const;

  int mn() const { return mn_; }
  int l_max() const { return l_max_; }
  const std::vector<int>& delays() const { return delays_; }

 private:
  int mn_ = 0, m_delay_ = 0, l_max_ = 0;
  std::vector<int> delays_;                                // ℒ sorted
  std::vector<int> delay_pos_;                             // l -> index in ℒ, -1 if absent
  std::vector<std::vector<std::pair<int, cplx>>> taps_;    // per ℒ entry: (k, h)
  mutable CMat table_;  // lazily filled tap table
};

// Per-symbol window of Eq. (5): rows l = 0..l_max observe r[[q+l]], columns
// Δl = -l_max..l_max weight s[[q+Δl]]; entry (l, Δl) = coeff(l-Δl, [q+l]).
// The middle column is the spreading vector of s[q].
CMat build_subchannel(const GMatrix& g, int q);

// r = G s + z with z ~ CN(0, σ_z² I); σ_z² taken from ch.noise_var.
CVec apply_channel(const ChannelRealization& ch, const CVec& s,
                   std::mt19937_64& rng);

// Noiseless DD-domain operator:
//   Y[m,n] = Σ_p h_p α_p(m,n) e^{j2π(m-l_p)k_p/MN} X[[m-l_p]_M, [n-k_p]_N]
// with α_p = 1 for m ≥ l_p and e^{-j2π[n-k_p]_N/N} otherwise (CP rotation).
CMat apply_channel_dd(const ChannelRealization& ch, const CMat& x);

// Column p of Φ(X) holds the factor multiplying h_p in vec(Y), row q = nM+m;
// Φ(X)·gains == vec(apply_channel_dd(X)) for any gains.
CMat build_phi(const ChannelRealization& geometry, const CMat& x);

// Plain-text path list "l k re(h) im(h)" for regression cases.
void dump_channel(const ChannelRealization& ch, std::ostream& os);
ChannelRealization load_channel(std::istream& is, int m_delay, int n_doppler);

}  // namespace oddm
