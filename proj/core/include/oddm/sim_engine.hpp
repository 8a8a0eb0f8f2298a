#pragma once

#include <functional>
#include <iosfwd>
#include <string>

#include "oddm/detectors.hpp"

namespace oddm {

inline constexpr const char* kVersion = "0.1.0";

// One Monte Carlo experiment: frame scheme, detector, channel ensemble,
// Eb/N0 grid, and stopping rule. Plain data so runs serialize and hash.
struct SimConfig {
  int m_delay = 32;
  int n_doppler = 32;

  std::string scheme = "hmim";  // hmim | im
  int q1 = 2;                   // hmim layers
  int q2 = 2;
  double rho = 1.0;
  int n_block = 1;
  int im_qam = 4;  // im baseline
  int im_nb = 4;
  int im_kb = 3;

  std::string detector = "mmse";  // ml | mmse | sicmmse
  int sic_n_ite = 10;
  double sic_exit_tol = 1e-6;
  long ml_max_hypotheses = 1L << 20;

  Profile profile = Profile::Uniform;
  int taps = 5;
  double ue_speed_kmh = 500.0;
  double carrier_hz = 5.0e9;
  double subcarrier_hz = 15.0e3;

  std::vector<double> ebn0_grid_db;
  long min_frame_errors = 100;
  long max_frames = 100000;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct PointResult {
  double ebn0_db = 0.0;
  long frames = 0;
  long bit_errors = 0;
  long frame_errors = 0;
  double ber = 0.0;
  double fer = 0.0;
  double seconds = 0.0;
  bool hit_max_frames = false;
};

struct SimResult {
  std::vector<PointResult> points;
};

// gamma = SE * 10^(EbN0/10); E_s == 1 so sigma_z^2 = 1/gamma. CP overhead
// is not charged to Eb (the common convention; switchable only here).
double ebn0_to_snr(double ebn0_db, double se);

double spectral_efficiency(const SimConfig& cfg);
long frame_bits(const SimConfig& cfg);

// The payload stream is a public derivation so tools and tests can replay
// any frame: stream (seed, ebn0, frame, role) with a payload-only role.
Bits frame_payload(const SimConfig& cfg, double ebn0_db, long frame);

// Detector hook for run_point_with; the default dispatch covers the
// configured detectors. Receives the frame index for replay-style mocks.
using FrameDetector =
    std::function<Bits(const CVec& r, const ChannelRealization& ch, long frame)>;

// Runs frames in fixed-size chunks (parallel inside a chunk) until the stop
// rule fires: cumulative frame errors >= min_frame_errors at a chunk
// boundary, or max_frames. Chunked checking keeps results identical across
// worker counts. Fully deterministic given (config, seed).
PointResult run_point(const SimConfig& cfg, double ebn0_db);
PointResult run_point_with(const SimConfig& cfg, double ebn0_db,
                           const FrameDetector& detect);

// All grid points in order; each point is independently seeded by its
// Eb/N0 value, so sub-grids merge into the full grid unchanged.
SimResult run_sweep(const SimConfig& cfg);

// Canonical key=value serialization; the hash feeds the metadata sidecar.
std::string serialize_config(const SimConfig& cfg);
std::uint64_t config_hash(const SimConfig& cfg);

// ebn0_db,frames,bit_errors,frame_errors,ber,fer,seconds
void write_csv(const SimResult& result, std::ostream& os);
void write_meta(const SimConfig& cfg, const SimResult& result,
                std::ostream& os);

}  // namespace oddm
