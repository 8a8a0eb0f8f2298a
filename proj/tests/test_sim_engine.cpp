#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "oddm/sim_engine.hpp"

using namespace oddm;

namespace {

SimConfig small_cfg() {
  SimConfig cfg;
  cfg.m_delay = 8;
  cfg.n_doppler = 8;
  cfg.q1 = 2;
  cfg.q2 = 2;
  cfg.rho = 1.0;
  cfg.n_block = 1;
  cfg.detector = "mmse";
  cfg.taps = 3;
  cfg.ue_speed_kmh = 500.0;
  cfg.min_frame_errors = 25;
  cfg.max_frames = 4000;
  cfg.seed = 5;
  return cfg;
}

bool same_counts(const PointResult& a, const PointResult& b) {
  return a.ebn0_db == b.ebn0_db && a.frames == b.frames &&
         a.bit_errors == b.bit_errors && a.frame_errors == b.frame_errors &&
         a.ber == b.ber && a.fer == b.fer &&
         a.hit_max_frames == b.hit_max_frames;
}

// CSV with the wall-time column blanked; everything else must be stable.
std::string strip_seconds(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    auto pos = line.rfind(',');
    out += line.substr(0, pos) + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("Eb/N0 to SNR mapping follows the spectral efficiency") {
  CHECK(ebn0_to_snr(0.0, 2.0) == doctest::Approx(2.0));
  CHECK(ebn0_to_snr(7.0, 1.0) == doctest::Approx(std::pow(10.0, 0.7)));
  CHECK(ebn0_to_snr(10.0, 2.5) == doctest::Approx(25.0));
}

TEST_CASE("config validation rejects malformed sweeps") {
  SimConfig cfg = small_cfg();
  cfg.ebn0_grid_db = {};
  CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
  cfg = small_cfg();
  cfg.min_frame_errors = 0;
  CHECK_THROWS_AS(run_point(cfg, 10.0), ConfigError);
  cfg = small_cfg();
  cfg.detector = "zf";
  CHECK_THROWS_AS(run_point(cfg, 10.0), ConfigError);
  cfg = small_cfg();
  cfg.scheme = "im";
  cfg.detector = "sicmmse";  // the IM baseline only ships with MMSE
  CHECK_THROWS_AS(run_point(cfg, 10.0), ConfigError);
}

TEST_CASE("noise-free point reports zero BER and flags the frame cap") {
  SimConfig cfg = small_cfg();
  cfg.m_delay = 4;
  cfg.n_doppler = 4;
  cfg.taps = 1;
  cfg.max_frames = 40;
  PointResult p = run_point(cfg, 60.0);
  CHECK(p.frames == 40);
  CHECK(p.bit_errors == 0);
  CHECK(p.frame_errors == 0);
  CHECK(p.ber == 0.0);
  CHECK(p.fer == 0.0);
  CHECK(p.hit_max_frames);
}

TEST_CASE("stop rule collects the requested frame errors") {
  SimConfig cfg = small_cfg();
  PointResult p = run_point(cfg, 2.0);
  CHECK(p.frame_errors >= cfg.min_frame_errors);
  CHECK_FALSE(p.hit_max_frames);
  CHECK(p.frames <= cfg.max_frames);
  CHECK(p.ber ==
        doctest::Approx(static_cast<double>(p.bit_errors) /
                        (static_cast<double>(p.frames) * frame_bits(cfg)))
            .epsilon(1e-15));
  CHECK(p.fer == doctest::Approx(static_cast<double>(p.frame_errors) /
                                 static_cast<double>(p.frames))
                     .epsilon(1e-15));
}

TEST_CASE("identical seeds reproduce identical counts") {
  SimConfig cfg = small_cfg();
  PointResult a = run_point(cfg, 6.0);
  PointResult b = run_point(cfg, 6.0);
  CHECK(same_counts(a, b));
}

TEST_CASE("worker count never changes the outcome") {
  SimConfig cfg = small_cfg();
  cfg.threads = 1;
  PointResult a = run_point(cfg, 6.0);
  cfg.threads = 3;
  PointResult b = run_point(cfg, 6.0);
  cfg.threads = 7;
  PointResult c = run_point(cfg, 6.0);
  CHECK(same_counts(a, b));
  CHECK(same_counts(a, c));
}

TEST_CASE("half grids merge into the full grid") {
  SimConfig cfg = small_cfg();
  cfg.ebn0_grid_db = {4.0, 10.0};
  SimResult full = run_sweep(cfg);
  REQUIRE(full.points.size() == 2);

  cfg.ebn0_grid_db = {4.0};
  SimResult lo = run_sweep(cfg);
  cfg.ebn0_grid_db = {10.0};
  SimResult hi = run_sweep(cfg);
  CHECK(same_counts(full.points[0], lo.points[0]));
  CHECK(same_counts(full.points[1], hi.points[0]));
}

TEST_CASE("mocked detector error accounting is exact") {
  SimConfig cfg = small_cfg();
  cfg.max_frames = 7;
  cfg.min_frame_errors = 1000;  // cap decides
  auto flip3 = [&](const CVec&, const ChannelRealization&, long frame) {
    Bits b = frame_payload(cfg, 9.0, frame);
    for (int i : {0, 2, 5}) b[i] ^= 1;
    return b;
  };
  PointResult p = run_point_with(cfg, 9.0, flip3);
  CHECK(p.frames == 7);
  CHECK(p.bit_errors == 3 * 7);
  CHECK(p.frame_errors == 7);

  auto echo = [&](const CVec&, const ChannelRealization&, long frame) {
    return frame_payload(cfg, 9.0, frame);
  };
  PointResult q = run_point_with(cfg, 9.0, echo);
  CHECK(q.bit_errors == 0);
  CHECK(q.frame_errors == 0);
}

TEST_CASE("payload derivation is deterministic and frame-distinct") {
  SimConfig cfg = small_cfg();
  Bits a = frame_payload(cfg, 3.0, 17);
  Bits b = frame_payload(cfg, 3.0, 17);
  CHECK(a == b);
  CHECK(static_cast<long>(a.size()) == frame_bits(cfg));
  CHECK(frame_payload(cfg, 3.0, 18) != a);
  CHECK(frame_payload(cfg, 4.0, 17) != a);
}

TEST_CASE("BER falls with Eb/N0 on a small MMSE sweep") {
  SimConfig cfg = small_cfg();
  cfg.ebn0_grid_db = {2.0, 8.0, 14.0};
  SimResult r = run_sweep(cfg);
  REQUIRE(r.points.size() == 3);
  CHECK(r.points[0].ber > r.points[1].ber);
  CHECK(r.points[1].ber > r.points[2].ber);
}

TEST_CASE("IM baseline scheme runs end to end") {
  SimConfig cfg = small_cfg();
  cfg.scheme = "im";
  cfg.im_qam = 4;
  cfg.im_nb = 4;
  cfg.im_kb = 3;
  cfg.min_frame_errors = 10;
  cfg.max_frames = 400;
  // 16 blocks of floor(log2 C(4,3)) = 2 index bits + 3 QAM symbols.
  CHECK(frame_bits(cfg) == 8 * (8 / 4) * (2 + 3 * 2));
  PointResult p = run_point(cfg, 8.0);
  CHECK(p.frames >= 1);
  CHECK(p.frame_errors >= 10);
}

TEST_CASE("CSV rows are byte-stable apart from wall time") {
  SimConfig cfg = small_cfg();
  cfg.ebn0_grid_db = {4.0, 10.0};
  std::ostringstream a, b;
  write_csv(run_sweep(cfg), a);
  write_csv(run_sweep(cfg), b);
  CHECK(strip_seconds(a.str()) == strip_seconds(b.str()));
  std::istringstream in(a.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "ebn0_db,frames,bit_errors,frame_errors,ber,fer,seconds");
}

TEST_CASE("metadata sidecar names the run") {
  SimConfig cfg = small_cfg();
  cfg.ebn0_grid_db = {4.0};
  SimResult r = run_sweep(cfg);
  std::ostringstream meta;
  write_meta(cfg, r, meta);
  std::string s = meta.str();
  CHECK(s.find("seed: 5") != std::string::npos);
  CHECK(s.find("config_hash:") != std::string::npos);
  CHECK(s.find("version:") != std::string::npos);
  CHECK(s.find("detector: mmse") != std::string::npos);
}
