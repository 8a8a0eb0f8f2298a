#include "oddm/sim_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "oddm/rng.hpp"
#include "oddm/transform.hpp"

namespace oddm {

namespace {

// Stream roles per (seed, ebn0, frame): keep draws independent so any one
// category can be replayed without consuming the others.
enum Role : std::uint64_t { kChannel = 0, kPayload = 1, kNoise = 2 };

// Stop-rule checks happen at these frame-count boundaries regardless of the
// worker count, so parallel runs replay the sequential decision.
constexpr long kChunk = 32;

FrameConfig hmim_config(const SimConfig& cfg) {
  FrameConfig fc;
  fc.m_delay = cfg.m_delay;
  fc.n_doppler = cfg.n_doppler;
  fc.n_block = cfg.n_block;
  fc.constellation = build_hqc(cfg.q1, cfg.q2, cfg.rho);
  fc.validate();
  return fc;
}

ImBaselineConfig im_config(const SimConfig& cfg) {
  return make_im_config(cfg.im_nb, cfg.im_kb, cfg.im_qam);
}

ChannelModel channel_model(const SimConfig& cfg) {
  ChannelModel model;
  model.profile = cfg.profile;
  model.taps = cfg.taps;
  model.ue_speed_mps = cfg.ue_speed_kmh / 3.6;
  model.carrier_hz = cfg.carrier_hz;
  model.subcarrier_hz = cfg.subcarrier_hz;
  return model;
}

FrameDetector default_detector(const SimConfig& cfg) {
  if (cfg.scheme == "im") {
    ImBaselineConfig imc = im_config(cfg);
    int m = cfg.m_delay, n = cfg.n_doppler;
    return [imc, m, n](const CVec& r, const ChannelRealization& ch, long) {
      return detect_mmse_im(r, ch, m, n, imc).bits;
    };
  }
  FrameConfig fc = hmim_config(cfg);
  if (cfg.detector == "ml") {
    long cap = cfg.ml_max_hypotheses;
    return [fc, cap](const CVec& r, const ChannelRealization& ch, long) {
      CMat y = time_to_dd(r, fc.m_delay, fc.n_doppler);
      return detect_ml(y, ch, fc, cap).bits;
    };
  }
  if (cfg.detector == "mmse") {
    return [fc](const CVec& r, const ChannelRealization& ch, long) {
      return detect_mmse_blockwise(r, ch, fc).bits;
    };
  }
  SicOptions opt;
  opt.n_ite = cfg.sic_n_ite;
  opt.exit_tol = cfg.sic_exit_tol;
  return [fc, opt](const CVec& r, const ChannelRealization& ch, long) {
    return detect_sicmmse(r, ch, fc, opt).bits;
  };
}

struct FrameCount {
  long bit_errors = 0;
  bool frame_error = false;
};

FrameCount run_frame(const SimConfig& cfg, const ChannelModel& model,
                     double ebn0_db, double gamma, long frame,
                     const FrameDetector& detect) {
  auto ch_rng = frame_rng(cfg.seed, ebn0_db, frame, kChannel);
  ChannelRealization ch =
      gen_channel(model, cfg.m_delay, cfg.n_doppler, ch_rng);
  ch.set_snr(gamma);

  Bits payload = frame_payload(cfg, ebn0_db, frame);
  CMat x = cfg.scheme == "im"
               ? map_im_frame(payload, cfg.m_delay, cfg.n_doppler,
                              im_config(cfg))
               : map_frame(payload, hmim_config(cfg)).symbols;
  CVec s = dd_to_time(x);
  GMatrix g(ch);
  CVec r = g.apply(s);
  auto nz_rng = frame_rng(cfg.seed, ebn0_db, frame, kNoise);
  for (long i = 0; i < r.size(); ++i) r[i] += crandn(nz_rng, ch.noise_var);

  Bits decided = detect(r, ch, frame);
  FrameCount out;
  for (size_t i = 0; i < payload.size(); ++i)
    out.bit_errors += decided[i] != payload[i];
  out.frame_error = out.bit_errors > 0;
  return out;
}

}  // namespace

void SimConfig::validate() const {
  if (scheme != "hmim" && scheme != "im")
    throw ConfigError("sim: unknown scheme '" + scheme + "'");
  if (detector != "ml" && detector != "mmse" && detector != "sicmmse")
    throw ConfigError("sim: unknown detector '" + detector + "'");
  if (scheme == "im" && detector != "mmse")
    throw ConfigError("sim: the im baseline only supports the mmse detector");
  if (min_frame_errors < 1)
    throw ConfigError("sim: min_frame_errors must be >= 1");
  if (max_frames < 1) throw ConfigError("sim: max_frames must be >= 1");
  if (threads < 1) throw ConfigError("sim: threads must be >= 1");
  if (sic_n_ite < 1) throw ConfigError("sim: sic_n_ite must be >= 1");
  // Frame geometry errors surface from the scheme config itself.
  if (scheme == "hmim")
    hmim_config(*this);
  else
    im_config(*this).validate();
}

double ebn0_to_snr(double ebn0_db, double se) {
  return se * std::pow(10.0, ebn0_db / 10.0);
}

double spectral_efficiency(const SimConfig& cfg) {
  return cfg.scheme == "im" ? im_config(cfg).spectral_efficiency()
                            : hmim_config(cfg).spectral_efficiency();
}

long frame_bits(const SimConfig& cfg) {
  return cfg.scheme == "im"
             ? im_frame_bits(cfg.m_delay, cfg.n_doppler, im_config(cfg))
             : hmim_config(cfg).total_bits();
}

Bits frame_payload(const SimConfig& cfg, double ebn0_db, long frame) {
  auto rng = frame_rng(cfg.seed, ebn0_db, frame, kPayload);
  Bits bits;
  random_bits(bits, static_cast<size_t>(frame_bits(cfg)), rng);
  return bits;
}

PointResult run_point_with(const SimConfig& cfg, double ebn0_db,
                           const FrameDetector& detect) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const double gamma = ebn0_to_snr(ebn0_db, spectral_efficiency(cfg));
  const ChannelModel model = channel_model(cfg);
  const long bits_per_frame = frame_bits(cfg);

  PointResult p;
  p.ebn0_db = ebn0_db;
  try {
    while (p.frames < cfg.max_frames) {
      const long begin = p.frames;
      const long end = std::min(cfg.max_frames, begin + kChunk);
      std::vector<FrameCount> counts(end - begin);
      const int workers =
          static_cast<int>(std::min<long>(cfg.threads, end - begin));
      if (workers <= 1) {
        for (long f = begin; f < end; ++f)
          counts[f - begin] = run_frame(cfg, model, ebn0_db, gamma, f, detect);
      } else {
        std::vector<std::thread> pool;
        std::exception_ptr fail;
        std::mutex fail_mu;
        for (int w = 0; w < workers; ++w)
          pool.emplace_back([&, w] {
            try {
              for (long f = begin + w; f < end; f += workers)
                counts[f - begin] =
                    run_frame(cfg, model, ebn0_db, gamma, f, detect);
            } catch (...) {
              std::lock_guard<std::mutex> lock(fail_mu);
              if (!fail) fail = std::current_exception();
            }
          });
        for (auto& t : pool) t.join();
        if (fail) std::rethrow_exception(fail);
      }
      for (const FrameCount& c : counts) {
        p.bit_errors += c.bit_errors;
        p.frame_errors += c.frame_error;
      }
      p.frames = end;
      if (p.frame_errors >= cfg.min_frame_errors) break;
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("run_point(detector=" + cfg.detector + ", scheme=" +
                      cfg.scheme + ", M=" + std::to_string(cfg.m_delay) +
                      ", N=" + std::to_string(cfg.n_doppler) + "): " +
                      e.what());
  }
  p.hit_max_frames = p.frame_errors < cfg.min_frame_errors;
  p.ber = static_cast<double>(p.bit_errors) /
          (static_cast<double>(p.frames) * static_cast<double>(bits_per_frame));
  p.fer =
      static_cast<double>(p.frame_errors) / static_cast<double>(p.frames);
  p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
  return p;
}

PointResult run_point(const SimConfig& cfg, double ebn0_db) {
  return run_point_with(cfg, ebn0_db, default_detector(cfg));
}

SimResult run_sweep(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.ebn0_grid_db.empty()) throw ConfigError("sim: empty Eb/N0 grid");
  SimResult r;
  const FrameDetector detect = default_detector(cfg);
  for (double db : cfg.ebn0_grid_db)
    r.points.push_back(run_point_with(cfg, db, detect));
  return r;
}

std::string serialize_config(const SimConfig& cfg) {
  std::ostringstream os;
  os << "m_delay=" << cfg.m_delay << "\nn_doppler=" << cfg.n_doppler
     << "\nscheme=" << cfg.scheme << "\nq1=" << cfg.q1 << "\nq2=" << cfg.q2
     << "\nrho=" << cfg.rho << "\nn_block=" << cfg.n_block
     << "\nim_qam=" << cfg.im_qam << "\nim_nb=" << cfg.im_nb
     << "\nim_kb=" << cfg.im_kb << "\ndetector=" << cfg.detector
     << "\nsic_n_ite=" << cfg.sic_n_ite
     << "\nsic_exit_tol=" << cfg.sic_exit_tol
     << "\nml_max_hypotheses=" << cfg.ml_max_hypotheses
     << "\nprofile=" << (cfg.profile == Profile::Eva ? "eva" : "uniform")
     << "\ntaps=" << cfg.taps << "\nue_speed_kmh=" << cfg.ue_speed_kmh
     << "\ncarrier_hz=" << cfg.carrier_hz
     << "\nsubcarrier_hz=" << cfg.subcarrier_hz << "\nebn0_grid_db=";
  for (size_t i = 0; i < cfg.ebn0_grid_db.size(); ++i)
    os << (i ? "," : "") << cfg.ebn0_grid_db[i];
  os << "\nmin_frame_errors=" << cfg.min_frame_errors
     << "\nmax_frames=" << cfg.max_frames << "\nseed=" << cfg.seed << "\n";
  return os.str();
}

std::uint64_t config_hash(const SimConfig& cfg) {
  const std::string s = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void write_csv(const SimResult& result, std::ostream& os) {
  os << "ebn0_db,frames,bit_errors,frame_errors,ber,fer,seconds\n";
  char row[192];
  for (const PointResult& p : result.points) {
    std::snprintf(row, sizeof(row), "%.6g,%ld,%ld,%ld,%.9e,%.9e,%.3f\n",
                  p.ebn0_db, p.frames, p.bit_errors, p.frame_errors, p.ber,
                  p.fer, p.seconds);
    os << row;
  }
}

void write_meta(const SimConfig& cfg, const SimResult& result,
                std::ostream& os) {
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  os << "version: " << kVersion << "\nconfig_hash: " << hash
     << "\nseed: " << cfg.seed << "\nscheme: " << cfg.scheme
     << "\ndetector: " << cfg.detector
     << "\nspectral_efficiency: " << spectral_efficiency(cfg)
     << "\nframe_bits: " << frame_bits(cfg) << "\nconfig:\n";
  std::istringstream fields(serialize_config(cfg));
  std::string line;
  while (std::getline(fields, line)) os << "  " << line << "\n";
  os << "points:\n";
  for (const PointResult& p : result.points)
    os << "  ebn0_db " << p.ebn0_db << ": frames " << p.frames
       << ", frame_errors " << p.frame_errors
       << (p.hit_max_frames ? " (hit max frames)" : "") << "\n";
}

}  // namespace oddm
