#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "oddm/ber_analysis.hpp"
#include "oddm/channel.hpp"
#include "oddm/hqc.hpp"
#include "oddm/map_estimator.hpp"
#include "oddm/rng.hpp"
#include "oddm/transform.hpp"

namespace oddm {

namespace {

FrameConfig frame_config_of(const SimConfig& c) {
  FrameConfig fc;
  fc.m_delay = c.m_delay;
  fc.n_doppler = c.n_doppler;
  fc.n_block = c.n_block;
  fc.constellation = build_hqc(c.q1, c.q2, c.rho);
  return fc;
}

ChannelModel channel_model_of(const SimConfig& c) {
  ChannelModel m;
  m.profile = c.profile;
  m.taps = c.taps;
  m.ue_speed_mps = c.ue_speed_kmh / 3.6;
  m.carrier_hz = c.carrier_hz;
  m.subcarrier_hz = c.subcarrier_hz;
  return m;
}

// Closed-form BER averaged over the same channel draws the simulation uses
// for its first `draws` frames at this grid point.
double analysis_ber(const SimConfig& c, double ebn0_db, int draws) {
  if (c.scheme != "hmim")
    throw ConfigError("analysis: closed-form BER needs the hmim scheme");
  const FrameConfig fc = frame_config_of(c);
  const ChannelModel model = channel_model_of(c);
  const double gamma = ebn0_to_snr(ebn0_db, fc.spectral_efficiency());
  double sum = 0.0;
  for (int d = 0; d < draws; ++d) {
    auto rng = frame_rng(c.seed, ebn0_db, d, 0);
    sum += average_ber(fc, gen_channel(model, c.m_delay, c.n_doppler, rng),
                       gamma);
  }
  return sum / draws;
}

void append_row(std::string& out, const char* label, const PointResult& p,
                const double* analysis) {
  char buf[256];
  int n = 0;
  if (label)
    n += std::snprintf(buf + n, sizeof(buf) - n, "%s,", label);
  n += std::snprintf(buf + n, sizeof(buf) - n,
                     "%.6g,%ld,%ld,%ld,%.9e,%.9e,%.3f", p.ebn0_db, p.frames,
                     p.bit_errors, p.frame_errors, p.ber, p.fer, p.seconds);
  if (analysis)
    n += std::snprintf(buf + n, sizeof(buf) - n, ",%.9e", *analysis);
  out += buf;
  out += '\n';
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out.good()) throw std::runtime_error("short write to '" + path + "'");
}

// --- selftest suites ------------------------------------------------------

struct SuiteResult {
  double max_err = 0.0;
  double tol = 0.0;
};

// The block MAP against a from-scratch joint enumeration: for every mode and
// every symbol combination, weight = prior * prod_n exp(-|x~ - point|^2 / v_n),
// then marginalize. Log-domain with a max shift, like the library.
SuiteResult suite_map_vs_enumeration() {
  SuiteResult res{0.0, 1e-10};
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> uni(0.2, 2.0);
  for (auto [q1o, q2o] : {std::pair<int, int>{2, 2}, {4, 4}}) {
    Constellation c = build_hqc(q1o, q2o, 1.2);
    for (int nb : {1, 2, 3}) {
      for (int rep = 0; rep < 60; ++rep) {
        BlockObservation obs;
        obs.constellation = &c;
        obs.x_tilde = CVec(nb);
        obs.noise_vars = RVec(nb);
        for (int i = 0; i < nb; ++i) {
          obs.x_tilde[i] = crandn(rng, 1.0);
          obs.noise_vars[i] = uni(rng);
        }
        RVec prior = RVec::Constant(q2o, 1.0 / q2o);
        if (rep % 3 == 0) {
          for (int k = 0; k < q2o; ++k) prior[k] = uni(rng);
          prior /= prior.sum();
          obs.prior_mode = prior;
        }
        BlockPosterior post = block_posterior(obs);

        const long combos = 1;
        long total = 1;
        for (int i = 0; i < nb; ++i) total *= q1o;
        (void)combos;
        RMat sym = RMat::Zero(nb, q1o * q2o);
        RVec mode = RVec::Zero(q2o);
        std::vector<double> logw(static_cast<size_t>(total) * q2o);
        double shift = -1e300;
        std::vector<int> idx(nb);
        for (int q2 = 0; q2 < q2o; ++q2)
          for (long t = 0; t < total; ++t) {
            long rest = t;
            double lw = std::log(prior[q2]);
            for (int i = 0; i < nb; ++i) {
              idx[i] = static_cast<int>(rest % q1o);
              rest /= q1o;
              lw -= std::norm(obs.x_tilde[i] - c.point(idx[i], q2)) /
                    obs.noise_vars[i];
            }
            logw[static_cast<size_t>(q2) * total + t] = lw;
            shift = std::max(shift, lw);
          }
        double z = 0.0;
        for (int q2 = 0; q2 < q2o; ++q2)
          for (long t = 0; t < total; ++t) {
            double w = std::exp(logw[static_cast<size_t>(q2) * total + t] - shift);
            z += w;
            mode[q2] += w;
            long rest = t;
            for (int i = 0; i < nb; ++i) {
              int q1 = static_cast<int>(rest % q1o);
              rest /= q1o;
              sym(i, q1 * q2o + q2) += w;
            }
          }
        mode /= z;
        sym /= z;
        res.max_err = std::max(res.max_err,
                               (mode - post.mode_pmf).cwiseAbs().maxCoeff());
        res.max_err = std::max(res.max_err,
                               (sym - post.symbol_pmfs).cwiseAbs().maxCoeff());
      }
    }
  }
  return res;
}

// The delay-Doppler input-output relation against the time-domain operator
// conjugated by the frame transforms, on random dense frames (linearity
// makes general-position inputs the stronger probe).
SuiteResult suite_dd_vs_time() {
  SuiteResult res{0.0, 1e-9};
  std::mt19937_64 rng(23456);
  ChannelModel model;
  model.taps = 5;
  model.ue_speed_mps = 500 / 3.6;
  const int m = 8, n = 8;
  for (int rep = 0; rep < 60; ++rep) {
    ChannelRealization ch = gen_channel(model, m, n, rng);
    CMat x(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) x(i, j) = crandn(rng, 1.0);
    CMat direct = apply_channel_dd(ch, x);
    CMat routed = time_to_dd(GMatrix(ch).apply(dd_to_time(x)), m, n);
    res.max_err = std::max(res.max_err, (direct - routed).cwiseAbs().maxCoeff());
  }
  return res;
}

// Every per-symbol window against the full operator: the windowed rows must
// reproduce r = G s exactly around each symbol.
SuiteResult suite_sub_vs_full() {
  SuiteResult res{0.0, 1e-12};
  std::mt19937_64 rng(34567);
  const int m = 8, n = 8;
  for (int taps : {2, 5}) {
    ChannelModel model;
    model.taps = taps;
    model.ue_speed_mps = 500 / 3.6;
    for (int rep = 0; rep < 20; ++rep) {
      ChannelRealization ch = gen_channel(model, m, n, rng);
      GMatrix g(ch);
      const int mn = g.mn(), lmax = g.l_max();
      CVec s(mn);
      for (int i = 0; i < mn; ++i) s[i] = crandn(rng, 1.0);
      CVec r = g.apply(s);
      for (int q = 0; q < mn; ++q) {
        CMat sub = build_subchannel(g, q);
        for (int l = 0; l <= lmax; ++l) {
          cplx acc = 0;
          for (int dl = -lmax; dl <= lmax; ++dl)
            acc += sub(l, dl + lmax) * s[((q + dl) % mn + mn) % mn];
          res.max_err =
              std::max(res.max_err, std::abs(acc - r[(q + l) % mn]));
        }
      }
    }
  }
  return res;
}

// Constellation tables: unit mean energy, base+mode composition, and the
// achieved distance ratio, all recomputed from the emitted points.
SuiteResult suite_constellation(bool corrupt) {
  SuiteResult res{0.0, 1e-9};
  struct Row {
    int q1, q2;
    double rho;
  };
  for (const Row& row : {Row{2, 2, 1.0}, {2, 2, 1.4}, {4, 4, 1.1}, {4, 1, 1.0}}) {
    Constellation c = build_hqc(row.q1, row.q2, row.rho);
    if (corrupt) c.points[0] += cplx(0.05, 0.0);
    double energy = 0.0;
    for (const auto& p : c.points) energy += std::norm(p);
    energy /= c.points.size();
    res.max_err = std::max(res.max_err, std::abs(energy - 1.0));
    for (int q1 = 0; q1 < c.q1_order; ++q1)
      for (int q2 = 0; q2 < c.q2_order; ++q2)
        res.max_err = std::max(
            res.max_err, std::abs(c.point(q1, q2) - (c.base_points[q1] +
                                                     c.mode_points[q2])));
    auto [d1, d2] = min_distances(c);
    if (c.q2_order > 1) {
      res.max_err = std::max(res.max_err, std::abs(d1 / d2 - row.rho));
      res.max_err = std::max(res.max_err, std::abs(c.rho - row.rho));
    }
    res.max_err = std::max(res.max_err, std::abs(d1 - c.d1));
  }
  return res;
}

}  // namespace

std::string meta_path_for(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".meta.txt");
  return p.string();
}

int cmd_run(const Recipe& recipe, const std::string& out_csv) {
  recipe.validate();
  const bool multi = recipe.systems.size() > 1;

  std::string csv;
  if (multi) csv += "system,";
  csv += "ebn0_db,frames,bit_errors,frame_errors,ber,fer,seconds";
  if (recipe.analysis) csv += ",ber_analysis";
  csv += '\n';

  std::string meta = "recipe: " + recipe.name + "\nversion: " + kVersion +
                     "\nsystems: " + std::to_string(recipe.systems.size()) +
                     "\n" + serialize_recipe(recipe);
  for (const auto& sys : recipe.systems) {
    SimConfig cfg = to_sim(recipe, sys);
    SimResult result = run_sweep(cfg);
    for (const PointResult& p : result.points) {
      double an = 0.0;
      if (recipe.analysis)
        an = analysis_ber(cfg, p.ebn0_db, recipe.analysis_geometry_draws);
      append_row(csv, multi ? sys.label.c_str() : nullptr, p,
                 recipe.analysis ? &an : nullptr);
    }
    meta += "## system: " + sys.label + "\n";
    std::ostringstream os;
    write_meta(cfg, result, os);
    meta += os.str();
  }
  write_file(out_csv, csv);
  write_file(meta_path_for(out_csv), meta);
  return 0;
}

int cmd_analyze(const Recipe& recipe, const AnalyzeOptions& opt) {
  if (opt.rho_search) {
    // Scaling-factor search on enumerable frame geometries, one per
    // published parameter row. Two-path geometry: delay diversity when the
    // delay axis allows it, Doppler diversity otherwise.
    struct Row {
      const char* heading;
      int q, nb, m, n;
      double paper_rho;
    };
    for (const Row& row : {Row{"SE 2 (Q1=Q2=2, N_b=1)", 2, 1, 2, 2, 1.0},
                           {"SE 2.5 (Q1=Q2=4, N_b=4)", 4, 4, 1, 4, 1.1},
                           {"SE 3 (Q1=Q2=4, N_b=2)", 4, 2, 1, 2, 1.1}}) {
      FrameConfig fc;
      fc.m_delay = row.m;
      fc.n_doppler = row.n;
      fc.n_block = row.nb;
      fc.constellation = build_hqc(row.q, row.q, 1.0);
      ChannelRealization geo;
      geo.m_delay = row.m;
      geo.n_doppler = row.n;
      geo.paths = {{cplx(1, 0), 0, 0}, {cplx(0, 1), row.m > 1 ? 1 : 0, 1}};
      std::vector<double> grid;
      for (double r = 0.8; r <= 2.4 + 1e-9; r += 0.1) grid.push_back(r);
      const double ebn0_ref = 16.0;
      const double gamma = ebn0_to_snr(ebn0_ref, fc.spectral_efficiency());
      double best = search_rho(fc, geo, gamma, grid);
      std::printf(
          "%s: rho* = %.2f (paper compares at %.1f; grid 0.8..2.4 step 0.1, "
          "Eb/N0 %.0f dB, M=%d N=%d, P=2)\n",
          row.heading, best, row.paper_rho, ebn0_ref, row.m, row.n);
    }
    return 0;
  }

  recipe.validate();
  const SystemSpec* target = nullptr;
  for (const auto& sys : recipe.systems)
    if (sys.scheme == "hmim") {
      target = &sys;
      break;
    }
  if (!target)
    throw ConfigError("analyze: recipe has no hmim system to analyze");
  SimConfig cfg = to_sim(recipe, *target);

  if (opt.at_ebn0_db) {
    std::printf("%.9e\n",
                analysis_ber(cfg, *opt.at_ebn0_db,
                             recipe.analysis_geometry_draws));
    return 0;
  }

  std::string csv = "ebn0_db,ber_analysis\n";
  for (double db : recipe.ebn0_grid_db) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g,%.9e\n", db,
                  analysis_ber(cfg, db, recipe.analysis_geometry_draws));
    csv += buf;
  }
  write_file(opt.out_csv, csv);
  return 0;
}

int cmd_selftest(const SelftestOptions& opt) {
  struct Suite {
    const char* name;
    SuiteResult result;
  };
  const Suite suites[] = {
      {"map-vs-enumeration", suite_map_vs_enumeration()},
      {"dd-vs-time-operator", suite_dd_vs_time()},
      {"sub-vs-full-channel", suite_sub_vs_full()},
      {"constellation-table", suite_constellation(opt.corrupt_constellation)},
  };
  bool all_ok = true;
  for (const Suite& s : suites) {
    const bool ok = s.result.max_err <= s.result.tol;
    all_ok = all_ok && ok;
    if (opt.verbose || !ok)
      std::printf("%s: %s (max err %.3g, tol %.3g)\n", s.name,
                  ok ? "pass" : "FAIL", s.result.max_err, s.result.tol);
    else
      std::printf("%s: pass\n", s.name);
  }
  return all_ok ? 0 : 3;
}

}  // namespace oddm
