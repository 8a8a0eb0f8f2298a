#include "recipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace oddm {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw ConfigError("recipe: " + msg);
}

// Strict field reader: every key the caller touches is crossed off, and
// whatever remains afterwards is reported as unknown.
class FieldReader {
 public:
  FieldReader(const json& j, std::string path) : path_(std::move(path)) {
    if (!j.is_object()) fail(path_ + ": expected an object");
    for (const auto& [key, value] : j.items()) pending_[key] = &value;
  }

  template <typename T>
  void get(const char* key, T& out) {
    auto it = pending_.find(key);
    if (it == pending_.end()) return;
    try {
      out = it->second->get<T>();
    } catch (const json::exception&) {
      fail(path_ + key + ": wrong type");
    }
    pending_.erase(it);
  }

  const json* take(const char* key) {
    auto it = pending_.find(key);
    if (it == pending_.end()) return nullptr;
    const json* v = it->second;
    pending_.erase(it);
    return v;
  }

  void finish() const {
    if (!pending_.empty()) fail(path_ + "unknown key '" + pending_.begin()->first + "'");
  }

 private:
  std::string path_;
  std::map<std::string, const json*> pending_;
};

SystemSpec parse_system(const json& j, size_t idx) {
  const std::string path = "systems[" + std::to_string(idx) + "].";
  FieldReader f(j, path);
  SystemSpec s;
  f.get("label", s.label);
  f.get("scheme", s.scheme);
  f.get("m_delay", s.m_delay);
  f.get("n_doppler", s.n_doppler);
  f.get("q1", s.q1);
  f.get("q2", s.q2);
  f.get("rho", s.rho);
  f.get("n_block", s.n_block);
  f.get("im_qam", s.im_qam);
  f.get("im_nb", s.im_nb);
  f.get("im_kb", s.im_kb);
  f.get("detector", s.detector);
  f.get("sic_n_ite", s.sic_n_ite);
  f.get("sic_exit_tol", s.sic_exit_tol);
  f.get("ml_max_hypotheses", s.ml_max_hypotheses);
  f.get("profile", s.profile);
  f.get("taps", s.taps);
  f.get("ue_speed_kmh", s.ue_speed_kmh);
  f.get("carrier_hz", s.carrier_hz);
  f.get("subcarrier_hz", s.subcarrier_hz);
  f.finish();
  if (s.label.empty()) fail(path + "label: required");
  return s;
}

json system_to_json(const SystemSpec& s) {
  json j;
  j["label"] = s.label;
  j["scheme"] = s.scheme;
  j["m_delay"] = s.m_delay;
  j["n_doppler"] = s.n_doppler;
  j["q1"] = s.q1;
  j["q2"] = s.q2;
  j["rho"] = s.rho;
  j["n_block"] = s.n_block;
  j["im_qam"] = s.im_qam;
  j["im_nb"] = s.im_nb;
  j["im_kb"] = s.im_kb;
  j["detector"] = s.detector;
  j["sic_n_ite"] = s.sic_n_ite;
  j["sic_exit_tol"] = s.sic_exit_tol;
  j["ml_max_hypotheses"] = s.ml_max_hypotheses;
  j["profile"] = s.profile;
  j["taps"] = s.taps;
  j["ue_speed_kmh"] = s.ue_speed_kmh;
  j["carrier_hz"] = s.carrier_hz;
  j["subcarrier_hz"] = s.subcarrier_hz;
  return j;
}

SystemSpec hmim_system(std::string label, int m, int n, int q, double rho,
                       int nb, std::string detector) {
  SystemSpec s;
  s.label = std::move(label);
  s.m_delay = m;
  s.n_doppler = n;
  s.q1 = q;
  s.q2 = q;
  s.rho = rho;
  s.n_block = nb;
  s.detector = std::move(detector);
  return s;
}

}  // namespace

void Recipe::validate() const {
  if (name.empty()) fail("name: required");
  if (ebn0_grid_db.empty()) fail("'" + name + "': empty Eb/N0 grid");
  if (systems.empty()) fail("'" + name + "': no systems");
  if (analysis && analysis_geometry_draws < 1)
    fail("'" + name + "': analysis_geometry_draws must be >= 1");
  for (const auto& sys : systems) {
    try {
      to_sim(*this, sys).validate();
    } catch (const std::invalid_argument& e) {
      fail("system '" + sys.label + "': " + e.what());
    }
  }
}

SimConfig to_sim(const Recipe& r, const SystemSpec& sys) {
  SimConfig c;
  c.m_delay = sys.m_delay;
  c.n_doppler = sys.n_doppler;
  c.scheme = sys.scheme;
  c.q1 = sys.q1;
  c.q2 = sys.q2;
  c.rho = sys.rho;
  c.n_block = sys.n_block;
  c.im_qam = sys.im_qam;
  c.im_nb = sys.im_nb;
  c.im_kb = sys.im_kb;
  c.detector = sys.detector;
  c.sic_n_ite = sys.sic_n_ite;
  c.sic_exit_tol = sys.sic_exit_tol;
  c.ml_max_hypotheses = sys.ml_max_hypotheses;
  if (sys.profile == "uniform")
    c.profile = Profile::Uniform;
  else if (sys.profile == "eva")
    c.profile = Profile::Eva;
  else
    fail("system '" + sys.label + "': unknown profile '" + sys.profile + "'");
  c.taps = sys.taps;
  c.ue_speed_kmh = sys.ue_speed_kmh;
  c.carrier_hz = sys.carrier_hz;
  c.subcarrier_hz = sys.subcarrier_hz;
  c.ebn0_grid_db = r.ebn0_grid_db;
  c.min_frame_errors = r.min_frame_errors;
  c.max_frames = r.max_frames;
  c.seed = r.seed;
  c.threads = r.threads;
  return c;
}

std::vector<std::string> preset_names() {
  return {"fig4", "fig5", "fig6-small", "fig6-large"};
}

Recipe preset(const std::string& name) {
  Recipe r;
  r.name = name;
  if (name == "fig4") {
    // Tiny-frame ML setup where the closed-form BER is enumerable; the
    // analysis column is averaged over the simulation's own channel draws.
    r.ebn0_grid_db = {6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26};
    r.max_frames = 2000000;
    r.analysis = true;
    SystemSpec s = hmim_system("oddm-hmim-ml", 2, 2, 2, 1.4, 2, "ml");
    s.taps = 2;
    r.systems = {s};
  } else if (name == "fig5") {
    // Three-way scheme comparison under MMSE + blockwise ML at 32x32:
    // plain QAM, the index-modulation baseline, and the layered scheme,
    // at matched spectral efficiencies.
    r.ebn0_grid_db = {8, 10, 12, 14, 16};
    SystemSpec qam = hmim_system("oddm-4qam-se2", 32, 32, 2, 1.0, 1, "mmse");
    qam.q1 = 4;
    qam.q2 = 1;
    SystemSpec im2;
    im2.label = "oddm-im-se2";
    im2.scheme = "im";
    im2.im_qam = 4;
    im2.im_nb = 4;
    im2.im_kb = 3;
    SystemSpec im25 = im2;
    im25.label = "oddm-im-se2.5";
    im25.im_qam = 16;
    im25.im_kb = 2;
    r.systems = {qam,
                 im2,
                 hmim_system("oddm-hmim-se2", 32, 32, 2, 1.0, 1, "mmse"),
                 im25,
                 hmim_system("oddm-hmim-se2.5", 32, 32, 4, 1.1, 4, "mmse"),
                 hmim_system("oddm-hmim-se3", 32, 32, 4, 1.1, 2, "mmse")};
  } else if (name == "fig6-small") {
    // Linear MMSE versus the iterative detector on the same frames. The
    // iteration cap is the calibrated operating point: past it, posterior
    // overconfidence makes divergent frames burst.
    r.ebn0_grid_db = {10, 12, 14, 16};
    SystemSpec mmse = hmim_system("mmse", 32, 32, 2, 1.0, 1, "mmse");
    SystemSpec sic = hmim_system("sicmmse", 32, 32, 2, 1.0, 1, "sicmmse");
    sic.sic_n_ite = 5;
    r.systems = {mmse, sic};
  } else if (name == "fig6-large") {
    // Large-frame run where a direct linear solve is impractical but the
    // windowed iterative detector stays linear in the frame size.
    r.ebn0_grid_db = {10, 12, 14};
    r.max_frames = 20000;
    SystemSpec sic = hmim_system("sicmmse", 256, 32, 2, 1.0, 1, "sicmmse");
    sic.sic_n_ite = 6;
    sic.profile = "eva";
    r.systems = {sic};
  } else {
    fail("unknown preset '" + name + "' (have: fig4, fig5, fig6-small, fig6-large)");
  }
  return r;
}

Recipe parse_recipe(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  FieldReader f(j, "");
  Recipe r;
  bool has_name = false, has_grid = false;
  if (const json* v = f.take("name")) {
    if (!v->is_string()) fail("name: wrong type");
    r.name = v->get<std::string>();
    has_name = true;
  }
  if (const json* v = f.take("ebn0_grid_db")) {
    if (!v->is_array()) fail("ebn0_grid_db: expected an array of numbers");
    for (const auto& e : *v) {
      if (!e.is_number()) fail("ebn0_grid_db: expected an array of numbers");
      r.ebn0_grid_db.push_back(e.get<double>());
    }
    has_grid = true;
  }
  f.get("min_frame_errors", r.min_frame_errors);
  f.get("max_frames", r.max_frames);
  f.get("seed", r.seed);
  f.get("threads", r.threads);
  f.get("analysis", r.analysis);
  f.get("analysis_geometry_draws", r.analysis_geometry_draws);
  const json* systems = f.take("systems");
  f.finish();
  if (!has_name) fail("name: required");
  if (!has_grid) fail("ebn0_grid_db: required");
  if (!systems) fail("systems: required");
  if (!systems->is_array()) fail("systems: expected an array");
  for (size_t i = 0; i < systems->size(); ++i)
    r.systems.push_back(parse_system((*systems)[i], i));
  return r;
}

std::string serialize_recipe(const Recipe& r) {
  json j;
  j["name"] = r.name;
  j["ebn0_grid_db"] = r.ebn0_grid_db;
  j["min_frame_errors"] = r.min_frame_errors;
  j["max_frames"] = r.max_frames;
  j["seed"] = r.seed;
  j["threads"] = r.threads;
  j["analysis"] = r.analysis;
  j["analysis_geometry_draws"] = r.analysis_geometry_draws;
  j["systems"] = json::array();
  for (const auto& s : r.systems) j["systems"].push_back(system_to_json(s));
  return j.dump(2) + "\n";
}

Recipe load_recipe(const std::string& name_or_path) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end())
    return preset(name_or_path);
  std::ifstream in(name_or_path);
  if (!in)
    fail("'" + name_or_path + "' is neither a preset nor a readable file");
  std::ostringstream os;
  os << in.rdbuf();
  try {
    return parse_recipe(os.str());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " (in " + name_or_path + ")");
  }
}

std::vector<double> parse_ebn0_range(const std::string& spec) {
  auto number = [&](const std::string& tok) {
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      fail("--ebn0 '" + spec + "': not a number");
    }
    if (used != tok.size()) fail("--ebn0 '" + spec + "': not a number");
    return v;
  };
  std::vector<std::string> toks;
  std::istringstream in(spec);
  std::string t;
  while (std::getline(in, t, ':')) toks.push_back(t);
  if (spec.empty() || toks.empty()) fail("--ebn0: empty");
  if (toks.size() == 1) return {number(toks[0])};
  if (toks.size() != 3) fail("--ebn0 '" + spec + "': want a or a:b:step");
  const double a = number(toks[0]), b = number(toks[1]), step = number(toks[2]);
  if (step <= 0) fail("--ebn0 '" + spec + "': step must be > 0");
  if (b < a) fail("--ebn0 '" + spec + "': end before start");
  std::vector<double> grid;
  for (double v = a; v <= b + step * 1e-9; v += step) grid.push_back(v);
  return grid;
}

void apply_overrides(Recipe& r, const Overrides& o) {
  if (o.seed) r.seed = *o.seed;
  if (o.ebn0_grid_db) r.ebn0_grid_db = *o.ebn0_grid_db;
  if (o.max_frames) r.max_frames = *o.max_frames;
  if (o.min_frame_errors) r.min_frame_errors = *o.min_frame_errors;
  if (o.threads) r.threads = *o.threads;
  if (o.detector)
    for (auto& sys : r.systems) sys.detector = *o.detector;
}

}  // namespace oddm
