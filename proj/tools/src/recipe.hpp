#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oddm/sim_engine.hpp"

namespace oddm {

// One labeled transmit/detect chain within an experiment; field meanings
// match SimConfig, with enums spelled out for the file format.
struct SystemSpec {
  std::string label;
  std::string scheme = "hmim";  // hmim | im
  int m_delay = 32;
  int n_doppler = 32;
  int q1 = 2;
  int q2 = 2;
  double rho = 1.0;
  int n_block = 1;
  int im_qam = 4;
  int im_nb = 4;
  int im_kb = 3;
  std::string detector = "mmse";  // ml | mmse | sicmmse
  int sic_n_ite = 10;
  double sic_exit_tol = 1e-6;
  long ml_max_hypotheses = 1L << 20;
  std::string profile = "uniform";  // uniform | eva
  int taps = 5;
  double ue_speed_kmh = 500.0;
  double carrier_hz = 5.0e9;
  double subcarrier_hz = 15.0e3;
};

// Experiment-level settings shared by every system in the run.
struct Recipe {
  std::string name;
  std::vector<double> ebn0_grid_db;
  long min_frame_errors = 100;
  long max_frames = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool analysis = false;  // append the closed-form BER column per point
  int analysis_geometry_draws = 50;
  std::vector<SystemSpec> systems;

  // Maps every system onto a SimConfig and validates it; errors carry the
  // offending system's label.
  void validate() const;
};

SimConfig to_sim(const Recipe& r, const SystemSpec& sys);

// Built-in experiment presets, in listing order.
std::vector<std::string> preset_names();
Recipe preset(const std::string& name);

// Strict JSON: unknown keys are rejected with their path; absent optional
// keys take the defaults above. serialize_recipe(parse_recipe(s)) == s for
// any serialize_recipe output.
Recipe parse_recipe(const std::string& text);
std::string serialize_recipe(const Recipe& r);

// A preset name, else a path to a recipe file.
Recipe load_recipe(const std::string& name_or_path);

// "a" for a single point or "a:b:step" for an inclusive range.
std::vector<double> parse_ebn0_range(const std::string& spec);

// Command-line overrides; the detector lands on every system.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> ebn0_grid_db;
  std::optional<std::string> detector;
  std::optional<long> max_frames;
  std::optional<long> min_frame_errors;
  std::optional<int> threads;
};
void apply_overrides(Recipe& r, const Overrides& o);

}  // namespace oddm
