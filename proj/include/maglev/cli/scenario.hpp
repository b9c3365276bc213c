#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "maglev/dynamics_sim.hpp"
#include "maglev/fieldmodel.hpp"
#include "maglev/isolation.hpp"
#include "maglev/noise_budget.hpp"
#include "maglev/pickup_coupling.hpp"
#include "maglev/spectral_analysis.hpp"

namespace maglev::cli {

/// Scenario content that fails validation. `key` is the dotted path of the
/// offending entry, e.g. "sphere.R" or "isolation.stages[1].mass".
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string key, const std::string& detail)
      : std::runtime_error(key + ": " + detail), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct SphereSpec {
  std::optional<double> R;  // m
  double rho = 0.0;         // kg/m^3
};

struct FieldSpec {
  std::optional<Vec3> gradients;  // T/m; trace-free after parsing
  std::optional<CoilPair> coils;
  double gradient_step = 1e-6;
};

struct ModeSpec {
  std::optional<double> f0;
  std::optional<double> Q;
  std::optional<double> gamma;
  double T0 = 0.0;
  std::optional<double> mass;
  Axis axis = Axis::Z;
};

struct SquareLoopSpec {
  Vec3 center = Vec3::Zero();
  double side = 0.0;
  int sense = 1;
};

struct PickupSpec {
  double wire_width = 0.0;
  double wire_gap = 0.0;
  bool pitch_is_center_to_center = false;
  std::optional<int> turns;
  std::optional<double> inner_radius;
  std::optional<double> height;
  std::vector<SquareLoopSpec> loops;  // explicit loops instead of a spiral
};

struct ReadoutSpec {
  std::optional<double> L_S, L_I, L_W, L_P, k, M;
  std::optional<double> S_phiphi;
  std::optional<double> coupled_energy_resolution_hbar;  // S_phiphi / (2 k^2 L_S) in hbar
  std::optional<double> S_JJ;
  std::optional<double> noise_product_hbar;              // sqrt(S_phiphi S_JJ) / hbar
  std::optional<double> eta_phi0;                        // Phi0/m
  std::optional<double> M_over_L;                        // eta = nu M/L without circuit details
  std::optional<PickupSpec> pickup;
  PickupSearch search;
};

struct NoiseSpecIn {
  double S_nn = 0.0;
  NoiseCurve S_epseps;
  NoiseCurve S_deltadelta;
  double drift_bin_hz = 0.0;
};

struct IsolationSpec {
  IsolationStack stack;
  double payload_mass = 0.0;
  double f_min = 1.0, f_max = 1000.0;
  int points = 200;
  std::vector<double> evaluate_at;
};

struct FilterSpec {
  double kappa = 0.0;
  double f_min = 0.01, f_max = 1000.0;
  int points = 200;
  std::vector<double> evaluate_at;
  int step_points = 100;
};

struct SimModeSpec {
  SimMode mode;
  std::optional<double> f0;  // unresolved until the field/mode defaults are known
  std::optional<double> Q, gamma, mass;
  double T0 = 0.0;
  Axis axis = Axis::Z;
};

struct SimulationSpec {
  SimConfig config;  // modes filled by resolve_simulation
  std::vector<SimModeSpec> modes;
  int psd_segments = 8;
  int sweep_runs = 0;
  std::vector<double> sweep_gains;
  unsigned workers = 0;
};

struct AnalysisSpec {
  std::filesystem::path input;
  std::string column = "y_meas";
  std::string method = "lorentzian";  // lorentzian, ringdown, both
  int segment_length = 0;             // 0: series length / 8
  double f_lo = 0.0, f_hi = 0.0;
  std::optional<double> f0_guess;
  RingdownOptions ringdown;
  std::optional<std::string> flux_column;  // calibration against column
  double calibration_uncertainty = 0.13;
};

struct Scenario {
  std::filesystem::path source_dir;
  std::optional<SphereSpec> sphere;
  std::optional<FieldSpec> field;
  std::optional<ModeSpec> mode;
  std::optional<ReadoutSpec> readout;
  std::optional<NoiseSpecIn> noise;
  std::optional<IsolationSpec> isolation;
  std::optional<FilterSpec> filter;
  std::optional<SimulationSpec> simulation;
  std::optional<AnalysisSpec> analysis;
  double gravity = constants::standard_gravity;
};

/// Parses and validates a scenario document. Unknown keys are rejected.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& source_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

// Accessors that raise ValidationError naming the missing section or key.
const SphereSpec& need_sphere(const Scenario& s, bool need_radius);
SphereParams sphere_params(const Scenario& s);
QuadrupoleField resolve_field(const Scenario& s);
OscillatorMode resolve_mode(const Scenario& s);
SquidCircuit resolve_circuit(const Scenario& s, double L_P);
SimConfig resolve_simulation(const Scenario& s);

}  // namespace maglev::cli
