#include "maglev/cli/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "maglev/error.hpp"
#include "maglev/sphere_response.hpp"

namespace maglev::cli {

using nlohmann::json;

namespace {

// A JSON value together with its dotted key path.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const json& value() const { return j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void reject(const std::string& detail) const { throw ValidationError(path_, detail); }

  void expect_object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) reject("must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j_.items()) {
      if (!ok.count(key)) throw ValidationError(join(key), "unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  Node child(const char* key) const { return {j_.at(key), join(key)}; }
  Node element(std::size_t i) const { return {j_.at(i), path_ + "[" + std::to_string(i) + "]"}; }

  Node required(const char* key) const {
    if (!has(key)) throw ValidationError(join(key), "is required");
    return child(key);
  }

  double number() const {
    if (!j_.is_number()) reject("must be a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) reject("must be finite");
    return v;
  }
  double positive() const {
    const double v = number();
    if (!(v > 0.0)) reject("must be positive");
    return v;
  }
  double non_negative() const {
    const double v = number();
    if (v < 0.0) reject("must be non-negative");
    return v;
  }
  int integer(int lo) const {
    if (!j_.is_number_integer()) reject("must be an integer");
    const auto v = j_.get<long long>();
    if (v < lo || v > 1'000'000'000) reject("must be an integer >= " + std::to_string(lo));
    return static_cast<int>(v);
  }
  bool boolean() const {
    if (!j_.is_boolean()) reject("must be true or false");
    return j_.get<bool>();
  }
  std::string string() const {
    if (!j_.is_string()) reject("must be a string");
    return j_.get<std::string>();
  }
  std::vector<double> numbers(std::size_t min_size) const {
    if (!j_.is_array() || j_.size() < min_size) reject("must be an array of at least " + std::to_string(min_size) + " numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j_.size(); ++i) out.push_back(element(i).number());
    return out;
  }

  std::optional<double> opt_positive(const char* key) const {
    return has(key) ? std::optional<double>(child(key).positive()) : std::nullopt;
  }
  std::optional<double> opt_non_negative(const char* key) const {
    return has(key) ? std::optional<double>(child(key).non_negative()) : std::nullopt;
  }

 private:
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
};

// Core validation failures inside a scenario section are reported against it.
template <class F>
auto guarded(const Node& n, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    n.reject(e.what());
  }
}

NoiseCurve parse_curve(const Node& n) {
  if (n.value().is_number()) return NoiseCurve::constant(n.non_negative());
  n.expect_object({"f_Hz", "psd"});
  const auto f = n.required("f_Hz").numbers(1);
  const auto s = n.required("psd").numbers(1);
  if (f.size() != s.size()) n.reject("f_Hz and psd must have the same length");
  return guarded(n, [&] { return NoiseCurve::table(f, s); });
}

Axis parse_axis(const Node& n) {
  const auto s = n.string();
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  if (s == "z") return Axis::Z;
  n.reject("must be one of x, y, z");
}

Vec3 parse_vec3(const Node& n) {
  const auto v = n.numbers(3);
  if (v.size() != 3) n.reject("must hold exactly three numbers");
  return {v[0], v[1], v[2]};
}

SphereSpec parse_sphere(const Node& n) {
  n.expect_object({"R", "rho"});
  SphereSpec s;
  s.R = n.opt_positive("R");
  s.rho = n.required("rho").positive();
  return s;
}

FieldSpec parse_field(const Node& n) {
  n.expect_object({"gradients", "coils", "gradient_step"});
  FieldSpec f;
  if (n.has("gradients") == n.has("coils")) n.reject("give exactly one of gradients or coils");
  if (n.has("gradients")) {
    const Node g = n.child("gradients");
    const Vec3 b = parse_vec3(g);
    const bool magnitudes = b.minCoeff() >= 0.0;
    const auto qf = guarded(g, [&] {
      return magnitudes ? QuadrupoleField::from_magnitudes(b[0], b[1], b[2], 1e-6)
                        : QuadrupoleField::from_triple(b[0], b[1], b[2], 1e-6);
    });
    f.gradients = qf.gradients();
  } else {
    const Node c = n.child("coils");
    c.expect_object({"semi_x", "semi_y", "separation", "turns", "current"});
    const double sx = c.required("semi_x").positive();
    const double sy = c.required("semi_y").positive();
    const double d = c.required("separation").positive();
    const int turns = c.has("turns") ? c.child("turns").integer(1) : 1;
    const double i = c.required("current").number();
    f.coils = guarded(c, [&] { return CoilPair::anti_helmholtz(sx, sy, d, turns, i); });
  }
  if (n.has("gradient_step")) f.gradient_step = n.child("gradient_step").positive();
  return f;
}

ModeSpec parse_mode(const Node& n) {
  n.expect_object({"f0", "Q", "gamma", "T0", "mass", "axis"});
  ModeSpec m;
  m.f0 = n.opt_positive("f0");
  m.Q = n.opt_positive("Q");
  m.gamma = n.opt_non_negative("gamma");
  if (m.Q.has_value() == m.gamma.has_value()) n.reject("give exactly one of Q or gamma");
  m.T0 = n.required("T0").non_negative();
  m.mass = n.opt_positive("mass");
  if (n.has("axis")) m.axis = parse_axis(n.child("axis"));
  return m;
}

PickupSpec parse_pickup(const Node& n) {
  n.expect_object({"wire_width", "wire_gap", "pitch_is_center_to_center", "turns", "inner_radius", "height", "loops"});
  PickupSpec p;
  if (n.has("wire_width")) p.wire_width = n.child("wire_width").positive();
  if (n.has("wire_gap")) p.wire_gap = n.child("wire_gap").positive();
  if (n.has("pitch_is_center_to_center")) p.pitch_is_center_to_center = n.child("pitch_is_center_to_center").boolean();
  if (n.has("turns")) p.turns = n.child("turns").integer(1);
  p.inner_radius = n.opt_non_negative("inner_radius");
  p.height = n.has("height") ? std::optional<double>(n.child("height").number()) : std::nullopt;
  if (n.has("loops")) {
    const Node loops = n.child("loops");
    if (!loops.value().is_array() || loops.value().empty()) loops.reject("must be a non-empty array");
    for (std::size_t i = 0; i < loops.value().size(); ++i) {
      const Node l = loops.element(i);
      l.expect_object({"center", "side", "sense"});
      SquareLoopSpec s;
      s.center = parse_vec3(l.required("center"));
      s.side = l.required("side").positive();
      if (l.has("sense")) {
        s.sense = l.child("sense").integer(-1);
        if (s.sense != 1 && s.sense != -1) l.child("sense").reject("must be +1 or -1");
      }
      p.loops.push_back(s);
    }
  }
  return p;
}

PickupSearch parse_search(const Node& n) {
  n.expect_object({"z_min", "z_max", "r_min", "r_max", "n_max", "r_grid", "z_grid", "refine_neighbours", "wheeler_k1",
                   "wheeler_k2"});
  PickupSearch s;
  if (n.has("z_min")) s.z_min = n.child("z_min").non_negative();
  if (n.has("z_max")) s.z_max = n.child("z_max").non_negative();
  if (n.has("r_min")) s.r_min = n.child("r_min").non_negative();
  if (n.has("r_max")) s.r_max = n.child("r_max").non_negative();
  if (n.has("n_max")) s.n_max = n.child("n_max").integer(1);
  if (n.has("r_grid")) s.r_grid = n.child("r_grid").integer(2);
  if (n.has("z_grid")) s.z_grid = n.child("z_grid").integer(2);
  if (n.has("refine_neighbours")) s.refine_neighbours = n.child("refine_neighbours").integer(0);
  if (n.has("wheeler_k1")) s.wheeler.k1 = n.child("wheeler_k1").positive();
  if (n.has("wheeler_k2")) s.wheeler.k2 = n.child("wheeler_k2").non_negative();
  return s;
}

ReadoutSpec parse_readout(const Node& n) {
  n.expect_object({"L_S", "L_I", "L_W", "L_P", "k", "M", "S_phiphi", "coupled_energy_resolution_hbar", "S_JJ",
                   "noise_product_hbar", "eta_phi0", "M_over_L", "pickup", "search"});
  ReadoutSpec r;
  r.L_S = n.opt_positive("L_S");
  r.L_I = n.opt_positive("L_I");
  r.L_W = n.opt_non_negative("L_W");
  r.L_P = n.opt_non_negative("L_P");
  if (n.has("k")) {
    const double k = n.child("k").number();
    if (!(std::abs(k) > 0.0 && std::abs(k) < 1.0)) n.child("k").reject("must satisfy 0 < |k| < 1");
    r.k = k;
  }
  r.M = n.opt_positive("M");
  if (r.k && r.M) n.reject("give at most one of k or M");
  r.S_phiphi = n.opt_positive("S_phiphi");
  r.coupled_energy_resolution_hbar = n.opt_positive("coupled_energy_resolution_hbar");
  if (r.S_phiphi && r.coupled_energy_resolution_hbar) n.reject("give at most one of S_phiphi or coupled_energy_resolution_hbar");
  r.S_JJ = n.opt_positive("S_JJ");
  if (n.has("noise_product_hbar")) {
    const double v = n.child("noise_product_hbar").number();
    if (!(v >= 1.0)) n.child("noise_product_hbar").reject("must be at least 1 (quantum limit)");
    r.noise_product_hbar = v;
  }
  if (r.S_JJ && r.noise_product_hbar) n.reject("give at most one of S_JJ or noise_product_hbar");
  r.eta_phi0 = n.opt_positive("eta_phi0");
  r.M_over_L = n.opt_positive("M_over_L");
  if (r.M_over_L && (r.L_S || r.L_I)) n.reject("give either M_over_L or the circuit inductances, not both");
  if (n.has("pickup")) r.pickup = parse_pickup(n.child("pickup"));
  if (n.has("search")) r.search = parse_search(n.child("search"));
  return r;
}

NoiseSpecIn parse_noise(const Node& n) {
  n.expect_object({"S_nn", "S_epseps", "S_deltadelta", "drift_bin_hz"});
  NoiseSpecIn s;
  if (n.has("S_nn")) s.S_nn = n.child("S_nn").non_negative();
  if (n.has("S_epseps")) s.S_epseps = parse_curve(n.child("S_epseps"));
  if (n.has("S_deltadelta")) s.S_deltadelta = parse_curve(n.child("S_deltadelta"));
  if (n.has("drift_bin_hz")) s.drift_bin_hz = n.child("drift_bin_hz").non_negative();
  return s;
}

void parse_range(const Node& n, double& lo, double& hi, int& points) {
  if (n.has("f_min")) lo = n.child("f_min").positive();
  if (n.has("f_max")) hi = n.child("f_max").positive();
  if (n.has("points")) points = n.child("points").integer(2);
  if (!(hi > lo)) n.reject("f_max must exceed f_min");
}

IsolationSpec parse_isolation(const Node& n) {
  n.expect_object({"stages", "payload_mass", "f_min", "f_max", "points", "evaluate_at"});
  IsolationSpec s;
  const Node stages = n.required("stages");
  if (!stages.value().is_array() || stages.value().empty()) stages.reject("must be a non-empty array");
  for (std::size_t i = 0; i < stages.value().size(); ++i) {
    const Node st = stages.element(i);
    st.expect_object({"mass", "wire_count", "wire_length", "wire_diameter", "youngs_modulus", "yield_load"});
    Stage stage;
    stage.mass = st.required("mass").positive();
    stage.wire_count = st.has("wire_count") ? st.child("wire_count").integer(1) : 1;
    stage.wire_length = st.required("wire_length").positive();
    stage.wire_diameter = st.required("wire_diameter").positive();
    if (st.has("youngs_modulus")) stage.youngs_modulus = st.child("youngs_modulus").positive();
    if (st.has("yield_load")) stage.yield_load = st.child("yield_load").non_negative();
    s.stack.stages.push_back(stage);
  }
  if (n.has("payload_mass")) s.payload_mass = n.child("payload_mass").non_negative();
  parse_range(n, s.f_min, s.f_max, s.points);
  if (n.has("evaluate_at")) {
    const Node e = n.child("evaluate_at");
    s.evaluate_at = e.numbers(1);
    for (double f : s.evaluate_at) {
      if (!(f >= 0.0)) e.reject("frequencies must be non-negative");
    }
  }
  return s;
}

FilterSpec parse_filter(const Node& n) {
  n.expect_object({"kappa", "R", "L", "f_min", "f_max", "points", "evaluate_at", "step_points"});
  FilterSpec s;
  if (n.has("kappa")) {
    if (n.has("R") || n.has("L")) n.reject("give kappa or R and L, not both");
    s.kappa = n.child("kappa").positive();
  } else {
    const double r = n.required("R").positive();
    const double l = n.required("L").positive();
    s.kappa = r / l;
  }
  parse_range(n, s.f_min, s.f_max, s.points);
  if (n.has("evaluate_at")) {
    const Node e = n.child("evaluate_at");
    s.evaluate_at = e.numbers(1);
    for (double f : s.evaluate_at) {
      if (!(f >= 0.0)) e.reject("frequencies must be non-negative");
    }
  }
  if (n.has("step_points")) s.step_points = n.child("step_points").integer(2);
  return s;
}

FeedbackConfig parse_feedback(const Node& n) {
  n.expect_object({"enabled", "gain", "bandpass_width", "bandpass_center", "phase", "latency_steps"});
  FeedbackConfig f;
  f.enabled = n.has("enabled") ? n.child("enabled").boolean() : true;
  if (n.has("gain")) f.gain = n.child("gain").non_negative();
  if (n.has("bandpass_width")) f.bandpass_width = n.child("bandpass_width").non_negative();
  if (n.has("bandpass_center")) f.bandpass_center = n.child("bandpass_center").non_negative();
  if (n.has("phase")) f.phase = n.child("phase").number();
  if (n.has("latency_steps")) f.latency_steps = n.child("latency_steps").integer(0);
  return f;
}

SimulationSpec parse_simulation(const Node& n) {
  n.expect_object({"dt", "duration", "seed", "integrator", "record_every", "check_energy", "spectral", "psd_segments",
                   "workers", "modes", "feedback", "sweep"});
  SimulationSpec s;
  s.config.dt = n.required("dt").positive();
  s.config.duration = n.required("duration").positive();
  if (n.has("seed")) {
    const Node sd = n.child("seed");
    if (!sd.value().is_number_unsigned()) sd.reject("must be a non-negative integer");
    s.config.seed = sd.value().get<std::uint64_t>();
  }
  if (n.has("integrator")) {
    const Node in = n.child("integrator");
    const auto name = in.string();
    if (name == "exact") {
      s.config.integrator = Integrator::Exact;
    } else if (name == "semi_implicit_euler") {
      s.config.integrator = Integrator::SemiImplicitEuler;
    } else {
      in.reject("must be exact or semi_implicit_euler");
    }
  }
  if (n.has("record_every")) s.config.record_every = n.child("record_every").integer(1);
  if (n.has("check_energy")) s.config.check_energy = n.child("check_energy").boolean();
  if (n.has("spectral")) s.config.spectral = n.child("spectral").boolean();
  if (n.has("psd_segments")) s.psd_segments = n.child("psd_segments").integer(1);
  if (n.has("workers")) s.workers = static_cast<unsigned>(n.child("workers").integer(0));
  if (n.has("feedback")) s.config.feedback = parse_feedback(n.child("feedback"));

  const Node modes = n.required("modes");
  if (!modes.value().is_array() || (modes.value().size() != 1 && modes.value().size() != 3)) {
    modes.reject("must list one or three modes");
  }
  for (std::size_t i = 0; i < modes.value().size(); ++i) {
    const Node m = modes.element(i);
    m.expect_object({"name", "axis", "f0", "Q", "gamma", "T0", "mass", "S_epseps", "S_deltadelta", "S_nn", "thermal",
                     "x0", "v0"});
    SimModeSpec spec;
    Axis axis = Axis::Z;
    if (m.has("axis")) axis = parse_axis(m.child("axis"));
    spec.mode.name = m.has("name") ? m.child("name").string() : std::string(1, "xyz"[static_cast<int>(axis)]);
    spec.f0 = m.opt_positive("f0");
    spec.Q = m.opt_positive("Q");
    spec.gamma = m.opt_non_negative("gamma");
    if (spec.Q.has_value() == spec.gamma.has_value()) m.reject("give exactly one of Q or gamma");
    spec.mass = m.opt_positive("mass");
    spec.T0 = m.has("T0") ? m.child("T0").non_negative() : 0.0;
    if (m.has("S_epseps")) spec.mode.noise.S_epseps = parse_curve(m.child("S_epseps"));
    if (m.has("S_deltadelta")) spec.mode.noise.S_deltadelta = parse_curve(m.child("S_deltadelta"));
    if (m.has("S_nn")) spec.mode.noise.S_nn = m.child("S_nn").non_negative();
    if (m.has("thermal")) spec.mode.noise.thermal = m.child("thermal").boolean();
    if (m.has("x0")) spec.mode.x0 = m.child("x0").number();
    if (m.has("v0")) spec.mode.v0 = m.child("v0").number();
    spec.axis = axis;
    s.modes.push_back(std::move(spec));
  }

  if (n.has("sweep")) {
    const Node sw = n.child("sweep");
    sw.expect_object({"runs", "feedback_gain"});
    if (sw.has("runs")) s.sweep_runs = sw.child("runs").integer(1);
    if (sw.has("feedback_gain")) {
      const Node g = sw.child("feedback_gain");
      s.sweep_gains = g.numbers(1);
      for (double v : s.sweep_gains) {
        if (!(v >= 0.0)) g.reject("gains must be non-negative");
      }
    }
  }
  return s;
}

AnalysisSpec parse_analysis(const Node& n, const std::filesystem::path& dir) {
  n.expect_object({"input", "column", "method", "segment_length", "f_lo", "f_hi", "f0_guess", "periods_per_box",
                   "jump_f_threshold", "jump_slope_ratio", "flux_column", "calibration_uncertainty"});
  AnalysisSpec a;
  std::filesystem::path in = n.required("input").string();
  a.input = in.is_absolute() || dir.empty() ? in : dir / in;
  if (n.has("column")) a.column = n.child("column").string();
  if (n.has("method")) {
    const Node m = n.child("method");
    a.method = m.string();
    if (a.method != "lorentzian" && a.method != "ringdown" && a.method != "both") {
      m.reject("must be lorentzian, ringdown or both");
    }
  }
  if (n.has("segment_length")) a.segment_length = n.child("segment_length").integer(8);
  if (n.has("f_lo")) a.f_lo = n.child("f_lo").non_negative();
  if (n.has("f_hi")) a.f_hi = n.child("f_hi").positive();
  if (n.has("f_hi") && !(a.f_hi > a.f_lo)) n.reject("f_hi must exceed f_lo");
  a.f0_guess = n.opt_positive("f0_guess");
  if (n.has("periods_per_box")) a.ringdown.periods_per_box = n.child("periods_per_box").positive();
  if (n.has("jump_f_threshold")) a.ringdown.jump_f_threshold = n.child("jump_f_threshold").positive();
  if (n.has("jump_slope_ratio")) a.ringdown.jump_slope_ratio = n.child("jump_slope_ratio").non_negative();
  if (n.has("flux_column")) a.flux_column = n.child("flux_column").string();
  if (n.has("calibration_uncertainty")) a.calibration_uncertainty = n.child("calibration_uncertainty").non_negative();
  return a;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::filesystem::path& source_dir) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ValidationError("(document)", std::string("not valid JSON: ") + e.what());
  }
  const Node root(doc, "");
  if (!doc.is_object()) throw ValidationError("(document)", "must be an object");
  root.expect_object({"$schema", "description", "sphere", "field", "mode", "readout", "noise", "isolation", "filter",
                      "simulation", "analysis", "gravity"});
  Scenario s;
  s.source_dir = source_dir;
  if (root.has("sphere")) s.sphere = parse_sphere(root.child("sphere"));
  if (root.has("field")) s.field = parse_field(root.child("field"));
  if (root.has("mode")) s.mode = parse_mode(root.child("mode"));
  if (root.has("readout")) s.readout = parse_readout(root.child("readout"));
  if (root.has("noise")) s.noise = parse_noise(root.child("noise"));
  if (root.has("isolation")) s.isolation = parse_isolation(root.child("isolation"));
  if (root.has("filter")) s.filter = parse_filter(root.child("filter"));
  if (root.has("simulation")) s.simulation = parse_simulation(root.child("simulation"));
  if (root.has("analysis")) s.analysis = parse_analysis(root.child("analysis"), source_dir);
  if (root.has("gravity")) s.gravity = root.child("gravity").positive();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("--scenario", "cannot read " + path.string());
  std::ostringstream text;
  text << f.rdbuf();
  return parse_scenario(text.str(), path.parent_path());
}

const SphereSpec& need_sphere(const Scenario& s, bool need_radius) {
  if (!s.sphere) throw ValidationError("sphere", "is required for this command");
  if (need_radius && !s.sphere->R) throw ValidationError("sphere.R", "is required for this command");
  return *s.sphere;
}

SphereParams sphere_params(const Scenario& s) {
  const auto& sp = need_sphere(s, true);
  return SphereParams(*sp.R, sp.rho);
}

QuadrupoleField resolve_field(const Scenario& s) {
  if (!s.field) throw ValidationError("field", "is required for this command");
  if (s.field->gradients) {
    const Vec3& b = *s.field->gradients;
    return QuadrupoleField::from_triple(b[0], b[1], b[2], 1e-6);
  }
  return extract_gradients(*s.field->coils, s.field->gradient_step).field;
}

namespace {

double trap_frequency(const Scenario& s, Axis axis, const std::string& key) {
  if (!s.field || !s.sphere) throw ValidationError(key, "is required unless field and sphere are given");
  const auto f = trap_frequencies(resolve_field(s), s.sphere->rho);
  return axis == Axis::X ? f.fx : axis == Axis::Y ? f.fy : f.fz;
}

double default_mass(const Scenario& s, const std::optional<double>& mass, const std::string& key) {
  if (mass) return *mass;
  if (!s.sphere || !s.sphere->R) throw ValidationError(key, "is required unless sphere.R and sphere.rho are given");
  return SphereParams(*s.sphere->R, s.sphere->rho).mass();
}

}  // namespace

OscillatorMode resolve_mode(const Scenario& s) {
  if (!s.mode) throw ValidationError("mode", "is required for this command");
  const ModeSpec& m = *s.mode;
  const double f0 = m.f0 ? *m.f0 : trap_frequency(s, m.axis, "mode.f0");
  const double mass = default_mass(s, m.mass, "mode.mass");
  return m.Q ? OscillatorMode::from_q(mass, f0, *m.Q, m.T0) : OscillatorMode::from_gamma(mass, f0, *m.gamma, m.T0);
}

SquidCircuit resolve_circuit(const Scenario& s, double L_P) {
  if (!s.readout) throw ValidationError("readout", "is required for this command");
  const ReadoutSpec& r = *s.readout;
  if (!r.L_S) throw ValidationError("readout.L_S", "is required for this command");
  if (!r.L_I) throw ValidationError("readout.L_I", "is required for this command");
  double k = 0.0;
  if (r.k) {
    k = *r.k;
  } else if (r.M) {
    k = *r.M / std::sqrt(*r.L_I * *r.L_S);
    if (!(k < 1.0)) throw ValidationError("readout.M", "implies |k| >= 1 for the given L_I and L_S");
  } else {
    throw ValidationError("readout.k", "give k or M");
  }
  double S_phiphi = 0.0;
  if (r.S_phiphi) {
    S_phiphi = *r.S_phiphi;
  } else if (r.coupled_energy_resolution_hbar) {
    S_phiphi = *r.coupled_energy_resolution_hbar * constants::hbar * 2.0 * k * k * *r.L_S;
  } else {
    throw ValidationError("readout.S_phiphi", "give S_phiphi or coupled_energy_resolution_hbar");
  }
  const double lp = r.L_P ? *r.L_P : L_P;
  const double lw = r.L_W.value_or(0.0);
  try {
    if (r.S_JJ) return SquidCircuit::make(*r.L_S, *r.L_I, lw, lp, k, S_phiphi, *r.S_JJ);
    if (r.noise_product_hbar) {
      const double p = *r.noise_product_hbar * constants::hbar;
      return SquidCircuit::make(*r.L_S, *r.L_I, lw, lp, k, S_phiphi, p * p / S_phiphi);
    }
    return SquidCircuit::quantum_limited(*r.L_S, *r.L_I, lw, lp, k, S_phiphi);
  } catch (const Error& e) {
    throw ValidationError(r.S_JJ ? "readout.S_JJ" : "readout", e.what());
  }
}

SimConfig resolve_simulation(const Scenario& s) {
  if (!s.simulation) throw ValidationError("simulation", "is required for this command");
  SimConfig c = s.simulation->config;
  c.modes.clear();
  for (std::size_t i = 0; i < s.simulation->modes.size(); ++i) {
    const SimModeSpec& spec = s.simulation->modes[i];
    const std::string key = "simulation.modes[" + std::to_string(i) + "]";
    const double f0 = spec.f0 ? *spec.f0 : trap_frequency(s, spec.axis, key + ".f0");
    const double mass = default_mass(s, spec.mass, key + ".mass");
    SimMode m = spec.mode;
    m.mode = spec.Q ? OscillatorMode::from_q(mass, f0, *spec.Q, spec.T0)
                    : OscillatorMode::from_gamma(mass, f0, *spec.gamma, spec.T0);
    c.modes.push_back(std::move(m));
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw ValidationError("simulation", e.what());
  }
  return c;
}

}  // namespace maglev::cli
