#include "maglev/cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "maglev/constants.hpp"
#include "maglev/csv.hpp"
#include "maglev/dynamics_sim.hpp"
#include "maglev/error.hpp"
#include "maglev/isolation.hpp"
#include "maglev/noise_budget.hpp"
#include "maglev/pickup_coupling.hpp"
#include "maglev/spectral_analysis.hpp"
#include "maglev/sphere_response.hpp"

namespace maglev::cli {

using nlohmann::json;

namespace {

using constants::pi;

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) f[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return f;
}

Table& quantity_table(Report& r, const std::string& name) {
  return r.table(name, {"quantity", "value", "units", "formula"});
}

void add_line(Table& t, json& results, const std::string& q, double v, const std::string& units,
              const std::string& formula) {
  t.add({q, v, units, formula});
  results[q] = std::isfinite(v) ? json(v) : json(nullptr);
}

Report cmd_frequencies(const Scenario& s) {
  Report r("frequencies", s.gravity);
  const double rho = need_sphere(s, false).rho;
  QuadrupoleField qf;
  if (s.field && s.field->coils) {
    const auto g = extract_gradients(*s.field->coils, s.field->gradient_step);
    qf = g.field;
    r.results["trace_residual"] = g.trace_residual;
    r.results["gradient_step"] = g.step;
  } else {
    qf = resolve_field(s);
  }
  const auto f = trap_frequencies(qf, rho);
  r.table("frequencies", {"fx_Hz", "fy_Hz", "fz_Hz"}).add({f.fx, f.fy, f.fz});
  r.results["gradients"] = {qf.bx(), qf.by(), qf.bz()};
  r.results["density"] = rho;
  r.results["frequencies_hz"] = {f.fx, f.fy, f.fz};
  r.results["gravity_sag"] = gravity_sag(f.fz, s.gravity);
  const Vec3 k = trap_stiffness_per_mass(qf, rho);
  r.results["stiffness_per_mass"] = {k[0], k[1], k[2]};
  return r;
}

PickupCoil build_pickup(const Scenario& s) {
  if (!s.readout || !s.readout->pickup) throw ValidationError("readout.pickup", "is required for this command");
  const PickupSpec& p = *s.readout->pickup;
  if (!p.loops.empty()) {
    PickupCoil coil;
    for (const auto& l : p.loops) coil.turns.push_back(square_loop(l.center, l.side, l.sense));
    coil.turn_count = static_cast<int>(coil.turns.size());
    return coil;
  }
  if (!p.turns) throw ValidationError("readout.pickup.turns", "is required without explicit loops");
  if (!p.inner_radius) throw ValidationError("readout.pickup.inner_radius", "is required without explicit loops");
  if (!p.height) throw ValidationError("readout.pickup.height", "is required without explicit loops");
  if (!(p.wire_width > 0.0)) throw ValidationError("readout.pickup.wire_width", "is required without explicit loops");
  if (!(p.wire_gap > 0.0)) throw ValidationError("readout.pickup.wire_gap", "is required without explicit loops");
  return PickupCoil::planar_spiral(*p.inner_radius, *p.turns, p.wire_width, p.wire_gap, *p.height,
                                   p.pitch_is_center_to_center);
}

bool has_circuit(const Scenario& s) { return s.readout && s.readout->L_S && s.readout->L_I; }

Report cmd_coupling(const Scenario& s) {
  Report r("coupling", s.gravity);
  const SphereParams sphere = sphere_params(s);
  const QuadrupoleField qf = resolve_field(s);
  const PickupCoil coil = build_pickup(s);
  const bool spiral = s.readout->pickup->loops.empty();
  Table& t = quantity_table(r, "coupling");
  auto& res = r.results;

  double nu = 0.0;
  std::vector<std::pair<std::string, double>> per_axis;
  if (spiral) {
    nu = coil_coupling(qf, sphere, coil, Axis::Z);
    double nu_numeric = 0.0;
    for (const auto& turn : coil.turns) nu_numeric += coupling_nu_numeric(qf, sphere, turn, Axis::Z);
    add_line(t, res, "nu_z", nu, "Wb/m", "sum of closed-form single-turn couplings");
    add_line(t, res, "nu_z_numeric", nu_numeric, "Wb/m", "d(flux of response field)/dc by quadrature");
    add_line(t, res, "nu_z_relative_difference", std::abs(nu_numeric - nu) / std::abs(nu), "1",
             "|nu_numeric - nu|/|nu|");
  } else {
    const char* names[] = {"nu_x", "nu_y", "nu_z"};
    for (int a = 0; a < 3; ++a) {
      const double v = coil_coupling(qf, sphere, coil, static_cast<Axis>(a));
      add_line(t, res, names[a], v, "Wb/m", "d(flux of response field)/dc by quadrature");
      per_axis.emplace_back(std::string(1, "xyz"[a]), v);
      if (a == 2) nu = v;
    }
  }

  double L_P = 0.0;
  if (s.readout->L_P) {
    L_P = *s.readout->L_P;
  } else if (spiral) {
    L_P = wheeler_inductance(coil, s.readout->search.wheeler);
  }
  if (spiral) {
    add_line(t, res, "outer_diameter", coil.outer_diameter(), "m", "d_out");
    add_line(t, res, "L_P_wheeler", wheeler_inductance(coil, s.readout->search.wheeler), "H",
             "K1 mu0 N^2 d_avg/(1 + K2 fill)");
  }
  if (has_circuit(s)) {
    if (!spiral && !s.readout->L_P) throw ValidationError("readout.L_P", "is required for explicit loops");
    const SquidCircuit c = resolve_circuit(s, L_P);
    const double eta = squid_coupling(nu, c);
    add_line(t, res, "M", c.mutual(), "H", "k sqrt(L_I L_S)");
    add_line(t, res, "eta", eta, "Wb/m", "nu M/(L_P + L_I + L_W)");
    add_line(t, res, "eta_phi0", to_flux_quanta(eta), "Phi0/m", "eta/Phi0");
    add_line(t, res, "S_nn", measurement_noise(eta, c.S_phiphi), "m^2/Hz", "S_phiphi/eta^2");
    add_line(t, res, "sqrt_S_nn", std::sqrt(measurement_noise(eta, c.S_phiphi)), "m/sqrt(Hz)", "sqrt(S_phiphi)/|eta|");
  } else if (s.readout->M_over_L) {
    const double ratio = *s.readout->M_over_L;
    if (per_axis.empty()) per_axis.emplace_back("z", nu);
    for (const auto& [axis, v] : per_axis) {
      const double eta = squid_coupling(v, ratio);
      add_line(t, res, "eta_" + axis, eta, "Wb/m", "nu (M/L)");
      add_line(t, res, "eta_" + axis + "_phi0", to_flux_quanta(eta), "Phi0/m", "eta/Phi0");
      if (s.readout->S_phiphi && eta != 0.0)
        add_line(t, res, "sqrt_S_nn_" + axis, std::sqrt(measurement_noise(eta, *s.readout->S_phiphi)), "m/sqrt(Hz)",
                 "sqrt(S_phiphi)/|eta|");
    }
  }
  return r;
}

Report cmd_optimize(const Scenario& s) {
  Report r("optimize-pickup", s.gravity);
  const SphereParams sphere = sphere_params(s);
  const QuadrupoleField qf = resolve_field(s);
  if (!s.readout || !s.readout->pickup) throw ValidationError("readout.pickup", "is required for this command");
  const PickupSpec& p = *s.readout->pickup;
  if (!(p.wire_width > 0.0)) throw ValidationError("readout.pickup.wire_width", "is required for this command");
  if (!(p.wire_gap > 0.0)) throw ValidationError("readout.pickup.wire_gap", "is required for this command");
  const SquidCircuit c = resolve_circuit(s, 0.0);
  PickupSearch search = s.readout->search;
  search.pitch_is_center_to_center = p.pitch_is_center_to_center;
  const auto o = optimize_pickup(sphere, qf.bz(), c, p.wire_width, p.wire_gap, search);

  Table& t = quantity_table(r, "optimize-pickup");
  auto& res = r.results;
  add_line(t, res, "turns", o.turns, "1", "N");
  add_line(t, res, "inner_radius", o.inner_radius, "m", "R_P");
  add_line(t, res, "height", o.height, "m", "Z_P");
  add_line(t, res, "height_over_R", o.height / sphere.radius(), "1", "Z_P/R");
  add_line(t, res, "height_at_constraint", o.height_at_constraint ? 1.0 : 0.0, "1", "Z_P == z_min");
  add_line(t, res, "nu", o.nu, "Wb/m", "sum of closed-form single-turn couplings");
  add_line(t, res, "L_P", o.L_P, "H", "K1 mu0 N^2 d_avg/(1 + K2 fill)");
  add_line(t, res, "eta", o.eta, "Wb/m", "nu M/(L_P + L_I + L_W)");
  add_line(t, res, "eta_phi0", to_flux_quanta(o.eta), "Phi0/m", "eta/Phi0");
  add_line(t, res, "S_nn", o.S_nn, "m^2/Hz", "(2 S_EE/k^2) (L_P + L_I + L_W)^2/(nu^2 L_I)");
  add_line(t, res, "sqrt_S_nn", std::sqrt(o.S_nn), "m/sqrt(Hz)", "sqrt(S_nn)");
  add_line(t, res, "evaluations", static_cast<double>(o.evaluations), "1", "objective evaluations");
  res["search"] = {{"z_min", o.search.z_min}, {"z_max", o.search.z_max}, {"r_min", o.search.r_min},
                   {"r_max", o.search.r_max}, {"n_max", o.search.n_max}};
  return r;
}

Report cmd_isolation(const Scenario& s) {
  if (!s.isolation) throw ValidationError("isolation", "is required for this command");
  const IsolationSpec& iso = *s.isolation;
  for (std::size_t i = 0; i < iso.stack.stages.size(); ++i) {
    try {
      iso.stack.stages[i].validate();
    } catch (const Error& e) {
      throw ValidationError("isolation.stages[" + std::to_string(i) + "]", e.what());
    }
  }
  Report r("isolation", s.gravity);
  const auto modes = normal_modes(iso.stack);

  Table& curve = r.table("isolation", {"f_Hz", "transmissibility"});
  int skipped = 0;
  for (double f : log_grid(iso.f_min, iso.f_max, iso.points)) {
    try {
      curve.add({f, transfer_function(iso.stack, modes, f)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OnResonance) throw;
      ++skipped;
    }
  }
  r.results["skipped_on_resonance"] = skipped;

  Table& mt = r.table("isolation_modes", {"mode", "f_Hz"});
  double prod_modes = 1.0, prod_stages = 1.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    mt.add({static_cast<double>(i + 1), modes[i]});
    prod_modes *= modes[i] * modes[i];
  }
  json stages = json::array();
  for (const auto& st : iso.stack.stages) {
    const double fv = stage_frequency(st);
    prod_stages *= fv * fv;
    stages.push_back({{"spring_constant", stage_spring_constant(st)},
                      {"stage_frequency_hz", fv},
                      {"pendulum_frequency_hz", pendulum_frequency(st, s.gravity)}});
  }
  r.results["modes_hz"] = modes;
  r.results["stages"] = stages;
  r.results["mode_product_relative_error"] = std::abs(prod_modes - prod_stages) / prod_stages;

  Table& yt = r.table("isolation_yield", {"stage", "supported_mass_kg", "load_ratio", "warning"});
  const auto y = yield_check(iso.stack, iso.payload_mass);
  for (std::size_t i = 0; i < y.size(); ++i) {
    yt.add({static_cast<double>(i + 1), y[i].supported_mass, y[i].load_ratio, y[i].warning ? "yes" : "no"});
  }

  json evals = json::array();
  for (double f : iso.evaluate_at) {
    evals.push_back({{"f_Hz", f},
                     {"transmissibility", transfer_function(iso.stack, modes, f)},
                     {"asymptote", f > 0.0 ? json(transfer_asymptote(iso.stack, f)) : json(nullptr)}});
  }
  r.results["evaluations"] = evals;
  return r;
}

Report cmd_budget(const Scenario& s) {
  Report r("budget", s.gravity);
  BudgetInputs in;
  in.mode = resolve_mode(s);
  in.gravity = s.gravity;
  if (s.noise) {
    in.S_nn = s.noise->S_nn;
    in.drift_bin_hz = s.noise->drift_bin_hz;
    in.S_epseps = s.noise->S_epseps;
    in.S_deltadelta = s.noise->S_deltadelta;
  }
  if (has_circuit(s)) {
    in.circuit = resolve_circuit(s, s.readout->L_P.value_or(0.0));
    if (!s.readout->eta_phi0) throw ValidationError("readout.eta_phi0", "is required with a readout circuit");
    in.eta = from_flux_quanta(*s.readout->eta_phi0);
  }
  Table& t = quantity_table(r, "budget");
  for (const auto& line : noise_budget(in)) add_line(t, r.results, line.quantity, line.value, line.units, line.formula);
  return r;
}

Report cmd_filter(const Scenario& s) {
  if (!s.filter) throw ValidationError("filter", "is required for this command");
  const FilterSpec& fs = *s.filter;
  const RlFilter filt{fs.kappa};
  Report r("filter", s.gravity);
  Table& t = r.table("filter", {"f_Hz", "amplitude", "amplitude_db", "psd_db"});
  for (double f : log_grid(fs.f_min, fs.f_max, fs.points)) {
    t.add({f, filt.amplitude(f), filt.amplitude_db(f), filt.psd_db(f)});
  }
  Table& st = r.table("filter_step", {"t_s", "response"});
  const double t_end = 5.0 * filt.time_constant();
  for (int i = 0; i < fs.step_points; ++i) {
    const double tt = t_end * i / (fs.step_points - 1);
    st.add({tt, filt.step_response(tt)});
  }
  r.results["kappa"] = fs.kappa;
  r.results["time_constant"] = filt.time_constant();
  r.results["corner_frequency_hz"] = fs.kappa / (2.0 * pi);
  json evals = json::array();
  for (double f : fs.evaluate_at) {
    evals.push_back({{"f_Hz", f},
                     {"amplitude", filt.amplitude(f)},
                     {"amplitude_db", filt.amplitude_db(f)},
                     {"psd_db", filt.psd_db(f)}});
  }
  r.results["evaluations"] = evals;
  return r;
}

std::string suffix(std::size_t runs, std::size_t i) { return runs > 1 ? "_run" + std::to_string(i) : ""; }

Report cmd_simulate(const Options& o, const Scenario& s) {
  SimConfig base = resolve_simulation(s);
  if (o.seed) base.seed = *o.seed;
  const SimulationSpec& spec = *s.simulation;
  std::vector<SimConfig> configs;
  std::vector<double> gains;
  const int runs = o.sweep > 0 ? o.sweep : spec.sweep_runs;
  if (!spec.sweep_gains.empty()) {
    for (std::size_t i = 0; i < spec.sweep_gains.size(); ++i) {
      SimConfig c = base;
      c.feedback.enabled = true;
      c.feedback.gain = spec.sweep_gains[i];
      c.seed = derive_seed(base.seed, i);
      configs.push_back(c);
    }
  } else if (runs > 0) {
    for (int i = 0; i < runs; ++i) {
      SimConfig c = base;
      c.seed = derive_seed(base.seed, static_cast<std::uint64_t>(i));
      configs.push_back(c);
    }
  } else {
    configs.push_back(base);
  }
  const auto results = simulate_sweep(configs, o.workers ? o.workers : spec.workers);

  Report r("simulate", s.gravity);
  r.seed = base.seed;
  r.config_digest = config_digest(base);
  Table& summary = r.table("simulate", {"run", "mode", "seed", "feedback_gain", "x_rms", "v_rms", "T_position",
                                        "T_velocity", "config_digest"});
  json runs_doc = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const SimConfig& c = configs[i];
    for (std::size_t m = 0; m < results[i].series.size(); ++m) {
      const TimeSeries& ts = results[i].series[m];
      const OscillatorMode& mode = c.modes[m].mode;
      const std::string tag = ts.mode_name + suffix(results.size(), i);
      double x2 = 0.0, v2 = 0.0;
      for (std::size_t k = 0; k < ts.size(); ++k) {
        x2 += ts.x[k] * ts.x[k];
        v2 += ts.v[k] * ts.v[k];
      }
      x2 /= ts.size();
      v2 /= ts.size();
      const double gain = c.feedback.enabled ? c.feedback.gain : 0.0;
      summary.add({static_cast<double>(i), ts.mode_name, std::to_string(ts.seed), gain, std::sqrt(x2), std::sqrt(v2),
                   mode.mass * mode.omega0 * mode.omega0 * x2 / constants::k_B, mode.mass * v2 / constants::k_B,
                   hex_digest(ts.config_digest)});

      Table& series = r.table("timeseries_" + tag, {"t", "x", "y_meas"});
      series.inline_json = false;
      series.metadata = {{"mode", ts.mode_name},
                         {"seed", std::to_string(ts.seed)},
                         {"config_digest", hex_digest(ts.config_digest)},
                         {"sample_interval", format_number(ts.sample_interval)},
                         {"f0_Hz", format_number(mode.f0())},
                         {"gamma", format_number(mode.gamma)},
                         {"mass", format_number(mode.mass)},
                         {"feedback_gain", format_number(gain)}};
      for (std::size_t k = 0; k < ts.size(); ++k) series.add({k * ts.sample_interval, ts.x[k], ts.y[k]});

      const std::size_t seg = ts.size() / static_cast<std::size_t>(spec.psd_segments);
      if (seg >= 8) {
        const auto p = welch_psd(ts.y, 1.0 / ts.sample_interval, seg);
        Table& pt = r.table("psd_" + tag, {"f_Hz", "psd"});
        pt.inline_json = false;
        pt.metadata = {{"mode", ts.mode_name}, {"seed", std::to_string(ts.seed)}, {"segments", std::to_string(p.segments)}};
        for (std::size_t k = 0; k < p.f.size(); ++k) pt.add({p.f[k], p.psd[k]});
      }
      runs_doc.push_back({{"run", i}, {"mode", ts.mode_name}, {"seed", ts.seed}, {"feedback_gain", gain},
                          {"x_rms", std::sqrt(x2)}, {"samples", ts.size()}});
    }
  }
  r.results["runs"] = runs_doc;
  return r;
}

struct CsvData {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // per column
};

CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("analysis.input", "cannot read " + path.string());
  CsvData out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) out.metadata[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (out.columns.empty()) {
      out.columns = cells;
      out.data.resize(cells.size());
      continue;
    }
    if (cells.size() != out.columns.size()) {
      throw ValidationError("analysis.input", path.string() + " line " + std::to_string(line_no) + ": wrong column count");
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      char* end = nullptr;
      const double v = std::strtod(cells[i].c_str(), &end);
      if (end == cells[i].c_str()) {
        throw ValidationError("analysis.input", path.string() + " line " + std::to_string(line_no) + ": not a number");
      }
      out.data[i].push_back(v);
    }
  }
  if (out.columns.empty()) throw ValidationError("analysis.input", path.string() + " has no header row");
  return out;
}

const std::vector<double>& column(const CsvData& d, const std::string& name, const std::string& key) {
  const auto it = std::find(d.columns.begin(), d.columns.end(), name);
  if (it == d.columns.end()) throw ValidationError(key, "column " + name + " not found in the input");
  return d.data[static_cast<std::size_t>(it - d.columns.begin())];
}

Report cmd_analyze(const Scenario& s) {
  if (!s.analysis) throw ValidationError("analysis", "is required for this command");
  const AnalysisSpec& a = *s.analysis;
  const CsvData d = read_csv(a.input);
  const auto& x = column(d, a.column, "analysis.column");
  double dt = 0.0;
  if (const auto it = std::find(d.columns.begin(), d.columns.end(), "t"); it != d.columns.end()) {
    const auto& t = d.data[static_cast<std::size_t>(it - d.columns.begin())];
    if (t.size() >= 2) dt = (t.back() - t.front()) / (t.size() - 1);
  } else if (d.metadata.count("sample_interval")) {
    dt = std::strtod(d.metadata.at("sample_interval").c_str(), nullptr);
  }
  if (!(dt > 0.0)) throw ValidationError("analysis.input", "needs a t column or sample_interval metadata");
  const double fs = 1.0 / dt;
  if (x.size() < 16) throw ValidationError("analysis.input", "needs at least 16 samples");

  Report r("analyze", s.gravity);
  Table& t = quantity_table(r, "analyze");
  auto& res = r.results;
  const std::size_t seg = a.segment_length > 0 ? static_cast<std::size_t>(a.segment_length) : x.size() / 8;
  if (seg > x.size()) throw ValidationError("analysis.segment_length", "exceeds the series length");
  const Psd p = welch_psd(x, fs, std::max<std::size_t>(seg, 8));
  Table& pt = r.table("analyze_psd", {"f_Hz", "psd"});
  pt.inline_json = false;
  for (std::size_t k = 0; k < p.f.size(); ++k) pt.add({p.f[k], p.psd[k]});
  add_line(t, res, "sample_rate", fs, "Hz", "1/dt");
  add_line(t, res, "resolution", p.df, "Hz", "fs/segment_length");

  std::optional<double> f0 = a.f0_guess;
  if (a.method == "lorentzian" || a.method == "both") {
    if (!(a.f_hi > 0.0)) throw ValidationError("analysis.f_hi", "is required for a Lorentzian fit");
    const auto fit = lorentzian_fit(p, a.f_lo, a.f_hi);
    add_line(t, res, "lorentzian_f0", fit.f0, "Hz", "peak center");
    add_line(t, res, "lorentzian_gamma", fit.gamma, "1/s", "full width 2 pi FWHM");
    add_line(t, res, "lorentzian_q", 2.0 * pi * fit.f0 / fit.gamma, "1", "omega0/gamma");
    add_line(t, res, "lorentzian_area", fit.area, "units^2", "C/(4 gamma omega0^2)");
    add_line(t, res, "lorentzian_background", fit.background, "units^2/Hz", "B");
    add_line(t, res, "lorentzian_residual", fit.residual, "1", "rms log residual");
    add_line(t, res, "lorentzian_resolution_limited", fit.resolution_limited ? 1.0 : 0.0, "1", "gamma/2pi < 2 df");
    if (!f0) f0 = fit.f0;
  }
  if (a.method == "ringdown" || a.method == "both") {
    if (!f0) throw ValidationError("analysis.f0_guess", "is required for a ringdown fit");
    const auto fit = ringdown_q(x, fs, *f0, a.ringdown);
    add_line(t, res, "ringdown_gamma", fit.gamma, "1/s", "-2 d ln(envelope)/dt");
    add_line(t, res, "ringdown_q", fit.q, "1", "omega0/gamma");
    add_line(t, res, "ringdown_f0", fit.f0, "Hz", "demodulated phase slope");
    add_line(t, res, "ringdown_amplitude", fit.amplitude, "units", "envelope at t = 0");
    add_line(t, res, "ringdown_residual", fit.residual, "1", "rms log residual");
    add_line(t, res, "ringdown_jump", fit.jump ? 1.0 : 0.0, "1", "two-rate model preferred");
    if (fit.jump) {
      add_line(t, res, "ringdown_jump_time", fit.jump_time, "s", "breakpoint");
      add_line(t, res, "ringdown_gamma_before", fit.gamma_before, "1/s", "rate before the breakpoint");
      add_line(t, res, "ringdown_gamma_after", fit.gamma_after, "1/s", "rate after the breakpoint");
    }
  }
  if (a.flux_column) {
    if (!(a.f_hi > 0.0)) throw ValidationError("analysis.f_hi", "is required for calibration");
    const auto& flux = column(d, *a.flux_column, "analysis.flux_column");
    const auto cal = calibrate_coupling(flux, x, fs, a.f_lo, a.f_hi, a.calibration_uncertainty);
    add_line(t, res, "calibration_eta", cal.eta, "flux/displacement", "band rms ratio");
    add_line(t, res, "calibration_uncertainty", cal.uncertainty, "flux/displacement", "relative uncertainty x eta");
  }
  return r;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"frequencies", "coupling", "optimize-pickup", "isolation",
                                                 "budget",      "filter",   "simulate",        "analyze"};
  return names;
}

Report run_command(const Options& o, const Scenario& s) {
  if (o.command == "frequencies") return cmd_frequencies(s);
  if (o.command == "coupling") return cmd_coupling(s);
  if (o.command == "optimize-pickup") return cmd_optimize(s);
  if (o.command == "isolation") return cmd_isolation(s);
  if (o.command == "budget") return cmd_budget(s);
  if (o.command == "filter") return cmd_filter(s);
  if (o.command == "simulate") return cmd_simulate(o, s);
  if (o.command == "analyze") return cmd_analyze(s);
  throw ValidationError("command", "unknown command " + o.command);
}

namespace {

void print_constants(std::ostream& out, Format format, double g) {
  const json c = constants_document(g);
  if (format == Format::Json) {
    out << c.dump(2) << '\n';
    return;
  }
  const std::map<std::string, std::string> units = {
      {"mu0", "N/A^2"}, {"k_B", "J/K"}, {"hbar", "J s"}, {"flux_quantum", "Wb"}, {"g", "m/s^2"}};
  CsvTable t({"name", "value", "units"});
  for (const auto& [k, v] : c.items()) t.add_row({k, format_number(v.get<double>()), units.at(k)});
  out << t.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Levitated superconducting sphere: trap, readout, noise and dynamics calculator", "maglev"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  Options o;
  std::string scenario, out_dir, format = "csv";
  std::uint64_t seed = 0;
  bool show_constants = false;
  app.add_option("--scenario", scenario, "Scenario document (JSON)");
  app.add_option("--out", out_dir, "Directory for CSV and JSON outputs");
  app.add_option("--format", format, "Standard output format")->check(CLI::IsMember({"csv", "json", "json-like"}));
  auto* seed_opt = app.add_option("--seed", seed, "Master seed for simulate");
  app.add_option("--workers", o.workers, "Worker threads for simulate sweeps (0: all cores)");
  app.add_flag("--constants", show_constants, "Print the physical constants and exit");

  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> help = {
      {"frequencies", "Trap frequencies from gradients or coil geometry"},
      {"coupling", "Pickup coupling nu, SQUID coupling eta and imprecision"},
      {"optimize-pickup", "Minimize S_nn over spiral radius, height and turns"},
      {"isolation", "Normal modes, transmissibility and wire loads of a pendulum stack"},
      {"budget", "Sensing, heating and ground-state noise budget for one mode"},
      {"filter", "RL low-pass response"},
      {"simulate", "Stochastic time-domain simulation"},
      {"analyze", "PSD, Lorentzian, ringdown and calibration fits of a recorded series"}};
  for (const auto& name : command_names()) subs[name] = app.add_subcommand(name, help.at(name));
  subs["simulate"]->add_option("--sweep", o.sweep, "Run N replicas with derived seeds");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  }
  o.format = format == "csv" ? Format::Csv : Format::Json;

  try {
    Scenario s;
    if (!scenario.empty()) s = load_scenario(scenario);
    if (show_constants) {
      print_constants(out, o.format, s.gravity);
      return exit_ok;
    }
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) o.command = name;
    }
    if (o.command.empty()) throw ValidationError("command", "no command given; use --help");
    if (scenario.empty()) throw ValidationError("--scenario", "is required");
    if (seed_opt->count() > 0) o.seed = seed;
    if (!out_dir.empty()) o.out = out_dir;

    const Report report = run_command(o, s);
    if (o.out) {
      try {
        report.write(*o.out);
      } catch (const std::exception& e) {
        throw ValidationError("--out", e.what());
      }
    }
    report.print(out, o.format);
    return exit_ok;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_numerical;
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return exit_numerical;
  }
}

}  // namespace maglev::cli
