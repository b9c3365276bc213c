#pragma once

#include <vector>

#include "maglev/constants.hpp"

namespace maglev {

/// One pendulum stage: a plate of mass m hung from the stage above (or the
/// support) by N identical straight wires.
struct Stage {
  double mass = 0.0;            // kg
  int wire_count = 1;
  double wire_length = 0.0;     // m
  double wire_diameter = 0.0;   // m
  double youngs_modulus = 193e9;  // Pa, type 304 steel
  double yield_load = 0.0;      // kg-force per wire; 0 skips the yield check

  /// Throws SingularMass for m = 0 and InvalidArgument for other bad fields.
  void validate() const;
};

/// Stages ordered from the support (top) to the payload (bottom).
struct IsolationStack {
  std::vector<Stage> stages;

  void validate() const;
};

/// k = N Y D^2 pi / (4 L).
double stage_spring_constant(const Stage& stage);
/// f_v = sqrt(k/m) / (2 pi).
double stage_frequency(const Stage& stage);
/// Single-stage horizontal pendulum frequency sqrt(g/L) / (2 pi).
double pendulum_frequency(const Stage& stage, double g = constants::standard_gravity);

/// Eigenfrequencies of the vertical mass-spring chain, ascending, Hz.
std::vector<double> normal_modes(const IsolationStack& stack);

/// prod f_v,i^2 / |f_n,i^2 - f^2|. Throws OnResonance within 1e-9 relative of a mode.
double transfer_function(const IsolationStack& stack, double f_hz);
/// Same, reusing precomputed normal modes.
double transfer_function(const IsolationStack& stack, const std::vector<double>& modes, double f_hz);

/// prod f_v,i^2 / f^(2n), the high-frequency asymptote.
double transfer_asymptote(const IsolationStack& stack, double f_hz);

/// Load per wire divided by the yield load.
double yield_ratio(double supported_mass, int wire_count, double yield_load);

struct YieldStatus {
  double supported_mass = 0.0;  // this stage and everything below, kg
  double load_ratio = 0.0;
  bool warning = false;         // ratio > 0.5
};

/// Per stage, top to bottom. Throws WireOverload when any ratio reaches 1.
std::vector<YieldStatus> yield_check(const IsolationStack& stack, double payload_mass = 0.0);

}  // namespace maglev
