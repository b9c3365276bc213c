#pragma once

#include <numbers>

namespace maglev::constants {

// CODATA 2018 values, SI units.
inline constexpr double pi = std::numbers::pi;
inline constexpr double mu0 = 1.25663706212e-6;        // N/A^2
inline constexpr double k_B = 1.380649e-23;            // J/K
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double flux_quantum = 2.067833848e-15; // Wb
inline constexpr double standard_gravity = 9.81;       // m/s^2, overridable per scenario
inline constexpr double helium_mass = 6.6464731e-27;   // kg, He-4 atom

}  // namespace maglev::constants
