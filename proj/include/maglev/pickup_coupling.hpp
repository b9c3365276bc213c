#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "maglev/fieldmodel.hpp"
#include "maglev/sphere_response.hpp"

namespace maglev {

enum class Axis { X = 0, Y = 1, Z = 2 };

/// Circular loop coaxial with the trap axis, radius R_P at height Z_P above
/// the trap center.
struct CoaxialCircle {
  double radius = 0.0;
  double height = 0.0;
};

/// Closed planar or non-planar loop; the closing edge from the last vertex
/// back to the first is implicit.
struct Polyline {
  std::vector<Vec3> vertices;
};

/// Pickup loop in trap-centered coordinates. Orientation follows the right-hand
/// rule: a CoaxialCircle with sense +1 has its normal along +z, a Polyline
/// with sense +1 circulates in vertex order. sense = -1 reverses it.
struct LoopGeometry {
  std::variant<CoaxialCircle, Polyline> shape;
  int sense = 1;

  static LoopGeometry coaxial(double radius, double height, int sense = 1);
  static LoopGeometry polyline(std::vector<Vec3> vertices, int sense = 1);

  void validate() const;
};

/// Square loop of side `side` centred at `center` in the plane z = center.z().
LoopGeometry square_loop(const Vec3& center, double side, int sense = 1);

/// Planar spiral (or any list of loops) forming one pickup coil.
struct PickupCoil {
  std::vector<LoopGeometry> turns;
  double wire_width = 0.0;
  double wire_gap = 0.0;
  double inner_radius = 0.0;  // inner edge of the first turn, m
  int turn_count = 0;
  bool pitch_is_center_to_center = false;

  /// Radius step between turns: width + gap, or gap alone when the gap is
  /// quoted as a center-to-center pitch.
  double pitch() const { return pitch_is_center_to_center ? wire_gap : wire_width + wire_gap; }
  double inner_diameter() const { return 2.0 * inner_radius; }
  double outer_diameter() const;

  /// Coaxial planar spiral at height Z_P; turn i has centerline radius
  /// inner_radius + width/2 + i * pitch.
  static PickupCoil planar_spiral(double inner_radius, int turns, double width, double gap, double height,
                                  bool pitch_is_center_to_center = false);

  void validate() const;
};

/// Lumped SQUID readout circuit. S_phiJ is taken as zero.
struct SquidCircuit {
  double L_S = 0.0;       // SQUID inductance, H
  double L_I = 0.0;       // input coil, H
  double L_W = 0.0;       // wiring stray inductance, H
  double L_P = 0.0;       // pickup coil, H
  double k = 0.0;         // input-coil/SQUID coupling constant, |k| < 1
  double S_phiphi = 0.0;  // flux noise PSD, Wb^2/Hz
  double S_JJ = 0.0;      // circulating-current noise PSD, A^2/Hz

  /// Validates every field, including sqrt(S_phiphi S_JJ) >= hbar.
  static SquidCircuit make(double L_S, double L_I, double L_W, double L_P, double k, double S_phiphi, double S_JJ);

  /// S_JJ chosen at the quantum limit, S_JJ = hbar^2 / S_phiphi.
  static SquidCircuit quantum_limited(double L_S, double L_I, double L_W, double L_P, double k, double S_phiphi);

  double mutual() const;                                   // M = k sqrt(L_I L_S)
  double total_inductance() const { return L_P + L_I + L_W; }
  double energy_resolution() const { return S_phiphi / (2.0 * L_S); }  // S_EE, J/Hz
  double effective_inductance() const;                     // sqrt(S_phiphi / S_JJ)
  double noise_product() const;                            // sqrt(S_phiphi S_JJ)

  SquidCircuit with_pickup_inductance(double L_P) const;
  void validate() const;
};

struct NumericCouplingOptions {
  double step = 1e-7;       // sphere-offset finite-difference step, m (Richardson: h, h/2)
  int radial_nodes = 48;    // Gauss-Legendre nodes across a cap/disk or per fan triangle
  int azimuth_nodes = 64;   // periodic trapezoid nodes around a cap/disk
  Vec3 sphere_offset = Vec3::Zero();  // equilibrium displacement, e.g. gravity sag
};

enum class SpanningSurface { Auto, FlatDisk, SphericalCap };

/// Flux of the response field -grad Phi of `sol` through `loop` given in
/// sphere-centered coordinates. Auto picks the spherical cap for coaxial
/// circles and a centroid fan for polylines.
double response_flux(const MultipoleSolution& sol, const LoopGeometry& loop,
                     SpanningSurface surface = SpanningSurface::Auto, const NumericCouplingOptions& options = {});

/// nu = d(flux through loop)/dc along `axis`, where c is the trap-center
/// position relative to the sphere (the loop moves rigidly with the trap).
/// Only the response field contributes; the applied flux does not depend on
/// the sphere position. Throws LoopIntersectsSphere if the loop or its
/// spanning surface enters the sphere.
double coupling_nu_numeric(const QuadrupoleField& qf, const SphereParams& sphere, const LoopGeometry& loop, Axis axis,
                           const NumericCouplingOptions& options = {});

/// Closed-form coupling of one coaxial circular turn to the z motion, Wb/m.
/// Throws LoopInsideSphere when R_P^2 + Z_P^2 <= R^2.
double coupling_nu_analytic(double bz, double sphere_radius, double loop_radius, double loop_height);

/// Sum over turns: closed form for coaxial turns on the z axis, quadrature otherwise.
double coil_coupling(const QuadrupoleField& qf, const SphereParams& sphere, const PickupCoil& coil, Axis axis,
                     const NumericCouplingOptions& options = {});

/// eta = nu M / (L_P + L_I + L_W), Wb/m.
double squid_coupling(double nu, const SquidCircuit& circuit);
/// eta = nu (M/L) when only the ratio is known.
double squid_coupling(double nu, double m_over_l);

inline double to_flux_quanta(double wb) { return wb / constants::flux_quantum; }
inline double from_flux_quanta(double phi0) { return phi0 * constants::flux_quantum; }

struct WheelerCoefficients {
  double k1 = 2.25;
  double k2 = 3.55;
};

/// L_P = K1 mu0 N^2 d_avg / (1 + K2 fill), fill = (d_out - d_in)/(d_out + d_in).
double wheeler_inductance(const PickupCoil& coil, const WheelerCoefficients& coefficients = {});

/// S_nn = (2 S_EE / k^2) (L_P + L_I + L_W)^2 / (nu^2 L_I) with L_P from the
/// Wheeler formula for `coil`. Throws ZeroCoupling for nu = 0.
double measurement_noise(double nu, const PickupCoil& coil, const SquidCircuit& circuit,
                         const WheelerCoefficients& coefficients = {});
/// S_nn = S_phiphi / eta^2.
double measurement_noise(double eta, double S_phiphi);

struct PickupSearch {
  double z_min = 0.0;          // Z_P lower bound; 0 means the sphere radius
  double z_max = 0.0;          // 0 means 4 R
  double r_min = 0.0;          // inner radius bounds, m
  double r_max = 0.0;          // 0 means R
  int n_max = 400;
  int r_grid = 48;
  int z_grid = 24;
  int refine_neighbours = 3;   // N values on each side re-refined locally
  bool pitch_is_center_to_center = false;
  WheelerCoefficients wheeler;
};

struct PickupOptimum {
  double inner_radius = 0.0;
  double height = 0.0;
  int turns = 0;
  double nu = 0.0;       // Wb/m
  double eta = 0.0;      // Wb/m
  double L_P = 0.0;      // H
  double S_nn = 0.0;     // m^2/Hz
  bool height_at_constraint = false;
  PickupSearch search;   // bounds actually used
  long evaluations = 0;
};

/// Minimizes S_nn over (inner radius, Z_P, N): a coarse grid over all three
/// followed by golden-section refinement of inner radius and Z_P for the best
/// N and its neighbours. Ties go to smaller N, then smaller inner radius.
/// Throws InfeasibleConstraint if the bounds leave no exterior geometry.
PickupOptimum optimize_pickup(const SphereParams& sphere, double bz, const SquidCircuit& circuit_template,
                              double wire_width, double wire_gap, const PickupSearch& search = {});

/// Objective used by the optimizer, exposed for oracles: S_nn of a coaxial
/// planar spiral with the analytic per-turn kernel.
double spiral_measurement_noise(const SphereParams& sphere, double bz, const SquidCircuit& circuit, double wire_width,
                                double wire_gap, double inner_radius, double height, int turns,
                                const PickupSearch& search = {});

}  // namespace maglev
