#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace maglev {

using Vec3 = Eigen::Vector3d;

/// Linear trap field (b_x x, b_y y, b_z z) near the field zero, T/m.
/// The trace constraint b_x + b_y + b_z = 0 holds by construction.
class QuadrupoleField {
 public:
  QuadrupoleField() = default;

  /// b_z is set to -(b_x + b_y).
  static QuadrupoleField from_xy(double bx, double by);

  /// Gradient magnitudes as usually quoted, e.g. (57, 90, 147) T/m. Signs are
  /// assigned as (+|b_x|, +|b_y|, -|b_z|); the magnitudes must satisfy
  /// |b_x| + |b_y| = |b_z| to `rel_tol`.
  static QuadrupoleField from_magnitudes(double abs_bx, double abs_by, double abs_bz, double rel_tol = 1e-9);

  /// Signed triple; throws unless the trace vanishes to `rel_tol`. The stored
  /// b_z is recomputed from b_x and b_y so the trace is exactly zero.
  static QuadrupoleField from_triple(double bx, double by, double bz, double rel_tol = 1e-9);

  double bx() const { return bx_; }
  double by() const { return by_; }
  double bz() const { return bz_; }
  Vec3 gradients() const { return {bx_, by_, bz_}; }
  double trace() const { return bx_ + by_ + bz_; }

  /// |b_x| <= |b_y| <= |b_z|, the axis convention used throughout. Reported,
  /// never enforced.
  bool ordered() const;

  QuadrupoleField scaled(double factor) const { return from_xy(factor * bx_, factor * by_); }

 private:
  QuadrupoleField(double bx, double by) : bx_(bx), by_(by), bz_(-(bx + by)) {}

  double bx_ = 0.0;
  double by_ = 0.0;
  double bz_ = 0.0;
};

/// Field of the quadrupole at `point` when the trap center sits at
/// -trap_offset, i.e. B = (b_x (x + x0), b_y (y + y0), b_z (z + z0)).
Vec3 quadrupole_field(const QuadrupoleField& qf, const Vec3& trap_offset, const Vec3& point);

struct WindingOffset {
  double radial = 0.0;  // added to both semi-axes, m
  double axial = 0.0;   // moves the turn away from the midplane, m
};

/// Two coaxial elliptical coils centered on the z axis at z = +/- separation/2.
/// Each coil is a stack of filaments, one per turn; turn i of both coils is
/// displaced by offsets[i] (mirrored for the lower coil).
struct CoilPair {
  double semi_x = 0.0;       // semi-axis along x, m
  double semi_y = 0.0;       // semi-axis along y, m
  double separation = 0.0;   // center-to-center distance d, m
  int turns = 1;
  double current_upper = 0.0;  // A; positive is counter-clockwise seen from +z
  double current_lower = 0.0;  // A
  std::vector<WindingOffset> offsets;  // empty, or one entry per turn

  static CoilPair anti_helmholtz(double semi_x, double semi_y, double separation, int turns, double current);

  /// Throws InvalidArgument on non-positive geometry or a mismatched offset list.
  void validate() const;

  bool is_anti_helmholtz() const { return current_upper * current_lower < 0.0; }
};

struct BiotSavartOptions {
  int initial_nodes = 512;        // periodic trapezoid nodes per filament
  int max_nodes = 1 << 18;
  double rel_tolerance = 1e-8;    // stop once doubling changes B by less than this
};

/// Field of the coil pair at `point` by periodic trapezoid quadrature of the
/// Biot-Savart line integral over every filament. Doubling stops when the
/// change is below rel_tolerance times max(|B|, sum of per-filament |B|).
/// Throws PointOnFilament when the point lies within 1e-9 m of a filament.
Vec3 biot_savart_field(const CoilPair& coils, const Vec3& point, const BiotSavartOptions& options = {});

struct GradientExtraction {
  QuadrupoleField field;
  double trace_residual = 0.0;  // |b_x + b_y + b_z| / max|b_i| before renormalization
  double step = 0.0;            // finite-difference step used, m
};

/// Central differences of the coil field at the symmetry center with one
/// Richardson extrapolation (steps h and h/2). The triple is renormalized to
/// zero trace by removing the mean; the pre-renormalization residual is kept.
/// Throws NotAntiHelmholtz for same-sign currents.
GradientExtraction extract_gradients(const CoilPair& coils, double step = 1e-6,
                                     const BiotSavartOptions& options = {});

struct FieldSample {
  Vec3 position;
  Vec3 field;
};

/// Regular grid with ceil(cbrt(n_samples)) points per axis over the cube
/// [-half_width, half_width]^3, origin excluded.
std::vector<Vec3> cube_sample_points(double half_width, int n_samples);

/// max |B - (b_x x, b_y y, b_z z)| / |B| over the samples.
double quadrupole_deviation(std::span<const FieldSample> samples, const QuadrupoleField& qf);

/// quadrupole_deviation of the coil field on cube_sample_points, using the
/// gradients from extract_gradients. Requires n_samples >= 100.
double quadrupole_fit_rms(const CoilPair& coils, double half_width, int n_samples,
                          const BiotSavartOptions& options = {});

std::vector<FieldSample> sample_field(const CoilPair& coils, std::span<const Vec3> points,
                                      const BiotSavartOptions& options = {});

}  // namespace maglev
