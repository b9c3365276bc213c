#include "maglev/fieldmodel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "maglev/constants.hpp"
#include "maglev/error.hpp"
#include "maglev/kernels.hpp"

namespace maglev {

QuadrupoleField QuadrupoleField::from_xy(double bx, double by) {
  require(std::isfinite(bx) && std::isfinite(by), "quadrupole gradients must be finite");
  return QuadrupoleField(bx, by);
}

QuadrupoleField QuadrupoleField::from_magnitudes(double abs_bx, double abs_by, double abs_bz, double rel_tol) {
  require(abs_bx >= 0.0 && abs_by >= 0.0 && abs_bz >= 0.0, "gradient magnitudes must be non-negative");
  const double scale = std::max({abs_bx, abs_by, abs_bz});
  if (std::abs(abs_bx + abs_by - abs_bz) > rel_tol * scale) {
    std::ostringstream msg;
    msg << "gradient magnitudes (" << abs_bx << ", " << abs_by << ", " << abs_bz
        << ") violate |b_x| + |b_y| = |b_z|";
    fail(ErrorCode::InvalidArgument, msg.str());
  }
  return QuadrupoleField(abs_bx, abs_by);
}

QuadrupoleField QuadrupoleField::from_triple(double bx, double by, double bz, double rel_tol) {
  const double scale = std::max({std::abs(bx), std::abs(by), std::abs(bz)});
  if (std::abs(bx + by + bz) > rel_tol * scale) {
    std::ostringstream msg;
    msg << "gradients (" << bx << ", " << by << ", " << bz << ") are not trace-free";
    fail(ErrorCode::InvalidArgument, msg.str());
  }
  return from_xy(bx, by);
}

bool QuadrupoleField::ordered() const {
  return std::abs(bx_) <= std::abs(by_) && std::abs(by_) <= std::abs(bz_);
}

Vec3 quadrupole_field(const QuadrupoleField& qf, const Vec3& trap_offset, const Vec3& point) {
  const Vec3 r = point + trap_offset;
  return {qf.bx() * r.x(), qf.by() * r.y(), qf.bz() * r.z()};
}

CoilPair CoilPair::anti_helmholtz(double semi_x, double semi_y, double separation, int turns, double current) {
  CoilPair pair;
  pair.semi_x = semi_x;
  pair.semi_y = semi_y;
  pair.separation = separation;
  pair.turns = turns;
  pair.current_upper = current;
  pair.current_lower = -current;
  return pair;
}

void CoilPair::validate() const {
  require(semi_x > 0.0 && semi_y > 0.0, "coil semi-axes must be positive");
  require(std::abs(separation) > 0.0, "coil separation must be non-zero");
  require(turns >= 1, "coil turn count must be at least 1");
  require(offsets.empty() || static_cast<int>(offsets.size()) == turns,
          "winding offsets must be empty or list one entry per turn");
  require(std::isfinite(current_upper) && std::isfinite(current_lower), "coil currents must be finite");
  for (const auto& o : offsets) {
    require(semi_x + o.radial > 0.0 && semi_y + o.radial > 0.0, "winding offset collapses a turn");
  }
}

namespace {

struct Filament {
  double semi_x;
  double semi_y;
  double z;
  double current;
};

std::vector<Filament> filaments_of(const CoilPair& coils) {
  std::vector<Filament> out;
  out.reserve(2 * coils.turns);
  for (int i = 0; i < coils.turns; ++i) {
    const WindingOffset o = coils.offsets.empty() ? WindingOffset{} : coils.offsets[i];
    const double a = coils.semi_x + o.radial;
    const double b = coils.semi_y + o.radial;
    const double z = 0.5 * coils.separation + o.axial;
    out.push_back({a, b, z, coils.current_upper});
    out.push_back({a, b, -z, coils.current_lower});
  }
  return out;
}

// Distance from (px, py) to the ellipse (a cos t, b sin t).
double in_plane_distance(const Filament& f, double px, double py) {
  auto dist2 = [&](double t) {
    const double dx = px - f.semi_x * std::cos(t);
    const double dy = py - f.semi_y * std::sin(t);
    return dx * dx + dy * dy;
  };
  constexpr int coarse = 1024;
  double best_t = 0.0;
  double best = dist2(0.0);
  for (int k = 1; k < coarse; ++k) {
    const double t = 2.0 * constants::pi * k / coarse;
    const double d = dist2(t);
    if (d < best) best = d, best_t = t;
  }
  // Golden-section refinement on the bracketing interval.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best_t - 2.0 * constants::pi / coarse;
  double hi = best_t + 2.0 * constants::pi / coarse;
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = dist2(c), fd = dist2(d);
  for (int iter = 0; iter < 80; ++iter) {
    if (fc < fd) {
      hi = d, d = c, fd = fc;
      c = hi - invphi * (hi - lo);
      fc = dist2(c);
    } else {
      lo = c, c = d, fc = fd;
      d = lo + invphi * (hi - lo);
      fd = dist2(d);
    }
  }
  return std::sqrt(std::min({best, fc, fd}));
}

constexpr double kOnFilamentDistance = 1e-9;

struct NodeBuffer {
  std::vector<double> x, y, z, dlx, dly, dlz;

  void fill(const Filament& f, int n, bool odd_only) {
    // Trapezoid nodes t_k = 2 pi k / n; with odd_only only k odd (the nodes
    // added by a doubling from n/2).
    const int count = odd_only ? n / 2 : n;
    for (auto* v : {&x, &y, &z, &dlx, &dly, &dlz}) v->resize(count);
    const double h = 2.0 * constants::pi / n;
    for (int j = 0; j < count; ++j) {
      const int k = odd_only ? 2 * j + 1 : j;
      const double t = h * k;
      const double c = std::cos(t);
      const double s = std::sin(t);
      x[j] = f.semi_x * c;
      y[j] = f.semi_y * s;
      z[j] = f.z;
      dlx[j] = -f.current * h * f.semi_x * s;
      dly[j] = f.current * h * f.semi_y * c;
      dlz[j] = 0.0;
    }
  }

  kernels::FilamentView view() const { return {x, y, z, dlx, dly, dlz}; }
};

Vec3 filament_field(const Filament& f, const Vec3& point, const BiotSavartOptions& options, NodeBuffer& buf) {
  const std::array<double, 3> p{point.x(), point.y(), point.z()};
  int n = options.initial_nodes;
  buf.fill(f, n, false);
  auto s = kernels::biot_savart_sum(buf.view(), p);
  Vec3 sum(s[0], s[1], s[2]);
  while (n < options.max_nodes) {
    n *= 2;
    buf.fill(f, n, true);
    s = kernels::biot_savart_sum(buf.view(), p);
    // Odd nodes carry weight 2 pi / n; the previous sum used 2 pi / (n/2).
    const Vec3 refined = 0.5 * sum + Vec3(s[0], s[1], s[2]);
    const double change = (refined - sum).norm();
    sum = refined;
    if (change <= options.rel_tolerance * sum.norm()) break;
  }
  return constants::mu0 / (4.0 * constants::pi) * sum;
}

}  // namespace

Vec3 biot_savart_field(const CoilPair& coils, const Vec3& point, const BiotSavartOptions& options) {
  coils.validate();
  require(options.initial_nodes >= 4, "Biot-Savart quadrature needs at least 4 nodes");
  const auto fils = filaments_of(coils);
  for (const auto& f : fils) {
    if (std::abs(point.z() - f.z) < kOnFilamentDistance &&
        in_plane_distance(f, point.x(), point.y()) < kOnFilamentDistance) {
      std::ostringstream msg;
      msg << "point (" << point.x() << ", " << point.y() << ", " << point.z()
          << ") lies within 1e-9 m of a coil filament";
      fail(ErrorCode::PointOnFilament, msg.str());
    }
  }
  thread_local NodeBuffer buf;
  Vec3 total = Vec3::Zero();
  for (const auto& f : fils) {
    if (f.current == 0.0) continue;
    total += filament_field(f, point, options, buf);
  }
  return total;
}

GradientExtraction extract_gradients(const CoilPair& coils, double step, const BiotSavartOptions& options) {
  coils.validate();
  if (!coils.is_anti_helmholtz()) {
    fail(ErrorCode::NotAntiHelmholtz, "gradient extraction needs opposite currents in the two coils");
  }
  require(step > 0.0, "finite-difference step must be positive");

  auto central = [&](int axis, double h) {
    Vec3 e = Vec3::Zero();
    e[axis] = h;
    const Vec3 plus = biot_savart_field(coils, e, options);
    const Vec3 minus = biot_savart_field(coils, -e, options);
    return (plus[axis] - minus[axis]) / (2.0 * h);
  };

  double b[3];
  for (int axis = 0; axis < 3; ++axis) {
    const double coarse = central(axis, step);
    const double fine = central(axis, 0.5 * step);
    b[axis] = (4.0 * fine - coarse) / 3.0;
  }
  const double trace = b[0] + b[1] + b[2];
  const double scale = std::max({std::abs(b[0]), std::abs(b[1]), std::abs(b[2])});
  GradientExtraction out;
  out.trace_residual = scale > 0.0 ? std::abs(trace) / scale : 0.0;
  out.step = step;
  out.field = QuadrupoleField::from_xy(b[0] - trace / 3.0, b[1] - trace / 3.0);
  return out;
}

std::vector<Vec3> cube_sample_points(double half_width, int n_samples) {
  require(half_width > 0.0, "cube half-width must be positive");
  require(n_samples >= 1, "sample count must be positive");
  int per_axis = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n_samples)) - 1e-9));
  per_axis = std::max(per_axis, 2);
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(per_axis) * per_axis * per_axis);
  auto coord = [&](int j) { return -half_width + 2.0 * half_width * j / (per_axis - 1); };
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j)
      for (int k = 0; k < per_axis; ++k) {
        const Vec3 p(coord(i), coord(j), coord(k));
        if (p.norm() > 1e-12 * half_width) points.push_back(p);
      }
  return points;
}

double quadrupole_deviation(std::span<const FieldSample> samples, const QuadrupoleField& qf) {
  double worst = 0.0;
  for (const auto& s : samples) {
    const double mag = s.field.norm();
    if (mag == 0.0) continue;
    const Vec3 ideal = quadrupole_field(qf, Vec3::Zero(), s.position);
    worst = std::max(worst, (s.field - ideal).norm() / mag);
  }
  return worst;
}

std::vector<FieldSample> sample_field(const CoilPair& coils, std::span<const Vec3> points,
                                      const BiotSavartOptions& options) {
  std::vector<FieldSample> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({p, biot_savart_field(coils, p, options)});
  return out;
}

double quadrupole_fit_rms(const CoilPair& coils, double half_width, int n_samples, const BiotSavartOptions& options) {
  require(n_samples >= 100, "quadrupole fit needs at least 100 samples");
  const auto gradients = extract_gradients(coils, 1e-6, options);
  const auto points = cube_sample_points(half_width, n_samples);
  const auto samples = sample_field(coils, points, options);
  return quadrupole_deviation(samples, gradients.field);
}

}  // namespace maglev
