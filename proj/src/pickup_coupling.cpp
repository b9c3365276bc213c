#include "maglev/pickup_coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Geometry>

#include "maglev/constants.hpp"
#include "maglev/error.hpp"
#include "maglev/quadrature.hpp"

namespace maglev {

LoopGeometry LoopGeometry::coaxial(double radius, double height, int sense) {
  LoopGeometry loop{CoaxialCircle{radius, height}, sense};
  loop.validate();
  return loop;
}

LoopGeometry LoopGeometry::polyline(std::vector<Vec3> vertices, int sense) {
  LoopGeometry loop{Polyline{std::move(vertices)}, sense};
  loop.validate();
  return loop;
}

void LoopGeometry::validate() const {
  require(sense == 1 || sense == -1, "loop sense must be +1 or -1");
  if (const auto* c = std::get_if<CoaxialCircle>(&shape)) {
    require(c->radius > 0.0 && std::isfinite(c->radius), "loop radius R_P must be positive");
    require(std::isfinite(c->height), "loop height Z_P must be finite");
    return;
  }
  const auto& p = std::get<Polyline>(shape);
  require(p.vertices.size() >= 3, "polyline loop needs at least 3 vertices");
  for (const auto& v : p.vertices) require(v.allFinite(), "polyline vertices must be finite");
}

LoopGeometry square_loop(const Vec3& center, double side, int sense) {
  require(side > 0.0, "square side must be positive");
  const double h = 0.5 * side;
  std::vector<Vec3> v{center + Vec3(-h, -h, 0.0), center + Vec3(h, -h, 0.0), center + Vec3(h, h, 0.0),
                      center + Vec3(-h, h, 0.0)};
  return LoopGeometry::polyline(std::move(v), sense);
}

double PickupCoil::outer_diameter() const {
  return 2.0 * (inner_radius + (turn_count - 1) * pitch() + wire_width);
}

PickupCoil PickupCoil::planar_spiral(double inner_radius, int turns, double width, double gap, double height,
                                     bool pitch_is_center_to_center) {
  PickupCoil coil;
  coil.wire_width = width;
  coil.wire_gap = gap;
  coil.inner_radius = inner_radius;
  coil.turn_count = turns;
  coil.pitch_is_center_to_center = pitch_is_center_to_center;
  require(turns >= 1, "pickup coil needs at least one turn");
  require(width > 0.0, "wire width must be positive");
  require(coil.pitch() > 0.0 || turns == 1, "turn pitch must be positive");
  coil.turns.reserve(turns);
  for (int i = 0; i < turns; ++i) {
    coil.turns.push_back(LoopGeometry::coaxial(inner_radius + 0.5 * width + i * coil.pitch(), height));
  }
  coil.validate();
  return coil;
}

void PickupCoil::validate() const {
  require(turn_count >= 1, "pickup coil needs at least one turn");
  require(static_cast<int>(turns.size()) == turn_count, "pickup coil turn list does not match N");
  require(wire_width >= 0.0, "wire width must be non-negative");
  require(wire_gap >= 0.0, "wire gap must be non-negative");
  require(inner_radius >= 0.0, "inner radius must be non-negative");
  for (const auto& t : turns) t.validate();
}

SquidCircuit SquidCircuit::make(double L_S, double L_I, double L_W, double L_P, double k, double S_phiphi,
                                double S_JJ) {
  SquidCircuit c{L_S, L_I, L_W, L_P, k, S_phiphi, S_JJ};
  c.validate();
  return c;
}

SquidCircuit SquidCircuit::quantum_limited(double L_S, double L_I, double L_W, double L_P, double k,
                                           double S_phiphi) {
  require(S_phiphi > 0.0, "S_phiphi must be positive");
  return make(L_S, L_I, L_W, L_P, k, S_phiphi, constants::hbar * constants::hbar / S_phiphi);
}

double SquidCircuit::mutual() const { return k * std::sqrt(L_I * L_S); }

double SquidCircuit::effective_inductance() const {
  require(S_JJ > 0.0, "effective inductance needs S_JJ > 0");
  return std::sqrt(S_phiphi / S_JJ);
}

double SquidCircuit::noise_product() const { return std::sqrt(S_phiphi * S_JJ); }

SquidCircuit SquidCircuit::with_pickup_inductance(double pickup) const {
  SquidCircuit c = *this;
  c.L_P = pickup;
  c.validate();
  return c;
}

void SquidCircuit::validate() const {
  require(L_S > 0.0 && L_I > 0.0, "SQUID and input-coil inductances must be positive");
  require(L_W >= 0.0 && L_P >= 0.0, "wiring and pickup inductances must be non-negative");
  require(std::abs(k) < 1.0 && k != 0.0, "coupling constant k must satisfy 0 < |k| < 1");
  require(S_phiphi > 0.0 && S_JJ >= 0.0, "SQUID noise densities must be non-negative");
  if (noise_product() < constants::hbar * (1.0 - 1e-9)) {
    std::ostringstream msg;
    msg << "sqrt(S_phiphi S_JJ) = " << noise_product() / constants::hbar << " hbar violates the quantum limit";
    fail(ErrorCode::InvalidArgument, msg.str());
  }
}

namespace {

[[noreturn]] void intersects(const std::string& what) { fail(ErrorCode::LoopIntersectsSphere, what); }

// Response field -grad Phi at lab point r for a sphere centered at s.
struct ResponseField {
  const MultipoleSolution& sol;
  Vec3 center;
  double radius;

  Vec3 operator()(const Vec3& r) const {
    const Vec3 p = r - center;
    if (p.norm() <= radius) intersects("spanning surface enters the sphere");
    return -response_gradient(sol, p);
  }
};

double segment_distance(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

// Flux with the loop's +1 orientation (sense applied by the caller).
double cap_flux(const ResponseField& field, const CoaxialCircle& c, const NumericCouplingOptions& opt) {
  const double rho = std::hypot(c.radius, c.height);
  const double cos_edge = c.height / rho;
  // Upper cap for Z >= 0; the lower cap with reversed normal otherwise.
  const bool upper = c.height >= 0.0;
  const auto rule = upper ? gauss_legendre(opt.radial_nodes, cos_edge, 1.0)
                          : gauss_legendre(opt.radial_nodes, -1.0, cos_edge);
  const double dphi = 2.0 * constants::pi / opt.azimuth_nodes;
  double flux = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double ct = rule.nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    double ring = 0.0;
    for (int j = 0; j < opt.azimuth_nodes; ++j) {
      const double phi = dphi * j;
      const Vec3 n(st * std::cos(phi), st * std::sin(phi), ct);
      ring += field(rho * n).dot(n);
    }
    flux += rule.weights[i] * ring * dphi * rho * rho;
  }
  return upper ? flux : -flux;
}

double disk_flux(const ResponseField& field, const CoaxialCircle& c, const NumericCouplingOptions& opt) {
  const auto rule = gauss_legendre(opt.radial_nodes, 0.0, c.radius);
  const double dphi = 2.0 * constants::pi / opt.azimuth_nodes;
  double flux = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double r = rule.nodes[i];
    double ring = 0.0;
    for (int j = 0; j < opt.azimuth_nodes; ++j) {
      const double phi = dphi * j;
      ring += field(Vec3(r * std::cos(phi), r * std::sin(phi), c.height)).z();
    }
    flux += rule.weights[i] * r * ring * dphi;
  }
  return flux;
}

// Fan from the centroid; each triangle (A, B, C) uses the collapsed map
// A + u (B - A) + u v (C - B) with Jacobian u |(B - A) x (C - B)|.
double fan_flux(const ResponseField& field, const Polyline& p, const NumericCouplingOptions& opt) {
  Vec3 centroid = Vec3::Zero();
  for (const auto& v : p.vertices) centroid += v;
  centroid /= static_cast<double>(p.vertices.size());
  const auto rule = gauss_legendre(opt.radial_nodes, 0.0, 1.0);
  double flux = 0.0;
  const std::size_t n = p.vertices.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3& b = p.vertices[k];
    const Vec3& c = p.vertices[(k + 1) % n];
    const Vec3 ab = b - centroid;
    const Vec3 bc = c - b;
    const Vec3 area = ab.cross(bc);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double u = rule.nodes[i];
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double v = rule.nodes[j];
        const Vec3 point = centroid + u * ab + u * v * bc;
        flux += rule.weights[i] * rule.weights[j] * u * field(point).dot(area);
      }
    }
  }
  return flux;
}

void check_exterior(const LoopGeometry& loop, const Vec3& center, double radius) {
  if (const auto* c = std::get_if<CoaxialCircle>(&loop.shape)) {
    // Closest approach of a horizontal circle to the point `center`.
    const double in_plane = std::hypot(center.x(), center.y());
    const double dist = std::hypot(c->radius - in_plane, c->height - center.z());
    if (dist <= radius) intersects("coaxial loop passes through the sphere");
    return;
  }
  const auto& v = std::get<Polyline>(loop.shape).vertices;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (segment_distance(v[k], v[(k + 1) % v.size()], center) <= radius) {
      intersects("polyline loop passes through the sphere");
    }
  }
}

double flux_at(const MultipoleSolution& sol, const LoopGeometry& loop, const Vec3& center, SpanningSurface surface,
               const NumericCouplingOptions& opt) {
  check_exterior(loop, center, sol.radius);
  const ResponseField field{sol, center, sol.radius};
  double flux = 0.0;
  if (const auto* c = std::get_if<CoaxialCircle>(&loop.shape)) {
    flux = surface == SpanningSurface::FlatDisk ? disk_flux(field, *c, opt) : cap_flux(field, *c, opt);
  } else {
    require(surface != SpanningSurface::SphericalCap, "spherical-cap surface applies to coaxial circles only");
    flux = fan_flux(field, std::get<Polyline>(loop.shape), opt);
  }
  return loop.sense * flux;
}

void check_options(const NumericCouplingOptions& opt) {
  require(opt.step > 0.0, "finite-difference step must be positive");
  require(opt.radial_nodes >= 2 && opt.azimuth_nodes >= 4, "quadrature node counts too small");
  require(opt.sphere_offset.allFinite(), "sphere offset must be finite");
}

}  // namespace

double response_flux(const MultipoleSolution& sol, const LoopGeometry& loop, SpanningSurface surface,
                     const NumericCouplingOptions& options) {
  loop.validate();
  check_options(options);
  return flux_at(sol, loop, Vec3::Zero(), surface, options);
}

namespace {

// Distance from the sphere surface to the loop or, for a coaxial circle, its cap.
double clearance(const LoopGeometry& loop, const Vec3& offset, double radius) {
  if (const auto* c = std::get_if<CoaxialCircle>(&loop.shape)) {
    return std::hypot(c->radius, c->height) - offset.norm() - radius;
  }
  const auto& v = std::get<Polyline>(loop.shape).vertices;
  Vec3 centroid = Vec3::Zero();
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : v) {
    centroid += p;
    d = std::min(d, (p - offset).norm());
  }
  centroid /= static_cast<double>(v.size());
  return std::min(d, (centroid - offset).norm()) - radius;
}

}  // namespace

double coupling_nu_numeric(const QuadrupoleField& qf, const SphereParams& sphere, const LoopGeometry& loop, Axis axis,
                           const NumericCouplingOptions& options) {
  loop.validate();
  check_options(options);
  const int a = static_cast<int>(axis);
  // Flux as a function of the sphere position s in trap coordinates; the
  // trap center sits at -s relative to the sphere, so d/dc = -d/ds.
  auto flux = [&](double ds) {
    Vec3 s = options.sphere_offset;
    s[a] += ds;
    const auto sol = solve_coefficients(qf, s, sphere);
    return flux_at(sol, loop, s, SpanningSurface::Auto, options);
  };
  auto central = [&](double h) { return (flux(h) - flux(-h)) / (2.0 * h); };
  // Shrink the step for loops that nearly touch the sphere.
  const double h = std::min(options.step, 0.25 * clearance(loop, options.sphere_offset, sphere.radius()));
  const double derivative = (4.0 * central(0.5 * h) - central(h)) / 3.0;
  return -derivative;
}

double coupling_nu_analytic(double bz, double sphere_radius, double loop_radius, double loop_height) {
  require(sphere_radius > 0.0, "sphere radius must be positive");
  const double rho2 = loop_radius * loop_radius + loop_height * loop_height;
  const double r2 = sphere_radius * sphere_radius;
  if (rho2 <= r2) {
    std::ostringstream msg;
    msg << "R_P^2 + Z_P^2 = " << rho2 << " m^2 does not exceed R^2 = " << r2 << " m^2";
    fail(ErrorCode::LoopInsideSphere, msg.str());
  }
  const double q = r2 / rho2;
  return constants::pi * bz * loop_radius * loop_radius * q * std::sqrt(q) *
         (1.0 - q * (1.0 - 5.0 * loop_height * loop_height / rho2));
}

double coil_coupling(const QuadrupoleField& qf, const SphereParams& sphere, const PickupCoil& coil, Axis axis,
                     const NumericCouplingOptions& options) {
  coil.validate();
  const bool centered = options.sphere_offset.isZero(0.0);
  double nu = 0.0;
  for (const auto& turn : coil.turns) {
    const auto* c = std::get_if<CoaxialCircle>(&turn.shape);
    if (c != nullptr && axis == Axis::Z && centered) {
      nu += turn.sense * coupling_nu_analytic(qf.bz(), sphere.radius(), c->radius, c->height);
    } else {
      nu += coupling_nu_numeric(qf, sphere, turn, axis, options);
    }
  }
  return nu;
}

double squid_coupling(double nu, const SquidCircuit& circuit) {
  circuit.validate();
  return nu * circuit.mutual() / circuit.total_inductance();
}

double squid_coupling(double nu, double m_over_l) { return nu * m_over_l; }

double wheeler_inductance(const PickupCoil& coil, const WheelerCoefficients& coefficients) {
  coil.validate();
  require(coil.wire_width > 0.0, "Wheeler inductance needs a spiral with positive wire width");
  const double d_in = coil.inner_diameter();
  const double d_out = coil.outer_diameter();
  const double d_avg = 0.5 * (d_in + d_out);
  const double fill = (d_out - d_in) / (d_out + d_in);
  const double n = coil.turn_count;
  return coefficients.k1 * constants::mu0 * n * n * d_avg / (1.0 + coefficients.k2 * fill);
}

double measurement_noise(double nu, const PickupCoil& coil, const SquidCircuit& circuit,
                         const WheelerCoefficients& coefficients) {
  if (nu == 0.0) fail(ErrorCode::ZeroCoupling, "coupling strength is zero");
  const auto c = circuit.with_pickup_inductance(wheeler_inductance(coil, coefficients));
  const double l = c.total_inductance();
  return 2.0 * c.energy_resolution() / (c.k * c.k) * l * l / (nu * nu * c.L_I);
}

double measurement_noise(double eta, double S_phiphi) {
  if (eta == 0.0) fail(ErrorCode::ZeroCoupling, "coupling strength is zero");
  return S_phiphi / (eta * eta);
}

namespace {

struct SpiralObjective {
  double radius;
  double bz;
  SquidCircuit circuit;
  double width;
  double pitch;
  WheelerCoefficients wheeler;
  long* evaluations;

  double turn_radius(double inner, int i) const { return inner + 0.5 * width + i * pitch; }

  double inductance(double inner, int n) const {
    const double d_in = 2.0 * inner;
    const double d_out = 2.0 * (inner + (n - 1) * pitch + width);
    const double fill = (d_out - d_in) / (d_out + d_in);
    return wheeler.k1 * constants::mu0 * double(n) * n * 0.5 * (d_in + d_out) / (1.0 + wheeler.k2 * fill);
  }

  double noise(double nu, double inner, int n) const {
    if (nu == 0.0) return std::numeric_limits<double>::infinity();
    const double l = inductance(inner, n) + circuit.L_I + circuit.L_W;
    const double m = circuit.mutual();
    return circuit.S_phiphi * l * l / (nu * nu * m * m);
  }

  bool feasible(double inner, double height) const {
    const double r0 = turn_radius(inner, 0);
    return r0 * r0 + height * height > radius * radius * (1.0 + 1e-12);
  }

  double operator()(double inner, double height, int n) const {
    ++*evaluations;
    if (!feasible(inner, height)) return std::numeric_limits<double>::infinity();
    double nu = 0.0;
    for (int i = 0; i < n; ++i) nu += coupling_nu_analytic(bz, radius, turn_radius(inner, i), height);
    return noise(nu, inner, n);
  }
};

// Golden-section minimum of f on [lo, hi].
template <class F>
double golden_min(F&& f, double lo, double hi, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = f(c), fd = f(d);
  while (hi - lo > tol) {
    if (fc <= fd) {
      hi = d, d = c, fd = fc;
      c = hi - invphi * (hi - lo);
      fc = f(c);
    } else {
      lo = c, c = d, fc = fd;
      d = lo + invphi * (hi - lo);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  return f(mid) <= std::min(fc, fd) ? mid : (fc <= fd ? c : d);
}

struct Candidate {
  double inner = 0.0;
  double height = 0.0;
  int turns = 0;
  double value = std::numeric_limits<double>::infinity();
};

bool better(const Candidate& a, const Candidate& b) {
  const double tol = 1e-12 * std::min(std::abs(a.value), std::abs(b.value));
  if (a.value < b.value - tol) return true;
  if (a.value > b.value + tol) return false;
  if (a.turns != b.turns) return a.turns < b.turns;
  return a.inner < b.inner;
}

PickupSearch resolve_bounds(const PickupSearch& s, double radius) {
  PickupSearch out = s;
  if (out.z_min == 0.0) out.z_min = radius;
  if (out.z_max == 0.0) out.z_max = 4.0 * radius;
  if (out.r_max == 0.0) out.r_max = radius;
  return out;
}

}  // namespace

double spiral_measurement_noise(const SphereParams& sphere, double bz, const SquidCircuit& circuit, double wire_width,
                                double wire_gap, double inner_radius, double height, int turns,
                                const PickupSearch& search) {
  require(turns >= 1, "turn count must be at least 1");
  long evaluations = 0;
  const double pitch = search.pitch_is_center_to_center ? wire_gap : wire_width + wire_gap;
  const SpiralObjective objective{sphere.radius(), bz, circuit, wire_width, pitch, search.wheeler, &evaluations};
  return objective(inner_radius, height, turns);
}

PickupOptimum optimize_pickup(const SphereParams& sphere, double bz, const SquidCircuit& circuit_template,
                              double wire_width, double wire_gap, const PickupSearch& search_in) {
  require(bz != 0.0 && std::isfinite(bz), "b_z must be non-zero");
  require(wire_width > 0.0 && wire_gap >= 0.0, "wire width must be positive and gap non-negative");
  circuit_template.validate();
  const PickupSearch search = resolve_bounds(search_in, sphere.radius());
  require(search.n_max >= 1 && search.r_grid >= 2 && search.z_grid >= 2, "optimizer grid too small");
  if (!(search.z_min <= search.z_max) || !(search.r_min <= search.r_max) || search.r_min < 0.0) {
    fail(ErrorCode::InfeasibleConstraint, "empty search box for (inner radius, Z_P)");
  }
  const double pitch = search.pitch_is_center_to_center ? wire_gap : wire_width + wire_gap;
  require(pitch > 0.0, "turn pitch must be positive");

  long evaluations = 0;
  const SpiralObjective objective{sphere.radius(), std::abs(bz), circuit_template, wire_width, pitch,
                                  search.wheeler, &evaluations};
  const double dr = (search.r_max - search.r_min) / (search.r_grid - 1);
  const double dz = (search.z_max - search.z_min) / (search.z_grid - 1);

  // Coarse grid: best (inner, height) per N, from cumulative per-turn sums.
  std::vector<Candidate> best_per_n(search.n_max + 1);
  for (int i = 0; i < search.r_grid; ++i) {
    const double inner = search.r_min + i * dr;
    for (int j = 0; j < search.z_grid; ++j) {
      const double height = search.z_min + j * dz;
      if (!objective.feasible(inner, height)) continue;
      double nu = 0.0;
      for (int n = 1; n <= search.n_max; ++n) {
        nu += coupling_nu_analytic(objective.bz, objective.radius, objective.turn_radius(inner, n - 1), height);
        ++evaluations;
        const Candidate c{inner, height, n, objective.noise(nu, inner, n)};
        if (better(c, best_per_n[n])) best_per_n[n] = c;
      }
    }
  }
  Candidate grid_best;
  for (int n = 1; n <= search.n_max; ++n) {
    if (better(best_per_n[n], grid_best)) grid_best = best_per_n[n];
  }
  if (!std::isfinite(grid_best.value)) {
    fail(ErrorCode::InfeasibleConstraint, "no pickup geometry in the search box lies outside the sphere");
  }

  // Local refinement: alternating golden sections within one grid cell.
  auto refine = [&](Candidate c) {
    double r_lo = std::max(search.r_min, c.inner - dr), r_hi = std::min(search.r_max, c.inner + dr);
    double z_lo = std::max(search.z_min, c.height - dz), z_hi = std::min(search.z_max, c.height + dz);
    for (int sweep = 0; sweep < 6; ++sweep) {
      if (r_hi > r_lo) {
        const double r = golden_min([&](double x) { return objective(x, c.height, c.turns); }, r_lo, r_hi,
                                    1e-9 * std::max(dr, 1e-12));
        const double v = objective(r, c.height, c.turns);
        if (v < c.value) c.inner = r, c.value = v;
      }
      if (z_hi > z_lo) {
        const double z = golden_min([&](double x) { return objective(c.inner, x, c.turns); }, z_lo, z_hi,
                                    1e-9 * std::max(dz, 1e-12));
        const double v = objective(c.inner, z, c.turns);
        if (v < c.value) c.height = z, c.value = v;
      }
    }
    // Snap to the lower bound when it is as good, so active constraints read exactly.
    const double at_bound = objective(c.inner, search.z_min, c.turns);
    if (at_bound <= c.value * (1.0 + 1e-12)) c.height = search.z_min, c.value = std::min(c.value, at_bound);
    return c;
  };

  Candidate best;
  const int lo_n = std::max(1, grid_best.turns - search.refine_neighbours);
  const int hi_n = std::min(search.n_max, grid_best.turns + search.refine_neighbours);
  for (int n = lo_n; n <= hi_n; ++n) {
    if (!std::isfinite(best_per_n[n].value)) continue;
    const Candidate c = refine(best_per_n[n]);
    if (better(c, best)) best = c;
  }

  PickupOptimum out;
  out.inner_radius = best.inner;
  out.height = best.height;
  out.turns = best.turns;
  out.S_nn = best.value;
  double nu = 0.0;
  for (int i = 0; i < best.turns; ++i) {
    nu += coupling_nu_analytic(objective.bz, objective.radius, objective.turn_radius(best.inner, i), best.height);
  }
  out.nu = nu;
  out.L_P = objective.inductance(best.inner, best.turns);
  out.eta = nu * circuit_template.mutual() / (out.L_P + circuit_template.L_I + circuit_template.L_W);
  out.height_at_constraint = std::abs(best.height - search.z_min) <= 1e-9 * sphere.radius();
  out.search = search;
  out.evaluations = evaluations;
  return out;
}

}  // namespace maglev
