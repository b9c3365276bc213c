#include "maglev/isolation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "maglev/error.hpp"

namespace maglev {

using constants::pi;

void Stage::validate() const {
  if (mass == 0.0) fail(ErrorCode::SingularMass, "stage mass is zero");
  require(mass > 0.0 && std::isfinite(mass), "stage mass must be positive");
  require(wire_count >= 1, "stage needs at least one wire");
  require(wire_length > 0.0 && std::isfinite(wire_length), "wire length must be positive");
  require(wire_diameter > 0.0 && std::isfinite(wire_diameter), "wire diameter must be positive");
  require(youngs_modulus > 0.0 && std::isfinite(youngs_modulus), "elastic modulus must be positive");
  require(yield_load >= 0.0, "yield load must be non-negative");
}

void IsolationStack::validate() const {
  require(!stages.empty(), "isolation stack needs at least one stage");
  for (const auto& s : stages) s.validate();
}

double stage_spring_constant(const Stage& stage) {
  stage.validate();
  return stage.wire_count * stage.youngs_modulus * stage.wire_diameter * stage.wire_diameter * pi /
         (4.0 * stage.wire_length);
}

double stage_frequency(const Stage& stage) {
  return std::sqrt(stage_spring_constant(stage) / stage.mass) / (2.0 * pi);
}

double pendulum_frequency(const Stage& stage, double g) {
  stage.validate();
  require(g > 0.0, "gravity must be positive");
  return std::sqrt(g / stage.wire_length) / (2.0 * pi);
}

std::vector<double> normal_modes(const IsolationStack& stack) {
  stack.validate();
  const int n = static_cast<int>(stack.stages.size());
  std::vector<double> k(n), inv_sqrt_m(n);
  for (int i = 0; i < n; ++i) {
    k[i] = stage_spring_constant(stack.stages[i]);
    inv_sqrt_m[i] = 1.0 / std::sqrt(stack.stages[i].mass);
  }
  // Mass-weighted stiffness M^-1/2 K M^-1/2; spring i joins stage i to the one above.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double below = i + 1 < n ? k[i + 1] : 0.0;
    a(i, i) = (k[i] + below) * inv_sqrt_m[i] * inv_sqrt_m[i];
    if (i + 1 < n) {
      a(i, i + 1) = a(i + 1, i) = -k[i + 1] * inv_sqrt_m[i] * inv_sqrt_m[i + 1];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  require(solver.info() == Eigen::Success, "normal-mode eigensolver did not converge");
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) f[i] = std::sqrt(std::max(0.0, solver.eigenvalues()[i])) / (2.0 * pi);
  std::sort(f.begin(), f.end());
  return f;
}

double transfer_function(const IsolationStack& stack, const std::vector<double>& modes, double f_hz) {
  stack.validate();
  require(modes.size() == stack.stages.size(), "one normal mode per stage expected");
  require(f_hz >= 0.0, "frequency must be non-negative");
  // prod f_n^2 = prod f_v^2 exactly, so the static gain is 1; the product
  // below would only reproduce it to rounding.
  if (f_hz == 0.0) return 1.0;
  double t = 1.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (std::abs(f_hz - modes[i]) < 1e-9 * modes[i]) {
      std::ostringstream msg;
      msg << "f = " << f_hz << " Hz coincides with normal mode " << modes[i] << " Hz";
      fail(ErrorCode::OnResonance, msg.str());
    }
    const double fv = stage_frequency(stack.stages[i]);
    t *= fv * fv / std::abs(modes[i] * modes[i] - f_hz * f_hz);
  }
  return t;
}

double transfer_function(const IsolationStack& stack, double f_hz) {
  return transfer_function(stack, normal_modes(stack), f_hz);
}

double transfer_asymptote(const IsolationStack& stack, double f_hz) {
  stack.validate();
  require(f_hz > 0.0, "frequency must be positive");
  double t = 1.0;
  for (const auto& s : stack.stages) {
    const double fv = stage_frequency(s);
    t *= fv * fv / (f_hz * f_hz);
  }
  return t;
}

double yield_ratio(double supported_mass, int wire_count, double yield_load) {
  require(supported_mass >= 0.0, "supported mass must be non-negative");
  require(wire_count >= 1 && yield_load > 0.0, "yield ratio needs wires and a positive yield load");
  return supported_mass / wire_count / yield_load;
}

std::vector<YieldStatus> yield_check(const IsolationStack& stack, double payload_mass) {
  stack.validate();
  require(payload_mass >= 0.0, "payload mass must be non-negative");
  const std::size_t n = stack.stages.size();
  std::vector<YieldStatus> out(n);
  double below = payload_mass;
  for (std::size_t j = n; j-- > 0;) {
    const auto& s = stack.stages[j];
    below += s.mass;
    out[j].supported_mass = below;
    if (s.yield_load > 0.0) {
      out[j].load_ratio = yield_ratio(below, s.wire_count, s.yield_load);
      out[j].warning = out[j].load_ratio > 0.5;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (out[j].load_ratio >= 1.0) {
      std::ostringstream msg;
      msg << "stage " << j << " wires carry " << out[j].load_ratio << " of their yield load";
      fail(ErrorCode::WireOverload, msg.str());
    }
  }
  return out;
}

}  // namespace maglev
