#include "tarc/dynamics.hpp"

#include <cmath>

namespace tarc {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Vec friction_of(const DoubleIntegrator& di) {
  if (di.friction.size() == 0) return Vec::Zero(di.dof);
  return di.friction;
}

TwoLink scaled(const TwoLink& arm, double payload_scale) {
  TwoLink out = arm;
  out.m2 *= payload_scale;
  return out;
}

}  // namespace

int PlantModel::dof() const {
  return std::visit(overloaded{[](const DoubleIntegrator& d) { return d.dof; },
                               [](const TwoLink&) { return 2; }},
                    kind);
}

void PlantModel::validate() const {
  require(payload_scale > 0.0, "payload_scale must be positive");
  std::visit(
      overloaded{
          [](const DoubleIntegrator& d) {
            require(d.dof >= 1, "double integrator needs dof >= 1");
            require(d.mass > 0.0, "double integrator mass must be positive");
            if (d.friction.size() != 0) {
              require_size(d.friction, d.dof, "friction");
              require((d.friction.array() >= 0.0).all(),
                      "friction coefficients must be nonnegative");
            }
          },
          [](const TwoLink& a) {
            require(a.m1 > 0 && a.m2 > 0, "link masses must be positive");
            require(a.l1 > 0 && a.l2 > 0, "link lengths must be positive");
            require(a.lc1 > 0 && a.lc2 > 0,
                    "center-of-mass distances must be positive");
            require(a.I1 > 0 && a.I2 > 0, "link inertias must be positive");
            require(a.g >= 0, "gravity must be nonnegative");
            require(a.friction1 >= 0 && a.friction2 >= 0,
                    "friction coefficients must be nonnegative");
          }},
      kind);
}

DisturbanceSpec DisturbanceSpec::zero(int dof) {
  return {Vec::Zero(dof), Vec::Zero(dof), Vec::Zero(dof), Vec::Zero(dof)};
}

void DisturbanceSpec::validate(int dof) const {
  require_size(amplitude, dof, "disturbance.amplitude");
  require_size(frequency, dof, "disturbance.frequency");
  require_size(phase, dof, "disturbance.phase");
  require_size(bias, dof, "disturbance.bias");
  require((amplitude.array() >= 0.0).all() && (frequency.array() >= 0.0).all(),
          "disturbance amplitudes and frequencies must be nonnegative");
}

Vec DisturbanceSpec::operator()(double t) const {
  return bias.array() +
         amplitude.array() * (frequency.array() * t + phase.array()).sin();
}

void NoiseSpec::validate(int dof) const {
  if (stddev.size() == 0) return;
  require_size(stddev, dof, "noise.stddev");
  require((stddev.array() >= 0.0).all(), "noise stddev must be nonnegative");
}

Mat mass_matrix(const PlantModel& model, const Vec& q) {
  require_size(q, model.dof(), "q");
  return std::visit(
      overloaded{[&](const DoubleIntegrator& d) -> Mat {
                   return Mat::Identity(d.dof, d.dof) * d.mass *
                          model.payload_scale;
                 },
                 [&](const TwoLink& arm) -> Mat {
                   const TwoLink a = scaled(arm, model.payload_scale);
                   const double c2 = std::cos(q(1));
                   Mat M(2, 2);
                   M(0, 0) = a.m1 * a.lc1 * a.lc1 + a.I1 + a.I2 +
                             a.m2 * (a.l1 * a.l1 + a.lc2 * a.lc2 +
                                     2.0 * a.l1 * a.lc2 * c2);
                   M(0, 1) = a.I2 + a.m2 * (a.lc2 * a.lc2 + a.l1 * a.lc2 * c2);
                   M(1, 0) = M(0, 1);
                   M(1, 1) = a.I2 + a.m2 * a.lc2 * a.lc2;
                   return M;
                 }},
      model.kind);
}

Vec gravity_vector(const PlantModel& model, const Vec& q) {
  require_size(q, model.dof(), "q");
  return std::visit(
      overloaded{[&](const DoubleIntegrator& d) -> Vec {
                   return Vec::Zero(d.dof);
                 },
                 [&](const TwoLink& arm) -> Vec {
                   const TwoLink a = scaled(arm, model.payload_scale);
                   const double c1 = std::cos(q(0));
                   const double c12 = std::cos(q(0) + q(1));
                   Vec g(2);
                   g(0) = (a.m1 * a.lc1 + a.m2 * a.l1) * a.g * c1 +
                          a.m2 * a.lc2 * a.g * c12;
                   g(1) = a.m2 * a.lc2 * a.g * c12;
                   return g;
                 }},
      model.kind);
}

Vec bias_vector(const PlantModel& model, const Vec& q, const Vec& dq) {
  require_size(q, model.dof(), "q");
  require_size(dq, model.dof(), "dq");
  return std::visit(
      overloaded{[&](const DoubleIntegrator& d) -> Vec {
                   return friction_of(d).cwiseProduct(dq);
                 },
                 [&](const TwoLink& arm) -> Vec {
                   const TwoLink a = scaled(arm, model.payload_scale);
                   const double h = a.m2 * a.l1 * a.lc2 * std::sin(q(1));
                   Vec n = gravity_vector(model, q);
                   n(0) += -h * (2.0 * dq(0) * dq(1) + dq(1) * dq(1)) +
                           a.friction1 * dq(0);
                   n(1) += h * dq(0) * dq(0) + a.friction2 * dq(1);
                   return n;
                 }},
      model.kind);
}

double kinetic_energy(const PlantModel& model, const Vec& q, const Vec& dq) {
  require_size(dq, model.dof(), "dq");
  return 0.5 * dq.dot(mass_matrix(model, q) * dq);
}

double potential_energy(const PlantModel& model, const Vec& q) {
  require_size(q, model.dof(), "q");
  return std::visit(
      overloaded{[](const DoubleIntegrator&) { return 0.0; },
                 [&](const TwoLink& arm) {
                   const TwoLink a = scaled(arm, model.payload_scale);
                   return a.g * ((a.m1 * a.lc1 + a.m2 * a.l1) * std::sin(q(0)) +
                                 a.m2 * a.lc2 * std::sin(q(0) + q(1)));
                 }},
      model.kind);
}

Vec forward_dynamics(const PlantModel& model, const Vec& q, const Vec& dq,
                     const Vec& tau, const Vec& disturbance) {
  const int n = model.dof();
  require_size(tau, n, "tau");
  require_size(disturbance, n, "disturbance");
  const Mat M = mass_matrix(model, q);
  const Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success)
    throw NumericalError("mass matrix is not positive definite");
  return llt.solve(tau + disturbance - bias_vector(model, q, dq));
}

Vec sample_measurement(const Vec& q, const NoiseSpec& noise, Rng& rng) {
  if (noise.stddev.size() == 0) return q;
  require_size(noise.stddev, q.size(), "noise.stddev");
  Vec out = q;
  std::normal_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    // Draw even for zero sigma so the stream stays aligned across joints.
    const double z = unit(rng);
    out(i) += noise.stddev(i) * z;
  }
  return out;
}

}  // namespace tarc
