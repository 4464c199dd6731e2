#pragma once

#include <cstdint>
#include <random>
#include <variant>

#include "tarc/common.hpp"

namespace tarc {

/// n decoupled point masses: M = m I, N = F q̇.
struct DoubleIntegrator {
  int dof = 1;
  double mass = 1.0;
  Vec friction;  // viscous, per dof; empty means zero
};

/// Planar two-link arm with revolute joints. q1 is measured from the
/// horizontal, q2 relative to link 1; gravity acts along -y.
struct TwoLink {
  double m1 = 2.0, m2 = 1.5;
  double l1 = 0.5, l2 = 0.4;
  double lc1 = 0.25, lc2 = 0.2;
  double I1 = 2.0 * 0.25 / 12.0, I2 = 1.5 * 0.16 / 12.0;
  double g = 9.81;
  double friction1 = 0.0, friction2 = 0.0;
};

struct PlantModel {
  std::variant<DoubleIntegrator, TwoLink> kind = TwoLink{};
  /// Multiplier on link-2 mass (two-link) or on the point mass (double
  /// integrator); models payload uncertainty.
  double payload_scale = 1.0;

  int dof() const;
  /// Throws UsageError if any physical parameter is out of range.
  void validate() const;
};

struct DisturbanceSpec {
  Vec amplitude;  // N·m
  Vec frequency;  // rad/s
  Vec phase;      // rad
  Vec bias;       // N·m

  static DisturbanceSpec zero(int dof);
  void validate(int dof) const;
  Vec operator()(double t) const;
};

struct NoiseSpec {
  Vec stddev;  // rad, per joint; empty means noiseless
  std::uint64_t seed = 0;

  void validate(int dof) const;
};

using Rng = std::mt19937_64;

Mat mass_matrix(const PlantModel& model, const Vec& q);
Vec bias_vector(const PlantModel& model, const Vec& q, const Vec& dq);
/// Gravity torque, i.e. the gradient of potential_energy.
Vec gravity_vector(const PlantModel& model, const Vec& q);
double kinetic_energy(const PlantModel& model, const Vec& q, const Vec& dq);
double potential_energy(const PlantModel& model, const Vec& q);

/// Solves M(q) q̈ = τ + d − N(q, q̇).
Vec forward_dynamics(const PlantModel& model, const Vec& q, const Vec& dq,
                     const Vec& tau, const Vec& disturbance);

Vec sample_measurement(const Vec& q, const NoiseSpec& noise, Rng& rng);

}  // namespace tarc
