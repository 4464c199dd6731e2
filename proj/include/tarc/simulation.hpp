#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tarc/controllers.hpp"
#include "tarc/dynamics.hpp"
#include "tarc/estimator.hpp"

namespace tarc {

struct SinusoidTerm {
  double amplitude = 0.0;  // rad
  double frequency = 0.0;  // rad/s
  double phase = 0.0;      // rad
};

struct JointReference {
  double offset = 0.0;
  std::vector<SinusoidTerm> terms;
};

/// Per-joint offset plus a sum of sinusoids; derivatives are analytic.
struct ReferenceSpec {
  std::vector<JointReference> joints;

  static ReferenceSpec zero(int dof);
  int dof() const { return static_cast<int>(joints.size()); }
  /// Upper bounds on |qd|, |q̇d|, |q̈d| per joint.
  Vec bound(int derivative) const;
};

struct ReferenceSample {
  Vec qd, dqd, qdd;
};

ReferenceSample reference(const ReferenceSpec& spec, double t);

struct Scenario {
  PlantModel plant;          // ground truth
  PlantModel nominal_plant;  // designer's model, used for M̂ selection
  ControllerKind controller = ControllerKind::TARC;
  GainSet gains;
  AsmcParams asmc;
  double lyapunov_q = 1.0;  // Q = q I when forming the surface s = P2 e1
  ReferenceSpec reference;
  DisturbanceSpec disturbance;
  NoiseSpec noise;
  EstimatorConfig estimator;
  double h = 1e-3;
  int substeps = 10;
  double duration = 10.0;
  Vec q0, dq0;  // empty: start on the reference, at rest

  int dof() const { return plant.dof(); }
  void validate() const;
};

struct PlantState {
  Vec q, dq;
};

/// Advances the plant over [t, t + h) with τ held constant, using `substeps`
/// classical RK4 steps. The disturbance is evaluated at each stage time.
PlantState integrate_plant(const PlantModel& model, const PlantState& x,
                           const Vec& tau, const DisturbanceSpec& disturbance,
                           double t, double h, int substeps);

struct LogRow {
  double t = 0.0;
  Vec qd, q, q_meas;
  Vec e1;       // q − qd (true)
  Vec de1_hat;  // estimated velocity error used by the controller
  Vec tau;
  double c_hat = 0.0;
  double s_norm = 0.0;
  Vec n_hat;
  Vec disturbance;
};

struct TrajectoryLog {
  int dof = 0;
  double h = 0.0;
  std::vector<LogRow> rows;
};

class SimulationDiverged : public NumericalError {
public:
  SimulationDiverged(const std::string& what, TrajectoryLog partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const TrajectoryLog& partial() const { return partial_; }

private:
  TrajectoryLog partial_;
};

/// Closed loop: the controller sees only sampled, noisy positions and its own
/// memories; τ is held over each period.
class World {
public:
  explicit World(const Scenario& scenario);

  /// Measure at the current sample instant, compute τ and log the row.
  const LogRow& sample();
  /// Integrate the plant to the next sample instant under the held τ.
  void advance();
  /// sample() followed by advance().
  void step();

  double time() const { return static_cast<double>(k_) * scenario_.h; }
  const PlantState& plant_state() const { return x_; }
  const TrajectoryLog& log() const { return log_; }
  TrajectoryLog& log() { return log_; }
  const Controller& controller() const { return controller_; }

private:
  Scenario scenario_;
  DerivativeEstimator estimator_;
  PositionHistory history_;
  Controller controller_;
  Rng rng_;
  PlantState x_;
  Vec tau_;
  std::int64_t k_ = 0;
  TrajectoryLog log_;
};

/// Lyapunov blocks for the surface s = P2 e1 with Q = q I.
SurfaceBlocks surface_blocks(const GainSet& gains, double lyapunov_q);

/// Runs for duration/h periods and returns duration/h + 1 rows. Throws
/// SimulationDiverged (with the partial log) on NaN/Inf or ‖q̇‖ > 1e6.
TrajectoryLog run(const Scenario& scenario);

/// Independent per-scenario RNG stream for batch runs (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct Metrics {
  double rms_e = 0.0;    // RMS of ‖e1‖ (Euclidean over joints), rad
  double max_e = 0.0;    // rad
  double rms_tau = 0.0;  // RMS of ‖τ‖, N·m
  double c_min = 0.0, c_max = 0.0, c_final = 0.0;
  /// First t ≥ t_skip after which ‖e1‖ stays within the band; empty if the
  /// error leaves the band at the last sample.
  std::optional<double> settling_time;
  std::size_t samples = 0;
};

Metrics metrics(const TrajectoryLog& log, double t_skip,
                double settle_band = 1e-3);

}  // namespace tarc
