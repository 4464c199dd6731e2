#include "tarc/simulation.hpp"

#include <cmath>

#include "tarc/stability.hpp"

namespace tarc {

ReferenceSpec ReferenceSpec::zero(int dof) {
  return {std::vector<JointReference>(static_cast<std::size_t>(dof))};
}

Vec ReferenceSpec::bound(int derivative) const {
  Vec b = Vec::Zero(dof());
  for (int i = 0; i < dof(); ++i) {
    const auto& j = joints[i];
    if (derivative == 0) b(i) = std::abs(j.offset);
    for (const auto& s : j.terms)
      b(i) += std::abs(s.amplitude) * std::pow(std::abs(s.frequency), derivative);
  }
  return b;
}

ReferenceSample reference(const ReferenceSpec& spec, double t) {
  require(t >= 0.0, "reference time must be nonnegative");
  const int n = spec.dof();
  ReferenceSample r{Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)};
  for (int i = 0; i < n; ++i) {
    const auto& j = spec.joints[i];
    r.qd(i) = j.offset;
    for (const auto& s : j.terms) {
      const double arg = s.frequency * t + s.phase;
      r.qd(i) += s.amplitude * std::sin(arg);
      r.dqd(i) += s.amplitude * s.frequency * std::cos(arg);
      r.qdd(i) -= s.amplitude * s.frequency * s.frequency * std::sin(arg);
    }
  }
  return r;
}

void Scenario::validate() const {
  plant.validate();
  nominal_plant.validate();
  const int n = dof();
  require(nominal_plant.dof() == n, "nominal plant dof differs from plant");
  require(gains.dof() == n, "gain dimension differs from plant dof");
  gains.validate();
  if (controller == ControllerKind::ASMC) asmc.validate();
  require(lyapunov_q > 0.0, "lyapunov_q must be positive");
  require(reference.dof() == n, "reference dof differs from plant");
  disturbance.validate(n);
  noise.validate(n);
  require(h > 0.0, "controller period h must be positive");
  require(substeps >= 1, "substeps must be >= 1");
  require(duration == 0.0 || duration >= 10.0 * h * (1.0 - 1e-12),
          "duration must be 0 or at least 10 controller periods");
  require(std::abs(estimator.sample_period - h) <= 1e-12 * h,
          "estimator sample_period must equal h");
  estimator.validate(2);
  if (q0.size() != 0) require_size(q0, n, "q0");
  if (dq0.size() != 0) require_size(dq0, n, "dq0");
}

namespace {

struct Derivative {
  Vec dq, ddq;
};

Derivative rhs(const PlantModel& model, const Vec& q, const Vec& dq,
               const Vec& tau, const DisturbanceSpec& dist, double t) {
  return {dq, forward_dynamics(model, q, dq, tau, dist(t))};
}

bool finite(const Vec& v) { return v.allFinite(); }

}  // namespace

PlantState integrate_plant(const PlantModel& model, const PlantState& x,
                           const Vec& tau, const DisturbanceSpec& disturbance,
                           double t, double h, int substeps) {
  require(substeps >= 1, "substeps must be >= 1");
  const double dt = h / substeps;
  PlantState s = x;
  for (int i = 0; i < substeps; ++i) {
    const double ts = t + i * dt;
    const auto k1 = rhs(model, s.q, s.dq, tau, disturbance, ts);
    const auto k2 = rhs(model, s.q + 0.5 * dt * k1.dq, s.dq + 0.5 * dt * k1.ddq,
                        tau, disturbance, ts + 0.5 * dt);
    const auto k3 = rhs(model, s.q + 0.5 * dt * k2.dq, s.dq + 0.5 * dt * k2.ddq,
                        tau, disturbance, ts + 0.5 * dt);
    const auto k4 = rhs(model, s.q + dt * k3.dq, s.dq + dt * k3.ddq, tau,
                        disturbance, ts + dt);
    s.q += dt / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
    s.dq += dt / 6.0 * (k1.ddq + 2.0 * k2.ddq + 2.0 * k3.ddq + k4.ddq);
  }
  return s;
}

SurfaceBlocks surface_blocks(const GainSet& gains, double lyapunov_q) {
  const ErrorSystem es = build_error_system(gains.K1, gains.K2);
  const Mat P = solve_lyapunov(
      es.A, lyapunov_q * Mat::Identity(2 * es.dof, 2 * es.dof));
  return partition_lyapunov(P);
}

World::World(const Scenario& scenario)
    : scenario_((scenario.validate(), scenario)),
      estimator_(scenario_.estimator, 2),
      history_(estimator_.history_capacity(), scenario_.h),
      controller_(scenario_.controller, scenario_.gains, scenario_.asmc,
                  surface_blocks(scenario_.gains, scenario_.lyapunov_q),
                  scenario_.h),
      rng_(scenario_.noise.seed) {
  const int n = scenario_.dof();
  const ReferenceSample r0 = reference(scenario_.reference, 0.0);
  x_.q = scenario_.q0.size() ? scenario_.q0 : r0.qd;
  x_.dq = scenario_.dq0.size() ? scenario_.dq0 : Vec::Zero(n);
  tau_ = Vec::Zero(n);
  log_.dof = n;
  log_.h = scenario_.h;
}

const LogRow& World::sample() {
  const double t = time();
  const Vec q_meas = sample_measurement(x_.q, scenario_.noise, rng_);
  history_.push(t, q_meas);
  const ReferenceSample r = reference(scenario_.reference, t);

  ControlInput in;
  in.qd = r.qd;
  in.dqd = r.dqd;
  in.qdd_d = r.qdd;
  in.q_meas = q_meas;
  in.dq_hat = estimator_.estimate(history_, 1);
  in.qdd_hat = estimator_.estimate(history_, 2);
  const ControlOutput out = controller_.compute(in);
  tau_ = out.tau;

  LogRow row;
  row.t = t;
  row.qd = r.qd;
  row.q = x_.q;
  row.q_meas = q_meas;
  row.e1 = x_.q - r.qd;
  row.de1_hat = out.de1_hat;
  row.tau = out.tau;
  row.c_hat = out.gain;
  row.s_norm = out.s_norm;
  row.n_hat = out.n_hat;
  row.disturbance = scenario_.disturbance(t);
  log_.rows.push_back(std::move(row));
  if (!finite(tau_))
    throw SimulationDiverged("control torque is not finite at t = " +
                                 std::to_string(t),
                             log_);
  return log_.rows.back();
}

void World::advance() {
  const double t = time();
  x_ = integrate_plant(scenario_.plant, x_, tau_, scenario_.disturbance, t,
                       scenario_.h, scenario_.substeps);
  ++k_;
  if (!finite(x_.q) || !finite(x_.dq) || x_.dq.norm() > 1e6)
    throw SimulationDiverged(
        "simulation diverged at t = " + std::to_string(time()), log_);
}

void World::step() {
  sample();
  advance();
}

TrajectoryLog run(const Scenario& scenario) {
  World world(scenario);
  const auto periods =
      static_cast<std::int64_t>(std::llround(scenario.duration / scenario.h));
  world.log().rows.reserve(static_cast<std::size_t>(periods) + 1);
  for (std::int64_t k = 0; k < periods; ++k) world.step();
  world.sample();
  return std::move(world.log());
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Metrics metrics(const TrajectoryLog& log, double t_skip, double settle_band) {
  Metrics m;
  double sum_e2 = 0.0, sum_tau2 = 0.0;
  bool first = true;
  std::optional<double> settle;
  for (const auto& row : log.rows) {
    if (row.t < t_skip - 1e-9 * log.h) continue;
    const double e = row.e1.norm();
    const double tau = row.tau.norm();
    sum_e2 += e * e;
    sum_tau2 += tau * tau;
    m.max_e = std::max(m.max_e, e);
    if (first) {
      m.c_min = m.c_max = row.c_hat;
      first = false;
    }
    m.c_min = std::min(m.c_min, row.c_hat);
    m.c_max = std::max(m.c_max, row.c_hat);
    m.c_final = row.c_hat;
    if (e > settle_band)
      settle.reset();
    else if (!settle)
      settle = row.t;
    ++m.samples;
  }
  if (m.samples == 0) throw UsageError("metrics window is empty");
  m.rms_e = std::sqrt(sum_e2 / m.samples);
  m.rms_tau = std::sqrt(sum_tau2 / m.samples);
  m.settling_time = settle;
  return m;
}

}  // namespace tarc
