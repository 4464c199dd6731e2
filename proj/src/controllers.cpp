#include "tarc/controllers.hpp"

#include <algorithm>

namespace tarc {
namespace {

bool symmetric_pd(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  return Eigen::LLT<Mat>(m).info() == Eigen::Success;
}

}  // namespace

void GainSet::validate() const {
  const auto n = K1.rows();
  require(n >= 1, "gain matrices must be nonempty");
  require(K1.cols() == n && K2.rows() == n && K2.cols() == n &&
              M_hat.rows() == n && M_hat.cols() == n,
          "K1, K2 and M_hat must be square with matching dof");
  require(symmetric_pd(K1), "K1 must be symmetric positive definite");
  require(symmetric_pd(K2), "K2 must be symmetric positive definite");
  require(alpha >= 1.0, "alpha must be >= 1");
  require(epsilon > 0.0, "epsilon must be positive");
  require(gamma > 0.0, "gamma must be positive");
  require(c_up > 0.0 && c_down > 0.0, "adaptation rates must be positive");
  require(c0 > gamma, "initial switching gain must exceed gamma");
}

void AsmcParams::validate() const {
  require(rho0 >= 0.0, "asmc rho0 must be nonnegative");
  require(rate > 0.0, "asmc rate must be positive");
  require(delta > 0.0, "asmc delta must be positive");
  require(floor > 0.0, "asmc floor must be positive");
}

SurfaceBlocks partition_lyapunov(const Mat& P) {
  require(P.rows() == P.cols() && P.rows() % 2 == 0 && P.rows() > 0,
          "P must be square with even dimension");
  const auto n = P.rows() / 2;
  return {P.bottomLeftCorner(n, n), P.bottomRightCorner(n, n)};
}

ControllerState ControllerState::initial(const GainSet& gains,
                                         SurfaceBlocks blocks) {
  const int n = gains.dof();
  require(blocks.P2.rows() == n && blocks.P2.cols() == n &&
              blocks.P3.rows() == n && blocks.P3.cols() == n,
          "Lyapunov blocks must be n x n");
  ControllerState st;
  st.c_hat = gains.c0;
  st.tau_prev = Vec::Zero(n);
  st.qdd_hat_prev = Vec::Zero(n);
  st.s_norm_prev = 0.0;
  st.blocks = std::move(blocks);
  return st;
}

Vec tde_bias_estimate(const ControllerState& state, const Mat& M_hat) {
  require(M_hat.cols() == state.qdd_hat_prev.size() &&
              state.tau_prev.size() == M_hat.rows(),
          "TDE memory does not match M_hat");
  return state.tau_prev - M_hat * state.qdd_hat_prev;
}

Vec tdc_auxiliary(const Vec& qdd_d, const Vec& e1, const Vec& de1,
                  const GainSet& gains) {
  const auto n = gains.K1.rows();
  require_size(qdd_d, n, "qdd_d");
  require_size(e1, n, "e1");
  require_size(de1, n, "de1");
  return qdd_d - gains.K2 * de1 - gains.K1 * e1;
}

Vec compute_s(const Vec& e1, const SurfaceBlocks& blocks) {
  require_size(e1, blocks.P2.cols(), "e1");
  return blocks.P2 * e1;
}

Vec compute_s_hat(const Vec& e1, const Vec& de1_hat,
                  const SurfaceBlocks& blocks) {
  require_size(de1_hat, blocks.P3.cols(), "de1_hat");
  return compute_s(e1, blocks) + blocks.P3 * de1_hat;
}

Vec switching_term(const Vec& s, double c_hat, double alpha, double epsilon) {
  require(epsilon > 0.0, "epsilon must be positive");
  const double norm = s.norm();
  if (norm >= epsilon) return -alpha * c_hat * s / norm;
  return -alpha * c_hat * s / epsilon;
}

double update_gain(ControllerState& state, const Vec& s, const GainSet& gains,
                   double dt) {
  require(dt > 0.0, "controller period must be positive");
  const double norm = s.norm();
  const bool growing = norm > state.s_norm_prev;
  if (state.c_hat <= gains.gamma || growing) {
    state.c_hat += gains.c_up * norm * dt;
  } else {
    // The continuous law never crosses γ from above; the Euler step can.
    state.c_hat = std::max(state.c_hat - gains.c_down * norm * dt, gains.gamma);
  }
  state.s_norm_prev = norm;
  return state.c_hat;
}

ControlOutput tarc_control(const ControlInput& in, ControllerState& state,
                           const GainSet& gains, double dt) {
  ControlOutput out;
  out.e1 = in.q_meas - in.qd;
  out.de1_hat = in.dq_hat - in.dqd;
  out.u_hat = tdc_auxiliary(in.qdd_d, out.e1, out.de1_hat, gains);
  out.n_hat = tde_bias_estimate(state, gains.M_hat);
  out.s = compute_s(out.e1, state.blocks);
  out.s_norm = out.s.norm();
  out.delta_u = switching_term(out.s, state.c_hat, gains.alpha, gains.epsilon);
  out.tau = gains.M_hat * (out.u_hat + out.delta_u) + out.n_hat;

  update_gain(state, out.s, gains, dt);
  out.gain = state.c_hat;
  state.tau_prev = out.tau;
  state.qdd_hat_prev = in.qdd_hat;
  return out;
}

double asmc_gain_update(const AsmcParams& params, double rho, double r_norm,
                        double dt) {
  require(dt > 0.0, "controller period must be positive");
  if (rho <= params.floor) return rho + params.floor * dt;
  const double diff = r_norm - params.delta;
  const double sgn = (diff > 0.0) - (diff < 0.0);
  return rho + params.rate * sgn * dt;
}

const char* to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::TDC: return "tdc";
    case ControllerKind::TARC: return "tarc";
    case ControllerKind::ASMC: return "asmc";
  }
  return "?";
}

ControllerKind controller_kind_from_string(const std::string& name) {
  if (name == "tdc") return ControllerKind::TDC;
  if (name == "tarc") return ControllerKind::TARC;
  if (name == "asmc") return ControllerKind::ASMC;
  throw UsageError("unknown controller type '" + name +
                   "' (expected tdc, tarc or asmc)");
}

Controller::Controller(ControllerKind kind, GainSet gains, AsmcParams asmc,
                       SurfaceBlocks blocks, double dt)
    : kind_(kind),
      gains_(std::move(gains)),
      asmc_(asmc),
      dt_(dt),
      state_(ControllerState::initial(gains_, std::move(blocks))),
      rho_(asmc.rho0) {
  require(dt > 0.0, "controller period must be positive");
  gains_.validate();
  if (kind_ == ControllerKind::ASMC) asmc_.validate();
}

ControlOutput Controller::compute(const ControlInput& in) {
  if (kind_ == ControllerKind::TARC) return tarc_control(in, state_, gains_, dt_);

  ControlOutput out;
  out.e1 = in.q_meas - in.qd;
  out.de1_hat = in.dq_hat - in.dqd;
  out.u_hat = tdc_auxiliary(in.qdd_d, out.e1, out.de1_hat, gains_);
  out.n_hat = tde_bias_estimate(state_, gains_.M_hat);
  out.s = compute_s(out.e1, state_.blocks);
  out.s_norm = out.s.norm();
  if (kind_ == ControllerKind::ASMC) {
    out.delta_u = switching_term(out.s, rho_, gains_.alpha, gains_.epsilon);
    rho_ = asmc_gain_update(asmc_, rho_, out.s_norm, dt_);
    out.gain = rho_;
  } else {
    out.delta_u = Vec::Zero(out.e1.size());
  }
  out.tau = gains_.M_hat * (out.u_hat + out.delta_u) + out.n_hat;
  state_.tau_prev = out.tau;
  state_.qdd_hat_prev = in.qdd_hat;
  state_.s_norm_prev = out.s_norm;
  return out;
}

}  // namespace tarc
