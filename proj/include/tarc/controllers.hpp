#pragma once

#include "tarc/common.hpp"

namespace tarc {

/// Gains shared by the TDE-based laws. `c_up`/`c_down` are the increase and
/// decrease rates of the adaptive switching gain; `c0` its initial value.
struct GainSet {
  Mat K1, K2;
  Mat M_hat;
  double alpha = 1.0;
  double epsilon = 0.01;
  double gamma = 0.01;
  double c_up = 1.0;
  double c_down = 1.0;
  double c0 = 0.1;

  int dof() const { return static_cast<int>(K1.rows()); }
  void validate() const;
};

/// Threshold-based switching-gain law used as the comparison baseline.
struct AsmcParams {
  double rho0 = 0.1;    // initial switching gain ϱ
  double rate = 1.0;    // ϱ̄
  double delta = 0.01;  // threshold on ‖r‖
  double floor = 0.01;  // γ̄

  void validate() const;
};

/// Blocks of the Lyapunov solution P = [[P1, P2ᵀ], [P2, P3]].
struct SurfaceBlocks {
  Mat P2, P3;
};

SurfaceBlocks partition_lyapunov(const Mat& P);

struct ControllerState {
  double c_hat = 0.0;
  Vec tau_prev;
  Vec qdd_hat_prev;
  double s_norm_prev = 0.0;
  SurfaceBlocks blocks;

  static ControllerState initial(const GainSet& gains, SurfaceBlocks blocks);
};

/// N̂ = τ_h − M̂ q̈̂_h.
Vec tde_bias_estimate(const ControllerState& state, const Mat& M_hat);

/// u = q̈d − K2 ė1 − K1 e1.
Vec tdc_auxiliary(const Vec& qdd_d, const Vec& e1, const Vec& de1,
                  const GainSet& gains);

/// s = P2 e1.
Vec compute_s(const Vec& e1, const SurfaceBlocks& blocks);
/// ŝ = P2 e1 + P3 ė̂1.
Vec compute_s_hat(const Vec& e1, const Vec& de1_hat,
                  const SurfaceBlocks& blocks);

/// Boundary-layer switching law, −α ĉ s / max(‖s‖, ε).
Vec switching_term(const Vec& s, double c_hat, double alpha, double epsilon);

/// One explicit-Euler step of the adaptive law, followed by the floor clamp
/// ĉ ≥ γ. Updates `state.c_hat` and `state.s_norm_prev`; returns ĉ.
double update_gain(ControllerState& state, const Vec& s, const GainSet& gains,
                   double dt);

/// Signals available to the controller at one sample. Nothing here comes
/// from the true plant state.
struct ControlInput {
  Vec qd, dqd, qdd_d;
  Vec q_meas;
  Vec dq_hat, qdd_hat;
};

struct ControlOutput {
  Vec tau;
  Vec u_hat;
  Vec delta_u;
  Vec n_hat;
  Vec e1;
  Vec de1_hat;
  Vec s;
  double s_norm = 0.0;
  double gain = 0.0;  // ĉ for TARC, ϱ for ASMC, 0 for TDC
};

/// τ = M̂ (û + Δu) + N̂ with the adaptive switching gain. The state memories
/// are advanced after τ is formed.
ControlOutput tarc_control(const ControlInput& in, ControllerState& state,
                           const GainSet& gains, double dt);

/// Euler step of ϱ̇ = ϱ̄ sgn(‖r‖ − δ) if ϱ > γ̄, else γ̄. sgn(0) = 0.
double asmc_gain_update(const AsmcParams& params, double rho, double r_norm,
                        double dt);

enum class ControllerKind { TDC, TARC, ASMC };

const char* to_string(ControllerKind kind);
ControllerKind controller_kind_from_string(const std::string& name);

/// One control loop. TDC drops the switching term; ASMC keeps the TARC
/// structure but drives the switching gain with the threshold law.
class Controller {
public:
  Controller(ControllerKind kind, GainSet gains, AsmcParams asmc,
             SurfaceBlocks blocks, double dt);

  ControlOutput compute(const ControlInput& in);

  ControllerKind kind() const { return kind_; }
  const ControllerState& state() const { return state_; }
  double rho() const { return rho_; }

private:
  ControllerKind kind_;
  GainSet gains_;
  AsmcParams asmc_;
  double dt_;
  ControllerState state_;
  double rho_;
};

}  // namespace tarc
