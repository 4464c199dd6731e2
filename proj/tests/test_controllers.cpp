#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tarc/controllers.hpp"
#include "tarc/stability.hpp"

using namespace tarc;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

GainSet gains2() {
  GainSet g;
  g.K1 = 25 * Mat::Identity(2, 2);
  g.K2 = 10 * Mat::Identity(2, 2);
  g.M_hat = Mat::Identity(2, 2);
  g.alpha = 1.0;
  g.epsilon = 0.01;
  g.gamma = 0.1;
  g.c_up = 3.0;
  g.c_down = 2.0;
  g.c0 = 0.5;
  return g;
}

SurfaceBlocks identity_blocks(int n) {
  return {Mat::Identity(n, n), Mat::Identity(n, n)};
}

}  // namespace

TEST_CASE("TDE bias estimate") {
  ControllerState st = ControllerState::initial(gains2(), identity_blocks(2));
  CHECK(tde_bias_estimate(st, Mat::Identity(2, 2)).norm() == 0.0);
  st.tau_prev = v2(2, 1);
  st.qdd_hat_prev = v2(1, 1);
  CHECK(tde_bias_estimate(st, Mat::Identity(2, 2)) == v2(1, 0));
}

TEST_CASE("TDE recovers a constant bias after one sample with exact derivatives") {
  // Double integrator M q̈ + N* = τ. With M̂ = M and exact q̈ the estimate at
  // the next sample equals N*.
  const Mat M = 2.0 * Mat::Identity(2, 2);
  const Vec N = v2(0.7, -1.3);
  GainSet g = gains2();
  g.M_hat = M;
  ControllerState st = ControllerState::initial(g, identity_blocks(2));
  const Vec tau = v2(3.0, 0.5);
  st.tau_prev = tau;
  st.qdd_hat_prev = M.ldlt().solve(tau - N);
  CHECK((tde_bias_estimate(st, M) - N).norm() < 1e-14);
}

TEST_CASE("TDC auxiliary input") {
  GainSet g = gains2();
  CHECK(tdc_auxiliary(v2(1, 2), Vec::Zero(2), Vec::Zero(2), g) == v2(1, 2));
  g.K1 = Mat::Identity(2, 2);
  g.K2 = 2 * Mat::Identity(2, 2);
  CHECK(tdc_auxiliary(Vec::Zero(2), v2(1, 0), Vec::Zero(2), g) == v2(-1, 0));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 50; ++i) {
    GainSet s;
    const double k1 = 1 + std::abs(u(rng)), k2 = 1 + std::abs(u(rng));
    s.K1 = Mat::Constant(1, 1, k1);
    s.K2 = Mat::Constant(1, 1, k2);
    const double qdd = u(rng), e = u(rng), de = u(rng);
    const Vec out = tdc_auxiliary(Vec::Constant(1, qdd), Vec::Constant(1, e),
                                  Vec::Constant(1, de), s);
    CHECK(out(0) == doctest::Approx(qdd - k2 * de - k1 * e));
  }
}

TEST_CASE("sliding variables from the Lyapunov blocks") {
  CHECK(compute_s(Vec::Zero(2), identity_blocks(2)).norm() == 0.0);
  CHECK(compute_s(v2(1, 2), identity_blocks(2)) == v2(1, 2));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 20; ++i) {
    Mat R = Mat::NullaryExpr(4, 4, [&] { return u(rng); });
    const Mat P = R * R.transpose() + Mat::Identity(4, 4);
    const SurfaceBlocks b = partition_lyapunov(P);
    CHECK(b.P2 == P.block(2, 0, 2, 2));
    CHECK(b.P3 == P.block(2, 2, 2, 2));
    const Vec e1 = v2(u(rng), u(rng)), de1 = v2(u(rng), u(rng));
    CHECK((compute_s_hat(e1, de1, b) - compute_s(e1, b) - b.P3 * de1).norm() < 1e-15);
    // Bᵀ P [e1; ė1] with B = [0; I].
    Vec e(4);
    e << e1, de1;
    CHECK((compute_s_hat(e1, de1, b) - P.bottomRows(2) * e).norm() < 1e-14);
  }
}

TEST_CASE("switching term") {
  const double eps = 0.01;
  CHECK(switching_term(Vec::Zero(2), 1.0, 1.0, eps).norm() == 0.0);

  const Vec s = v2(3, 4) * eps / 5;
  const Vec du = switching_term(s, 0.5, 2.0, eps);
  CHECK(du.norm() == doctest::Approx(1.0).epsilon(1e-14));
  // Outer branch formula and inner branch formula agree on the boundary.
  const Vec outer = -2.0 * 0.5 * s / s.norm();
  const Vec inner = -2.0 * 0.5 * s / eps;
  CHECK((outer - inner).norm() < 1e-15);
  CHECK((du - outer).norm() < 1e-15);

  // Saturates outside, linear inside.
  CHECK(switching_term(v2(10, 0), 2.0, 1.0, eps).isApprox(v2(-2, 0)));
  CHECK(switching_term(v2(eps / 4, 0), 2.0, 1.0, eps).isApprox(v2(-0.5, 0)));
}

TEST_CASE("adaptive gain branch table") {
  const GainSet g = gains2();  // γ = 0.1, c̄ = 3, c̲ = 2
  const double dt = 1e-3;
  struct Row {
    double c, s, s_prev, expected_delta;
  };
  const Row rows[] = {
      // ĉ ≤ γ, ‖s‖ grew: up
      {0.05, 1.0, 0.5, +3.0 * 1.0 * dt},
      // ĉ ≤ γ, ‖s‖ shrank: still up
      {0.05, 1.0, 2.0, +3.0 * 1.0 * dt},
      // ĉ > γ, ‖s‖ grew: up
      {0.2, 0.5, 0.25, +3.0 * 0.5 * dt},
      // ĉ > γ, ‖s‖ shrank: down
      {0.2, 0.5, 1.0, -2.0 * 0.5 * dt},
      // ĉ > γ, ‖s‖ unchanged: down branch
      {0.2, 0.5, 0.5, -2.0 * 0.5 * dt},
  };
  for (const Row& r : rows) {
    ControllerState st = ControllerState::initial(g, identity_blocks(2));
    st.c_hat = r.c;
    st.s_norm_prev = r.s_prev;
    const double c = update_gain(st, Vec::Constant(1, r.s), g, dt);
    CHECK(c - r.c == doctest::Approx(r.expected_delta).epsilon(1e-12));
    CHECK(st.s_norm_prev == r.s);
  }

  SUBCASE("zero surface leaves the gain unchanged") {
    ControllerState st = ControllerState::initial(g, identity_blocks(2));
    st.c_hat = 0.3;
    CHECK(update_gain(st, Vec::Zero(1), g, dt) == 0.3);
  }
  SUBCASE("gamma/2 with unit surface grows by c_up dt") {
    ControllerState st = ControllerState::initial(g, identity_blocks(2));
    st.c_hat = g.gamma / 2;
    st.s_norm_prev = 5.0;
    CHECK(update_gain(st, Vec::Constant(1, 1.0), g, dt) ==
          doctest::Approx(g.gamma / 2 + g.c_up * dt));
  }
  SUBCASE("2 gamma, s = 0.5, s_h = 1 shrinks by c_down 0.5 dt") {
    ControllerState st = ControllerState::initial(g, identity_blocks(2));
    st.c_hat = 2 * g.gamma;
    st.s_norm_prev = 1.0;
    CHECK(update_gain(st, Vec::Constant(1, 0.5), g, dt) ==
          doctest::Approx(2 * g.gamma - g.c_down * 0.5 * dt));
  }
  SUBCASE("decrease never crosses below gamma") {
    ControllerState st = ControllerState::initial(g, identity_blocks(2));
    st.c_hat = g.gamma + 1e-6;
    st.s_norm_prev = 100.0;
    CHECK(update_gain(st, Vec::Constant(1, 50.0), g, dt) == g.gamma);
  }
}

TEST_CASE("direction of the gain change is decided by the trigger alone") {
  const GainSet g = gains2();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    ControllerState st = ControllerState::initial(g, identity_blocks(2));
    st.c_hat = 0.3 * u(rng);
    st.s_norm_prev = u(rng);
    const Vec s = v2(u(rng), u(rng)) * 0.7;
    const bool up = st.c_hat <= g.gamma || s.norm() > st.s_norm_prev;
    const double before = st.c_hat;
    const double after = update_gain(st, s, g, 1e-3);
    if (up) CHECK(after > before);
    else CHECK(after <= before);
  }
}

TEST_CASE("ASMC gain law") {
  AsmcParams p;
  p.rate = 2.0;
  p.delta = 0.1;
  p.floor = 0.5;
  const double dt = 0.01;
  CHECK(asmc_gain_update(p, 0.4, 10.0, dt) == doctest::Approx(0.4 + 0.5 * dt));
  CHECK(asmc_gain_update(p, 0.4, 0.0, dt) == doctest::Approx(0.4 + 0.5 * dt));
  CHECK(asmc_gain_update(p, 1.0, 0.3, dt) == doctest::Approx(1.0 + 2.0 * dt));
  CHECK(asmc_gain_update(p, 1.0, 0.05, dt) == doctest::Approx(1.0 - 2.0 * dt));
  CHECK(asmc_gain_update(p, 1.0, 0.1, dt) == 1.0);

  // Keeps growing while ‖r‖ shrinks toward δ; keeps shrinking while ‖r‖ grows
  // toward δ from below.
  double rho = 1.0;
  for (double r = 0.5; r > 0.11; r -= 0.05) {
    const double next = asmc_gain_update(p, rho, r, dt);
    CHECK(next > rho);
    rho = next;
  }
  for (double r = 0.01; r < 0.09; r += 0.01) {
    const double next = asmc_gain_update(p, rho, r, dt);
    CHECK(next < rho);
    rho = next;
  }
}

TEST_CASE("TARC control assembly") {
  GainSet g = gains2();
  g.M_hat = (Mat(2, 2) << 1.5, 0.2, 0.2, 0.8).finished();
  Controller ctl(ControllerKind::TARC, g, AsmcParams{}, identity_blocks(2), 1e-3);

  SUBCASE("first sample with zero errors gives M_hat qdd_d") {
    ControlInput in{v2(0.1, 0.2), v2(0, 0), v2(1, -1), v2(0.1, 0.2), v2(0, 0), v2(0, 0)};
    const ControlOutput out = ctl.compute(in);
    CHECK((out.tau - g.M_hat * v2(1, -1)).norm() < 1e-15);
  }

  SUBCASE("components add up") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    ControllerState st = ControllerState::initial(g, identity_blocks(2));
    for (int k = 0; k < 100; ++k) {
      ControlInput in{v2(u(rng), u(rng)), v2(u(rng), u(rng)), v2(u(rng), u(rng)),
                      v2(u(rng), u(rng)), v2(u(rng), u(rng)), v2(u(rng), u(rng))};
      const Vec n_hat = tde_bias_estimate(st, g.M_hat);
      const double c = st.c_hat;
      const ControlOutput out = tarc_control(in, st, g, 1e-3);
      const Vec e1 = in.q_meas - in.qd, de1 = in.dq_hat - in.dqd;
      const Vec u_hat = in.qdd_d - g.K1 * e1 - g.K2 * de1;
      const Vec du = switching_term(e1, c, g.alpha, g.epsilon);
      CHECK((out.tau - g.M_hat * u_hat - g.M_hat * du - n_hat).norm() < 1e-12);
      CHECK(st.tau_prev == out.tau);
      CHECK(st.qdd_hat_prev == in.qdd_hat);
      CHECK(st.s_norm_prev == doctest::Approx(e1.norm()));
    }
  }

  SUBCASE("zero gain and no TDE reduce to the nominal law") {
    ControllerState st = ControllerState::initial(g, identity_blocks(2));
    st.c_hat = 0.0;
    const ControlInput in{v2(0.3, 0.1), v2(0.2, 0), v2(1, 2), v2(0.25, 0.2), v2(0.1, -0.1), v2(0, 0)};
    const ControlOutput out = tarc_control(in, st, g, 1e-3);
    const Vec u = tdc_auxiliary(in.qdd_d, in.q_meas - in.qd, in.dq_hat - in.dqd, g);
    CHECK((out.tau - g.M_hat * u).norm() < 1e-14);
  }
}

TEST_CASE("TDC and ASMC variants") {
  const GainSet g = gains2();
  AsmcParams a;
  a.rho0 = 0.7;
  a.rate = 5;
  a.delta = 0.01;
  a.floor = 0.1;
  const ControlInput in{v2(0, 0), v2(0, 0), v2(0, 0), v2(0.2, 0), v2(0, 0), v2(0, 0)};

  Controller tdc(ControllerKind::TDC, g, a, identity_blocks(2), 1e-3);
  const ControlOutput o1 = tdc.compute(in);
  CHECK(o1.delta_u.norm() == 0.0);
  CHECK(o1.gain == 0.0);

  Controller asmc(ControllerKind::ASMC, g, a, identity_blocks(2), 1e-3);
  const ControlOutput o2 = asmc.compute(in);
  CHECK((o2.delta_u - switching_term(v2(0.2, 0), 0.7, 1.0, g.epsilon)).norm() < 1e-15);
  CHECK(asmc.rho() == doctest::Approx(0.7 + 5e-3));
}

TEST_CASE("gain validation") {
  GainSet g = gains2();
  CHECK_NOTHROW(g.validate());
  g.c0 = g.gamma;
  CHECK_THROWS_AS(g.validate(), UsageError);
  g = gains2();
  g.alpha = 0.5;
  CHECK_THROWS_AS(g.validate(), UsageError);
  g = gains2();
  g.K1(0, 1) = 3.0;
  CHECK_THROWS_AS(g.validate(), UsageError);
  g = gains2();
  g.K2 = -g.K2;
  CHECK_THROWS_AS(g.validate(), UsageError);
  CHECK_THROWS_AS(controller_kind_from_string("pid"), UsageError);
  CHECK(controller_kind_from_string("asmc") == ControllerKind::ASMC);
}
