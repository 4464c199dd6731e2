// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tarc/controllers.hpp"
#include "tarc/estimator.hpp"
#include "tarc/scenario_io.hpp"
#include "tarc/stability.hpp"

using namespace tarc;

namespace {

// Frozen from the first verified build (see README, "Acceptance").
constexpr double kUubT = 2.0;          // s
constexpr double kUubB = 7.5e-4;       // rad, max over 10 seeds of ‖e1(t)‖, t ≥ T
constexpr double kPsiGolden1ms = 0.05;  // Ψ min eigenvalue at the first passing grid point
constexpr int kSeeds = 10;

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

ScenarioDocument default_scenario() {
  return load_scenario(std::filesystem::path(TARC_SOURCE_DIR) / "scenarios" /
                       "two_link_uncertain.json");
}

Scenario seeded(Scenario sc, int s) {
  sc.noise.seed = derive_seed(1, static_cast<std::uint64_t>(s));
  return sc;
}

EstimatorConfig estimator_config(int degree, double window) {
  EstimatorConfig c;
  c.degree = degree;
  c.window = window;
  c.sample_period = 1e-3;
  c.quadrature = Quadrature::ExactPolynomial;
  return c;
}

Verdict estimator_exactness() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int degree = 1; degree <= 3; ++degree) {
    const EstimatorConfig cfg = estimator_config(degree, 0.05);
    for (int trial = 0; trial < 20; ++trial) {
      const int d = trial % (degree + 1);
      std::vector<double> c(d + 1);
      for (double& x : c) x = u(rng);
      auto p = [&](double t, int order) {
        double s = 0;
        for (int k = order; k <= d; ++k) {
          double f = c[k];
          for (int i = 0; i < order; ++i) f *= k - i;
          s += f * std::pow(t, k - order);
        }
        return s;
      };
      PositionHistory h(static_cast<std::size_t>(cfg.taps()), 1e-3);
      const int last = 1000 + trial * 37;
      for (int k = last - cfg.taps() + 1; k <= last; ++k)
        h.push(k * 1e-3, Vec::Constant(1, p(k * 1e-3, 0)));
      const double tn = h.latest_time();
      for (int j = 0; j <= degree; ++j) {
        const double truth = p(tn, j);
        const double err = std::abs(estimate(h, cfg, j)(0) - truth) /
                           std::max(1.0, std::abs(truth));
        worst = std::max(worst, err);
      }
    }
  }
  return {worst < 1e-8, "worst relative error " + fmt(worst)};
}

Verdict noise_attenuation() {
  const EstimatorConfig cfg = estimator_config(2, 0.05);
  const DerivativeEstimator est(cfg, 1);
  Verdict v;
  double worst_ratio = 0;
  for (int s = 0; s < kSeeds; ++s) {
    PositionHistory h(est.history_capacity(), 1e-3);
    Rng rng(derive_seed(2, static_cast<std::uint64_t>(s)));
    std::normal_distribution<double> noise(0.0, 1e-3);
    double se = 0, sb = 0;
    int n = 0;
    for (int k = 0; n < 10000; ++k) {
      const double t = k * 1e-3;
      h.push(t, Vec::Constant(1, std::sin(t) + noise(rng)));
      if (!est.warm(h)) continue;
      const double e = est.estimate(h, 1)(0) - std::cos(t);
      const double b = backward_difference(h, 1)(0) - std::cos(t);
      se += e * e;
      sb += b * b;
      ++n;
    }
    const double ratio = std::sqrt(se / sb);
    worst_ratio = std::max(worst_ratio, ratio);
    v.pass &= ratio < 1.0;
  }
  v.detail = "worst rms(estimator)/rms(backward) " + fmt(worst_ratio);
  return v;
}

Verdict lyapunov_solver() {
  Verdict v;
  Mat A(2, 2), Pexp(2, 2);
  A << 0, 1, -1, -2;
  Pexp << 3, 1, 1, 1;
  const double hand = (solve_lyapunov(A, 2 * Mat::Identity(2, 2)) - Pexp).cwiseAbs().maxCoeff();
  v.pass &= hand < 1e-10;

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 1);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 4;
    Mat M(n, n), R(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = g(rng), R(i, j) = g(rng);
    const double abscissa = Eigen::EigenSolver<Mat>(M).eigenvalues().real().maxCoeff();
    const Mat An = M - (abscissa + 0.1 + std::abs(g(rng))) * Mat::Identity(n, n);
    const Mat Q = R * R.transpose() + 0.1 * Mat::Identity(n, n);
    const Mat P = solve_lyapunov(An, Q);
    const double res = (An.transpose() * P + P * An + Q).norm() / Q.norm();
    worst = std::max(worst, res);
    v.pass &= res < 1e-10 && test_positive_definite(P).pass;
  }
  v.detail = "hand case error " + fmt(hand) + ", worst relative residual " + fmt(worst);
  return v;
}

Verdict certificates() {
  const SuggestedGains k = suggest_gains(5.0, 1.0, 2);
  const ScenarioDocument doc = default_scenario();
  const double window = doc.scenario.estimator.window;
  const int degree = doc.scenario.estimator.degree;
  const ParameterGrid grid = ParameterGrid::defaults();
  const SearchResult fast = search_parameters(k.K1, k.K2, 1e-3, window, degree, grid);
  const SearchResult slow = search_parameters(k.K1, k.K2, 1.0, window, degree, grid);

  Verdict v;
  std::ostringstream d;
  const bool psi_ok = fast.theorem1 && fast.theorem1->pass &&
                      std::abs(fast.theorem1->min_eigenvalue - kPsiGolden1ms) < 1e-9;
  d << "h=1ms: Theorem 1 "
    << (fast.theorem1 ? fmt(fast.theorem1->min_eigenvalue) : std::string("none"))
    << ", Theorem 2 best " << fmt(fast.best_theorem2_eigenvalue)
    << (fast.found ? " (certified)" : " (not certified)")
    << "; h=1s: " << (slow.found ? "certified" : "grid exhausted");
  v.pass = psi_ok && fast.found && !slow.found;
  v.detail = d.str();
  return v;
}

Verdict adaptive_branches() {
  GainSet g;
  g.K1 = g.K2 = g.M_hat = Mat::Identity(2, 2);
  g.gamma = 0.5;
  g.c_up = 3.0;
  g.c_down = 2.0;
  const double dt = 1e-3;
  Vec s(2);
  s << 0.3, 0.4;  // ‖s‖ = 0.5
  struct Row {
    double c, prev, expect;
  };
  const Row rows[] = {
      {0.4, 0.1, 0.4 + 3.0 * 0.5 * dt},  // ĉ ≤ γ, growing
      {0.4, 0.9, 0.4 + 3.0 * 0.5 * dt},  // ĉ ≤ γ, shrinking
      {2.0, 0.1, 2.0 + 3.0 * 0.5 * dt},  // ĉ > γ, growing
      {2.0, 0.9, 2.0 - 2.0 * 0.5 * dt},  // ĉ > γ, shrinking
  };
  Verdict v;
  for (const Row& r : rows) {
    ControllerState st;
    st.c_hat = r.c;
    st.s_norm_prev = r.prev;
    v.pass &= update_gain(st, s, g, dt) == r.expect;
  }

  // Threshold law: the gain keeps growing while the error shrinks above δ and
  // keeps shrinking while the error grows below δ.
  AsmcParams a;
  a.rho0 = 5.0;
  a.rate = 10.0;
  a.delta = 0.1;
  a.floor = 0.01;
  double rho = a.rho0;
  for (double r = 1.0; r > 0.2; r -= 0.1) {
    const double next = asmc_gain_update(a, rho, r, dt);
    v.pass &= next > rho;
    rho = next;
  }
  for (double r = 0.0; r < 0.09; r += 0.01) {
    const double next = asmc_gain_update(a, rho, r, dt);
    v.pass &= next < rho;
    rho = next;
  }
  v.detail = v.pass ? "4 branches exact, threshold signature reproduced" : "mismatch";
  return v;
}

Verdict boundary_layer() {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> u(0.01, 10);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const int n = 1 + i % 4;
    Vec dir(n);
    for (int k = 0; k < n; ++k) dir(k) = g(rng);
    const double eps = u(rng), c = u(rng), alpha = u(rng);
    const Vec s = eps * dir / dir.norm();
    const Vec outer = -alpha * c * s / s.norm();
    const Vec inner = -alpha * c * s / eps;
    const Vec used = switching_term(s, c, alpha, eps);
    const double scale = alpha * c;
    worst = std::max({worst, (outer - inner).norm() / scale, (used - outer).norm() / scale});
  }
  return {worst < 1e-14, "max relative discrepancy " + fmt(worst)};
}

struct SeedRun {
  double late_max = 0;
  double rms_tarc = 0, rms_tdc = 0;
  bool non_monotone = false;
  std::string error;
};

bool rises_then_falls(const TrajectoryLog& log) {
  bool rose = false;
  for (std::size_t k = 1; k < log.rows.size(); ++k) {
    const double d = log.rows[k].c_hat - log.rows[k - 1].c_hat;
    if (d > 0) rose = true;
    if (d < 0 && rose) return true;
  }
  return false;
}

std::vector<SeedRun> closed_loop_runs(double& compare_seconds) {
  const ScenarioDocument doc = default_scenario();
  std::vector<SeedRun> out(kSeeds);
  const auto t0 = std::chrono::steady_clock::now();
  for (int s = 0; s < kSeeds; ++s) {
    Scenario sc = seeded(doc.scenario, s);
    try {
      sc.controller = ControllerKind::TARC;
      auto tarc = std::async(std::launch::async, run, sc);
      sc.controller = ControllerKind::TDC;
      auto tdc = std::async(std::launch::async, run, sc);
      sc.controller = ControllerKind::ASMC;
      auto asmc = std::async(std::launch::async, run, sc);
      const TrajectoryLog a = tarc.get(), b = tdc.get();
      asmc.get();
      for (const LogRow& r : a.rows)
        if (r.t >= kUubT) out[s].late_max = std::max(out[s].late_max, r.e1.norm());
      out[s].rms_tarc = metrics(a, 0.0).rms_e;
      out[s].rms_tdc = metrics(b, 0.0).rms_e;
      out[s].non_monotone = rises_then_falls(a);
    } catch (const std::exception& e) {
      out[s].error = e.what();
    }
  }
  compare_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

Verdict uub(const std::vector<SeedRun>& runs) {
  Verdict v;
  double worst = 0;
  for (const SeedRun& r : runs) {
    v.pass &= r.error.empty();
    worst = std::max(worst, r.late_max);
  }
  v.pass &= worst <= kUubB && worst >= 0.9 * kUubB;
  v.detail = "max |e| for t >= " + fmt(kUubT) + " s over " + std::to_string(kSeeds) +
             " seeds = " + fmt(worst) + " (B = " + fmt(kUubB) + ")";
  return v;
}

Verdict comparative(const std::vector<SeedRun>& runs, double seconds) {
  Verdict v;
  int wins = 0, nonmono = 0;
  for (const SeedRun& r : runs) {
    if (!r.error.empty()) {
      v.pass = false;
      continue;
    }
    wins += r.rms_tarc <= r.rms_tdc;
    nonmono += r.non_monotone;
  }
  v.pass &= wins == kSeeds && nonmono == kSeeds && seconds < 60;
  v.detail = "tarc <= tdc on " + std::to_string(wins) + "/" + std::to_string(kSeeds) +
             ", non-monotone c_hat on " + std::to_string(nonmono) + "/" +
             std::to_string(kSeeds) + ", three-way compare " + fmt(seconds) + " s";
  return v;
}

Verdict determinism() {
  const ScenarioDocument doc = default_scenario();
  const Scenario sc = seeded(doc.scenario, 3);
  const std::string a = trajectory_csv(run(sc));
  const std::string b = trajectory_csv(run(sc));
  return {a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, double limit, const std::function<Verdict()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = v.pass && secs < limit;
    failures += !pass;
    std::printf("criterion %d: %s  %s  [%.2f s, limit %g s]\n", id, pass ? "PASS" : "FAIL",
                v.detail.c_str(), secs, limit);
    std::fflush(stdout);
  };

  report(1, 1, estimator_exactness);
  report(2, 5, noise_attenuation);
  report(3, 1, lyapunov_solver);
  report(4, 10, certificates);
  report(5, 1, adaptive_branches);
  report(6, 1, boundary_layer);

  double compare_seconds = 0;
  std::vector<SeedRun> runs;
  report(7, 30, [&] {
    runs = closed_loop_runs(compare_seconds);
    return uub(runs);
  });
  report(8, 60, [&] { return comparative(runs, compare_seconds); });
  report(9, 30, determinism);

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
