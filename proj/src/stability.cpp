#include "tarc/stability.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "tarc/estimator.hpp"

namespace tarc {
namespace {

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

void check_gains(const Mat& K1, const Mat& K2) {
  require(K1.rows() >= 1 && K1.rows() == K1.cols() && K2.rows() == K1.rows() &&
              K2.cols() == K1.cols(),
          "K1 and K2 must be square with the same dimension");
}

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

ErrorSystem build_error_system(const Mat& K1, const Mat& K2) {
  check_gains(K1, K2);
  const auto n = K1.rows();
  ErrorSystem es;
  es.dof = static_cast<int>(n);
  es.A1 = Mat::Zero(2 * n, 2 * n);
  es.A1.topRightCorner(n, n).setIdentity();
  es.B1 = Mat::Zero(2 * n, 2 * n);
  es.B1.bottomLeftCorner(n, n) = -K1;
  es.B1.bottomRightCorner(n, n) = -K2;
  es.A = es.A1 + es.B1;
  es.B = Mat::Zero(2 * n, n);
  es.B.bottomRows(n).setIdentity();
  const Eigen::EigenSolver<Mat> eig(es.A, false);
  es.spectral_abscissa = eig.eigenvalues().real().maxCoeff();
  es.hurwitz = es.spectral_abscissa < 0.0;
  return es;
}

Mat solve_lyapunov(const Mat& A, const Mat& Q) {
  require(A.rows() == A.cols() && Q.rows() == A.rows() && Q.cols() == A.cols(),
          "A and Q must be square with matching dimension");
  const Eigen::EigenSolver<Mat> eig(A, false);
  if (eig.eigenvalues().real().maxCoeff() >= 0.0)
    throw LyapunovError("A is not Hurwitz; Lyapunov equation has no PD solution");

  const auto n = A.rows();
  const Mat I = Mat::Identity(n, n);
  const Mat At = A.transpose();
  const Mat op = kron(I, At) + kron(At, I);
  const Eigen::Map<const Vec> q(Q.data(), n * n);
  const Vec p = op.fullPivLu().solve(-q);
  Mat P = sym(Eigen::Map<const Mat>(p.data(), n, n));

  const double residual = (At * P + P * A + Q).norm();
  if (!(residual <= 1e-10 * std::max(Q.norm(), 1e-300)))
    throw LyapunovError("Lyapunov residual too large: " +
                        std::to_string(residual));
  return P;
}

PdTest test_positive_definite(const Mat& m) {
  require(m.rows() == m.cols() && m.rows() > 0, "matrix must be square");
  const Mat s = sym(m);
  PdTest t;
  const Eigen::SelfAdjointEigenSolver<Mat> eig(s, Eigen::EigenvaluesOnly);
  t.min_eigenvalue = eig.eigenvalues().minCoeff();
  const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
  t.pass = t.min_eigenvalue > 1e-12 * scale;
  t.cholesky_ok = Eigen::LLT<Mat>(s).info() == Eigen::Success;
  return t;
}

MassCondition mass_condition_margin(const PlantModel& model, const Mat& M_hat,
                                    const std::vector<Vec>& q_grid) {
  require(!q_grid.empty(), "mass condition grid must be nonempty");
  const int n = model.dof();
  require(M_hat.rows() == n && M_hat.cols() == n, "M_hat must be n x n");
  MassCondition out;
  out.margin = -1.0;
  for (const auto& q : q_grid) {
    const Mat M = mass_matrix(model, q);
    const Mat dev = M.llt().solve(M_hat) - Mat::Identity(n, n);
    const double norm =
        Eigen::JacobiSVD<Mat>(dev).singularValues()(0);
    if (norm > out.margin) {
      out.margin = norm;
      out.worst_q = q;
    }
  }
  out.pass = out.margin < 1.0;
  return out;
}

std::vector<Vec> joint_grid(int dof, int points, double lo, double hi) {
  require(dof >= 1 && points >= 1, "grid needs dof >= 1 and points >= 1");
  std::vector<Vec> grid;
  std::vector<int> idx(dof, 0);
  const auto coord = [&](int i) {
    return points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
  };
  while (true) {
    Vec q(dof);
    for (int d = 0; d < dof; ++d) q(d) = coord(idx[d]);
    grid.push_back(q);
    int d = 0;
    while (d < dof && ++idx[d] == points) idx[d++] = 0;
    if (d == dof) break;
  }
  return grid;
}

double max_scalar_inertia(const PlantModel& model,
                          const std::vector<Vec>& q_grid) {
  require(!q_grid.empty(), "mass condition grid must be nonempty");
  // M⁻¹ is symmetric, so ‖k M⁻¹ − I‖₂ = max_i |k/λ_i − 1| < 1 ⇔ 0 < k < 2λ_min.
  double lmin = std::numeric_limits<double>::infinity();
  for (const auto& q : q_grid) {
    const Eigen::SelfAdjointEigenSolver<Mat> eig(mass_matrix(model, q),
                                                 Eigen::EigenvaluesOnly);
    lmin = std::min(lmin, eig.eigenvalues().minCoeff());
  }
  return 2.0 * lmin;
}

AnalysisParams AnalysisParams::scaled(int dof, double beta, double xi,
                                      double d, double l, double q) {
  const Mat I = Mat::Identity(2 * dof, 2 * dof);
  return {beta, xi, d * I, l * I, q * I};
}

void AnalysisParams::validate(int dof) const {
  require(beta > 0.0, "beta must be positive");
  require(xi > 1.0, "xi must exceed 1");
  for (const Mat* m : {&D, &L, &Q}) {
    require(m->rows() == 2 * dof && m->cols() == 2 * dof,
            "D, L and Q must be 2n x 2n");
    require(test_positive_definite(*m).pass,
            "D, L and Q must be symmetric positive definite");
  }
}

StabilityCertificate theorem1_certificate(const Mat& K1, const Mat& K2,
                                          double h,
                                          const AnalysisParams& params) {
  require(h >= 0.0, "delay h must be nonnegative");
  const ErrorSystem es = build_error_system(K1, K2);
  params.validate(es.dof);
  const Mat P = solve_lyapunov(es.A, params.Q);
  const Mat Dinv = params.D.inverse();
  const Mat inner = es.A1 * Dinv * es.A1.transpose() +
                    es.B1 * Dinv * es.B1.transpose() + Dinv;
  const Mat E = params.beta * P * es.B1 * inner * es.B1.transpose() * P;
  const double w = h * h / params.beta;
  const auto m = 2 * es.dof;

  StabilityCertificate c;
  c.which = Certificate::Theorem1;
  c.matrix = Mat::Zero(2 * m, 2 * m);
  c.matrix.topLeftCorner(m, m) = params.Q - E - (1.0 + params.xi) * w * params.D;
  c.matrix.bottomRightCorner(m, m) = (params.xi - 1.0) * w * params.D;
  const PdTest t = test_positive_definite(c.matrix);
  c.min_eigenvalue = t.min_eigenvalue;
  c.pass = t.pass;
  c.cholesky_ok = t.cholesky_ok;
  c.K1 = K1;
  c.K2 = K2;
  c.h = h;
  c.params = params;
  return c;
}

double omega1_sq_integral(int degree, double window) {
  require(degree >= 1, "Omega_1 needs degree >= 1");
  const auto c = kernel_coefficients(1, degree, window);
  // Ω₁(ψ) = Σ c_k x^k with x = −ψ/ς ∈ [0, 1] and dψ = ς dx.
  double acc = 0.0;
  for (std::size_t a = 0; a < c.size(); ++a)
    for (std::size_t b = 0; b < c.size(); ++b)
      acc += c[a] * c[b] / static_cast<double>(a + b + 1);
  return window * acc;
}

StabilityCertificate theorem2_certificate(const Mat& K1, const Mat& K2,
                                          double h, double window, int degree,
                                          const AnalysisParams& params) {
  require(h >= 0.0, "delay h must be nonnegative");
  require(window > 0.0, "estimator window must be positive");
  const ErrorSystem es = build_error_system(K1, K2);
  params.validate(es.dof);
  const auto n = es.dof;
  const auto m = 2 * n;
  const Mat P = solve_lyapunov(es.A, params.Q);
  const Mat Dinv = params.D.inverse();

  // B̄ = B [K2 0], B̆ = B [0 K2]; both 2n x 2n.
  Mat Bbar = Mat::Zero(m, m);
  Bbar.bottomLeftCorner(n, n) = K2;
  Mat Bbreve = Mat::Zero(m, m);
  Bbreve.bottomRightCorner(n, n) = K2;

  const Mat inner = es.A1 * Dinv * es.A1.transpose() +
                    es.B1 * Dinv * es.B1.transpose() + Dinv +
                    Bbar * Dinv * Bbar.transpose();
  const Mat Ebar = params.beta * P * es.B1 * inner * es.B1.transpose() * P;
  const double w = h * h / params.beta;
  const Mat Fbar =
      (w * params.D + params.L) * window * omega1_sq_integral(degree, window);

  StabilityCertificate c;
  c.which = Certificate::Theorem2;
  c.matrix = Mat::Zero(3 * m, 3 * m);
  c.matrix.block(0, 0, m, m) = params.Q - Ebar - (1.0 + params.xi) * w * params.D;
  c.matrix.block(0, m, m, m) = P * Bbreve;
  c.matrix.block(0, 2 * m, m, m) = P * Bbar;
  c.matrix.block(m, 0, m, m) = Bbreve.transpose() * P;
  c.matrix.block(m, m, m, m) = (params.xi - 1.0) * w * params.D - Fbar;
  c.matrix.block(2 * m, 0, m, m) = Bbar.transpose() * P;
  c.matrix.block(2 * m, 2 * m, m, m) = params.L;
  c.matrix = sym(c.matrix);

  const PdTest t = test_positive_definite(c.matrix);
  c.min_eigenvalue = t.min_eigenvalue;
  c.pass = t.pass;
  c.cholesky_ok = t.cholesky_ok;
  c.K1 = K1;
  c.K2 = K2;
  c.h = h;
  c.window = window;
  c.degree = degree;
  c.params = params;
  return c;
}

PartitionCheck p_partition_check(const Mat& P) {
  require(P.rows() == P.cols() && P.rows() % 2 == 0 && P.rows() > 0,
          "P must be square with even dimension");
  const auto n = P.rows() / 2;
  const Mat P2 = P.bottomLeftCorner(n, n);
  const Mat P3 = P.bottomRightCorner(n, n);
  const Mat s = sym(P3 * P2.transpose());
  const Eigen::SelfAdjointEigenSolver<Mat> eig(s, Eigen::EigenvaluesOnly);
  PartitionCheck out;
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  const double scale = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(),
                                std::numeric_limits<double>::min());
  out.pass = out.min_eigenvalue > 1e-12 * scale;
  return out;
}

SuggestedGains suggest_gains(double omega_n, double zeta, int dof) {
  require(omega_n > 0.0 && zeta > 0.0, "omega_n and zeta must be positive");
  require(dof >= 1, "dof must be >= 1");
  const Mat I = Mat::Identity(dof, dof);
  return {omega_n * omega_n * I, 2.0 * zeta * omega_n * I};
}

ParameterGrid ParameterGrid::defaults() {
  ParameterGrid g;
  for (int e = -8; e <= 0; ++e) g.beta.push_back(std::pow(10.0, e));
  g.xi = {1.5, 2.0, 5.0, 10.0, 1e2, 1e3, 1e4, 1e5};
  g.d = {1e-2, 1e-1, 1.0, 10.0, 100.0};
  g.l = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  g.q = {1.0, 10.0};
  return g;
}

std::size_t ParameterGrid::size() const {
  return beta.size() * xi.size() * d.size() * l.size() * q.size();
}

namespace {

template <class Visit>
void scan(const ParameterGrid& grid, int dof, Visit&& visit) {
  for (double q : grid.q)
    for (double d : grid.d)
      for (double beta : grid.beta)
        for (double xi : grid.xi)
          for (double l : grid.l)
            if (!visit(AnalysisParams::scaled(dof, beta, xi, d, l, q))) return;
}

}  // namespace

SearchResult search_theorem1(const Mat& K1, const Mat& K2, double h,
                             const ParameterGrid& grid) {
  check_gains(K1, K2);
  SearchResult r;
  if (grid.size() == 0) {
    r.report = "infeasible over grid: grid is empty";
    return r;
  }
  if (!build_error_system(K1, K2).hurwitz) {
    r.report = "infeasible: A is not Hurwitz";
    return r;
  }
  scan(grid, static_cast<int>(K1.rows()), [&](const AnalysisParams& p) {
    ++r.evaluated;
    auto c1 = theorem1_certificate(K1, K2, h, p);
    if (!c1.pass) return true;
    r.found = true;
    r.params = p;
    r.theorem1 = std::move(c1);
    return false;
  });
  std::ostringstream os;
  if (r.found)
    os << "Theorem 1 passes at grid point " << r.evaluated << " of "
       << grid.size();
  else
    os << "infeasible over grid: no Theorem 1 pass in " << r.evaluated
       << " points";
  r.report = os.str();
  return r;
}

SearchResult search_parameters(const Mat& K1, const Mat& K2, double h,
                               double window, int degree,
                               const ParameterGrid& grid) {
  check_gains(K1, K2);
  SearchResult r;
  r.best_theorem2_eigenvalue = -std::numeric_limits<double>::infinity();
  if (grid.size() == 0) {
    r.report = "infeasible over grid: grid is empty";
    return r;
  }
  if (!build_error_system(K1, K2).hurwitz) {
    r.report = "infeasible: A is not Hurwitz";
    return r;
  }
  scan(grid, static_cast<int>(K1.rows()), [&](const AnalysisParams& p) {
    ++r.evaluated;
    auto c1 = theorem1_certificate(K1, K2, h, p);
    auto c2 = theorem2_certificate(K1, K2, h, window, degree, p);
    r.best_theorem2_eigenvalue =
        std::max(r.best_theorem2_eigenvalue, c2.min_eigenvalue);
    if (c1.pass && !r.theorem1) {
      r.theorem1 = c1;
      r.theorem2 = c2;
    }
    if (!(c1.pass && c2.pass)) return true;
    r.found = true;
    r.params = p;
    r.theorem1 = std::move(c1);
    r.theorem2 = std::move(c2);
    return false;
  });
  std::ostringstream os;
  if (r.found) {
    os << "Theorems 1 and 2 pass at grid point " << r.evaluated << " of "
       << grid.size();
  } else {
    os << "infeasible over grid: " << r.evaluated
       << " points, none with both Psi > 0 and Theta > 0 (best Theta min "
          "eigenvalue "
       << r.best_theorem2_eigenvalue << ")";
  }
  r.report = os.str();
  return r;
}

}  // namespace tarc
