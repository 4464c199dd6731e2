#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tarc/common.hpp"
#include "tarc/dynamics.hpp"

namespace tarc {

/// Error dynamics ė = A1 e + B1 e_h + B σ for the state e = [e1; ė1].
struct ErrorSystem {
  int dof = 0;
  Mat A1, B1, A, B;
  bool hurwitz = false;
  double spectral_abscissa = 0.0;  // max real part of eig(A)
};

ErrorSystem build_error_system(const Mat& K1, const Mat& K2);

/// Thrown when AᵀP + PA = −Q has no positive definite solution.
class LyapunovError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Solves AᵀP + PA = −Q by vectorization: (I⊗Aᵀ + Aᵀ⊗I) vec(P) = −vec(Q).
Mat solve_lyapunov(const Mat& A, const Mat& Q);

struct PdTest {
  double min_eigenvalue = 0.0;
  bool pass = false;         // min eigenvalue > 1e-12 ‖M‖
  bool cholesky_ok = false;  // LLT of the symmetric part succeeds
};

/// Tests the symmetric part ½(M + Mᵀ).
PdTest test_positive_definite(const Mat& m);

struct MassCondition {
  double margin = 0.0;  // max over grid of ‖M(q)⁻¹ M̂ − I‖₂
  bool pass = false;    // margin < 1
  Vec worst_q;
};

MassCondition mass_condition_margin(const PlantModel& model, const Mat& M_hat,
                                    const std::vector<Vec>& q_grid);

/// Uniform tensor grid over [lo, hi] per joint with `points` per axis.
std::vector<Vec> joint_grid(int dof, int points, double lo, double hi);

/// Open interval (0, k_max) of scalars k for which M̂ = k I satisfies the
/// mass condition on the grid; k_max = 2 min_q λ_min(M(q)).
double max_scalar_inertia(const PlantModel& model,
                          const std::vector<Vec>& q_grid);

struct AnalysisParams {
  double beta = 1.0;
  double xi = 2.0;
  Mat D, L, Q;  // 2n x 2n, symmetric PD

  static AnalysisParams scaled(int dof, double beta, double xi, double d,
                               double l, double q);
  void validate(int dof) const;
};

enum class Certificate { Theorem1, Theorem2 };

struct StabilityCertificate {
  Certificate which = Certificate::Theorem1;
  Mat matrix;
  double min_eigenvalue = 0.0;
  bool pass = false;
  bool cholesky_ok = false;
  // Inputs echoed back.
  Mat K1, K2;
  double h = 0.0;
  double window = 0.0;
  int degree = 0;
  AnalysisParams params;
};

/// Ψ = blockdiag(Q − E − (1+ξ)(h²/β) D, (ξ−1)(h²/β) D) with
/// E = β P B1 (A1 D⁻¹ A1ᵀ + B1 D⁻¹ B1ᵀ + D⁻¹) B1ᵀ P.
StabilityCertificate theorem1_certificate(const Mat& K1, const Mat& K2,
                                          double h,
                                          const AnalysisParams& params);

/// Exact ∫_{−ς}^0 Ω₁(ψ)² dψ.
double omega1_sq_integral(int degree, double window);

/// Θ for the closed loop with the switching term and the algebraic
/// differentiator. Θ is assembled on the stacked vector
/// [e; e_h; ∫Ω₁ e(t−h+ψ) dψ], i.e. (2n + 2n + 2n) square; the selector J
/// that picks the delayed half of [e(t+ψ); e(t−h+ψ)] is applied by using the
/// delayed integral directly as the third block coordinate.
StabilityCertificate theorem2_certificate(const Mat& K1, const Mat& K2,
                                          double h, double window, int degree,
                                          const AnalysisParams& params);

struct PartitionCheck {
  double min_eigenvalue = 0.0;  // of ½(P3 P2ᵀ + P2 P3ᵀ)
  bool pass = false;
};

PartitionCheck p_partition_check(const Mat& P);

struct SuggestedGains {
  Mat K1, K2;
};

/// K1 = ωn² I, K2 = 2ζωn I.
SuggestedGains suggest_gains(double omega_n, double zeta, int dof);

struct ParameterGrid {
  std::vector<double> beta, xi, d, l, q;

  static ParameterGrid defaults();
  std::size_t size() const;
};

struct SearchResult {
  bool found = false;
  std::optional<AnalysisParams> params;
  /// Certificates at the returned point, or at the first Theorem-1 passing
  /// point (with its Theorem-2 result) when nothing passes both.
  std::optional<StabilityCertificate> theorem1, theorem2;
  /// Largest Θ min-eigenvalue seen over the grid.
  double best_theorem2_eigenvalue = 0.0;
  std::size_t evaluated = 0;
  std::string report;
};

/// Scans the grid in the order q, d, β, ξ, l (outermost first) and returns the
/// first point where both Ψ ≻ 0 and Θ ≻ 0.
SearchResult search_parameters(const Mat& K1, const Mat& K2, double h,
                               double window, int degree,
                               const ParameterGrid& grid);

/// First grid point with Ψ ≻ 0 (Theorem 1 only), same scan order.
SearchResult search_theorem1(const Mat& K1, const Mat& K2, double h,
                             const ParameterGrid& grid);

}  // namespace tarc
