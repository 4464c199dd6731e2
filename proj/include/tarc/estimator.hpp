#pragma once

#include <vector>

#include "tarc/common.hpp"

namespace tarc {

enum class Quadrature { Trapezoid, ExactPolynomial };

struct EstimatorConfig {
  int degree = 2;                   // polynomial degree Λ
  double window = 0.05;             // ς, seconds
  double sample_period = 1e-3;      // Δ, seconds
  Quadrature quadrature = Quadrature::ExactPolynomial;

  /// Number of samples spanning the window, ς/Δ + 1.
  int taps() const;
  /// Throws UsageError. `max_order` is the highest derivative requested.
  void validate(int max_order = 0) const;
};

/// Integral kernel Ω_j(ψ) of the algebraic differentiator on [−ς, 0]. It is
/// the unique degree-Λ polynomial with ∫ Ω_j(ψ) ψ^m/m! dψ = δ_jm, m = 0..Λ.
double kernel(int order, int degree, double window, double psi);

/// Coefficients c_k such that Ω_j(ψ) = Σ c_k (−ψ/ς)^k.
std::vector<double> kernel_coefficients(int order, int degree, double window);

/// Weights w_i applied to q(t − iΔ), i = 0..taps−1.
Vec quadrature_weights(const EstimatorConfig& cfg, int order);

/// Fixed-capacity ring buffer of uniformly spaced position samples.
class PositionHistory {
public:
  PositionHistory(std::size_t capacity, double sample_period);

  /// Appends a sample; the timestamp must be exactly one period after the
  /// previous one (relative tolerance 1e-9).
  void push(double t, const Vec& q);

  /// Sample `lag` periods before the newest one (lag 0 = newest).
  const Vec& back(std::size_t lag) const;
  double time_back(std::size_t lag) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return samples_.size(); }
  bool empty() const { return size_ == 0; }
  double sample_period() const { return period_; }
  double latest_time() const { return time_back(0); }

private:
  std::vector<Vec> samples_;
  std::vector<double> times_;
  std::size_t head_ = 0;  // slot of the newest sample
  std::size_t size_ = 0;
  double period_;
};

/// j-th derivative estimate at the newest sample. Before the window is
/// filled, falls back to backward finite differences over what is available.
Vec estimate(const PositionHistory& history, const EstimatorConfig& cfg,
             int order);

/// Same as `estimate` with precomputed weights, for use inside a control loop.
class DerivativeEstimator {
public:
  explicit DerivativeEstimator(EstimatorConfig cfg, int max_order = 2);

  Vec estimate(const PositionHistory& history, int order) const;
  bool warm(const PositionHistory& history) const;
  const EstimatorConfig& config() const { return cfg_; }
  std::size_t history_capacity() const;

private:
  EstimatorConfig cfg_;
  std::vector<Vec> weights_;  // indexed by derivative order
};

/// Plain backward difference of the given order over the newest samples.
/// Order 0 returns the newest sample; missing samples reduce the order.
Vec backward_difference(const PositionHistory& history, int order);

}  // namespace tarc
