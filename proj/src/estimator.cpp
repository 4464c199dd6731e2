#include "tarc/estimator.hpp"

#include <cmath>

namespace tarc {
namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

void check_order(int order, int degree) {
  require(degree >= 0, "polynomial degree must be nonnegative");
  require(order >= 0 && order <= degree,
          "derivative order must lie in [0, degree]");
}

}  // namespace

int EstimatorConfig::taps() const {
  return static_cast<int>(std::lround(window / sample_period)) + 1;
}

void EstimatorConfig::validate(int max_order) const {
  require(sample_period > 0.0, "estimator sample_period must be positive");
  require(degree >= max_order,
          "estimator degree must be at least the highest derivative order");
  require(window >= 2.0 * sample_period * (1.0 - 1e-12),
          "estimator window must span at least two sample periods");
  const double ratio = window / sample_period;
  require(std::abs(ratio - std::round(ratio)) <= 1e-6 * ratio,
          "estimator window must be an integer multiple of sample_period");
  require(taps() >= degree + 1,
          "estimator window holds fewer than degree+1 samples");
}

std::vector<double> kernel_coefficients(int order, int degree, double window) {
  check_order(order, degree);
  require(window > 0.0, "estimator window must be positive");
  const int j = order, L = degree;
  const double scale = factorial(L + 1 + j) /
                       (std::pow(window, j + 1) * factorial(j) * factorial(L - j));
  std::vector<double> c(L + 1);
  for (int k = 0; k <= L; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    c[k] = scale * sign * factorial(L + 1 + k) /
           ((j + k + 1) * factorial(L - k) * factorial(k) * factorial(k));
  }
  return c;
}

double kernel(int order, int degree, double window, double psi) {
  require(psi >= -window * (1.0 + 1e-12) && psi <= 0.0,
          "kernel argument outside [-window, 0]");
  const auto c = kernel_coefficients(order, degree, window);
  // The series is in powers of −ψ/ς; with (ψ/ς)^k the moment conditions
  // fail (e.g. Ω₁ would not annihilate constants).
  const double x = -psi / window;
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Vec quadrature_weights(const EstimatorConfig& cfg, int order) {
  cfg.validate(order);
  const int n = cfg.taps();
  const double dt = cfg.sample_period;
  Vec w(n);
  for (int i = 0; i < n; ++i) {
    const double psi = std::max(-cfg.window, -i * dt);
    w(i) = dt * kernel(order, cfg.degree, cfg.window, psi);
  }
  w(0) *= 0.5;
  w(n - 1) *= 0.5;
  if (cfg.quadrature == Quadrature::Trapezoid) return w;

  // Smallest correction that makes the discrete moments exact:
  // Σ w_i (−iΔ)^m / m! = δ_jm for m = 0..Λ. Rows are written in x_i = i/(n−1)
  // to keep the system well scaled.
  const int rows = cfg.degree + 1;
  Mat G(rows, n);
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / (n - 1);
    double p = 1.0;
    for (int m = 0; m < rows; ++m, p *= x) G(m, i) = p;
  }
  const double span = (n - 1) * dt;
  Vec target = Vec::Zero(rows);
  target(order) = factorial(order) / std::pow(-span, order);
  const Eigen::CompleteOrthogonalDecomposition<Mat> cod(G);
  w += cod.solve(target - G * w);
  return w;
}

PositionHistory::PositionHistory(std::size_t capacity, double sample_period)
    : samples_(capacity), times_(capacity), period_(sample_period) {
  require(capacity >= 1, "history capacity must be at least 1");
  require(sample_period > 0.0, "history sample_period must be positive");
}

void PositionHistory::push(double t, const Vec& q) {
  if (size_ > 0) {
    const double expected = times_[head_] + period_;
    require(std::abs(t - expected) <= 1e-6 * period_,
            "history timestamps must advance by exactly one sample period");
    require_size(q, samples_[head_].size(), "history sample");
    head_ = (head_ + 1) % samples_.size();
  }
  samples_[head_] = q;
  times_[head_] = t;
  size_ = std::min(size_ + 1, samples_.size());
}

const Vec& PositionHistory::back(std::size_t lag) const {
  require(lag < size_, "history lookup outside stored range");
  return samples_[(head_ + samples_.size() - lag) % samples_.size()];
}

double PositionHistory::time_back(std::size_t lag) const {
  require(lag < size_, "history lookup outside stored range");
  return times_[(head_ + samples_.size() - lag) % samples_.size()];
}

Vec backward_difference(const PositionHistory& history, int order) {
  require(!history.empty(), "cannot differentiate an empty history");
  require(order >= 0, "derivative order must be nonnegative");
  const Vec& q0 = history.back(0);
  if (order == 0) return q0;
  if (history.size() < static_cast<std::size_t>(order) + 1)
    return Vec::Zero(q0.size());
  // Binomial stencil Σ (−1)^k C(order, k) q(t − kΔ) / Δ^order.
  Vec acc = Vec::Zero(q0.size());
  double binom = 1.0;
  for (int k = 0; k <= order; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    acc += sign * binom * history.back(k);
    binom = binom * (order - k) / (k + 1);
  }
  return acc / std::pow(history.sample_period(), order);
}

DerivativeEstimator::DerivativeEstimator(EstimatorConfig cfg, int max_order)
    : cfg_(cfg) {
  cfg_.validate(max_order);
  for (int j = 0; j <= max_order; ++j)
    weights_.push_back(quadrature_weights(cfg_, j));
}

std::size_t DerivativeEstimator::history_capacity() const {
  return static_cast<std::size_t>(cfg_.taps());
}

bool DerivativeEstimator::warm(const PositionHistory& history) const {
  return history.size() >= static_cast<std::size_t>(cfg_.taps());
}

Vec DerivativeEstimator::estimate(const PositionHistory& history,
                                  int order) const {
  require(!history.empty(), "cannot estimate from an empty history");
  require(order >= 0 && order < static_cast<int>(weights_.size()),
          "derivative order not prepared by this estimator");
  require(std::abs(history.sample_period() - cfg_.sample_period) <=
              1e-9 * cfg_.sample_period,
          "history and estimator sample periods differ");
  if (!warm(history)) return backward_difference(history, order);
  const Vec& w = weights_[order];
  Vec acc = w(0) * history.back(0);
  for (Eigen::Index i = 1; i < w.size(); ++i) acc += w(i) * history.back(i);
  return acc;
}

Vec estimate(const PositionHistory& history, const EstimatorConfig& cfg,
             int order) {
  require(!history.empty(), "cannot estimate from an empty history");
  return DerivativeEstimator(cfg, order).estimate(history, order);
}

}  // namespace tarc
