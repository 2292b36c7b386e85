#pragma once

#include <map>
#include <span>
#include <vector>

#include "nflab/operator_algebra.hpp"

namespace nflab {

using FourierIndex = std::vector<int>;

/// |k|_1
int fourier_norm(const FourierIndex& k);
FourierIndex negate(const FourierIndex& k);

/// theta -> W(theta) = sum_k W_k e^{i k.theta} with finitely many matrix coefficients.
class QuasiPeriodicOperator {
 public:
  QuasiPeriodicOperator(ModelHandle model, RVector omega, double order);

  /// Time-independent operator (single k = 0 coefficient).
  static QuasiPeriodicOperator constant(const GradedOperator& op, RVector omega);

  const ModelHandle& model() const noexcept { return model_; }
  const SpectralModel& spectral() const noexcept { return *model_; }
  const RVector& omega() const noexcept { return omega_; }
  int angles() const noexcept { return static_cast<int>(omega_.size()); }
  double order() const noexcept { return order_; }
  void set_order(double order) noexcept { order_ = order; }
  Index dim() const noexcept { return model_->buffer_dim(); }

  const std::map<FourierIndex, CMatrix>& coefficients() const noexcept { return coeffs_; }
  /// Adds `value` to the coefficient of e^{i k.theta}.
  void add(const FourierIndex& k, const CMatrix& value);
  const CMatrix* find(const FourierIndex& k) const;
  CMatrix coefficient(const FourierIndex& k) const;
  /// max |k|_1 over stored coefficients.
  int support() const;

  CMatrix evaluate(std::span<const double> theta) const;
  /// omega . d/dtheta W at theta, exact from the Fourier coefficients.
  CMatrix derivative(std::span<const double> theta) const;
  GradedOperator at(std::span<const double> theta) const;

  /// max |W_{-k} - W_k^*| over coefficients.
  double symmetry_defect() const;
  bool is_symmetric(double tol = 1e-12) const { return symmetry_defect() <= tol; }

  /// Drops coefficients with |k|_1 > k_max; returns the Frobenius norm of the discarded tail.
  double truncate(int k_max);
  /// Removes coefficients whose max entry is <= tol.
  void prune(double tol = 0.0);

  QuasiPeriodicOperator& operator+=(const QuasiPeriodicOperator& other);
  QuasiPeriodicOperator& operator-=(const QuasiPeriodicOperator& other);
  QuasiPeriodicOperator& operator*=(Complex scale);

  /// Applies `fn` to every coefficient matrix.
  template <class Fn>
  void transform(Fn&& fn) {
    for (auto& [k, m] : coeffs_) fn(k, m);
  }

  /// Pointwise maximum over the sampled theta grid of ||W(theta)||_{m,s}.
  double sup_weighted_norm(double m, double s, int samples_per_angle = 8) const;
  /// Max |entry| over theta samples.
  double sup_abs(int samples_per_angle = 8) const;

 private:
  ModelHandle model_;
  RVector omega_;
  double order_;
  std::map<FourierIndex, CMatrix> coeffs_;
};

QuasiPeriodicOperator operator+(QuasiPeriodicOperator a, const QuasiPeriodicOperator& b);
QuasiPeriodicOperator operator-(QuasiPeriodicOperator a, const QuasiPeriodicOperator& b);

/// Uniform tensor grid of points_per_angle^n angles in [0, 2 pi)^n.
std::vector<std::vector<double>> theta_grid(int angles, int points_per_angle);

/// Order scan of a quasiperiodic family (sup over a theta grid of the weighted norms).
OrderScanResult order_scan(std::span<const QuasiPeriodicOperator> family, const OrderScanOptions& options,
                           int samples_per_angle = 8);

}  // namespace nflab
