#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "nflab/spectral_model.hpp"
#include "nflab/types.hpp"

namespace nflab {

/// Dense operator in the K0 eigenbasis carrying a nominal order m (A in A_m).
class GradedOperator {
 public:
  GradedOperator(ModelHandle model, CMatrix matrix, double order);

  static GradedOperator zero(ModelHandle model, double order);
  static GradedOperator identity(ModelHandle model);

  const ModelHandle& model() const noexcept { return model_; }
  const SpectralModel& spectral() const noexcept { return *model_; }
  const CMatrix& matrix() const noexcept { return matrix_; }
  double order() const noexcept { return order_; }
  Index dim() const noexcept { return matrix_.rows(); }

  GradedOperator adjoint() const;
  GradedOperator with_order(double order) const;
  /// max |A - A*|.
  double symmetry_defect() const;
  bool is_symmetric(double tol = 1e-12) const { return symmetry_defect() <= tol; }

  GradedOperator& operator+=(const GradedOperator& other);
  GradedOperator& operator-=(const GradedOperator& other);
  GradedOperator& operator*=(Complex scale);

 private:
  ModelHandle model_;
  CMatrix matrix_;
  double order_;
};

GradedOperator operator+(GradedOperator a, const GradedOperator& b);
GradedOperator operator-(GradedOperator a, const GradedOperator& b);
GradedOperator operator*(Complex scale, GradedOperator a);
/// Operator product; orders add.
GradedOperator operator*(const GradedOperator& a, const GradedOperator& b);

void require_same_model(const GradedOperator& a, const GradedOperator& b);

/// diag(g(lambda_a)) with the declared order.
GradedOperator apply_symbol(ModelHandle model, const std::function<double(double)>& g, double order);

/// [A, B] with nominal order m + n - 1.
GradedOperator commutator(const GradedOperator& a, const GradedOperator& b);

/// e^{i tau K0} A e^{-i tau K0}: entry (a,b) times e^{i tau (lambda_a - lambda_b)}.
GradedOperator heisenberg_evolve(const GradedOperator& a, double tau);
/// e^{i tau.K} A e^{-i tau.K} using the per-mode K_j eigen tuples.
GradedOperator heisenberg_evolve(const GradedOperator& a, std::span<const double> tau);

/// Tolerance on lambda_a - lambda_b when matching integer-spectrum resonances.
inline constexpr double kResonanceMatchTol = 1e-9;

/// Average along the periodic K0 flow: keeps entries with lambda_a == lambda_b.
/// Requires an integer spectrum.
GradedOperator average(const GradedOperator& a);
/// Average along the K-tilde torus: keeps entries whose K-tilde tuples agree.
/// `ktilde` has one row per basis index.
GradedOperator average(const GradedOperator& a, const RMatrix& ktilde);

/// Spectral norm of diag(lambda^{s-m}) A diag(lambda^{-s}) restricted to the report block.
double weighted_norm(const GradedOperator& a, double m, double s);
double weighted_norm(const SpectralModel& model, const CMatrix& a, double m, double s);
/// Largest singular value of a dense matrix.
double spectral_norm(const CMatrix& a);

struct OrderScanOptions {
  std::vector<double> m_grid;
  std::vector<double> s_grid{-2.0, -1.0, 0.0, 1.0, 2.0};
  /// Seminorm values at or below this are indistinguishable from zero.
  double zero_floor = 1e-9;
  /// Largest admissible growth exponent of a seminorm against lambda_max;
  /// negative means half the m-grid spacing.
  double growth_tol = -1.0;
};

/// Default grid -3, -2.75, ..., 3.
std::vector<double> default_order_grid();

struct OrderScanResult {
  /// Smallest grid m (with every larger grid m also bounded); empty when inconclusive.
  std::optional<double> order;
  bool at_grid_floor = false;
  std::vector<double> lambda_max;            ///< per truncation size
  std::vector<double> m_grid, s_grid;
  std::vector<std::vector<double>> growth;   ///< [m][s] worst growth exponent
  std::vector<std::vector<std::vector<double>>> values;  ///< [m][s][size]

  bool inconclusive() const { return !order.has_value(); }
};

/// Seminorm provider: value(m, s, size_index).
using SeminormFn = std::function<double(double m, double s, std::size_t size_index)>;

/// Shared boundedness test: growth exponent of clamped values vs lambda_max.
double growth_exponent(std::span<const double> values, std::span<const double> lambda_max,
                       double zero_floor);
double resolve_growth_tol(const std::vector<double>& grid, double requested);

OrderScanResult scan_order(const std::vector<double>& lambda_max, const SeminormFn& value,
                           const OrderScanOptions& options);

/// Empirical order of a family of the same operator built at increasing truncations.
OrderScanResult order_scan(std::span<const GradedOperator> family, const OrderScanOptions& options);
OrderScanResult order_scan(const std::function<GradedOperator(int size)>& build,
                           std::span<const int> sizes, const OrderScanOptions& options);

/// Largest report-block eigenvalue of K0.
double report_lambda_max(const SpectralModel& model);

enum class ConjugationMethod { exact, series };

/// e^{i tau X} A e^{-i tau X}. X must be symmetric.
GradedOperator lie_conjugate(const GradedOperator& a, const GradedOperator& x, double tau,
                             ConjugationMethod method = ConjugationMethod::exact,
                             int series_depth = 8);
/// Nominal order of the series remainder: m - (M+1)(1 - rho).
double series_remainder_order(double m, double rho, int depth);

/// Padé scaling-and-squaring exponential.
CMatrix expm(const CMatrix& a);
/// e^{i tau X} for Hermitian X, followed by one polar step restoring unitarity.
CMatrix unitary_exp(const CMatrix& x, double tau);
/// One Newton polar step U <- (U + U^{-*}) / 2.
CMatrix polar_restore(const CMatrix& u);
/// e^{i tau X} A e^{-i tau X} on raw matrices.
CMatrix conjugate(const CMatrix& a, const CMatrix& x, double tau);

/// Entrywise (lambda_b - lambda_a) A_ab, i.e. [A, K0] without forming K0.
CMatrix commutator_with_k0(const SpectralModel& model, const CMatrix& a);

}  // namespace nflab
