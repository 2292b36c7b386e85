#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nflab/types.hpp"

namespace nflab {

enum class ModelKind { harmonic, anharmonic, zoll };
enum class ZollMultiplicity { collapsed, full };

std::string to_string(ModelKind kind);

/// C-infinity cutoff: 1 on (-inf, R], 0 on [R+1, inf), e^{-1/x} glue in between.
double smooth_cutoff(double x, double threshold);

/// Scalar symbol f with H0 = f(K0). `cutoff` is the threshold R past which f' >= 1.
class SymbolFunction {
 public:
  using Fn = std::function<double(double)>;

  SymbolFunction(Fn f, Fn df, Fn d2f, double order, double cutoff);

  /// f(x) = (scale * x)^exponent; cutoff chosen so that f' >= 1 beyond it.
  static SymbolFunction power(double scale, double exponent);

  double value(double x) const { return f_(x); }
  double derivative(double x) const { return df_(x); }
  double second_derivative(double x) const { return d2f_(x); }
  double order() const noexcept { return order_; }
  double cutoff() const noexcept { return cutoff_; }
  double eta(double x) const { return smooth_cutoff(x, cutoff_); }
  /// (1 - eta(x)) / f'(x), the multiplier turning a K0-homological solution into an H0 one.
  double lift_factor(double x) const;

 private:
  Fn f_, df_, d2f_;
  double order_;
  double cutoff_;
};

struct ModelOptions {
  double buffer_fraction = 0.5;
  Index max_dim = 4096;
};

/// Finite truncation of K0, the commuting family K_1..K_d and H0, in the joint eigenbasis.
///
/// Indices [0, report_dim) form the report block; all algebra runs on the
/// full buffer. Instances are immutable and shared through ModelHandle.
class SpectralModel {
 public:
  ModelKind kind() const noexcept { return kind_; }
  Index buffer_dim() const noexcept { return k0_eigs_.size(); }
  Index report_dim() const noexcept { return report_dim_; }
  int modes() const noexcept { return static_cast<int>(k_eigs_.cols()); }

  const RVector& k0_eigs() const noexcept { return k0_eigs_; }
  const RVector& h0_eigs() const noexcept { return h0_eigs_; }
  /// Row a holds the K_1..K_d eigenvalues at basis index a.
  const RMatrix& k_eigs() const noexcept { return k_eigs_; }
  double lambda_shift() const noexcept { return lambda_shift_; }
  bool integer_spectrum() const noexcept { return integer_spectrum_; }
  const std::optional<SymbolFunction>& symbol() const noexcept { return symbol_; }
  /// Order mu of H0 (1 for harmonic models).
  double mu() const noexcept { return mu_; }
  const std::vector<double>& nu() const noexcept { return nu_; }

  /// Per-mode buffer and report truncation sizes (harmonic); single entry otherwise.
  const std::vector<int>& mode_dims() const noexcept { return mode_dims_; }
  const std::vector<int>& report_mode_dims() const noexcept { return report_mode_dims_; }
  /// Harmonic: occupation numbers a_j of basis index a. Zoll: (level n, slot).
  const std::vector<std::vector<int>>& labels() const noexcept { return labels_; }

  /// Anharmonic only: eigenvectors in the Hermite basis (columns) and the
  /// Hermite-basis position/momentum matrices (momentum stored as p / i).
  const RMatrix& hermite_vectors() const noexcept { return hermite_vectors_; }
  const RMatrix& hermite_position() const noexcept { return hermite_position_; }
  const RMatrix& hermite_momentum_over_i() const noexcept { return hermite_momentum_; }
  /// Anharmonic only: (k, l, a).
  const std::vector<double>& anharmonic_params() const noexcept { return anharmonic_params_; }

  std::string describe() const;

 private:
  friend std::shared_ptr<const SpectralModel> build_harmonic_model(std::span<const double>,
                                                                   std::span<const int>,
                                                                   const ModelOptions&);
  friend std::shared_ptr<const SpectralModel> build_anharmonic_model(int, int, double, int,
                                                                     const ModelOptions&);
  friend std::shared_ptr<const SpectralModel> build_zoll_model(int, int, ZollMultiplicity,
                                                               const ModelOptions&);

  SpectralModel() = default;

  ModelKind kind_{ModelKind::harmonic};
  Index report_dim_{0};
  RVector k0_eigs_;
  RVector h0_eigs_;
  RMatrix k_eigs_;
  double lambda_shift_{0.0};
  bool integer_spectrum_{false};
  std::optional<SymbolFunction> symbol_;
  double mu_{1.0};
  std::vector<double> nu_;
  std::vector<int> mode_dims_;
  std::vector<int> report_mode_dims_;
  std::vector<std::vector<int>> labels_;
  RMatrix hermite_vectors_;
  RMatrix hermite_position_;
  RMatrix hermite_momentum_;
  std::vector<double> anharmonic_params_;
};

using ModelHandle = std::shared_ptr<const SpectralModel>;

/// Tensor-product oscillator: K_j eigenvalue 2a_j+1, K0 = sum_j K_j, H0 = nu . K.
ModelHandle build_harmonic_model(std::span<const double> nu, std::span<const int> cutoffs,
                                 const ModelOptions& options = {});

/// H = D^{2l} + a x^{2k}, diagonalized in an oversized Hermite basis. K0 is the
/// Bohr-Sommerfeld-normalized power E^{(k+l)/(2kl)} so that its gaps tend to 1.
ModelHandle build_anharmonic_model(int k, int l, double a, int cutoff,
                                   const ModelOptions& options = {});

/// Zoll spectrum K0 = n + (d-1)/2, n = 1..cutoff, H0 = K0^2.
ModelHandle build_zoll_model(int d, int cutoff, ZollMultiplicity multiplicity,
                             const ModelOptions& options = {});

/// Multiplicative weights (lambda_a)^r defining ||psi||_r = ||K0^r psi||_0.
struct SobolevWeights {
  double r{0.0};
  RVector weights;
};

SobolevWeights sobolev_weights(const SpectralModel& model, double r);

/// Bohr-Sommerfeld constant: area of {|xi|^{2l} + |x|^{2k} <= 1}.
double superellipse_area(int k, int l);

}  // namespace nflab
