#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nflab/homological.hpp"
#include "nflab/quasiperiodic.hpp"

namespace nflab {

/// H(theta) = H0 + P(theta), H0 diagonal with the model's energies.
struct Hamiltonian {
  QuasiPeriodicOperator perturbation;

  const SpectralModel& spectral() const { return perturbation.spectral(); }
  CMatrix evaluate(std::span<const double> theta) const;
};

enum class TransformMode { quadrature, series };

struct TransformOptions {
  TransformMode mode = TransformMode::quadrature;
  int quadrature_order = 8;
  int series_depth = 10;
  /// Fourier cap |k|_1 of the transformed perturbation.
  int k_max_total = 4;
  /// Collocation points per angle; 0 picks 4 k_max_total + 4.
  int grid_points = 0;
  /// Report-block Fourier tails above this raise the warning flag.
  double tail_warning = 1e-8;
  /// Coefficients whose largest entry is at or below this are dropped after re-expansion.
  double prune_tol = 1e-15;
};

struct TransformResult {
  Hamiltonian hamiltonian;
  double tail_norm = 0.0;         ///< Frobenius norm of the discarded Fourier tail, whole buffer
  double report_tail_norm = 0.0;  ///< same, restricted to the report block
  bool tail_warning = false;      ///< report-block tail above the threshold
};

/// e^{iX} H e^{-iX} - int_0^1 e^{isX} Xdot e^{-isX} ds.
/// Evaluated as e^{iX} P e^{-iX} + int_0^1 e^{isX} B e^{-isX} ds with B = i[X, H0] - Xdot
/// formed exactly in Fourier space, so H0 never enters a conjugation.
TransformResult transform_hamiltonian(const Hamiltonian& h, const QuasiPeriodicOperator& x,
                                      const TransformOptions& options = {});

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre_unit(int order, std::vector<double>& nodes, std::vector<double>& weights);

enum class Regime { superlinear, order_one };

std::string to_string(Regime regime);
Regime regime_from_string(const std::string& name);

/// Per-step order gain: min(1, mu - 1, mu - rho) or 1 - rho.
double step_gain(Regime regime, double mu, double rho);

struct NormalFormOptions {
  Regime regime = Regime::order_one;
  /// Declared order of the initial perturbation.
  double rho = 0.0;
  double divisor_floor = 1e-6;
  LiftOrdering lift = LiftOrdering::symmetric;
  TransformOptions transform;
  /// Seminorm s values recorded per step.
  std::vector<double> s_grid{-2.0, -1.0, 0.0, 1.0, 2.0};
};

struct StepRecord {
  int step = 0;
  double delta = 0.0;
  DivisorCensus census;
  double tail_norm = 0.0;
  double report_tail_norm = 0.0;
  bool tail_warning = false;
  double x_order = 0.0;        ///< nominal
  double v_order = 0.0;        ///< nominal order of the remainder after the step
  double homological_residual = 0.0;
  double z_k0_defect = 0.0;    ///< max |[Z(theta), K0]| over sampled theta
  double x_symmetry_defect = 0.0;
  std::vector<double> v_seminorms;  ///< sup_theta ||V'||_{v_order, s} per s in the grid
  std::optional<double> v_order_estimate;
  std::optional<double> x_order_estimate;
  bool v_at_grid_floor = false;
  bool contractive = true;
};

struct NormalFormResult {
  ModelHandle model;
  RVector omega;
  Regime regime = Regime::order_one;
  double delta = 0.0;
  std::vector<QuasiPeriodicOperator> generators;  ///< X_1 .. X_N in application order
  std::vector<QuasiPeriodicOperator> remainders;  ///< V^(0) .. V^(N)
  QuasiPeriodicOperator z;
  QuasiPeriodicOperator v;
  std::vector<StepRecord> steps;
  bool halted = false;
  std::string status = "complete";

  Hamiltonian transformed() const;
  Hamiltonian original() const { return Hamiltonian{remainders.front()}; }
};

struct StepOutput {
  QuasiPeriodicOperator x;
  QuasiPeriodicOperator z;
  QuasiPeriodicOperator v;
  StepRecord record;
};

/// One conjugation step on H0 + Z + V. `freq` is required in the order-one regime.
StepOutput normal_form_step(const QuasiPeriodicOperator& z, const QuasiPeriodicOperator& v, double v_order,
                            const ResonanceData* freq, const NormalFormOptions& options, int step = 1);

/// N steps starting from Z = 0.
NormalFormResult iterate(const QuasiPeriodicOperator& v0, int steps, const ResonanceData* freq,
                         const NormalFormOptions& options);

/// One member of a truncation family (same drive at different sizes).
struct FamilyMember {
  QuasiPeriodicOperator v0;
  std::optional<ResonanceData> freq;
};

struct FamilyOptions {
  OrderScanOptions scan;
  int samples_per_angle = 8;
};

/// Runs `iterate` on every member step by step, scanning V^(j) and X_j across the
/// family after each step. A step whose V estimate does not drop below the previous
/// one is flagged non-contractive and halts the iteration. Diagnostics go into
/// every member's StepRecord.
std::vector<NormalFormResult> iterate_family(const std::vector<FamilyMember>& family, int steps,
                                             const NormalFormOptions& options, const FamilyOptions& scan = {});

}  // namespace nflab
