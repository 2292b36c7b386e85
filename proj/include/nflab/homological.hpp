#pragma once

#include <limits>
#include <vector>

#include "nflab/operator_algebra.hpp"
#include "nflab/quasiperiodic.hpp"

namespace nflab {

/// Small-divisor bookkeeping for one solve.
struct DivisorCensus {
  double min_divisor = std::numeric_limits<double>::infinity();
  double floor = 0.0;
  int absorbed_count = 0;
  double absorbed_norm = 0.0;  ///< Frobenius norm of everything routed into the average
  int resonant_count = 0;

  void merge(const DivisorCensus& other);
};

struct K0SolveOptions {
  double divisor_floor = 1e-6;
  /// Permit the entrywise closed form on spectra that are not integer-shifted.
  bool allow_entrywise = true;
};

struct K0Solution {
  GradedOperator y;        ///< solves i[K0, Y] = A - <A> off the absorbed entries
  GradedOperator average;  ///< resonant part, including absorbed near-resonances
  GradedOperator absorbed; ///< near-resonant entries moved into `average`
  DivisorCensus census;
};

/// Y_ab = A_ab / (i (lambda_a - lambda_b)) off resonance; resonant entries form <A>.
K0Solution solve_K0_homological(const GradedOperator& a, const K0SolveOptions& options = {});

enum class LiftOrdering {
  left,       ///< X = g(K0) Y
  symmetric,  ///< X = (g(K0) Y + Y g(K0)) / 2, symmetric whenever Y is
};

/// X from Y with g = (1 - eta) / f'. Nominal order m - mu + 1.
GradedOperator lift_to_H0(const GradedOperator& y, LiftOrdering ordering = LiftOrdering::left);

/// Frequency data the quasiperiodic solver needs: H0 = nu~ . K~ with K~ eigen tuples per index.
struct ResonanceData {
  RVector nu_tilde;
  RMatrix ktilde;  ///< buffer_dim x d~
  RVector omega;

  Index dim() const { return ktilde.rows(); }
  RVector energies() const { return ktilde * nu_tilde; }
};

/// K~_j = K . v_j on a harmonic model. `v` is d x d~ (columns v_j). Checks nu~ . K~ = H0.
ResonanceData resonance_data(const SpectralModel& model, const RMatrix& v, const RVector& nu_tilde,
                             const RVector& omega);
/// Single-generator case H0 = nu~ K0 (e.g. order-one Zoll or d = 1 oscillators).
ResonanceData resonance_data_scalar(const SpectralModel& model, double nu_tilde, const RVector& omega);

struct QuasiPeriodicSolveOptions {
  double divisor_floor = 1e-6;
  /// Divisors below zero_tol * (1 + |omega.k| + |nu~.l|) count as exact zeros.
  double zero_tol = 1e-13;
  /// Numerators at or below numerator_tol * max|W| are treated as zero.
  double numerator_tol = 1e-13;
};

struct QuasiPeriodicSolution {
  QuasiPeriodicOperator x;
  QuasiPeriodicOperator average;  ///< <W> plus absorbed near-resonant entries
  QuasiPeriodicOperator absorbed;
  DivisorCensus census;
};

/// Solves omega . d_theta X + i[H0, X] = W - <W> mode by mode:
/// X_k,ab = -i W_k,ab / (omega.k + nu~.(m~_a - m~_b)).
/// Throws ResonanceViolation on an exact zero divisor with nonzero numerator.
QuasiPeriodicSolution solve_quasiperiodic(const QuasiPeriodicOperator& w, const ResonanceData& freq,
                                          const QuasiPeriodicSolveOptions& options = {});

/// Divisor of Fourier mode k at entry (a, b).
double small_divisor(const ResonanceData& freq, const FourierIndex& k, Index a, Index b);

/// Max modulus over Fourier modes of i delta X_k - (W - <W>)_k, excluding absorbed entries.
double homological_residual(const QuasiPeriodicSolution& solution, const QuasiPeriodicOperator& w,
                            const ResonanceData& freq);

struct WeightedResidual {
  double m = 0.0;
  double s = 0.0;
  double value = 0.0;
};

/// Weighted norms of i[H0, X] - (A - <A>) at (order(A) - 1, s) for each s.
std::vector<WeightedResidual> homological_residual(const GradedOperator& x, const GradedOperator& a,
                                                   const GradedOperator& average,
                                                   const std::vector<double>& s_grid);

/// Entrywise i[H0, X] for diagonal H0 given by the model energies.
CMatrix i_commutator_h0(const SpectralModel& model, const CMatrix& x);

}  // namespace nflab
