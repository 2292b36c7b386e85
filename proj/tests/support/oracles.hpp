#pragma once

// Reference computations that share no code path with the library routines they check.

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

/// Gauss-Legendre rule on [a, b] by Newton iteration on the three-term recurrence.
void gauss_legendre(int n, double a, double b, std::vector<double>& nodes, std::vector<double>& weights);

/// (1/2pi) int_0^{2pi} A(tau) dtau, A(tau) = e^{i tau K0} A e^{-i tau K0}, periodic trapezoid.
CMatrix averaged(const RVector& k0, const CMatrix& a, int points = 256);

/// (1/2pi) int_0^{2pi} tau (A - <A>)(tau) dtau by Gauss-Legendre quadrature.
CMatrix homological_by_quadrature(const RVector& k0, const CMatrix& a, const CMatrix& avg, int points = 512);

/// Lowest `count` eigenvalues of -d^2/dx^2 + x^4 from second-order finite differences on
/// [-half_width, half_width], Richardson-extrapolated over grids n and 2n.
std::vector<double> quartic_levels(int count, double half_width = 9.0, int n = 6000);

/// Coherent amplitude of the resonantly driven oscillator
/// i alpha' = alpha + (A / sqrt 2) cos t, alpha(0) = 0.
Complex resonant_alpha(double t, double amplitude);

/// ||K0^r psi|| for a coherent state with K0 = 2n + 1 (Poisson photon statistics).
double coherent_sobolev_norm(Complex alpha, double r);

/// Continued-fraction convergents p/q of sqrt(2), starting from the recurrence seeds 0/1 and 1/0.
std::vector<std::pair<std::int64_t, std::int64_t>> sqrt2_convergents(int count);

/// All nonzero integer vectors in [-box, box]^d with nu . k = 0, nu given by integer numerators
/// over a common denominator.
std::vector<std::vector<long>> brute_kernel(const std::vector<long>& nu_numerators, int box);

/// sup over a theta grid of || omega d/dtheta X + i[H0, X] - (W - Z) ||_max, with the derivative
/// taken spectrally from samples. One angle.
template <class QP>
double sampled_homological_residual(const QP& x, const QP& w, const QP& z, double omega, const RVector& h0,
                                    int kmax, int samples = 64);

}  // namespace oracle

#include "oracles_impl.hpp"
