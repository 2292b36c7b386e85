#pragma once

#include <cmath>

namespace oracle {

template <class QP>
double sampled_homological_residual(const QP& x, const QP& w, const QP& z, double omega, const RVector& h0,
                                    int kmax, int samples) {
  const double two_pi = 2.0 * M_PI;
  const Eigen::Index n = h0.size();
  std::vector<CMatrix> xs;
  for (int j = 0; j < samples; ++j) {
    const double th[] = {two_pi * j / samples};
    xs.push_back(x.evaluate(th));
  }
  // Fourier coefficients of the samples, then the spectral derivative
  std::vector<CMatrix> c;
  for (int k = -kmax; k <= kmax; ++k) {
    CMatrix acc = CMatrix::Zero(n, n);
    for (int j = 0; j < samples; ++j) acc += xs[j] * std::exp(Complex(0.0, -k * two_pi * j / samples));
    c.push_back(acc / double(samples));
  }
  double worst = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double th[] = {two_pi * j / samples};
    CMatrix dx = CMatrix::Zero(n, n);
    for (int k = -kmax; k <= kmax; ++k)
      dx += Complex(0.0, k * omega) * c[k + kmax] * std::exp(Complex(0.0, k * th[0]));
    CMatrix comm = h0.cast<Complex>().asDiagonal() * xs[j] - xs[j] * h0.cast<Complex>().asDiagonal();
    CMatrix res = dx + Complex(0.0, 1.0) * comm - (w.evaluate(th) - z.evaluate(th));
    worst = std::max(worst, res.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace oracle
