#include "oracles.hpp"

#include <cmath>
#include <functional>

namespace oracle {

void gauss_legendre(int n, double a, double b, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = 0.5 * (a + b) - 0.5 * (b - a) * x;
    weights[i] = (b - a) / ((1.0 - x * x) * dp * dp);
  }
}

namespace {

CMatrix rotated(const RVector& k0, const CMatrix& a, double tau) {
  CMatrix out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out(i, j) = std::exp(Complex(0.0, tau * (k0(i) - k0(j)))) * a(i, j);
  return out;
}

}  // namespace

CMatrix averaged(const RVector& k0, const CMatrix& a, int points) {
  CMatrix acc = CMatrix::Zero(a.rows(), a.cols());
  for (int j = 0; j < points; ++j) acc += rotated(k0, a, 2.0 * M_PI * j / points);
  return acc / double(points);
}

CMatrix homological_by_quadrature(const RVector& k0, const CMatrix& a, const CMatrix& avg, int points) {
  std::vector<double> x, w;
  gauss_legendre(points, 0.0, 2.0 * M_PI, x, w);
  const CMatrix b = a - avg;
  CMatrix acc = CMatrix::Zero(a.rows(), a.cols());
  for (int j = 0; j < points; ++j) acc += w[j] * x[j] * rotated(k0, b, x[j]);
  return acc / (2.0 * M_PI);
}

std::vector<double> quartic_levels(int count, double half_width, int n) {
  auto solve = [&](int m) {
    const double h = 2.0 * half_width / (m + 1);
    RVector diag(m), off(m - 1);
    for (int i = 0; i < m; ++i) {
      double x = -half_width + (i + 1) * h;
      diag(i) = 2.0 / (h * h) + x * x * x * x;
    }
    off.setConstant(-1.0 / (h * h));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    return RVector(es.eigenvalues().head(count));
  };
  RVector coarse = solve(n), fine = solve(2 * n + 1);
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = (4.0 * fine(i) - coarse(i)) / 3.0;
  return out;
}

Complex resonant_alpha(double t, double amplitude) {
  // alpha = -i (A/sqrt2) e^{-it} int_0^t e^{is} cos s ds
  const Complex i(0.0, 1.0);
  const Complex integral = 0.5 * t + (std::exp(2.0 * i * t) - 1.0) / (4.0 * i);
  return -i * (amplitude / std::sqrt(2.0)) * std::exp(-i * t) * integral;
}

double coherent_sobolev_norm(Complex alpha, double r) {
  const double mean = std::norm(alpha);
  // Poisson weights by recurrence; sum until the tail is negligible
  double p = std::exp(-mean), total = 0.0;
  const int cap = static_cast<int>(mean + 40.0 * std::sqrt(mean + 1.0) + 40.0);
  for (int k = 0; k <= cap; ++k) {
    if (k > 0) p *= mean / k;
    total += p * std::pow(2.0 * k + 1.0, 2.0 * r);
  }
  return std::sqrt(total);
}

std::vector<std::pair<std::int64_t, std::int64_t>> sqrt2_convergents(int count) {
  // sqrt2 = [1; 2, 2, 2, ...]; the recurrence seeds 0/1 and 1/0 come first
  std::vector<std::pair<std::int64_t, std::int64_t>> out{{0, 1}, {1, 0}};
  std::int64_t p_prev = 1, q_prev = 0, p = 1, q = 1;
  out.emplace_back(p, q);
  while (static_cast<int>(out.size()) < count) {
    std::int64_t pn = 2 * p + p_prev, qn = 2 * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = pn;
    q = qn;
    out.emplace_back(p, q);
  }
  return out;
}

std::vector<std::vector<long>> brute_kernel(const std::vector<long>& nu, int box) {
  std::vector<std::vector<long>> out;
  std::vector<long> k(nu.size(), -box);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == nu.size()) {
      long dot = 0;
      bool zero = true;
      for (std::size_t j = 0; j < nu.size(); ++j) {
        dot += nu[j] * k[j];
        zero = zero && k[j] == 0;
      }
      if (dot == 0 && !zero) out.push_back(k);
      return;
    }
    for (long v = -box; v <= box; ++v) {
      k[i] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

}  // namespace oracle
