#include "nflab/operator_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "nflab/error.hpp"

namespace nflab {

GradedOperator::GradedOperator(ModelHandle model, CMatrix matrix, double order)
    : model_(std::move(model)), matrix_(std::move(matrix)), order_(order) {
  if (!model_) throw InvalidInput("operator needs a spectral model");
  if (matrix_.rows() != model_->buffer_dim() || matrix_.cols() != model_->buffer_dim())
    throw ModelMismatch("operator shape does not match the model buffer dimension");
}

GradedOperator GradedOperator::zero(ModelHandle model, double order) {
  const Index n = model->buffer_dim();
  return GradedOperator(std::move(model), CMatrix::Zero(n, n), order);
}

GradedOperator GradedOperator::identity(ModelHandle model) {
  const Index n = model->buffer_dim();
  return GradedOperator(std::move(model), CMatrix::Identity(n, n), 0.0);
}

GradedOperator GradedOperator::adjoint() const {
  return GradedOperator(model_, matrix_.adjoint(), order_);
}

GradedOperator GradedOperator::with_order(double order) const {
  return GradedOperator(model_, matrix_, order);
}

double GradedOperator::symmetry_defect() const {
  return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
}

GradedOperator& GradedOperator::operator+=(const GradedOperator& other) {
  require_same_model(*this, other);
  matrix_ += other.matrix_;
  order_ = std::max(order_, other.order_);
  return *this;
}

GradedOperator& GradedOperator::operator-=(const GradedOperator& other) {
  require_same_model(*this, other);
  matrix_ -= other.matrix_;
  order_ = std::max(order_, other.order_);
  return *this;
}

GradedOperator& GradedOperator::operator*=(Complex scale) {
  matrix_ *= scale;
  return *this;
}

GradedOperator operator+(GradedOperator a, const GradedOperator& b) { return a += b; }
GradedOperator operator-(GradedOperator a, const GradedOperator& b) { return a -= b; }
GradedOperator operator*(Complex scale, GradedOperator a) { return a *= scale; }

GradedOperator operator*(const GradedOperator& a, const GradedOperator& b) {
  require_same_model(a, b);
  return GradedOperator(a.model(), a.matrix() * b.matrix(), a.order() + b.order());
}

void require_same_model(const GradedOperator& a, const GradedOperator& b) {
  if (a.model() != b.model()) throw ModelMismatch("operators belong to different spectral models");
}

GradedOperator apply_symbol(ModelHandle model, const std::function<double(double)>& g, double order) {
  const RVector& lambda = model->k0_eigs();
  CMatrix out = CMatrix::Zero(lambda.size(), lambda.size());
  for (Index a = 0; a < lambda.size(); ++a) {
    const double value = g(lambda(a));
    if (!std::isfinite(value))
      throw NumericalFailure("symbol is not finite at lambda = " + std::to_string(lambda(a)));
    out(a, a) = value;
  }
  return GradedOperator(std::move(model), std::move(out), order);
}

GradedOperator commutator(const GradedOperator& a, const GradedOperator& b) {
  require_same_model(a, b);
  return GradedOperator(a.model(), a.matrix() * b.matrix() - b.matrix() * a.matrix(),
                        a.order() + b.order() - 1.0);
}

GradedOperator heisenberg_evolve(const GradedOperator& a, double tau) {
  const RVector& lambda = a.spectral().k0_eigs();
  const CVector phase = (kI * tau * lambda.cast<Complex>()).array().exp();
  CMatrix out = phase.asDiagonal() * a.matrix() * phase.conjugate().asDiagonal();
  return GradedOperator(a.model(), std::move(out), a.order());
}

GradedOperator heisenberg_evolve(const GradedOperator& a, std::span<const double> tau) {
  const RMatrix& k = a.spectral().k_eigs();
  if (static_cast<Index>(tau.size()) != k.cols())
    throw InvalidInput("heisenberg_evolve: tau has " + std::to_string(tau.size()) +
                       " components, model has " + std::to_string(k.cols()) + " modes");
  const RVector t = Eigen::Map<const RVector>(tau.data(), static_cast<Index>(tau.size()));
  const RVector angle = k * t;
  const CVector phase = (kI * angle.cast<Complex>()).array().exp();
  CMatrix out = phase.asDiagonal() * a.matrix() * phase.conjugate().asDiagonal();
  return GradedOperator(a.model(), std::move(out), a.order());
}

GradedOperator average(const GradedOperator& a) {
  const SpectralModel& model = a.spectral();
  if (!model.integer_spectrum())
    throw InvalidInput("scalar averaging needs an integer-shifted spectrum; use the entrywise solver");
  const RVector& lambda = model.k0_eigs();
  CMatrix out = CMatrix::Zero(a.dim(), a.dim());
  for (Index c = 0; c < a.dim(); ++c)
    for (Index r = 0; r < a.dim(); ++r)
      if (std::abs(lambda(r) - lambda(c)) < kResonanceMatchTol) out(r, c) = a.matrix()(r, c);
  return GradedOperator(a.model(), std::move(out), a.order());
}

GradedOperator average(const GradedOperator& a, const RMatrix& ktilde) {
  if (ktilde.rows() != a.dim()) throw ModelMismatch("K-tilde data does not match the operator dimension");
  CMatrix out = CMatrix::Zero(a.dim(), a.dim());
  for (Index c = 0; c < a.dim(); ++c)
    for (Index r = 0; r < a.dim(); ++r)
      if ((ktilde.row(r) - ktilde.row(c)).cwiseAbs().maxCoeff() < kResonanceMatchTol)
        out(r, c) = a.matrix()(r, c);
  return GradedOperator(a.model(), std::move(out), a.order());
}

double spectral_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  const CMatrix gram = a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

double weighted_norm(const SpectralModel& model, const CMatrix& a, double m, double s) {
  const Index n = model.report_dim();
  const RVector lambda = model.k0_eigs().head(n);
  const RVector left = lambda.array().pow(s - m);
  const RVector right = lambda.array().pow(-s);
  const CMatrix w = left.cast<Complex>().asDiagonal() * a.topLeftCorner(n, n) *
                    right.cast<Complex>().asDiagonal();
  return spectral_norm(w);
}

double weighted_norm(const GradedOperator& a, double m, double s) {
  return weighted_norm(a.spectral(), a.matrix(), m, s);
}

double report_lambda_max(const SpectralModel& model) {
  return model.k0_eigs().head(model.report_dim()).maxCoeff();
}

std::vector<double> default_order_grid() {
  std::vector<double> grid;
  for (int i = -12; i <= 12; ++i) grid.push_back(0.25 * i);
  return grid;
}

double growth_exponent(std::span<const double> values, std::span<const double> lambda_max,
                       double zero_floor) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double lo = std::max(values[i], zero_floor);
    const double hi = std::max(values[i + 1], zero_floor);
    const double span = std::log(lambda_max[i + 1] / lambda_max[i]);
    if (span <= 0.0) throw InvalidInput("order scan needs strictly increasing truncations");
    worst = std::max(worst, std::log(hi / lo) / span);
  }
  return values.size() < 2 ? 0.0 : worst;
}

double resolve_growth_tol(const std::vector<double>& grid, double requested) {
  if (requested >= 0.0) return requested;
  double step = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) step = std::min(step, std::abs(grid[i + 1] - grid[i]));
  return std::isfinite(step) ? 0.5 * step : 0.125;
}

OrderScanResult scan_order(const std::vector<double>& lambda_max, const SeminormFn& value,
                           const OrderScanOptions& options) {
  if (lambda_max.size() < 2) throw InvalidInput("order scan needs at least two truncation sizes");
  OrderScanResult result;
  result.lambda_max = lambda_max;
  result.m_grid = options.m_grid.empty() ? default_order_grid() : options.m_grid;
  std::sort(result.m_grid.begin(), result.m_grid.end());
  result.s_grid = options.s_grid;
  const double tol = resolve_growth_tol(result.m_grid, options.growth_tol);

  std::vector<bool> bounded(result.m_grid.size());
  for (std::size_t mi = 0; mi < result.m_grid.size(); ++mi) {
    std::vector<double> growth_row;
    std::vector<std::vector<double>> value_row;
    bool ok = true;
    for (double s : result.s_grid) {
      std::vector<double> vals(lambda_max.size());
      for (std::size_t i = 0; i < lambda_max.size(); ++i) vals[i] = value(result.m_grid[mi], s, i);
      const double g = growth_exponent(vals, lambda_max, options.zero_floor);
      ok = ok && g <= tol;
      growth_row.push_back(g);
      value_row.push_back(std::move(vals));
    }
    bounded[mi] = ok;
    result.growth.push_back(std::move(growth_row));
    result.values.push_back(std::move(value_row));
  }
  // Smallest m such that it and every larger grid value are bounded.
  std::optional<std::size_t> first;
  for (std::size_t mi = result.m_grid.size(); mi-- > 0;) {
    if (!bounded[mi]) break;
    first = mi;
  }
  if (first) {
    result.order = result.m_grid[*first];
    result.at_grid_floor = *first == 0;
  }
  return result;
}

OrderScanResult order_scan(std::span<const GradedOperator> family, const OrderScanOptions& options) {
  std::vector<const GradedOperator*> sorted;
  for (const auto& op : family) sorted.push_back(&op);
  std::sort(sorted.begin(), sorted.end(), [](const GradedOperator* a, const GradedOperator* b) {
    return report_lambda_max(a->spectral()) < report_lambda_max(b->spectral());
  });
  std::vector<double> lambda_max;
  for (const auto* op : sorted) lambda_max.push_back(report_lambda_max(op->spectral()));
  return scan_order(
      lambda_max,
      [&](double m, double s, std::size_t i) { return weighted_norm(*sorted[i], m, s); }, options);
}

OrderScanResult order_scan(const std::function<GradedOperator(int size)>& build,
                           std::span<const int> sizes, const OrderScanOptions& options) {
  std::vector<GradedOperator> family;
  for (int size : sizes) family.push_back(build(size));
  return order_scan(std::span<const GradedOperator>(family), options);
}

CMatrix expm(const CMatrix& a) { return a.exp(); }

CMatrix polar_restore(const CMatrix& u) {
  const CMatrix inv_adj = u.adjoint().partialPivLu().inverse();
  return 0.5 * (u + inv_adj);
}

CMatrix unitary_exp(const CMatrix& x, double tau) {
  if (tau == 0.0) return CMatrix::Identity(x.rows(), x.cols());
  const CMatrix gen = (kI * tau) * x;
  return polar_restore(expm(gen));
}

CMatrix conjugate(const CMatrix& a, const CMatrix& x, double tau) {
  const CMatrix u = unitary_exp(x, tau);
  return u * a * u.adjoint();
}

double series_remainder_order(double m, double rho, int depth) { return m - (depth + 1) * (1.0 - rho); }

GradedOperator lie_conjugate(const GradedOperator& a, const GradedOperator& x, double tau,
                             ConjugationMethod method, int series_depth) {
  require_same_model(a, x);
  const double scale = std::max(1.0, x.matrix().cwiseAbs().maxCoeff());
  if (x.symmetry_defect() > 1e-10 * scale) throw InvalidInput("lie_conjugate: generator X is not symmetric");
  if (method == ConjugationMethod::exact)
    return GradedOperator(a.model(), conjugate(a.matrix(), x.matrix(), tau), a.order());

  if (series_depth < 1) throw InvalidInput("lie_conjugate: series depth must be >= 1");
  // sum_l tau^l / l! ad_X^l(A) with ad_X(A) = i [X, A]
  CMatrix term = a.matrix();
  CMatrix sum = term;
  for (int l = 1; l <= series_depth; ++l) {
    term = (kI * tau / static_cast<double>(l)) * (x.matrix() * term - term * x.matrix());
    sum += term;
  }
  return GradedOperator(a.model(), std::move(sum), a.order());
}

CMatrix commutator_with_k0(const SpectralModel& model, const CMatrix& a) {
  const RVector& lambda = model.k0_eigs();
  CMatrix out(a.rows(), a.cols());
  for (Index c = 0; c < a.cols(); ++c)
    for (Index r = 0; r < a.rows(); ++r) out(r, c) = (lambda(c) - lambda(r)) * a(r, c);
  return out;
}

}  // namespace nflab
