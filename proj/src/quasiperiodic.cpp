#include "nflab/quasiperiodic.hpp"

#include <algorithm>
#include <cmath>

#include "nflab/error.hpp"

namespace nflab {

int fourier_norm(const FourierIndex& k) {
  int n = 0;
  for (int v : k) n += std::abs(v);
  return n;
}

FourierIndex negate(const FourierIndex& k) {
  FourierIndex out(k);
  for (int& v : out) v = -v;
  return out;
}

QuasiPeriodicOperator::QuasiPeriodicOperator(ModelHandle model, RVector omega, double order)
    : model_(std::move(model)), omega_(std::move(omega)), order_(order) {
  if (!model_) throw InvalidInput("quasiperiodic operator needs a model");
  if (omega_.size() < 1) throw InvalidInput("quasiperiodic operator needs at least one drive angle");
}

QuasiPeriodicOperator QuasiPeriodicOperator::constant(const GradedOperator& op, RVector omega) {
  QuasiPeriodicOperator out(op.model(), std::move(omega), op.order());
  out.add(FourierIndex(out.angles(), 0), op.matrix());
  return out;
}

void QuasiPeriodicOperator::add(const FourierIndex& k, const CMatrix& value) {
  if (static_cast<int>(k.size()) != angles()) throw InvalidInput("Fourier index has the wrong length");
  if (value.rows() != dim() || value.cols() != dim())
    throw ModelMismatch("Fourier coefficient does not match the model buffer dimension");
  auto it = coeffs_.find(k);
  if (it == coeffs_.end())
    coeffs_.emplace(k, value);
  else
    it->second += value;
}

const CMatrix* QuasiPeriodicOperator::find(const FourierIndex& k) const {
  auto it = coeffs_.find(k);
  return it == coeffs_.end() ? nullptr : &it->second;
}

CMatrix QuasiPeriodicOperator::coefficient(const FourierIndex& k) const {
  const CMatrix* c = find(k);
  return c ? *c : CMatrix::Zero(dim(), dim());
}

int QuasiPeriodicOperator::support() const {
  int s = 0;
  for (const auto& [k, m] : coeffs_) s = std::max(s, fourier_norm(k));
  return s;
}

namespace {
double dot(const FourierIndex& k, std::span<const double> theta) {
  double s = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * theta[i];
  return s;
}
}  // namespace

CMatrix QuasiPeriodicOperator::evaluate(std::span<const double> theta) const {
  if (static_cast<int>(theta.size()) != angles()) throw InvalidInput("theta has the wrong length");
  CMatrix out = CMatrix::Zero(dim(), dim());
  for (const auto& [k, m] : coeffs_) out += std::exp(kI * dot(k, theta)) * m;
  return out;
}

CMatrix QuasiPeriodicOperator::derivative(std::span<const double> theta) const {
  if (static_cast<int>(theta.size()) != angles()) throw InvalidInput("theta has the wrong length");
  CMatrix out = CMatrix::Zero(dim(), dim());
  for (const auto& [k, m] : coeffs_) {
    double wk = 0.0;
    for (int i = 0; i < angles(); ++i) wk += omega_(i) * k[i];
    if (wk != 0.0) out += (kI * wk * std::exp(kI * dot(k, theta))) * m;
  }
  return out;
}

GradedOperator QuasiPeriodicOperator::at(std::span<const double> theta) const {
  return GradedOperator(model_, evaluate(theta), order_);
}

double QuasiPeriodicOperator::symmetry_defect() const {
  double worst = 0.0;
  for (const auto& [k, m] : coeffs_) {
    const CMatrix partner = coefficient(negate(k));
    worst = std::max(worst, (partner - m.adjoint()).cwiseAbs().maxCoeff());
  }
  return worst;
}

double QuasiPeriodicOperator::truncate(int k_max) {
  double tail = 0.0;
  for (auto it = coeffs_.begin(); it != coeffs_.end();) {
    if (fourier_norm(it->first) > k_max) {
      tail += it->second.squaredNorm();
      it = coeffs_.erase(it);
    } else {
      ++it;
    }
  }
  return std::sqrt(tail);
}

void QuasiPeriodicOperator::prune(double tol) {
  for (auto it = coeffs_.begin(); it != coeffs_.end();) {
    if (it->second.size() == 0 || it->second.cwiseAbs().maxCoeff() <= tol)
      it = coeffs_.erase(it);
    else
      ++it;
  }
}

QuasiPeriodicOperator& QuasiPeriodicOperator::operator+=(const QuasiPeriodicOperator& other) {
  if (other.model_ != model_) throw ModelMismatch("quasiperiodic operators on different models");
  if (other.angles() != angles()) throw InvalidInput("quasiperiodic operators with different angle counts");
  for (const auto& [k, m] : other.coeffs_) add(k, m);
  order_ = std::max(order_, other.order_);
  return *this;
}

QuasiPeriodicOperator& QuasiPeriodicOperator::operator-=(const QuasiPeriodicOperator& other) {
  if (other.model_ != model_) throw ModelMismatch("quasiperiodic operators on different models");
  if (other.angles() != angles()) throw InvalidInput("quasiperiodic operators with different angle counts");
  for (const auto& [k, m] : other.coeffs_) add(k, -m);
  order_ = std::max(order_, other.order_);
  return *this;
}

QuasiPeriodicOperator& QuasiPeriodicOperator::operator*=(Complex scale) {
  for (auto& [k, m] : coeffs_) m *= scale;
  return *this;
}

QuasiPeriodicOperator operator+(QuasiPeriodicOperator a, const QuasiPeriodicOperator& b) { return a += b; }
QuasiPeriodicOperator operator-(QuasiPeriodicOperator a, const QuasiPeriodicOperator& b) { return a -= b; }

std::vector<std::vector<double>> theta_grid(int angles, int points_per_angle) {
  std::vector<std::vector<double>> grid;
  std::vector<int> idx(angles, 0);
  for (;;) {
    std::vector<double> theta(angles);
    for (int i = 0; i < angles; ++i) theta[i] = 2.0 * M_PI * idx[i] / points_per_angle;
    grid.push_back(std::move(theta));
    int j = angles - 1;
    while (j >= 0 && ++idx[j] == points_per_angle) idx[j--] = 0;
    if (j < 0) break;
  }
  return grid;
}

double QuasiPeriodicOperator::sup_weighted_norm(double m, double s, int samples_per_angle) const {
  double worst = 0.0;
  for (const auto& theta : theta_grid(angles(), samples_per_angle))
    worst = std::max(worst, weighted_norm(*model_, evaluate(theta), m, s));
  return worst;
}

double QuasiPeriodicOperator::sup_abs(int samples_per_angle) const {
  double worst = 0.0;
  for (const auto& theta : theta_grid(angles(), samples_per_angle)) {
    const CMatrix w = evaluate(theta);
    if (w.size()) worst = std::max(worst, w.cwiseAbs().maxCoeff());
  }
  return worst;
}

OrderScanResult order_scan(std::span<const QuasiPeriodicOperator> family, const OrderScanOptions& options,
                           int samples_per_angle) {
  std::vector<const QuasiPeriodicOperator*> sorted;
  for (const auto& op : family) sorted.push_back(&op);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return report_lambda_max(a->spectral()) < report_lambda_max(b->spectral());
  });
  std::vector<double> lambda_max;
  for (const auto* op : sorted) lambda_max.push_back(report_lambda_max(op->spectral()));

  // Cache report-block samples once; seminorms are then cheap reweightings.
  const auto grid = theta_grid(sorted.empty() ? 1 : sorted.front()->angles(), samples_per_angle);
  std::vector<std::vector<CMatrix>> samples(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    for (const auto& theta : grid) samples[i].push_back(sorted[i]->evaluate(theta));

  return scan_order(
      lambda_max,
      [&](double m, double s, std::size_t i) {
        double worst = 0.0;
        for (const auto& w : samples[i]) worst = std::max(worst, weighted_norm(sorted[i]->spectral(), w, m, s));
        return worst;
      },
      options);
}

}  // namespace nflab
