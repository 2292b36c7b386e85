#include "nflab/spectral_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "nflab/error.hpp"

namespace nflab {
namespace {

double glue(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

Index buffered(int cutoff, double buffer_fraction) {
  return static_cast<Index>(std::ceil(cutoff * (1.0 + buffer_fraction) - 1e-12));
}

void check_buffer_fraction(double buffer_fraction) {
  if (!(buffer_fraction >= 0.0) || !std::isfinite(buffer_fraction))
    throw InvalidInput("buffer_fraction must be a finite non-negative number");
}

// Real Hermite ladder (annihilation) of size n: a|m> = sqrt(m)|m-1>.
RMatrix hermite_lowering(Index n) {
  RMatrix a = RMatrix::Zero(n, n);
  for (Index m = 1; m < n; ++m) a(m - 1, m) = std::sqrt(static_cast<double>(m));
  return a;
}

struct HermiteOperators {
  RMatrix position;        // x
  RMatrix momentum_over_i; // p / i, real antisymmetric
  RMatrix hamiltonian;
};

// Builds x, p and H = p^{2l} + a x^{2k} on `size` Hermite functions of length
// scale `s`, computing powers on a padded basis so the kept block is exact.
HermiteOperators hermite_operators(Index size, double s, int k, int l, double a) {
  const Index pad = 2 * std::max(k, l) + 2;
  const Index n = size + pad;
  const RMatrix lower = hermite_lowering(n);
  const RMatrix raise = lower.transpose();
  const RMatrix x = (s / std::sqrt(2.0)) * (lower + raise);
  const RMatrix p_over_i = (raise - lower) / (std::sqrt(2.0) * s);  // p = i (a^+ - a)/(sqrt2 s)
  const RMatrix p2 = -(p_over_i * p_over_i);
  const RMatrix x2 = x * x;
  RMatrix kin = RMatrix::Identity(n, n);
  for (int j = 0; j < l; ++j) kin = kin * p2;
  RMatrix pot = RMatrix::Identity(n, n);
  for (int j = 0; j < k; ++j) pot = pot * x2;
  HermiteOperators out;
  out.position = x.topLeftCorner(size, size);
  out.momentum_over_i = p_over_i.topLeftCorner(size, size);
  out.hamiltonian = (kin + a * pot).topLeftCorner(size, size);
  return out;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::harmonic: return "harmonic";
    case ModelKind::anharmonic: return "anharmonic";
    case ModelKind::zoll: return "zoll";
  }
  return "unknown";
}

double smooth_cutoff(double x, double threshold) {
  const double t = x - threshold;
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  const double up = glue(t);
  return 1.0 - up / (up + glue(1.0 - t));
}

SymbolFunction::SymbolFunction(Fn f, Fn df, Fn d2f, double order, double cutoff)
    : f_(std::move(f)), df_(std::move(df)), d2f_(std::move(d2f)), order_(order), cutoff_(cutoff) {}

SymbolFunction SymbolFunction::power(double scale, double exponent) {
  if (!(scale > 0.0) || !(exponent >= 1.0))
    throw InvalidInput("power symbol needs scale > 0 and exponent >= 1");
  const double sp = std::pow(scale, exponent);
  double cutoff = 0.0;
  if (exponent > 1.0) cutoff = std::pow(1.0 / (exponent * sp), 1.0 / (exponent - 1.0));
  return SymbolFunction(
      [=](double x) { return sp * std::pow(x, exponent); },
      [=](double x) { return exponent * sp * std::pow(x, exponent - 1.0); },
      [=](double x) { return exponent * (exponent - 1.0) * sp * std::pow(x, exponent - 2.0); },
      exponent, cutoff);
}

double SymbolFunction::lift_factor(double x) const {
  const double cut = 1.0 - eta(x);
  if (cut == 0.0) return 0.0;
  return cut / derivative(x);
}

std::string SpectralModel::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << " buffer=" << buffer_dim() << " report=" << report_dim_
     << " modes=" << modes() << " mu=" << mu_;
  return os.str();
}

double superellipse_area(int k, int l) {
  const double a = 1.0 / (2.0 * k), b = 1.0 / (2.0 * l);
  return 4.0 * std::tgamma(1.0 + a) * std::tgamma(1.0 + b) / std::tgamma(1.0 + a + b);
}

ModelHandle build_harmonic_model(std::span<const double> nu, std::span<const int> cutoffs,
                                 const ModelOptions& options) {
  check_buffer_fraction(options.buffer_fraction);
  if (nu.empty() || nu.size() != cutoffs.size())
    throw InvalidInput("harmonic model needs one cutoff per frequency");
  for (double v : nu)
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("harmonic frequencies must be positive");
  for (int c : cutoffs)
    if (c < 2) throw InvalidInput("harmonic cutoffs must be >= 2");

  const int d = static_cast<int>(nu.size());
  std::vector<int> buffer(d), report(cutoffs.begin(), cutoffs.end());
  double total = 1.0;
  for (int j = 0; j < d; ++j) {
    buffer[j] = static_cast<int>(buffered(cutoffs[j], options.buffer_fraction));
    total *= buffer[j];
  }
  if (total > static_cast<double>(options.max_dim))
    throw CapacityError("harmonic truncation of dimension " + std::to_string(static_cast<long long>(total)) +
                        " exceeds the memory bound " + std::to_string(options.max_dim));

  // Enumerate the tensor grid, report multi-indices first (lexicographic within each group).
  std::vector<std::vector<int>> report_labels, extra_labels;
  std::vector<int> idx(d, 0);
  for (;;) {
    bool in_report = true;
    for (int j = 0; j < d; ++j) in_report = in_report && idx[j] < report[j];
    (in_report ? report_labels : extra_labels).push_back(idx);
    int j = d - 1;
    while (j >= 0 && ++idx[j] == buffer[j]) idx[j--] = 0;
    if (j < 0) break;
  }

  auto model = std::shared_ptr<SpectralModel>(new SpectralModel());
  model->kind_ = ModelKind::harmonic;
  model->labels_ = std::move(report_labels);
  model->report_dim_ = static_cast<Index>(model->labels_.size());
  model->labels_.insert(model->labels_.end(), extra_labels.begin(), extra_labels.end());
  const Index n = static_cast<Index>(model->labels_.size());
  model->k_eigs_.resize(n, d);
  model->k0_eigs_.resize(n);
  model->h0_eigs_.resize(n);
  for (Index a = 0; a < n; ++a) {
    double k0 = 0.0, h0 = 0.0;
    for (int j = 0; j < d; ++j) {
      const double kj = 2.0 * model->labels_[a][j] + 1.0;
      model->k_eigs_(a, j) = kj;
      k0 += kj;
      h0 += nu[j] * kj;
    }
    model->k0_eigs_(a) = k0;
    model->h0_eigs_(a) = h0;
  }
  model->lambda_shift_ = static_cast<double>(d);
  model->integer_spectrum_ = true;
  model->mu_ = 1.0;
  model->nu_.assign(nu.begin(), nu.end());
  model->mode_dims_ = buffer;
  model->report_mode_dims_ = report;
  if (d == 1) model->symbol_ = SymbolFunction::power(nu[0], 1.0);
  return model;
}

ModelHandle build_anharmonic_model(int k, int l, double a, int cutoff, const ModelOptions& options) {
  check_buffer_fraction(options.buffer_fraction);
  if (k < 1 || l < 1 || k + l < 3) throw InvalidInput("anharmonic model needs k,l >= 1 and k+l >= 3");
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidInput("anharmonic coupling a must be positive");
  if (cutoff < 2) throw InvalidInput("anharmonic cutoff must be >= 2");
  const Index keep = buffered(cutoff, options.buffer_fraction);
  if (keep > options.max_dim) throw CapacityError("anharmonic truncation exceeds the memory bound");

  const double mu = 2.0 * k * l / (k + l);
  const double expo = 1.0 / mu;  // (k+l)/(2kl)
  const double area = superellipse_area(k, l);
  // Bohr-Sommerfeld: area * E^{expo} * a^{-1/(2k)} = 2 pi (n + 1/2).
  const double scale = area / (2.0 * M_PI * std::pow(a, 1.0 / (2.0 * k)));

  // Length scale balancing position and momentum extents at the top kept level.
  const double e_top = std::pow((keep + 0.5) / scale, mu);
  const double x_top = std::pow(e_top / a, 1.0 / (2.0 * k));
  const double p_top = std::pow(e_top, 1.0 / (2.0 * l));
  const double s = std::sqrt(x_top / p_top);

  Index basis = std::max<Index>(4 * keep, 64);
  const Index basis_limit = std::max<Index>(8 * options.max_dim, 8192);
  constexpr double kResidualTol = 1e-7;
  for (;;) {
    if (basis > basis_limit)
      throw NumericalFailure("anharmonic diagonalization did not converge within the basis limit");
    const HermiteOperators ops = hermite_operators(basis, s, k, l, a);
    Eigen::SelfAdjointEigenSolver<RMatrix> solver(ops.hamiltonian);
    if (solver.info() != Eigen::Success) throw NumericalFailure("anharmonic eigensolver failed");

    // Residual of each kept eigenvector against a larger-basis Hamiltonian.
    const Index check_size = basis + basis / 2;
    const HermiteOperators big = hermite_operators(check_size, s, k, l, a);
    Index worst = -1;
    double worst_residual = 0.0;
    for (Index j = 0; j < keep; ++j) {
      RVector v = RVector::Zero(check_size);
      v.head(basis) = solver.eigenvectors().col(j);
      const double lambda = solver.eigenvalues()(j);
      const double res = (big.hamiltonian * v - lambda * v).norm() / std::max(1.0, std::abs(lambda));
      if (res > worst_residual) {
        worst_residual = res;
        worst = j;
      }
    }
    if (worst_residual > kResidualTol) {
      if (2 * basis > basis_limit)
        throw NumericalFailure("anharmonic level " + std::to_string(worst) + " residual " +
                               std::to_string(worst_residual) + " exceeds tolerance");
      basis *= 2;
      continue;
    }

    auto model = std::shared_ptr<SpectralModel>(new SpectralModel());
    model->kind_ = ModelKind::anharmonic;
    model->report_dim_ = cutoff;
    model->h0_eigs_ = solver.eigenvalues().head(keep);
    model->k0_eigs_.resize(keep);
    for (Index j = 0; j < keep; ++j) {
      if (!(model->h0_eigs_(j) > 0.0)) throw NumericalFailure("anharmonic spectrum is not positive");
      model->k0_eigs_(j) = scale * std::pow(model->h0_eigs_(j), expo);
    }
    model->k_eigs_ = model->k0_eigs_;
    model->lambda_shift_ = 0.5;
    model->integer_spectrum_ = false;
    model->mu_ = mu;
    model->symbol_ = SymbolFunction::power(1.0 / scale, mu);
    model->mode_dims_ = {static_cast<int>(keep)};
    model->report_mode_dims_ = {cutoff};
    for (Index j = 0; j < keep; ++j) model->labels_.push_back({static_cast<int>(j)});
    model->hermite_vectors_ = solver.eigenvectors().leftCols(keep);
    model->hermite_position_ = ops.position;
    model->hermite_momentum_ = ops.momentum_over_i;
    model->anharmonic_params_ = {static_cast<double>(k), static_cast<double>(l), a};
    return model;
  }
}

ModelHandle build_zoll_model(int d, int cutoff, ZollMultiplicity multiplicity, const ModelOptions& options) {
  check_buffer_fraction(options.buffer_fraction);
  if (d < 1) throw InvalidInput("zoll model needs d >= 1");
  if (cutoff < 1) throw InvalidInput("zoll cutoff must be >= 1");
  if (multiplicity == ZollMultiplicity::full && d >= 3)
    throw CapacityError("zoll full-multiplicity mode is supported for d = 1 or 2 only");

  const int levels = static_cast<int>(buffered(cutoff, options.buffer_fraction));
  const double shift = 0.5 * (d - 1);
  auto level_size = [&](int n) -> int {
    if (multiplicity == ZollMultiplicity::collapsed) return 1;
    return d == 1 ? 2 : 2 * n + 1;
  };

  auto model = std::shared_ptr<SpectralModel>(new SpectralModel());
  model->kind_ = ModelKind::zoll;
  std::vector<double> k0;
  for (int n = 1; n <= levels; ++n) {
    for (int slot = 0; slot < level_size(n); ++slot) {
      k0.push_back(n + shift);
      model->labels_.push_back({n, slot});
    }
    if (n == cutoff) model->report_dim_ = static_cast<Index>(k0.size());
    if (static_cast<Index>(k0.size()) > options.max_dim)
      throw CapacityError("zoll truncation exceeds the memory bound");
  }
  const Index n = static_cast<Index>(k0.size());
  model->k0_eigs_ = Eigen::Map<const RVector>(k0.data(), n);
  model->h0_eigs_ = model->k0_eigs_.array().square();
  model->k_eigs_ = model->k0_eigs_;
  model->lambda_shift_ = shift;
  model->integer_spectrum_ = true;
  model->mu_ = 2.0;
  model->symbol_ = SymbolFunction::power(1.0, 2.0);
  model->mode_dims_ = {levels};
  model->report_mode_dims_ = {cutoff};
  return model;
}

SobolevWeights sobolev_weights(const SpectralModel& model, double r) {
  SobolevWeights out;
  out.r = r;
  out.weights = model.k0_eigs().array().pow(r);
  if (r == 0.0) out.weights.setOnes();
  return out;
}

}  // namespace nflab
