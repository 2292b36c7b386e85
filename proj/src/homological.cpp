#include "nflab/homological.hpp"

#include <algorithm>
#include <cmath>

#include "nflab/error.hpp"

namespace nflab {

void DivisorCensus::merge(const DivisorCensus& other) {
  min_divisor = std::min(min_divisor, other.min_divisor);
  floor = std::max(floor, other.floor);
  absorbed_count += other.absorbed_count;
  absorbed_norm = std::hypot(absorbed_norm, other.absorbed_norm);
  resonant_count += other.resonant_count;
}

K0Solution solve_K0_homological(const GradedOperator& a, const K0SolveOptions& options) {
  const SpectralModel& model = a.spectral();
  if (!model.integer_spectrum() && !options.allow_entrywise)
    throw InvalidInput("solve_K0_homological: spectrum is not integer-shifted and the entrywise path is disabled");

  const RVector& lambda = model.k0_eigs();
  const Index n = a.dim();
  CMatrix y = CMatrix::Zero(n, n), avg = CMatrix::Zero(n, n), absorbed = CMatrix::Zero(n, n);
  DivisorCensus census;
  census.floor = options.divisor_floor;
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < n; ++r) {
      const Complex v = a.matrix()(r, c);
      const double gap = lambda(r) - lambda(c);
      if (std::abs(gap) < kResonanceMatchTol) {
        avg(r, c) = v;
        ++census.resonant_count;
      } else if (std::abs(gap) < options.divisor_floor) {
        avg(r, c) = v;
        absorbed(r, c) = v;
        ++census.absorbed_count;
      } else {
        y(r, c) = v / (kI * gap);
        if (v != Complex(0.0)) census.min_divisor = std::min(census.min_divisor, std::abs(gap));
      }
    }
  }
  census.absorbed_norm = absorbed.norm();
  return K0Solution{GradedOperator(a.model(), std::move(y), a.order()),
                    GradedOperator(a.model(), std::move(avg), a.order()),
                    GradedOperator(a.model(), std::move(absorbed), a.order()), census};
}

GradedOperator lift_to_H0(const GradedOperator& y, LiftOrdering ordering) {
  const SpectralModel& model = y.spectral();
  if (!model.symbol()) throw InvalidInput("lift_to_H0: model has no scalar symbol H0 = f(K0)");
  const SymbolFunction& f = *model.symbol();
  if (!(f.order() > 1.0)) throw InvalidInput("lift_to_H0 needs a symbol of order mu > 1");
  const RVector& lambda = model.k0_eigs();
  RVector g(lambda.size());
  for (Index a = 0; a < lambda.size(); ++a) g(a) = f.lift_factor(lambda(a));
  const auto gd = g.cast<Complex>().asDiagonal();
  CMatrix x = ordering == LiftOrdering::left ? CMatrix(gd * y.matrix())
                                             : CMatrix(0.5 * (gd * y.matrix() + y.matrix() * gd));
  return GradedOperator(y.model(), std::move(x), y.order() - f.order() + 1.0);
}

ResonanceData resonance_data(const SpectralModel& model, const RMatrix& v, const RVector& nu_tilde,
                             const RVector& omega) {
  if (v.rows() != model.modes())
    throw InvalidInput("resonance data: v must have one row per oscillator mode");
  if (v.cols() != nu_tilde.size()) throw InvalidInput("resonance data: v and nu~ disagree on d~");
  ResonanceData out{nu_tilde, model.k_eigs() * v, omega};
  const RVector e = out.energies();
  const double scale = std::max(1.0, model.h0_eigs().cwiseAbs().maxCoeff());
  if ((e - model.h0_eigs()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw ModelMismatch("frequency decomposition does not reproduce the model's H0 spectrum");
  return out;
}

ResonanceData resonance_data_scalar(const SpectralModel& model, double nu_tilde, const RVector& omega) {
  ResonanceData out{RVector::Constant(1, nu_tilde), model.k0_eigs(), omega};
  const double scale = std::max(1.0, model.h0_eigs().cwiseAbs().maxCoeff());
  if ((out.energies() - model.h0_eigs()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw ModelMismatch("model H0 is not nu~ K0");
  return out;
}

double small_divisor(const ResonanceData& freq, const FourierIndex& k, Index a, Index b) {
  double wk = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) wk += freq.omega(static_cast<Index>(i)) * k[i];
  return wk + freq.nu_tilde.dot(freq.ktilde.row(a) - freq.ktilde.row(b));
}

QuasiPeriodicSolution solve_quasiperiodic(const QuasiPeriodicOperator& w, const ResonanceData& freq,
                                          const QuasiPeriodicSolveOptions& options) {
  if (freq.dim() != w.dim()) throw ModelMismatch("resonance data does not match the operator dimension");
  if (freq.omega.size() != w.angles()) throw InvalidInput("drive frequency count does not match the operator");
  if ((freq.omega - w.omega()).cwiseAbs().maxCoeff() > 1e-14 * (1.0 + freq.omega.cwiseAbs().maxCoeff()))
    throw InvalidInput("solve_quasiperiodic: operator and frequency data carry different omega");

  const Index n = w.dim();
  const Index dt = freq.ktilde.cols();
  double scale = 0.0;
  for (const auto& [k, m] : w.coefficients()) scale = std::max(scale, m.cwiseAbs().maxCoeff());
  const double numerator_floor = options.numerator_tol * std::max(scale, 1e-300);

  // Resonant pattern and nu~ . l once per entry.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> resonant(n, n);
  RMatrix lattice_part(n, n);
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r) {
      bool same = true;
      for (Index j = 0; j < dt; ++j) same = same && std::abs(freq.ktilde(r, j) - freq.ktilde(c, j)) < kResonanceMatchTol;
      resonant(r, c) = same;
      lattice_part(r, c) = freq.nu_tilde.dot(freq.ktilde.row(r) - freq.ktilde.row(c));
    }

  QuasiPeriodicSolution out{QuasiPeriodicOperator(w.model(), w.omega(), w.order()),
                            QuasiPeriodicOperator(w.model(), w.omega(), w.order()),
                            QuasiPeriodicOperator(w.model(), w.omega(), w.order()), DivisorCensus{}};
  out.census.floor = options.divisor_floor;
  double absorbed_sq = 0.0;
  for (const auto& [k, coeff] : w.coefficients()) {
    double wk = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) wk += freq.omega(static_cast<Index>(i)) * k[i];
    CMatrix x = CMatrix::Zero(n, n), avg = CMatrix::Zero(n, n), absorbed = CMatrix::Zero(n, n);
    bool any_x = false, any_avg = false, any_absorbed = false;
    for (Index c = 0; c < n; ++c) {
      for (Index r = 0; r < n; ++r) {
        const Complex v = coeff(r, c);
        if (resonant(r, c)) {
          avg(r, c) = v;
          any_avg = true;
          ++out.census.resonant_count;
          continue;
        }
        const double delta = wk + lattice_part(r, c);
        const bool significant = std::abs(v) > numerator_floor;
        const double zero_scale = 1.0 + std::abs(wk) + std::abs(lattice_part(r, c));
        if (std::abs(delta) <= options.zero_tol * zero_scale) {
          if (significant) {
            std::string where = "k=(";
            for (std::size_t i = 0; i < k.size(); ++i) where += (i ? "," : "") + std::to_string(k[i]);
            where += "), entry (" + std::to_string(r) + "," + std::to_string(c) + ")";
            throw ResonanceViolation("exact zero divisor with nonzero numerator at " + where);
          }
          avg(r, c) = v;
          absorbed(r, c) = v;
          any_avg = any_absorbed = true;
          continue;
        }
        if (std::abs(delta) < options.divisor_floor) {
          avg(r, c) = v;
          absorbed(r, c) = v;
          any_avg = any_absorbed = true;
          ++out.census.absorbed_count;
          continue;
        }
        if (significant) out.census.min_divisor = std::min(out.census.min_divisor, std::abs(delta));
        x(r, c) = -kI * v / delta;
        any_x = true;
      }
    }
    if (any_x) out.x.add(k, x);
    if (any_avg) out.average.add(k, avg);
    if (any_absorbed) {
      absorbed_sq += absorbed.squaredNorm();
      out.absorbed.add(k, absorbed);
    }
  }
  out.census.absorbed_norm = std::sqrt(absorbed_sq);
  return out;
}

double homological_residual(const QuasiPeriodicSolution& solution, const QuasiPeriodicOperator& w,
                            const ResonanceData& freq) {
  const Index n = w.dim();
  double worst = 0.0;
  std::vector<FourierIndex> modes;
  for (const auto& [k, m] : w.coefficients()) modes.push_back(k);
  for (const auto& [k, m] : solution.x.coefficients()) modes.push_back(k);
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
  for (const auto& k : modes) {
    const CMatrix wk = w.coefficient(k);
    const CMatrix avg = solution.average.coefficient(k);
    const CMatrix absorbed = solution.absorbed.coefficient(k);
    const CMatrix x = solution.x.coefficient(k);
    for (Index c = 0; c < n; ++c)
      for (Index r = 0; r < n; ++r) {
        if (absorbed(r, c) != Complex(0.0)) continue;
        const double delta = small_divisor(freq, k, r, c);
        const Complex defect = kI * delta * x(r, c) - (wk(r, c) - avg(r, c));
        worst = std::max(worst, std::abs(defect));
      }
  }
  return worst;
}

CMatrix i_commutator_h0(const SpectralModel& model, const CMatrix& x) {
  const RVector& e = model.h0_eigs();
  CMatrix out(x.rows(), x.cols());
  for (Index c = 0; c < x.cols(); ++c)
    for (Index r = 0; r < x.rows(); ++r) out(r, c) = kI * (e(r) - e(c)) * x(r, c);
  return out;
}

std::vector<WeightedResidual> homological_residual(const GradedOperator& x, const GradedOperator& a,
                                                   const GradedOperator& average,
                                                   const std::vector<double>& s_grid) {
  require_same_model(x, a);
  require_same_model(x, average);
  const CMatrix defect = i_commutator_h0(x.spectral(), x.matrix()) - (a.matrix() - average.matrix());
  std::vector<WeightedResidual> out;
  const double m = a.order() - 1.0;
  for (double s : s_grid) out.push_back({m, s, weighted_norm(x.spectral(), defect, m, s)});
  return out;
}

}  // namespace nflab
