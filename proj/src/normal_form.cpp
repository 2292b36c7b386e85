#include "nflab/normal_form.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "nflab/error.hpp"
#include "nflab/parallel.hpp"

namespace nflab {

CMatrix Hamiltonian::evaluate(std::span<const double> theta) const {
  CMatrix h = perturbation.evaluate(theta);
  h.diagonal() += spectral().h0_eigs().cast<Complex>();
  return h;
}

void gauss_legendre_unit(int order, std::vector<double>& nodes, std::vector<double>& weights) {
  if (order < 1) throw InvalidInput("quadrature order must be at least 1");
  // Golub-Welsch on the Legendre Jacobi matrix.
  RMatrix jacobi = RMatrix::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    jacobi(i, i - 1) = jacobi(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(jacobi);
  nodes.resize(order);
  weights.resize(order);
  for (int i = 0; i < order; ++i) {
    nodes[i] = 0.5 * (eig.eigenvalues()(i) + 1.0);
    const double v0 = eig.eigenvectors()(0, i);
    weights[i] = v0 * v0;  // 2 v0^2 on [-1, 1], halved for [0, 1]
  }
}

namespace {

std::vector<FourierIndex> modes_within(int angles, int cap) {
  std::vector<FourierIndex> out;
  FourierIndex k(angles, -cap);
  for (;;) {
    if (fourier_norm(k) <= cap) out.push_back(k);
    int j = angles - 1;
    while (j >= 0 && ++k[j] > cap) k[j--] = -cap;
    if (j < 0) break;
  }
  return out;
}

double mode_frequency(const RVector& omega, const FourierIndex& k) {
  double wk = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) wk += omega(static_cast<Index>(i)) * k[i];
  return wk;
}

CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

double k0_commutator_defect(const QuasiPeriodicOperator& z, int samples) {
  double worst = 0.0;
  for (const auto& theta : theta_grid(z.angles(), samples)) {
    const CMatrix c = commutator_with_k0(z.spectral(), z.evaluate(theta));
    if (c.size()) worst = std::max(worst, c.cwiseAbs().maxCoeff());
  }
  return worst;
}

double sampled_symmetry_defect(const QuasiPeriodicOperator& x, int samples) {
  double worst = 0.0;
  for (const auto& theta : theta_grid(x.angles(), samples)) {
    const CMatrix m = x.evaluate(theta);
    if (m.size()) worst = std::max(worst, (m - m.adjoint()).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TransformResult transform_hamiltonian(const Hamiltonian& h, const QuasiPeriodicOperator& x,
                                      const TransformOptions& options) {
  const QuasiPeriodicOperator& p = h.perturbation;
  if (x.model() != p.model()) throw ModelMismatch("generator and Hamiltonian live on different models");
  if (x.angles() != p.angles() || (x.omega() - p.omega()).cwiseAbs().maxCoeff() > 0.0)
    throw InvalidInput("generator and perturbation must share the drive frequency");
  if (x.coefficients().empty()) return TransformResult{h, 0.0, 0.0, false};
  if (options.k_max_total < 0) throw InvalidInput("k_max_total must be non-negative");

  const SpectralModel& model = p.spectral();
  const RVector& e = model.h0_eigs();
  const Index n = model.buffer_dim();

  QuasiPeriodicOperator b(p.model(), p.omega(), x.order());
  for (const auto& [k, xk] : x.coefficients()) {
    const double wk = mode_frequency(p.omega(), k);
    CMatrix bk(n, n);
    for (Index c = 0; c < n; ++c)
      for (Index r = 0; r < n; ++r) bk(r, c) = -kI * (wk + e(r) - e(c)) * xk(r, c);
    b.add(k, bk);
  }

  const int cap = options.k_max_total;
  const int points = options.grid_points > 0 ? options.grid_points : 4 * cap + 4;
  if (points <= 2 * cap) throw InvalidInput("collocation grid too coarse for the Fourier cap");
  const auto grid = theta_grid(p.angles(), points);

  std::vector<double> nodes, weights;
  if (options.mode == TransformMode::quadrature) gauss_legendre_unit(options.quadrature_order, nodes, weights);

  std::vector<CMatrix> samples(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const CMatrix xs = hermitian_part(x.evaluate(grid[i]));
    const CMatrix ps = p.evaluate(grid[i]);
    const CMatrix bs = b.evaluate(grid[i]);
    CMatrix out;
    if (options.mode == TransformMode::quadrature) {
      const CMatrix u = unitary_exp(xs, 1.0);
      out = u * ps * u.adjoint();
      for (std::size_t q = 0; q < nodes.size(); ++q) {
        const CMatrix us = unitary_exp(xs, nodes[q]);
        out += weights[q] * (us * bs * us.adjoint());
      }
    } else {
      // sum_l ad^l(P)/l! + ad^l(B)/(l+1)!, ad(A) = i[X, A]
      CMatrix adp = ps, adb = bs;
      out = ps + bs;
      double fact = 1.0;
      for (int l = 1; l <= options.series_depth; ++l) {
        adp = kI * (xs * adp - adp * xs);
        adb = kI * (xs * adb - adb * xs);
        fact *= l;
        out += adp / fact + adb / (fact * (l + 1));
      }
    }
    samples[i] = hermitian_part(out);
  });

  const auto modes = modes_within(p.angles(), cap);
  std::vector<CMatrix> coeffs(modes.size(), CMatrix::Zero(n, n));
  const double inv = 1.0 / static_cast<double>(grid.size());
  parallel_for(modes.size(), [&](std::size_t m) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double phase = 0.0;
      for (std::size_t j = 0; j < modes[m].size(); ++j) phase += modes[m][j] * grid[i][j];
      coeffs[m] += (std::exp(-kI * phase) * inv) * samples[i];
    }
  });

  // Grid Parseval: the resolvable tail is what the kept modes fail to reproduce.
  const Index rd = model.report_dim();
  std::vector<double> residual(grid.size(), 0.0), report_residual(grid.size(), 0.0);
  parallel_for(grid.size(), [&](std::size_t i) {
    CMatrix r = samples[i];
    for (std::size_t m = 0; m < modes.size(); ++m) {
      double phase = 0.0;
      for (std::size_t j = 0; j < modes[m].size(); ++j) phase += modes[m][j] * grid[i][j];
      r -= std::exp(kI * phase) * coeffs[m];
    }
    residual[i] = r.squaredNorm();
    report_residual[i] = r.topLeftCorner(rd, rd).squaredNorm();
  });
  double tail_sq = 0.0, report_sq = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    tail_sq += residual[i];
    report_sq += report_residual[i];
  }
  const double tail = std::sqrt(tail_sq * inv);
  const double report_tail = std::sqrt(report_sq * inv);

  QuasiPeriodicOperator out(p.model(), p.omega(), p.order());
  for (std::size_t m = 0; m < modes.size(); ++m) {
    // Enforce W_{-k} = W_k^* exactly.
    const FourierIndex partner = negate(modes[m]);
    const auto it = std::find(modes.begin(), modes.end(), partner);
    const CMatrix sym = 0.5 * (coeffs[m] + coeffs[static_cast<std::size_t>(it - modes.begin())].adjoint());
    if (sym.cwiseAbs().maxCoeff() > options.prune_tol) out.add(modes[m], sym);
  }
  return TransformResult{Hamiltonian{std::move(out)}, tail, report_tail, report_tail > options.tail_warning};
}

std::string to_string(Regime regime) { return regime == Regime::superlinear ? "superlinear" : "order_one"; }

Regime regime_from_string(const std::string& name) {
  if (name == "superlinear") return Regime::superlinear;
  if (name == "order_one") return Regime::order_one;
  throw InvalidInput("unknown normal-form regime '" + name + "'");
}

double step_gain(Regime regime, double mu, double rho) {
  if (regime == Regime::order_one) {
    if (!(rho < 1.0)) throw InvalidInput("order-one regime requires rho < 1");
    return 1.0 - rho;
  }
  if (!(mu > 1.0) || !(rho < mu)) throw InvalidInput("superlinear regime requires mu > 1 and rho < mu");
  return std::min({1.0, mu - 1.0, mu - rho});
}

StepOutput normal_form_step(const QuasiPeriodicOperator& z, const QuasiPeriodicOperator& v, double v_order,
                            const ResonanceData* freq, const NormalFormOptions& options, int step) {
  const SpectralModel& model = v.spectral();
  if (z.model() != v.model()) throw ModelMismatch("resonant part and remainder live on different models");
  StepRecord rec;
  rec.step = step;

  QuasiPeriodicOperator x(v.model(), v.omega(), v_order);
  QuasiPeriodicOperator avg(v.model(), v.omega(), v_order);

  if (options.regime == Regime::order_one) {
    if (!freq) throw InvalidInput("order-one regime needs frequency data");
    if (!(options.rho < 1.0)) throw InvalidInput("order-one regime requires rho < 1");
    rec.delta = step_gain(Regime::order_one, model.mu(), options.rho);
    QuasiPeriodicSolveOptions qo;
    qo.divisor_floor = options.divisor_floor;
    const QuasiPeriodicSolution sol = solve_quasiperiodic(v, *freq, qo);
    rec.census = sol.census;
    rec.homological_residual = homological_residual(sol, v, *freq);
    x = sol.x;
    avg = sol.average;
    rec.x_order = v_order;
  } else {
    const double mu = model.mu();
    if (!(mu > 1.0)) throw InvalidInput("superlinear regime requires mu > 1");
    if (!(options.rho < mu)) throw InvalidInput("superlinear regime requires rho < mu");
    rec.delta = step_gain(Regime::superlinear, mu, options.rho);
    K0SolveOptions ko;
    ko.divisor_floor = options.divisor_floor;
    rec.census.floor = options.divisor_floor;
    for (const auto& [k, coeff] : v.coefficients()) {
      const GradedOperator a(v.model(), coeff, v_order);
      const K0Solution sol = solve_K0_homological(a, ko);
      rec.census.merge(sol.census);
      const CMatrix defect =
          -kI * commutator_with_k0(model, sol.y.matrix()) - (a.matrix() - sol.average.matrix());
      if (defect.size()) rec.homological_residual = std::max(rec.homological_residual, defect.cwiseAbs().maxCoeff());
      const GradedOperator lifted = lift_to_H0(sol.y, options.lift);
      if (lifted.matrix().cwiseAbs().maxCoeff() > 0.0) x.add(k, lifted.matrix());
      if (sol.average.matrix().cwiseAbs().maxCoeff() > 0.0) avg.add(k, sol.average.matrix());
    }
    rec.x_order = v_order - (mu - 1.0);
  }
  x.set_order(rec.x_order);

  QuasiPeriodicOperator z_next = z;
  z_next += avg;
  z_next.set_order(std::max(z.coefficients().empty() ? v_order : z.order(), v_order));

  QuasiPeriodicOperator v_next(v.model(), v.omega(), v_order - rec.delta);
  if (x.coefficients().empty()) {
    v_next += v;
    v_next -= avg;
  } else {
    const TransformResult tr = transform_hamiltonian(Hamiltonian{z + v}, x, options.transform);
    rec.tail_norm = tr.tail_norm;
    rec.report_tail_norm = tr.report_tail_norm;
    rec.tail_warning = tr.tail_warning;
    v_next += tr.hamiltonian.perturbation;
    v_next -= z_next;
  }
  v_next.prune(options.transform.prune_tol);
  v_next.set_order(v_order - rec.delta);
  rec.v_order = v_next.order();
  rec.z_k0_defect = k0_commutator_defect(z_next, 8);
  rec.x_symmetry_defect = sampled_symmetry_defect(x, 8);
  for (double s : options.s_grid) rec.v_seminorms.push_back(v_next.sup_weighted_norm(rec.v_order, s));
  return StepOutput{std::move(x), std::move(z_next), std::move(v_next), std::move(rec)};
}

Hamiltonian NormalFormResult::transformed() const { return Hamiltonian{z + v}; }

namespace {

NormalFormResult start(const QuasiPeriodicOperator& v0, const NormalFormOptions& options) {
  NormalFormResult res{v0.model(),
                       v0.omega(),
                       options.regime,
                       step_gain(options.regime, v0.spectral().mu(), options.rho),
                       {},
                       {v0},
                       QuasiPeriodicOperator(v0.model(), v0.omega(), options.rho),
                       v0,
                       {},
                       false,
                       "complete"};
  res.v.set_order(options.rho);
  res.remainders.front().set_order(options.rho);
  return res;
}

void advance(NormalFormResult& res, const ResonanceData* freq, const NormalFormOptions& options) {
  const int step = static_cast<int>(res.steps.size()) + 1;
  StepOutput out = normal_form_step(res.z, res.v, res.v.order(), freq, options, step);
  res.generators.push_back(std::move(out.x));
  res.z = std::move(out.z);
  res.v = std::move(out.v);
  res.remainders.push_back(res.v);
  res.steps.push_back(std::move(out.record));
}

}  // namespace

NormalFormResult iterate(const QuasiPeriodicOperator& v0, int steps, const ResonanceData* freq,
                         const NormalFormOptions& options) {
  if (steps < 0) throw InvalidInput("normal-form step count must be non-negative");
  NormalFormResult res = start(v0, options);
  for (int j = 0; j < steps; ++j) advance(res, freq, options);
  return res;
}

std::vector<NormalFormResult> iterate_family(const std::vector<FamilyMember>& family, int steps,
                                             const NormalFormOptions& options, const FamilyOptions& scan) {
  if (family.empty()) throw InvalidInput("iterate_family needs at least one member");
  std::vector<NormalFormResult> results;
  for (const auto& m : family) results.push_back(start(m.v0, options));

  auto scan_remainders = [&](std::size_t index) {
    std::vector<QuasiPeriodicOperator> ops;
    for (const auto& r : results) ops.push_back(r.remainders[index]);
    return order_scan(std::span<const QuasiPeriodicOperator>(ops), scan.scan, scan.samples_per_angle);
  };

  OrderScanResult previous = scan_remainders(0);
  for (int j = 0; j < steps; ++j) {
    for (std::size_t i = 0; i < family.size(); ++i)
      advance(results[i], family[i].freq ? &*family[i].freq : nullptr, options);

    const OrderScanResult v_scan = scan_remainders(results.front().remainders.size() - 1);
    std::vector<QuasiPeriodicOperator> xs;
    for (const auto& r : results) xs.push_back(r.generators.back());
    const OrderScanResult x_scan =
        order_scan(std::span<const QuasiPeriodicOperator>(xs), scan.scan, scan.samples_per_angle);

    bool contractive;
    if (!v_scan.order)
      contractive = false;
    else if (!previous.order)
      contractive = true;
    else if (v_scan.at_grid_floor && previous.at_grid_floor)
      contractive = true;  // already below the resolvable range
    else
      contractive = *v_scan.order < *previous.order;

    for (auto& r : results) {
      StepRecord& rec = r.steps.back();
      rec.v_order_estimate = v_scan.order;
      rec.v_at_grid_floor = v_scan.at_grid_floor;
      rec.x_order_estimate = x_scan.order;
      rec.contractive = contractive;
    }
    if (!contractive) {
      for (auto& r : results) {
        r.halted = true;
        r.status = "halted: step " + std::to_string(j + 1) + " is non-contractive";
      }
      break;
    }
    previous = v_scan;
  }
  return results;
}

}  // namespace nflab
