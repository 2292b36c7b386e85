#include "nflab/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "nflab/error.hpp"

namespace nflab {

std::string to_string(Integrator integrator) { return integrator == Integrator::magnus4 ? "magnus4" : "magnus2"; }

Integrator integrator_from_string(const std::string& name) {
  if (name == "magnus2") return Integrator::magnus2;
  if (name == "magnus4") return Integrator::magnus4;
  throw InvalidInput("unknown integrator '" + name + "'");
}

std::vector<double> Trajectory::series(std::size_t r_index) const {
  std::vector<double> out;
  out.reserve(norms.size());
  for (const auto& row : norms) out.push_back(row.at(r_index));
  return out;
}

std::vector<double> uniform_grid(double t0, double t1, double dt) {
  if (!(dt > 0.0) || !(t1 > t0)) throw InvalidInput("uniform_grid needs t1 > t0 and dt > 0");
  const auto n = static_cast<std::size_t>(std::llround((t1 - t0) / dt));
  std::vector<double> out;
  for (std::size_t i = 0; i <= n; ++i) out.push_back(t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n));
  return out;
}

double sobolev_norm(const SpectralModel& model, const CVector& psi, double r) {
  if (r == 0.0) return psi.norm();
  return (model.k0_eigs().array().pow(r).cast<Complex>() * psi.array()).matrix().norm();
}

namespace {

std::vector<Index> top_levels(const SpectralModel& model, double fraction) {
  const Index n = model.buffer_dim();
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Index a, Index b) { return model.k0_eigs()(a) > model.k0_eigs()(b); });
  const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  idx.resize(std::min(idx.size(), std::max<std::size_t>(count, 1)));
  return idx;
}

/// e^{-i G} psi for Hermitian G.
CVector apply_exp(const CMatrix& g, const CVector& psi) {
  const CMatrix sym = 0.5 * (g + g.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalFailure("propagator: Hermitian eigensolver failed");
  const CVector coeff = eig.eigenvectors().adjoint() * psi;
  const CVector phased = (eig.eigenvalues().array().cast<Complex>() * Complex(0.0, -1.0)).exp() * coeff.array();
  return eig.eigenvectors() * phased;
}

}  // namespace

double leak_mass(const SpectralModel& model, const CVector& psi, double fraction) {
  double mass = 0.0;
  for (Index a : top_levels(model, fraction)) mass += std::norm(psi(a));
  return mass;
}

Trajectory propagate(const Hamiltonian& h, const CVector& psi0, const std::vector<double>& t_grid,
                     const PropagationOptions& options) {
  const SpectralModel& model = h.spectral();
  if (psi0.size() != model.buffer_dim()) throw ModelMismatch("initial state does not match the model buffer");
  if (std::abs(psi0.norm() - 1.0) > 1e-8) throw InvalidInput("initial state must be normalized");
  if (t_grid.size() < 1) throw InvalidInput("time grid is empty");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw InvalidInput("time grid must be strictly increasing");
  if (!(options.tol > 0.0)) throw InvalidInput("integrator tolerance must be positive");

  const RVector& omega = h.perturbation.omega();
  std::vector<double> theta(static_cast<std::size_t>(omega.size()));
  auto h_at = [&](double t) {
    for (Index i = 0; i < omega.size(); ++i) theta[static_cast<std::size_t>(i)] = omega(i) * t;
    return h.evaluate(theta);
  };
  const double c4 = std::sqrt(3.0) / 6.0;
  auto step = [&](const CVector& psi, double t, double dt) -> CVector {
    if (options.integrator == Integrator::magnus2) return apply_exp(dt * h_at(t + 0.5 * dt), psi);
    const CMatrix h1 = h_at(t + (0.5 - c4) * dt), h2 = h_at(t + (0.5 + c4) * dt);
    const CMatrix g = (0.5 * dt) * (h1 + h2) - kI * (std::sqrt(3.0) / 12.0 * dt * dt) * (h2 * h1 - h1 * h2);
    return apply_exp(g, psi);
  };
  const double order = options.integrator == Integrator::magnus2 ? 2.0 : 4.0;
  const std::vector<Index> top = top_levels(model, options.leak_fraction);
  const double norm0 = psi0.norm();

  Trajectory traj;
  traj.r_list = options.r_list;
  auto record = [&](double t, const CVector& psi) {
    traj.t.push_back(t);
    std::vector<double> row;
    for (double r : options.r_list) row.push_back(sobolev_norm(model, psi, r));
    traj.norms.push_back(std::move(row));
    traj.unitarity_defect.push_back(std::abs(psi.norm() - norm0));
    double leak = 0.0;
    for (Index a : top) leak += std::norm(psi(a));
    traj.leak.push_back(leak);
    if (options.store_states) traj.states.push_back(psi);
    if (!traj.contaminated && leak > options.leak_threshold) {
      traj.contaminated = true;
      traj.trip_time = t;
      traj.status = "truncation-contaminated: leak " + std::to_string(leak) + " at t=" + std::to_string(t);
    }
    if (traj.unitarity_defect.back() > options.unitarity_tol && traj.status == "ok")
      traj.status = "unitarity defect above tolerance at t=" + std::to_string(t);
  };

  CVector psi = psi0;
  double t = t_grid.front();
  double h_step = std::min(options.initial_step, options.max_step);
  record(t, psi);
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (traj.contaminated && options.stop_on_leak) break;
    const double target = t_grid[i];
    while (t < target) {
      const double remaining = target - t;
      const bool clipped = remaining <= h_step;
      const double dt = clipped ? remaining : h_step;
      const CVector coarse = step(psi, t, dt);
      const CVector fine = step(step(psi, t, 0.5 * dt), t + 0.5 * dt, 0.5 * dt);
      const double err = (coarse - fine).norm();
      const double allowed = options.tol * dt;
      const double factor =
          err > 0.0 ? std::clamp(0.9 * std::pow(allowed / err, 1.0 / order), 0.2, 2.0) : 2.0;
      if (err <= allowed || dt <= options.min_step) {
        psi = fine;
        t = clipped ? target : t + dt;
        ++traj.accepted_steps;
        if (!clipped) h_step = std::min(options.max_step, dt * factor);
        else if (factor < 1.0) h_step = std::max(options.min_step, dt * factor);
      } else {
        h_step = std::max(options.min_step, dt * factor);
        ++traj.rejected_steps;
      }
    }
    record(t, psi);
  }
  return traj;
}

CVector conjugate_state(const CVector& psi, const std::vector<QuasiPeriodicOperator>& generators,
                        std::span<const double> theta, ChainDirection direction) {
  CVector out = psi;
  const auto n = generators.size();
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t j = direction == ChainDirection::forward ? n - 1 - step : step;
    const CMatrix x = generators[j].evaluate(theta);
    const CMatrix xs = 0.5 * (x + x.adjoint());
    out = unitary_exp(xs, direction == ChainDirection::forward ? -1.0 : 1.0) * out;
  }
  return out;
}

Trajectory propagate_transformed(const NormalFormResult& nf, const CVector& psi0, const std::vector<double>& t_grid,
                                 const PropagationOptions& options) {
  const SpectralModel& model = *nf.model;
  auto theta_at = [&](double t) {
    std::vector<double> th(static_cast<std::size_t>(nf.omega.size()));
    for (Index i = 0; i < nf.omega.size(); ++i) th[static_cast<std::size_t>(i)] = nf.omega(i) * t;
    return th;
  };
  const CVector phi0 = conjugate_state(psi0, nf.generators, theta_at(t_grid.front()), ChainDirection::inverse);
  PropagationOptions inner = options;
  inner.store_states = true;
  Trajectory phi = propagate(nf.transformed(), phi0 / phi0.norm() * psi0.norm(), t_grid, inner);

  Trajectory out;
  out.r_list = options.r_list;
  out.accepted_steps = phi.accepted_steps;
  out.rejected_steps = phi.rejected_steps;
  out.contaminated = phi.contaminated;
  out.trip_time = phi.trip_time;
  out.status = phi.status;
  const std::vector<Index> top = top_levels(model, options.leak_fraction);
  for (std::size_t i = 0; i < phi.t.size(); ++i) {
    const CVector psi = conjugate_state(phi.states[i], nf.generators, theta_at(phi.t[i]), ChainDirection::forward);
    out.t.push_back(phi.t[i]);
    std::vector<double> row;
    for (double r : options.r_list) row.push_back(sobolev_norm(model, psi, r));
    out.norms.push_back(std::move(row));
    out.unitarity_defect.push_back(std::abs(psi.norm() - psi0.norm()));
    double leak = 0.0;
    for (Index a : top) leak += std::norm(psi(a));
    out.leak.push_back(std::max(leak, phi.leak[i]));
    if (!out.contaminated && leak > options.leak_threshold) {
      out.contaminated = true;
      out.trip_time = phi.t[i];
      out.status = "truncation-contaminated (mapped state): leak " + std::to_string(leak);
    }
    if (options.store_states) out.states.push_back(psi);
  }
  return out;
}

CVector ground_state(const SpectralModel& model) {
  Index best = 0;
  model.k0_eigs().minCoeff(&best);
  CVector psi = CVector::Zero(model.buffer_dim());
  psi(best) = 1.0;
  return psi;
}

MaroResult maro_check(std::span<const Hamiltonian> family, const MaroOptions& options) {
  if (family.empty()) throw InvalidInput("maro_check needs at least one Hamiltonian");
  if (options.n_grid.empty() || options.r_grid.empty()) throw InvalidInput("maro_check needs N' and r grids");
  std::vector<const Hamiltonian*> sorted;
  for (const auto& h : family) sorted.push_back(&h);
  std::stable_sort(sorted.begin(), sorted.end(), [](const Hamiltonian* a, const Hamiltonian* b) {
    return report_lambda_max(a->spectral()) < report_lambda_max(b->spectral());
  });

  MaroResult res;
  res.n_grid = options.n_grid;
  res.r_grid = options.r_grid;
  std::vector<std::vector<CMatrix>> commutators(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    res.lambda_max.push_back(report_lambda_max(sorted[i]->spectral()));
    const auto& p = sorted[i]->perturbation;
    for (const auto& theta : theta_grid(p.angles(), options.samples_per_angle))
      commutators[i].push_back(commutator_with_k0(sorted[i]->spectral(), p.evaluate(theta)));
  }
  const double tol = resolve_growth_tol(options.n_grid, options.growth_tol);
  for (double np : options.n_grid) {
    std::vector<double> growth_row;
    std::vector<std::vector<double>> value_row;
    bool bounded = true;
    for (double r : options.r_grid) {
      std::vector<double> vals;
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        double worst = 0.0;
        // K0^r C K0^{N'} K0^{-r} is the (m, s) = (-N', r - N') weighted norm.
        for (const auto& c : commutators[i])
          worst = std::max(worst, weighted_norm(sorted[i]->spectral(), c, -np, r - np));
        vals.push_back(worst);
      }
      const double g = growth_exponent(vals, res.lambda_max, options.zero_floor);
      bounded = bounded && g <= tol;
      growth_row.push_back(g);
      value_row.push_back(std::move(vals));
    }
    res.growth.push_back(std::move(growth_row));
    res.values.push_back(std::move(value_row));
    res.bounded.push_back(bounded);
  }
  std::vector<std::size_t> order(options.n_grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return options.n_grid[a] < options.n_grid[b]; });
  for (std::size_t idx : order) {
    if (!res.bounded[idx]) break;
    res.largest_bounded = options.n_grid[idx];
  }
  if (res.largest_bounded && *res.largest_bounded > -1.0)
    for (double r : options.r_grid) res.predicted_exponent.push_back(r / (1.0 + *res.largest_bounded));
  return res;
}

GrowthFit fit_growth(const std::vector<double>& t, const std::vector<double>& values, const GrowthFitOptions& options) {
  if (t.size() != values.size()) throw InvalidInput("fit_growth: time and value series differ in length");
  if (t.empty()) throw InvalidInput("fit_growth: empty series");
  const double t_max = t.back();
  GrowthFit fit;
  double sq = 0.0;
  std::size_t sq_count = 0;
  for (int j = options.j_min;; ++j) {
    const double lo = std::ldexp(1.0, j), hi = std::ldexp(1.0, j + 1);
    if (hi > t_max * (1.0 + 1e-12)) break;
    std::vector<double> lx, ly;
    double env = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] >= lo * (1.0 - 1e-12) && t[i] <= hi * (1.0 + 1e-12)) {
        if (!(values[i] > 0.0)) throw InvalidInput("fit_growth: norms must be positive");
        lx.push_back(std::log(t[i]));
        ly.push_back(std::log(values[i]));
        env = std::max(env, values[i]);
      }
    if (lx.size() < 2) throw InvalidInput("fit_growth: dyadic window starting at " + std::to_string(lo) + " has fewer than two samples");
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double r = ly[i] - (my + slope * (lx[i] - mx));
      sq += r * r;
      ++sq_count;
    }
    fit.window_start.push_back(lo);
    fit.envelope.push_back(env);
    fit.window_slopes.push_back(slope);
  }
  if (static_cast<int>(fit.envelope.size()) < options.min_windows)
    throw InvalidInput("fit_growth: need at least " + std::to_string(options.min_windows) + " dyadic windows, have " +
                       std::to_string(fit.envelope.size()));
  fit.epsilon_hat = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < fit.envelope.size(); ++j) {
    const double s = std::log2(fit.envelope[j] / fit.envelope[j - 1]);
    fit.envelope_slopes.push_back(s);
    fit.epsilon_hat = std::max(fit.epsilon_hat, s);
  }
  for (std::size_t j = 0; j < fit.envelope.size(); ++j)
    fit.constants.push_back(fit.envelope[j] / std::pow(2.0 * fit.window_start[j], fit.epsilon_hat));
  fit.residual = sq_count ? std::sqrt(sq / static_cast<double>(sq_count)) : 0.0;
  return fit;
}

GrowthFit fit_growth(const Trajectory& trajectory, std::size_t r_index, const GrowthFitOptions& options) {
  if (trajectory.contaminated) throw NumericalFailure("fit refused: " + trajectory.status);
  if (r_index >= trajectory.r_list.size()) throw InvalidInput("fit_growth: r index out of range");
  GrowthFit fit = fit_growth(trajectory.t, trajectory.series(r_index), options);
  fit.r = trajectory.r_list[r_index];
  return fit;
}

void write_csv(const Trajectory& trajectory, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << "t";
  for (double r : trajectory.r_list) {
    char buf[64];
    std::snprintf(buf, sizeof buf, ",norm_%g", r);
    out << buf;
  }
  out << ",unitarity_defect,leak\n";
  char buf[64];
  for (std::size_t i = 0; i < trajectory.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", trajectory.t[i]);
    out << buf;
    for (double v : trajectory.norms[i]) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.6e,%.6e\n", trajectory.unitarity_defect[i], trajectory.leak[i]);
    out << buf;
  }
}

}  // namespace nflab
