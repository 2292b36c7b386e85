#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nflab/normal_form.hpp"

namespace nflab {

enum class Integrator { magnus2, magnus4 };

std::string to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& name);

struct PropagationOptions {
  Integrator integrator = Integrator::magnus2;
  /// Allowed local defect per unit time (step doubling estimate).
  double tol = 1e-8;
  double initial_step = 0.01;
  double max_step = 0.5;
  double min_step = 1e-7;
  std::vector<double> r_list{0.0, 1.0};
  /// Share of the buffer (highest K0 levels) watched for leaking mass.
  double leak_fraction = 0.1;
  double leak_threshold = 1e-6;
  double unitarity_tol = 1e-6;
  bool stop_on_leak = true;
  bool store_states = false;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<double> r_list;
  std::vector<std::vector<double>> norms;  ///< [time][r]
  std::vector<double> unitarity_defect;
  std::vector<double> leak;
  std::vector<CVector> states;  ///< filled when store_states is set
  bool contaminated = false;
  std::optional<double> trip_time;
  std::string status = "ok";
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  std::vector<double> series(std::size_t r_index) const;
};

/// Integrates i psi' = H(omega t) psi from t_grid[0], recording at each grid time.
Trajectory propagate(const Hamiltonian& h, const CVector& psi0, const std::vector<double>& t_grid,
                     const PropagationOptions& options = {});

/// Uniform grid t0, t0 + dt, ..., t1.
std::vector<double> uniform_grid(double t0, double t1, double dt);

/// ||K0^r psi|| over the full buffer.
double sobolev_norm(const SpectralModel& model, const CVector& psi, double r);
/// Mass on the top `fraction` of K0 levels.
double leak_mass(const SpectralModel& model, const CVector& psi, double fraction);

enum class ChainDirection {
  forward,  ///< psi = e^{-i X_1} ... e^{-i X_N} phi
  inverse,  ///< phi = e^{i X_N} ... e^{i X_1} psi
};

CVector conjugate_state(const CVector& psi, const std::vector<QuasiPeriodicOperator>& generators,
                        std::span<const double> theta, ChainDirection direction);

/// Runs H^(N) from the inverse-mapped initial state and maps each stored state back.
/// Norms in the returned trajectory are those of the mapped states.
Trajectory propagate_transformed(const NormalFormResult& nf, const CVector& psi0, const std::vector<double>& t_grid,
                                 const PropagationOptions& options = {});

/// Ground state (lowest K0 level) of a model.
CVector ground_state(const SpectralModel& model);

struct MaroOptions {
  std::vector<double> n_grid{-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
  std::vector<double> r_grid{0.0, 1.0};
  double zero_floor = 1e-9;
  /// Growth exponent tolerance; negative means half the N' grid spacing.
  double growth_tol = -1.0;
  int samples_per_angle = 8;
};

struct MaroResult {
  std::optional<double> largest_bounded;   ///< largest N' with every smaller grid N' also bounded
  std::vector<double> n_grid, r_grid, lambda_max;
  std::vector<std::vector<double>> growth;                ///< [n][r]
  std::vector<std::vector<std::vector<double>>> values;   ///< [n][r][size]
  std::vector<bool> bounded;                              ///< per N'
  /// r / (1 + N') for each r at the largest bounded N' (empty when N' <= -1 or none).
  std::vector<double> predicted_exponent;
};

/// sup_theta ||K0^r [H(theta), K0] K0^{N'} K0^{-r}|| on the report block, across a truncation family.
MaroResult maro_check(std::span<const Hamiltonian> family, const MaroOptions& options = {});

struct GrowthFitOptions {
  int j_min = 3;
  int min_windows = 4;
};

struct GrowthFit {
  double r = 0.0;
  double epsilon_hat = 0.0;
  std::vector<double> window_start;     ///< 2^j
  std::vector<double> envelope;         ///< max over window
  std::vector<double> envelope_slopes;  ///< log2(E_j / E_{j-1}), from the second window on
  std::vector<double> window_slopes;    ///< least-squares slope of log norm vs log t per window
  std::vector<double> constants;        ///< E_j / (2^{j+1})^epsilon_hat
  double residual = 0.0;                ///< rms of the per-window least-squares residuals
};

/// Dyadic-window fit of log ||psi||_r against log t.
GrowthFit fit_growth(const Trajectory& trajectory, std::size_t r_index, const GrowthFitOptions& options = {});
/// Same on a raw (t, value) series.
GrowthFit fit_growth(const std::vector<double>& t, const std::vector<double>& values,
                     const GrowthFitOptions& options = {});

/// CSV with columns t, norm_r..., unitarity_defect, leak.
void write_csv(const Trajectory& trajectory, const std::string& path);

}  // namespace nflab
