#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nflab/arithmetic.hpp"
#include "nflab/normal_form.hpp"
#include "nflab/propagator.hpp"
#include "nflab/spectral_model.hpp"

namespace nflab {

using json = nlohmann::json;

/// Exact real vector from a config value: number, expression string ("1, sqrt2"),
/// array of numbers/expressions, or {"generators": [...], "coeffs": [[...]]}.
ExactVector parse_exact(const json& value, const std::string& where);

struct ModelSpec {
  ModelKind kind = ModelKind::harmonic;
  std::vector<double> nu;
  std::optional<ExactVector> nu_exact;
  std::vector<int> cutoffs;  ///< harmonic
  int k = 2, l = 1;          ///< anharmonic
  double a = 1.0;
  int cutoff = 0;            ///< anharmonic / zoll
  int d = 1;                 ///< zoll
  ZollMultiplicity multiplicity = ZollMultiplicity::collapsed;
  ModelOptions options;
};

ModelSpec parse_model(const json& block);
/// Builds the model; `cutoff` overrides every per-mode cutoff when given.
ModelHandle build_model(const ModelSpec& spec, std::optional<int> cutoff = std::nullopt);

struct DriveTerm {
  std::vector<int> k;
  Complex coeff{1.0, 0.0};
  std::vector<std::string> word;
  enum class Kind { plain, cosine, sine, dense } kind = Kind::plain;
  CMatrix dense;  ///< dense escape hatch (buffer dimension)
};

struct DriveSpec {
  RVector omega;
  std::optional<ExactVector> omega_exact;
  double order = 0.0;
  std::vector<DriveTerm> terms;
  int support() const;
};

DriveSpec parse_perturbation(const json& block);
/// Assembles V(theta) on a model; rejects non-symmetric results.
QuasiPeriodicOperator build_perturbation(const ModelHandle& model, const DriveSpec& drive);

struct NormalFormSpec {
  int steps = 0;
  NormalFormOptions options;
  std::vector<int> scan_cutoffs;
  OrderScanOptions scan;
  MaroOptions maro;
  bool maro_enabled = true;
};

struct PropagationSpec {
  bool enabled = false;
  double t_start = 0.0, t_end = 10.0, dt = 0.5;
  std::string frame = "raw";  ///< raw | transformed | both
  std::optional<Index> initial_level;
  PropagationOptions options;
  GrowthFitOptions fit;
  bool fit_enabled = true;
};

struct ArithmeticSpec {
  bool enabled = false;
  std::optional<ExactVector> nu;
  std::optional<ExactVector> omega;
  double kappa = 2.0;
  int k_max = 20;
};

struct OutputSpec {
  std::string dir = "out";
  std::string run_id = "run";
  bool dump_operators = false;
};

struct EpsilonCheck {
  double r = 1.0;
  std::string frame = "raw";
  double lo = -1e300, hi = 1e300;
};

struct ChecksSpec {
  std::vector<EpsilonCheck> epsilon;
  std::optional<double> delta;
  std::optional<double> contraction;       ///< required drop of the V order estimate per step
  std::optional<double> maro_gain;         ///< required N' gain of transformed over raw, in grid units
  std::optional<double> frame_difference;  ///< bound on ||psi_raw(T) - mapped psi(T)||
};

struct RunConfig {
  json raw;
  std::uint64_t seed = 0;
  ModelSpec model;
  json model_block;
  DriveSpec drive;
  json drive_block;
  NormalFormSpec normal_form;
  PropagationSpec propagation;
  ArithmeticSpec arithmetic;
  OutputSpec output;
  ChecksSpec checks;
};

/// Validates against the schema (unknown keys rejected) and resolves defaults.
RunConfig parse_config(const json& config);
json load_json_file(const std::string& path);

/// FNV-1a 64 of the canonical JSON dump, as hex.
std::string fnv1a_hex(const std::string& text);

}  // namespace nflab
