#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nflab/config.hpp"

namespace nflab {

inline constexpr const char* kLibraryVersion = "0.1.0";

struct RunOptions {
  std::optional<std::string> out_dir;  ///< overrides output.dir
  bool dump_operators = false;
  bool propagate = true;               ///< false stops after the normal-form stages
  bool write_files = true;
};

struct RunOutcome {
  json manifest;
  int exit_code = 0;
  std::string manifest_path;
};

/// model -> arithmetic -> normal_form -> maro -> propagate -> fits -> checks.
/// Never throws for stage failures: they land in the manifest with the stage name.
RunOutcome run_config(const json& config, const RunOptions& options = {});
RunOutcome run_config_file(const std::string& path, const RunOptions& options = {});

/// Side-by-side report of two manifests of the same model and drive.
/// Throws InvalidInput when model or drive hashes differ.
json compare_manifests(const json& a, const json& b);
/// gnuplot blocks: r vs epsilon per run and frame, then N' vs predicted exponent.
void write_compare_series(const json& report, const std::string& path);

json decomposition_json(const FrequencyDecomposition& dec);
json diophantine_json(const DiophantineResult& result);
json maro_json(const MaroResult& result);
json fit_json(const GrowthFit& fit);

void write_json_atomic(const json& value, const std::string& path);

/// Binary dump: "NFLABOP1", int32 angles, int64 dim, int64 count, then per
/// coefficient int32 k[angles] and dim*dim complex128 row-major.
void dump_operator(const QuasiPeriodicOperator& op, const std::string& path);

struct SelftestLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Fast property suite over every module.
std::vector<SelftestLine> selftest(std::uint64_t seed = 1);

}  // namespace nflab
