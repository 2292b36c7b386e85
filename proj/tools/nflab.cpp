#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nflab/error.hpp"
#include "nflab/harness.hpp"
#include "nflab/parallel.hpp"

namespace {

int report_run(const nflab::RunOutcome& out, bool quiet) {
  const auto& m = out.manifest;
  if (!quiet) {
    if (m.contains("verdicts"))
      for (const auto& v : m["verdicts"])
        std::cout << (v["pass"].get<bool>() ? "PASS " : "FAIL ") << v["name"].get<std::string>() << ": "
                  << v["detail"].get<std::string>() << '\n';
    if (!out.manifest_path.empty()) std::cout << "manifest: " << out.manifest_path << '\n';
  }
  if (m.value("status", "") == "failed")
    std::cerr << "error in stage '" << m.value("failure_stage", "?") << "': " << m.value("failure", "") << '\n';
  return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nflab: quasiperiodic normal forms and Sobolev growth experiments"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (overrides NFLAB_THREADS)");

  std::string config_path, out_dir;
  bool dump = false, quiet = false;
  auto* sim = app.add_subcommand("simulate", "run every stage of a config");
  auto* nfc = app.add_subcommand("normalform", "model, arithmetic, normal form and maro stages only");
  for (auto* sub : {sim, nfc}) {
    sub->add_option("--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--threads", threads, "worker threads");
    sub->add_flag("--dump-operators", dump, "write V, Z and X coefficients as binary files");
    sub->add_flag("--quiet", quiet, "print nothing on success");
  }

  std::string omega = "sqrt2", nu_tilde = "1";
  double kappa = 2.0;
  int kmax = 50;
  bool shift = false;
  auto* dio = app.add_subcommand("diophantine", "exhaustive small-divisor scan");
  dio->add_option("--omega", omega, "drive frequencies, e.g. \"sqrt2\" or \"1, phi\"");
  dio->add_option("--nu-tilde", nu_tilde, "reduced internal frequencies");
  dio->add_option("--kappa", kappa, "weight exponent");
  dio->add_option("--kmax", kmax, "l1 cap on (k, l)");
  dio->add_flag("--integer-shift", shift, "scan |omega.k + m| (1 + |k|^kappa) instead");

  std::string nu;
  auto* dec = app.add_subcommand("decompose", "resonance lattice and reduced frequencies");
  dec->add_option("--nu", nu, "frequency vector, e.g. \"1, sqrt2\"")->required();

  std::string manifest_a, manifest_b, report_path, series_path;
  auto* cmp = app.add_subcommand("compare", "side-by-side report of two manifests");
  cmp->add_option("a", manifest_a, "first manifest")->required()->check(CLI::ExistingFile);
  cmp->add_option("b", manifest_b, "second manifest")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", report_path, "write the report JSON here");
  cmp->add_option("--series", series_path, "write gnuplot series here");

  std::uint64_t seed = 1;
  auto* self = app.add_subcommand("selftest", "fast property suite");
  self->add_option("--seed", seed, "random seed");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) nflab::set_thread_count(threads);

  try {
    if (sim->parsed() || nfc->parsed()) {
      nflab::RunOptions opts;
      if (!out_dir.empty()) opts.out_dir = out_dir;
      opts.dump_operators = dump;
      opts.propagate = sim->parsed();
      return report_run(nflab::run_config_file(config_path, opts), quiet);
    }
    if (dio->parsed()) {
      auto om = nflab::parse_exact_vector(omega);
      nflab::DiophantineResult r = shift ? nflab::diophantine_scan_integer_shift(om, kappa, kmax)
                                         : nflab::diophantine_scan(om, nflab::parse_exact_vector(nu_tilde), kappa, kmax);
      std::cout << nflab::diophantine_json(r).dump(2) << '\n';
      return 0;
    }
    if (dec->parsed()) {
      std::cout << nflab::decomposition_json(nflab::decompose_frequency(nflab::parse_exact_vector(nu))).dump(2) << '\n';
      return 0;
    }
    if (cmp->parsed()) {
      nflab::json report = nflab::compare_manifests(nflab::load_json_file(manifest_a), nflab::load_json_file(manifest_b));
      if (!report_path.empty()) nflab::write_json_atomic(report, report_path);
      else std::cout << report.dump(2) << '\n';
      if (!series_path.empty()) nflab::write_compare_series(report, series_path);
      return 0;
    }
    if (self->parsed()) {
      bool all = true;
      for (const auto& line : nflab::selftest(seed)) {
        std::cout << (line.pass ? "PASS " : "FAIL ") << line.name << ": " << line.detail << '\n';
        all = all && line.pass;
      }
      return all ? 0 : 4;
    }
  } catch (const nflab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
