#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nflab/arithmetic.hpp"
#include "nflab/error.hpp"
#include "nflab/harness.hpp"
#include "nflab/homological.hpp"
#include "nflab/ladder.hpp"
#include "nflab/operator_algebra.hpp"
#include "nflab/spectral_model.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace nflab;

namespace {

// JSON crosses the boundary as text; the Python side decodes it with the json module.
std::string run_text(const std::string& config, std::optional<std::string> out_dir, bool propagate,
                     bool write_files, int& exit_code) {
  RunOptions o;
  o.out_dir = std::move(out_dir);
  o.propagate = propagate;
  o.write_files = write_files;
  RunOutcome r;
  {
    py::gil_scoped_release nogil;
    r = run_config(json::parse(config), o);
  }
  exit_code = r.exit_code;
  return r.manifest.dump();
}

}  // namespace

PYBIND11_MODULE(_nflab, m) {
  m.attr("__version__") = kLibraryVersion;

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
  py::register_exception<NumericalFailure>(m, "NumericalFailure", base.ptr());
  py::register_exception<ModelMismatch>(m, "ModelMismatch", base.ptr());
  py::register_exception<ResonanceViolation>(m, "ResonanceViolation", base.ptr());

  py::class_<SpectralModel, std::shared_ptr<SpectralModel>>(m, "SpectralModel")
      .def_property_readonly("kind", [](const SpectralModel& s) { return to_string(s.kind()); })
      .def_property_readonly("buffer_dim", &SpectralModel::buffer_dim)
      .def_property_readonly("report_dim", &SpectralModel::report_dim)
      .def_property_readonly("modes", &SpectralModel::modes)
      .def_property_readonly("k0_eigs", &SpectralModel::k0_eigs)
      .def_property_readonly("h0_eigs", &SpectralModel::h0_eigs)
      .def_property_readonly("k_eigs", &SpectralModel::k_eigs)
      .def_property_readonly("mu", &SpectralModel::mu)
      .def_property_readonly("integer_spectrum", &SpectralModel::integer_spectrum)
      .def("__repr__", &SpectralModel::describe);

  // The library hands out shared_ptr<const>; pybind11 holders need non-const.
  auto hold = [](ModelHandle h) { return std::const_pointer_cast<SpectralModel>(std::move(h)); };
  auto unhold = [](const std::shared_ptr<SpectralModel>& h) { return ModelHandle(h); };

  m.def(
      "harmonic",
      [hold](std::vector<double> nu, std::vector<int> cutoffs, double buffer_fraction) {
        ModelOptions o;
        o.buffer_fraction = buffer_fraction;
        return hold(build_harmonic_model(nu, cutoffs, o));
      },
      "nu"_a, "cutoffs"_a, "buffer_fraction"_a = 0.5);
  m.def(
      "anharmonic",
      [hold](int k, int l, double a, int cutoff) { return hold(build_anharmonic_model(k, l, a, cutoff)); },
      "k"_a, "l"_a, "a"_a, "cutoff"_a);
  m.def(
      "zoll",
      [hold](int d, int cutoff, bool full) {
        return hold(build_zoll_model(d, cutoff, full ? ZollMultiplicity::full : ZollMultiplicity::collapsed));
      },
      "d"_a, "cutoff"_a, "full_multiplicity"_a = false);

  m.def(
      "position",
      [](const std::shared_ptr<SpectralModel>& model, int mode) { return position_operator(*model, mode); },
      "model"_a, "mode"_a = 0);
  m.def(
      "average",
      [unhold](const std::shared_ptr<SpectralModel>& model, const CMatrix& a) {
        return average(GradedOperator(unhold(model), a, 0.0)).matrix();
      },
      "model"_a, "a"_a);
  m.def(
      "solve_k0",
      [unhold](const std::shared_ptr<SpectralModel>& model, const CMatrix& a, double divisor_floor) {
        K0SolveOptions o;
        o.divisor_floor = divisor_floor;
        K0Solution s = solve_K0_homological(GradedOperator(unhold(model), a, 0.0), o);
        return py::make_tuple(s.y.matrix(), s.average.matrix(), s.census.absorbed_count);
      },
      "model"_a, "a"_a, "divisor_floor"_a = K0SolveOptions{}.divisor_floor,
      "Returns (Y, <A>, absorbed count) with i[K0, Y] = A - <A>.");

  m.def(
      "_decompose",
      [](const std::string& nu) { return decomposition_json(decompose_frequency(parse_exact_vector(nu))).dump(); },
      "nu"_a);
  m.def(
      "_diophantine",
      [](const std::string& omega, const std::string& nu_tilde, double kappa, int k_max) {
        return diophantine_json(diophantine_scan(parse_exact_vector(omega), parse_exact_vector(nu_tilde), kappa, k_max))
            .dump();
      },
      "omega"_a, "nu_tilde"_a, "kappa"_a, "k_max"_a);
  m.def(
      "_run",
      [](const std::string& config, std::optional<std::string> out_dir, bool propagate, bool write_files) {
        int code = 0;
        std::string text = run_text(config, std::move(out_dir), propagate, write_files, code);
        return py::make_tuple(text, code);
      },
      "config"_a, "out_dir"_a = py::none(), "propagate"_a = true, "write_files"_a = true);
  m.def(
      "_compare",
      [](const std::string& a, const std::string& b) { return compare_manifests(json::parse(a), json::parse(b)).dump(); },
      "a"_a, "b"_a);
  m.def(
      "selftest",
      [](std::uint64_t seed) {
        std::vector<std::tuple<std::string, bool, std::string>> out;
        for (const auto& line : nflab::selftest(seed)) out.emplace_back(line.name, line.pass, line.detail);
        return out;
      },
      "seed"_a = 1);
}
