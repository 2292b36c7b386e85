#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nflab/error.hpp"
#include "nflab/ladder.hpp"
#include "nflab/propagator.hpp"
#include "oracles.hpp"
#include "random.hpp"

using namespace nflab;

namespace {

ModelHandle oscillator(int cutoff) {
  const double nu[] = {0.5};
  const int cut[] = {cutoff};
  return build_harmonic_model(nu, std::span<const int>(cut, 1));
}

RVector scalar(double v) {
  RVector r(1);
  r << v;
  return r;
}

Hamiltonian driven(ModelHandle m, double omega, double amplitude) {
  QuasiPeriodicOperator v(m, scalar(omega), 0.5);
  CMatrix x = position_operator(*m);
  v.add({1}, 0.5 * amplitude * x);
  v.add({-1}, 0.5 * amplitude * x);
  return Hamiltonian{v};
}

}  // namespace

TEST_SUITE("propagator") {

TEST_CASE("resonant drive follows the coherent-state closed form") {
  ModelHandle m = oscillator(32);
  const double amp = 0.2;
  PropagationOptions o;
  o.integrator = Integrator::magnus4;
  o.r_list = {0.5, 1.0};
  o.tol = 1e-10;
  Trajectory tr = propagate(driven(m, 1.0, amp), ground_state(*m), uniform_grid(0.0, 20.0, 4.0), o);
  CHECK_FALSE(tr.contaminated);
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    Complex alpha = oracle::resonant_alpha(tr.t[i], amp);
    CHECK(tr.norms[i][0] == doctest::Approx(oracle::coherent_sobolev_norm(alpha, 0.5)).epsilon(1e-6));
    CHECK(tr.norms[i][1] == doctest::Approx(oracle::coherent_sobolev_norm(alpha, 1.0)).epsilon(1e-6));
  }
}

TEST_CASE("magnus2 and magnus4 agree") {
  ModelHandle m = oscillator(24);
  Hamiltonian h = driven(m, std::sqrt(2.0), 0.5);
  std::vector<double> grid = uniform_grid(0.0, 1.5, 0.5);
  PropagationOptions a, b;
  a.store_states = b.store_states = true;
  b.integrator = Integrator::magnus4;
  a.tol = b.tol = 1e-9;
  Trajectory ta = propagate(h, ground_state(*m), grid, a);
  Trajectory tb = propagate(h, ground_state(*m), grid, b);
  CHECK((ta.states.back() - tb.states.back()).norm() < 1e-6);
  CHECK(ta.unitarity_defect.back() < 1e-10);
}

TEST_CASE("stationary states only pick up a phase") {
  ModelHandle m = oscillator(16);
  Hamiltonian h{QuasiPeriodicOperator(m, scalar(1.0), 0.0)};
  CVector psi0 = CVector::Zero(m->buffer_dim());
  psi0(5) = 1.0;
  PropagationOptions o;
  o.store_states = true;
  Trajectory tr = propagate(h, psi0, uniform_grid(0.0, 2.0, 1.0), o);
  CHECK(std::abs(tr.states.back()(5) - std::exp(Complex(0.0, -2.0 * m->h0_eigs()(5)))) < 1e-10);
}

TEST_CASE("leak into the buffer edge contaminates the run and fits refuse it") {
  ModelHandle m = oscillator(4);
  PropagationOptions o;
  o.integrator = Integrator::magnus4;
  Trajectory tr = propagate(driven(m, 1.0, 2.0), ground_state(*m), uniform_grid(0.0, 200.0, 1.0), o);
  CHECK(tr.contaminated);
  REQUIRE(tr.trip_time);
  CHECK_THROWS_AS(fit_growth(tr, 0), NumericalFailure);
}

TEST_CASE("input validation") {
  ModelHandle m = oscillator(8);
  Hamiltonian h = driven(m, 1.0, 0.1);
  CVector bad = 2.0 * ground_state(*m);
  CHECK_THROWS_AS(propagate(h, bad, {0.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(propagate(h, ground_state(*m), {0.0, 0.0}), InvalidInput);
  CHECK_THROWS_AS(uniform_grid(1.0, 0.0, 0.1), InvalidInput);
  auto g = uniform_grid(0.0, 1.0, 0.25);
  REQUIRE(g.size() == 5);
  CHECK(g.back() == 1.0);
}

TEST_CASE("growth fit recovers exact power laws") {
  std::vector<double> t = uniform_grid(0.0, 512.0, 0.5), v;
  for (double s : t) v.push_back(3.0 * std::pow(std::max(s, 1.0), 0.5));
  GrowthFit f = fit_growth(t, v);
  CHECK(f.epsilon_hat == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.window_start.front() == 8.0);
  CHECK(f.window_start.size() == 6);
  for (double c : f.constants) CHECK(c == doctest::Approx(3.0).epsilon(1e-9));
  for (double s : f.window_slopes) CHECK(s == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(f.residual < 1e-10);

  std::vector<double> flat(t.size(), 2.0);
  CHECK(fit_growth(t, flat).epsilon_hat == doctest::Approx(0.0));

  std::vector<double> short_t = uniform_grid(0.0, 64.0, 0.5), short_v(short_t.size(), 1.0);
  CHECK_THROWS_AS(fit_growth(short_t, short_v), InvalidInput);
}

TEST_CASE("conjugation chain round trip and unitarity") {
  std::mt19937_64 rng(51);
  ModelHandle m = oscillator(16);
  QuasiPeriodicOperator x1(m, scalar(std::sqrt(2.0)), 0.0), x2(m, scalar(std::sqrt(2.0)), 0.0);
  CMatrix c1 = 0.3 * testing_support::random_matrix(rng, m->buffer_dim());
  CMatrix c2 = 0.3 * testing_support::random_symmetric(rng, m->buffer_dim());
  x1.add({1}, c1);
  x1.add({-1}, c1.adjoint());
  x2.add({0}, c2);
  std::vector<QuasiPeriodicOperator> gens{x1, x2};
  for (int trial = 0; trial < 5; ++trial) {
    CVector psi = testing_support::random_state(rng, m->buffer_dim());
    const double th[] = {0.37 * trial};
    CVector phi = conjugate_state(psi, gens, th, ChainDirection::inverse);
    CHECK(phi.norm() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK((conjugate_state(phi, gens, th, ChainDirection::forward) - psi).norm() < 1e-12);
  }
}

TEST_CASE("maro check on the raw driven oscillator") {
  std::vector<Hamiltonian> fam;
  for (int n : {24, 48, 96}) fam.push_back(driven(oscillator(n), std::sqrt(2.0), 1.0));
  MaroResult r = maro_check(fam);
  REQUIRE(r.largest_bounded);
  // [x, K0] has order 1/2, so K0^{N'} makes it bounded up to N' = -1/2
  CHECK(*r.largest_bounded == doctest::Approx(-0.5));
  REQUIRE(r.predicted_exponent.size() == 2);
  CHECK(r.predicted_exponent[1] == doctest::Approx(2.0));
}

TEST_CASE("csv layout") {
  ModelHandle m = oscillator(8);
  Trajectory tr = propagate(driven(m, 1.0, 0.1), ground_state(*m), uniform_grid(0.0, 1.0, 0.5));
  auto path = std::filesystem::temp_directory_path() / "nflab_test.csv";
  write_csv(tr, path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,norm_0,norm_1,unitarity_defect,leak");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 3);
}

}
