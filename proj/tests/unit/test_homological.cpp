#include <doctest.h>

#include <cmath>

#include "nflab/error.hpp"
#include "nflab/homological.hpp"
#include "nflab/ladder.hpp"
#include "oracles.hpp"
#include "random.hpp"

using namespace nflab;
using testing_support::random_symmetric;

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

QuasiPeriodicOperator random_drive(std::mt19937_64& rng, ModelHandle m, double omega, int support) {
  QuasiPeriodicOperator w(m, scalar(omega), 0.0);
  w.add({0}, random_symmetric(rng, m->buffer_dim()));
  for (int k = 1; k <= support; ++k) {
    CMatrix c = testing_support::random_matrix(rng, m->buffer_dim()) / double(k);
    w.add({k}, c);
    w.add({-k}, c.adjoint());
  }
  return w;
}

}  // namespace

TEST_SUITE("homological") {

TEST_CASE("K0 solve satisfies i[K0, Y] = A - <A>") {
  std::mt19937_64 rng(21);
  for (auto m : {oscillator(32), build_zoll_model(2, 24, ZollMultiplicity::collapsed),
                 build_anharmonic_model(2, 1, 1.0, 16)}) {
    for (int trial = 0; trial < 4; ++trial) {
      GradedOperator a(m, random_symmetric(rng, m->buffer_dim()), 0.0);
      K0Solution s = solve_K0_homological(a);
      CMatrix k0 = m->k0_eigs().cast<Complex>().asDiagonal();
      CMatrix lhs = kI * (k0 * s.y.matrix() - s.y.matrix() * k0);
      CHECK((lhs - (a.matrix() - s.average.matrix())).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(s.y.is_symmetric(1e-12));
    }
  }
}

TEST_CASE("K0 solve matches the 512-point quadrature formula on integer spectra") {
  std::mt19937_64 rng(22);
  for (auto m : {oscillator(32), build_zoll_model(2, 12, ZollMultiplicity::collapsed)}) {
    GradedOperator a(m, random_symmetric(rng, m->buffer_dim()), 0.0);
    K0Solution s = solve_K0_homological(a);
    CMatrix avg = oracle::averaged(m->k0_eigs(), a.matrix());
    CMatrix y = oracle::homological_by_quadrature(m->k0_eigs(), a.matrix(), avg, 512);
    CHECK((y - s.y.matrix()).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("near-resonant entries are absorbed below the floor") {
  ModelHandle m = build_anharmonic_model(2, 1, 1.0, 16);
  CMatrix a = CMatrix::Zero(m->buffer_dim(), m->buffer_dim());
  a(0, 1) = a(1, 0) = 1.0;
  K0SolveOptions o;
  o.divisor_floor = 10.0;  // every off-diagonal gap is below this
  K0Solution s = solve_K0_homological(GradedOperator(m, a, 0.0), o);
  CHECK(s.census.absorbed_count >= 2);
  CHECK(s.y.matrix().cwiseAbs().maxCoeff() == 0.0);
  CHECK((s.average.matrix() - a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("symmetric lift gives a symmetric X of order m - mu + 1") {
  std::mt19937_64 rng(23);
  ModelHandle m = build_zoll_model(2, 24, ZollMultiplicity::collapsed);
  GradedOperator a(m, random_symmetric(rng, m->buffer_dim()), 1.5);
  K0Solution s = solve_K0_homological(a);
  GradedOperator x = lift_to_H0(s.y, LiftOrdering::symmetric);
  CHECK(x.is_symmetric(1e-12));
  CHECK(x.order() == doctest::Approx(0.5));
  GradedOperator left = lift_to_H0(s.y, LiftOrdering::left);
  CHECK(left.order() == doctest::Approx(0.5));
}

TEST_CASE("H0 homological residual sits one order lower") {
  // i[H0, X] - (A - <A>) in A_{m-1}: the weighted residual at m - 1 stays bounded as size grows
  std::vector<double> values;
  for (int n : {24, 48, 96}) {
    ModelHandle m = build_zoll_model(2, n, ZollMultiplicity::collapsed);
    CMatrix s = ladder_symbol(*m, "S");
    CMatrix k = ladder_symbol(*m, "K0^0.75");
    GradedOperator a(m, k * (s + s.adjoint()) * k, 1.5);
    K0Solution sol = solve_K0_homological(a);
    GradedOperator x = lift_to_H0(sol.y, LiftOrdering::symmetric);
    auto res = homological_residual(x, a, sol.average, {0.0});
    values.push_back(res[0].value);
  }
  CHECK(values[2] < 2.0 * values[0] + 1e-9);
}

TEST_CASE("quasiperiodic solver: Fourier residual and sampled oracle") {
  std::mt19937_64 rng(24);
  ModelHandle m = oscillator(64);
  QuasiPeriodicOperator w = random_drive(rng, m, std::sqrt(2.0), 3);
  ResonanceData freq = resonance_data_scalar(*m, 0.5, scalar(std::sqrt(2.0)));
  QuasiPeriodicSolution s = solve_quasiperiodic(w, freq);
  CHECK(s.census.absorbed_count == 0);
  CHECK(homological_residual(s, w, freq) <= 1e-9);
  CHECK(oracle::sampled_homological_residual(s.x, w, s.average, std::sqrt(2.0), m->h0_eigs(), 3, 16) <= 1e-9);
  CHECK(s.x.is_symmetric(1e-12));
  // <W> commutes with K~ = K0 here
  for (const auto& [k, c] : s.average.coefficients())
    CHECK(commutator_with_k0(*m, c).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("exact resonance with a nonzero numerator is a violation") {
  ModelHandle m = oscillator(16);
  QuasiPeriodicOperator w(m, scalar(1.0), 0.0);
  CMatrix x = position_operator(*m);
  w.add({1}, 0.5 * x);
  w.add({-1}, 0.5 * x);
  ResonanceData freq = resonance_data_scalar(*m, 0.5, scalar(1.0));
  CHECK_THROWS_AS(solve_quasiperiodic(w, freq), ResonanceViolation);
}

TEST_CASE("small divisors near the floor are absorbed into the average") {
  ModelHandle m = oscillator(16);
  const double om = 1.0 + 1e-8;
  QuasiPeriodicOperator w(m, scalar(om), 0.0);
  CMatrix x = position_operator(*m);
  w.add({1}, 0.5 * x);
  w.add({-1}, 0.5 * x);
  ResonanceData freq = resonance_data_scalar(*m, 0.5, scalar(om));
  QuasiPeriodicSolution s = solve_quasiperiodic(w, freq);
  CHECK(s.census.absorbed_count > 0);
  CHECK(s.census.min_divisor >= 0.5);  // only the non-absorbed gaps remain
  CHECK(homological_residual(s, w, freq) <= 1e-9);
}

TEST_CASE("resonance data checks H0 = nu~ . K~") {
  ModelHandle m = oscillator(8);
  CHECK_THROWS_AS(resonance_data_scalar(*m, 0.7, scalar(1.0)), Error);
  RMatrix v(1, 1);
  v << 1.0;
  RVector nt = scalar(0.5);
  ResonanceData d = resonance_data(*m, v, nt, scalar(2.0));
  CHECK((d.energies() - m->h0_eigs()).cwiseAbs().maxCoeff() < 1e-12);
}

}
