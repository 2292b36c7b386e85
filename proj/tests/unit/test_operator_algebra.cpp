#include <doctest.h>

#include <cmath>

#include "nflab/error.hpp"
#include "nflab/ladder.hpp"
#include "nflab/operator_algebra.hpp"
#include "oracles.hpp"
#include "random.hpp"

using namespace nflab;
using testing_support::random_symmetric;

namespace {

ModelHandle oscillator(int cutoff = 32) {
  const double nu[] = {0.5};
  const int cut[] = {cutoff};
  return build_harmonic_model(nu, std::span<const int>(cut, 1));
}

}  // namespace

TEST_SUITE("operator_algebra") {

TEST_CASE("average matches a 256-point trapezoid oracle and commutes with K0") {
  std::mt19937_64 rng(11);
  for (auto model : {oscillator(24), build_zoll_model(2, 8, ZollMultiplicity::full)}) {
    for (int trial = 0; trial < 2; ++trial) {
      CMatrix a = random_symmetric(rng, model->buffer_dim());
      GradedOperator avg = average(GradedOperator(model, a, 0.0));
      CMatrix ref = oracle::averaged(model->k0_eigs(), a, 256);
      CHECK((avg.matrix() - ref).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(commutator_with_k0(*model, avg.matrix()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("average is a projection") {
  std::mt19937_64 rng(12);
  ModelHandle m = oscillator();
  GradedOperator a(m, random_symmetric(rng, m->buffer_dim()), 1.0);
  GradedOperator once = average(a);
  CHECK((average(once).matrix() - once.matrix()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(once.is_symmetric());
}

TEST_CASE("average requires an integer spectrum") {
  ModelHandle m = build_anharmonic_model(2, 1, 1.0, 8);
  CHECK_THROWS_AS(average(GradedOperator::identity(m)), InvalidInput);
}

TEST_CASE("heisenberg evolution is 2 pi periodic on integer spectra") {
  std::mt19937_64 rng(13);
  ModelHandle m = oscillator();
  GradedOperator a(m, random_symmetric(rng, m->buffer_dim()), 0.0);
  CHECK((heisenberg_evolve(a, 2.0 * M_PI).matrix() - a.matrix()).cwiseAbs().maxCoeff() < 1e-11);
  CHECK((heisenberg_evolve(heisenberg_evolve(a, 0.3), -0.3).matrix() - a.matrix()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("commutator_with_k0 equals [A, K0]") {
  std::mt19937_64 rng(14);
  ModelHandle m = oscillator(12);
  CMatrix a = testing_support::random_matrix(rng, m->buffer_dim());
  CMatrix k0 = m->k0_eigs().cast<Complex>().asDiagonal();
  CHECK((commutator_with_k0(*m, a) - (a * k0 - k0 * a)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("weighted norm of K0 powers") {
  ModelHandle m = oscillator();
  for (double p : {-1.0, 0.5, 2.0}) {
    GradedOperator k = apply_symbol(m, [p](double x) { return std::pow(x, p); }, p);
    CHECK(weighted_norm(k, p, 0.0) == doctest::Approx(1.0));
    CHECK(weighted_norm(k, p, 1.5) == doctest::Approx(1.0));
  }
}

TEST_CASE("order scan recovers the order of x, x^2 and K0") {
  OrderScanOptions o;
  o.m_grid = default_order_grid();
  const int sizes[] = {32, 64, 128};
  auto scan = [&](auto build) { return order_scan(build, sizes, o); };
  auto x = scan([](int n) {
    ModelHandle m = oscillator(n);
    return GradedOperator(m, position_operator(*m), 0.5);
  });
  REQUIRE(x.order);
  CHECK(*x.order == doctest::Approx(0.5));
  auto x2 = scan([](int n) {
    ModelHandle m = oscillator(n);
    CMatrix p = position_operator(*m);
    return GradedOperator(m, p * p, 1.0);
  });
  REQUIRE(x2.order);
  CHECK(*x2.order == doctest::Approx(1.0));
  auto k0 = scan([](int n) {
    ModelHandle m = oscillator(n);
    return GradedOperator(m, m->k0_eigs().cast<Complex>().asDiagonal(), 1.0);
  });
  REQUIRE(k0.order);
  CHECK(*k0.order == doctest::Approx(1.0));
}

TEST_CASE("expm agrees with the eigen-decomposition on Hermitian input") {
  std::mt19937_64 rng(15);
  CMatrix h = random_symmetric(rng, 20);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  CMatrix ref = es.eigenvectors() * (Complex(0.0, 0.8) * es.eigenvalues().cast<Complex>()).array().exp().matrix().asDiagonal() *
                es.eigenvectors().adjoint();
  CHECK((expm(Complex(0.0, 0.8) * h) - ref).cwiseAbs().maxCoeff() < 1e-11);
  CHECK((unitary_exp(h, 0.8) - ref).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("unitary_exp stays unitary for large arguments") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 5; ++trial) {
    CMatrix h = 30.0 * random_symmetric(rng, 40);
    CMatrix u = unitary_exp(h, 1.0);
    CHECK((u.adjoint() * u - CMatrix::Identity(40, 40)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("lie conjugation is an isometry and series matches exact for small X") {
  std::mt19937_64 rng(17);
  ModelHandle m = oscillator(12);
  const Index n = m->buffer_dim();
  GradedOperator a(m, random_symmetric(rng, n), 0.0);
  GradedOperator x(m, 0.01 * random_symmetric(rng, n), -0.5);
  GradedOperator exact = lie_conjugate(a, x, 1.0);
  GradedOperator series = lie_conjugate(a, x, 1.0, ConjugationMethod::series, 10);
  CHECK((exact.matrix() - series.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(spectral_norm(exact.matrix()) == doctest::Approx(spectral_norm(a.matrix())).epsilon(1e-12));
  CHECK(series_remainder_order(1.0, 0.5, 3) == doctest::Approx(-1.0));
}

TEST_CASE("mixing models is rejected") {
  ModelHandle m1 = oscillator(8), m2 = oscillator(8);
  GradedOperator a = GradedOperator::identity(m1), b = GradedOperator::identity(m2);
  CHECK_THROWS_AS(a + b, ModelMismatch);
}

}
