// One line per acceptance criterion. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

#include "nflab/arithmetic.hpp"
#include "nflab/error.hpp"
#include "nflab/homological.hpp"
#include "nflab/ladder.hpp"
#include "nflab/normal_form.hpp"
#include "nflab/propagator.hpp"
#include "oracles.hpp"
#include "random.hpp"

using namespace nflab;

namespace {

struct Line {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const std::string& title, double budget_s, const std::function<Line()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Line line;
  try {
    line = body();
  } catch (const std::exception& e) {
    line = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool in_time = secs <= budget_s;
  bool pass = line.pass && in_time;
  if (!pass) ++failures;
  std::printf("[%s] criterion %d: %s; %s; %.1f s (budget %.0f s)%s\n", pass ? "PASS" : "FAIL", id, title.c_str(),
              line.detail.c_str(), secs, budget_s, in_time ? "" : " OVER BUDGET");
  std::fflush(stdout);
}

ModelHandle oscillator(int cutoff, double buffer_fraction = 0.5) {
  const double nu[] = {0.5};
  const int cut[] = {cutoff};
  ModelOptions o;
  o.buffer_fraction = buffer_fraction;
  return build_harmonic_model(nu, std::span<const int>(cut, 1), o);
}

RVector scalar(double v) {
  RVector r(1);
  r << v;
  return r;
}

QuasiPeriodicOperator cos_x(ModelHandle m, double omega, double amplitude) {
  QuasiPeriodicOperator v(m, scalar(omega), 0.5);
  CMatrix x = position_operator(*m);
  v.add({1}, 0.5 * amplitude * x);
  v.add({-1}, 0.5 * amplitude * x);
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string opt_fmt(const std::optional<double>& v) { return v ? fmt(*v) : "n/a"; }

// Standard instance: report 48, buffer 72, cos(sqrt2 t) x, N = 2, family {48, 64, 96}.
struct Standard {
  std::vector<NormalFormResult> family;
  std::optional<double> v0_estimate;
};

const Standard& standard() {
  static std::optional<Standard> cache;
  if (cache) return *cache;
  Standard s;
  NormalFormOptions o;
  o.regime = Regime::order_one;
  o.rho = 0.5;
  std::vector<FamilyMember> fam;
  std::vector<QuasiPeriodicOperator> v0s;
  for (int n : {48, 64, 96}) {
    ModelHandle m = oscillator(n);
    fam.push_back({cos_x(m, std::sqrt(2.0), 1.0), resonance_data_scalar(*m, 0.5, scalar(std::sqrt(2.0)))});
    v0s.push_back(fam.back().v0);
  }
  FamilyOptions fo;
  fo.scan.m_grid = default_order_grid();
  s.family = iterate_family(fam, 2, o, fo);
  s.v0_estimate = order_scan(v0s, fo.scan, 8).order;
  cache = std::move(s);
  return *cache;
}

PropagationOptions long_run_options() {
  PropagationOptions o;
  o.integrator = Integrator::magnus4;
  o.tol = 1e-8;
  o.r_list = {0.5, 1.0};
  return o;
}

}  // namespace

int main() {
  std::mt19937_64 rng(20240601);

  run(1, "averaging commutant, 100 random symmetric operators, dim 64", 10.0, [&] {
    ModelHandle m = oscillator(64, 0.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      GradedOperator avg = average(GradedOperator(m, testing_support::random_symmetric(rng, 64), 0.0));
      worst = std::max(worst, commutator_with_k0(*m, avg.matrix()).cwiseAbs().maxCoeff());
    }
    return Line{worst <= 1e-12, "max |[K0,<A>]| = " + fmt(worst) + " (tol 1e-12)"};
  });

  run(2, "homological identities and 512-point quadrature oracle", 30.0, [&] {
    double identity = 0.0, quad = 0.0;
    for (auto m : {oscillator(32), build_zoll_model(2, 40, ZollMultiplicity::collapsed),
                   build_zoll_model(2, 6, ZollMultiplicity::full)}) {
      for (int t = 0; t < 3; ++t) {
        GradedOperator a(m, testing_support::random_symmetric(rng, m->buffer_dim()), 0.0);
        K0Solution s = solve_K0_homological(a);
        CMatrix lhs = kI * -commutator_with_k0(*m, s.y.matrix());
        identity = std::max(identity, (lhs - (a.matrix() - s.average.matrix())).cwiseAbs().maxCoeff());
        CMatrix avg = oracle::averaged(m->k0_eigs(), a.matrix());
        CMatrix y = oracle::homological_by_quadrature(m->k0_eigs(), a.matrix(), avg, 512);
        quad = std::max(quad, (y - s.y.matrix()).cwiseAbs().maxCoeff());
      }
    }
    return Line{identity <= 1e-12 && quad <= 1e-9,
                "identity residual " + fmt(identity) + " (tol 1e-12), quadrature gap " + fmt(quad) + " (tol 1e-9)"};
  });

  run(3, "quasiperiodic solver, omega = sqrt2, |k| <= 3, dim 64", 30.0, [&] {
    ModelHandle m = oscillator(64, 0.0);
    const double om = std::sqrt(2.0);
    QuasiPeriodicOperator w(m, scalar(om), 0.0);
    w.add({0}, testing_support::random_symmetric(rng, 64));
    for (int k = 1; k <= 3; ++k) {
      CMatrix c = testing_support::random_matrix(rng, 64) / double(k);
      w.add({k}, c);
      w.add({-k}, c.adjoint());
    }
    ResonanceData freq = resonance_data_scalar(*m, 0.5, scalar(om));
    QuasiPeriodicSolution s = solve_quasiperiodic(w, freq);
    double res = homological_residual(s, w, freq);
    double sampled = oracle::sampled_homological_residual(s.x, w, s.average, om, m->h0_eigs(), 3, 16);
    double comm = 0.0;
    for (const auto& [k, c] : s.average.coefficients())
      comm = std::max(comm, commutator_with_k0(*m, c).cwiseAbs().maxCoeff());
    bool pass = res <= 1e-9 && sampled <= 1e-9 && comm <= 1e-12 && s.census.absorbed_count == 0;
    return Line{pass, "Fourier residual " + fmt(res) + ", sampled oracle " + fmt(sampled) + " (tol 1e-9), absorbed " +
                          std::to_string(s.census.absorbed_count) + ", |[K~,<W>]| " + fmt(comm) + " (tol 1e-12)"};
  });

  run(4, "lattice arithmetic: unimodular completion, exact reconstruction, primitivity", 5.0, [&] {
    std::ostringstream d;
    bool pass = true;
    FrequencyDecomposition ones = decompose_frequency(parse_exact_vector("1, 1, 1, 1"));
    pass = pass && abs(determinant(ones.m)) == 1 && ones.reconstructs() && ones.reduced_dim() == 1 &&
           ones.nu_tilde.describe(0) == "1";
    d << "nu=(1,1,1,1): |det M|=" << to_string(BigInt(abs(determinant(ones.m)))) << " d~=" << ones.reduced_dim()
      << " nu~=" << ones.nu_tilde.describe(0);
    FrequencyDecomposition irr = decompose_frequency(parse_exact_vector("1, sqrt2"));
    RVector nt = irr.nu_tilde.approx();
    bool same = irr.reduced_dim() == 2 && irr.reconstructs() && abs(determinant(irr.m)) == 1 &&
                std::abs(nt(0) - 1.0) < 1e-15 && std::abs(nt(1) - std::sqrt(2.0)) < 1e-15;
    pass = pass && same;
    d << "; nu=(1,sqrt2): nu~=(" << irr.nu_tilde.describe(0) << ", " << irr.nu_tilde.describe(1) << ")";
    bool rejected = false;
    try {
      complete_basis(IntMatrix{{BigInt(2), BigInt(0)}}, 2);
    } catch (const InvalidInput& e) {
      rejected = true;
      d << "; e=(2,0) rejected: " << e.what();
    }
    return Line{pass && rejected, d.str()};
  });

  run(5, "Diophantine scan (nu~, omega) = (1, sqrt2), kappa 2, K_max 50", 10.0, [&] {
    DiophantineResult r = diophantine_scan(parse_exact_vector("sqrt2"), parse_exact_vector("1"), 2.0, 50);
    auto conv = oracle::sqrt2_convergents(16);
    auto convergent_of = [&](const DiophantineOffender& o) -> std::optional<std::pair<long, long>> {
      long k = std::abs(long(o.k[0])), l = std::abs(long(o.l[0]));
      for (auto [p, q] : conv)
        if (p * k == q * l && std::gcd(k, l) == 1) return std::make_pair(long(p), long(q));
      return std::nullopt;
    };
    auto g = convergent_of(r.offender);
    std::optional<std::pair<long, long>> dr;
    if (r.drive_offender) dr = convergent_of(*r.drive_offender);
    std::ostringstream d;
    d << "gamma_hat=" << fmt(r.gamma_hat) << ", offender (k,l)=(" << r.offender.k[0] << "," << r.offender.l[0] << ")";
    if (g) d << " on convergent " << g->first << "/" << g->second;
    if (r.drive_offender)
      d << ", k!=0 offender (" << r.drive_offender->k[0] << "," << r.drive_offender->l[0] << ") weighted "
        << fmt(r.drive_offender->weighted);
    if (dr) d << " on convergent " << dr->first << "/" << dr->second;
    return Line{r.gamma_hat > 0.0 && g.has_value() && dr.has_value() && !r.precision_exhausted, d.str()};
  });

  run(6, "conjugation equivalence, report 48 / buffer 72, N = 2, t = 10", 120.0, [&] {
    const NormalFormResult& nf = standard().family[0];
    ModelHandle m = nf.model;
    PropagationOptions o = long_run_options();
    o.store_states = true;
    std::vector<double> grid = uniform_grid(0.0, 10.0, 0.5);
    Trajectory direct = propagate(nf.original(), ground_state(*m), grid, o);
    Trajectory mapped = propagate_transformed(nf, ground_state(*m), grid, o);
    double diff = (direct.states.back() - mapped.states.back()).norm();
    return Line{diff <= 1e-4 && m->buffer_dim() == 72 && m->report_dim() == 48,
                "||psi_direct(10) - mapped psi(10)|| = " + fmt(diff) + " (tol 1e-4)"};
  });

  run(7, "smoothing contraction (standard instance) and Zoll delta bookkeeping", 180.0, [&] {
    const Standard& s = standard();
    const auto& steps = s.family[0].steps;
    std::optional<double> e0 = s.v0_estimate, e1 = steps.at(0).v_order_estimate, e2 = steps.at(1).v_order_estimate;
    bool contract = e0 && e1 && e2 && (*e0 - *e1) >= 0.25 && (*e1 - *e2) >= 0.25;

    ModelHandle z = build_zoll_model(2, 24, ZollMultiplicity::collapsed);
    CMatrix sh = ladder_symbol(*z, "S"), k = ladder_symbol(*z, "K0^0.75");
    QuasiPeriodicOperator v(z, scalar(std::sqrt(2.0)), 1.5);
    CMatrix w = 0.05 * k * (sh + sh.adjoint()) * k;
    v.add({1}, w);
    v.add({-1}, w);
    NormalFormOptions o;
    o.regime = Regime::superlinear;
    o.rho = 1.5;
    NormalFormResult zr = iterate(v, 2, nullptr, o);
    bool zoll = zr.delta == 0.5;
    for (const auto& st : zr.steps) zoll = zoll && st.delta == 0.5;
    return Line{contract && zoll, "V order estimates " + opt_fmt(e0) + " -> " + opt_fmt(e1) + " -> " + opt_fmt(e2) +
                                      " (drop >= 0.25 each); Zoll mu=2 rho=1.5 delta=" + fmt(zr.delta)};
  });

  run(8, "growth contrast over t in [8, 512], r = 1", 600.0, [&] {
    std::vector<double> grid = uniform_grid(0.0, 512.0, 0.5);
    const double amp = 0.02;
    ModelHandle m = oscillator(48);
    PropagationOptions o = long_run_options();

    Trajectory res = propagate(Hamiltonian{cos_x(m, 1.0, amp)}, ground_state(*m), grid, o);
    GrowthFit fr = fit_growth(res, 1), fr_half = fit_growth(res, 0);
    std::vector<double> oracle_norm;
    for (double t : grid) oracle_norm.push_back(oracle::coherent_sobolev_norm(oracle::resonant_alpha(t, amp), 1.0));
    GrowthFit fo = fit_growth(grid, oracle_norm);

    NormalFormOptions nfo;
    nfo.regime = Regime::order_one;
    nfo.rho = 0.5;
    ResonanceData freq = resonance_data_scalar(*m, 0.5, scalar(std::sqrt(2.0)));
    NormalFormResult nf = iterate(cos_x(m, std::sqrt(2.0), amp), 2, &freq, nfo);
    Trajectory dio = propagate_transformed(nf, ground_state(*m), grid, o);
    GrowthFit fd = fit_growth(dio, 1);

    bool resonant_ok = fr.epsilon_hat >= 0.8 && fr.epsilon_hat <= 1.2;
    bool dio_ok = fd.epsilon_hat <= 0.15;
    std::ostringstream d;
    d << "resonant eps_hat=" << fmt(fr.epsilon_hat) << " (band [0.8,1.2]) " << (resonant_ok ? "in" : "OUT")
      << ", coherent-state oracle eps_hat=" << fmt(fo.epsilon_hat) << ", ||psi||_1(512)=" << fmt(res.norms.back()[1])
      << " vs oracle " << fmt(oracle_norm.back()) << ", r=0.5 eps_hat=" << fmt(fr_half.epsilon_hat)
      << "; Diophantine N=2 eps_hat=" << fmt(fd.epsilon_hat) << " (<= 0.15) " << (dio_ok ? "ok" : "OUT");
    return Line{resonant_ok && dio_ok, d.str()};
  });

  run(9, "maro criterion after N = 2 across truncations {48, 64, 96}", 180.0, [&] {
    const Standard& s = standard();
    std::vector<Hamiltonian> raw, tr;
    for (const auto& r : s.family) {
      raw.push_back(r.original());
      tr.push_back(r.transformed());
    }
    MaroOptions mo;
    MaroResult a = maro_check(raw, mo), b = maro_check(tr, mo);
    const double step = mo.n_grid[1] - mo.n_grid[0];
    bool pass = a.largest_bounded && b.largest_bounded && (*b.largest_bounded - *a.largest_bounded) >= step;
    std::ostringstream d;
    d << "largest bounded N' raw=" << opt_fmt(a.largest_bounded) << " transformed=" << opt_fmt(b.largest_bounded)
      << " (need gain >= " << step << ")";
    if (!b.predicted_exponent.empty()) d << ", predicted r/(1+N') at r=1: " << fmt(b.predicted_exponent.back());
    return Line{pass, d.str()};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
