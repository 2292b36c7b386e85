#pragma once

#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "nflab/types.hpp"

namespace nflab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using HighPrec = boost::multiprecision::cpp_dec_float_50;

using IntVector = std::vector<BigInt>;
using IntMatrix = std::vector<IntVector>;  ///< row-major

/// A real number declared rationally independent of the other generators in use.
///   "1", "sqrtN", "cbrtN", "phi", or "root:c0,c1,...,cn:lo:hi" (the unique root of
///   c0 + c1 x + ... + cn x^n in [lo, hi]).
struct Generator {
  std::string name;
  HighPrec value;
};

Generator make_generator(const std::string& spec);

/// Exact real: rational combination of generators.
struct ExactVector {
  std::vector<Generator> generators;
  std::vector<std::vector<Rational>> coeffs;  ///< one row per component, one column per generator

  std::size_t size() const { return coeffs.size(); }
  HighPrec value(std::size_t i) const;
  RVector approx() const;
  std::string describe(std::size_t i) const;
};

/// Parses comma separated linear expressions such as "1, 1/2*sqrt2 + 3, phi".
ExactVector parse_exact_vector(const std::string& text);
/// Builds from a generator list and a coefficient matrix given as strings ("1/2", "3").
ExactVector exact_vector(const std::vector<std::string>& generators,
                         const std::vector<std::vector<std::string>>& coeffs);
/// Re-expresses several vectors over the union of their generators.
std::vector<ExactVector> common_generators(const std::vector<ExactVector>& vectors);

BigInt determinant(const IntMatrix& m);
/// Exact inverse of a unimodular matrix; throws when |det| != 1.
IntMatrix unimodular_inverse(const IntMatrix& m);

/// Row-style Hermite normal form H = U A with U unimodular (rows of H past the rank are zero).
struct HermiteResult {
  IntMatrix h;
  IntMatrix u;
  int rank = 0;
};
HermiteResult hermite_normal_form(const IntMatrix& a);
/// Invariant factors (nonzero diagonal of the Smith form).
std::vector<BigInt> invariant_factors(const IntMatrix& a);

/// Basis of {k in Z^d : nu . k = 0}, Hermite-reduced.
IntMatrix resonance_lattice(const ExactVector& nu);

/// Rows e_1..e_r followed by integer rows u_1..u_{d-r}, |det| = 1.
/// Throws InvalidInput naming the offending invariant factor when the rows do not extend.
IntMatrix complete_basis(const IntMatrix& lattice, int d);

struct FrequencyDecomposition {
  ExactVector nu;
  IntMatrix lattice;             ///< e_1..e_r
  IntMatrix m;                   ///< unimodular completion
  ExactVector nu_tilde;          ///< d~ components, each > 0
  IntMatrix v;                   ///< v_1..v_{d~} stored as rows
  int rank() const { return static_cast<int>(lattice.size()); }
  int reduced_dim() const { return static_cast<int>(v.size()); }
  /// d x d~ real matrix with columns v_j.
  RMatrix v_columns() const;
  /// True when nu = sum_j nu~_j v_j holds exactly in the generator representation.
  bool reconstructs() const;
};

FrequencyDecomposition decompose_frequency(const ExactVector& nu);
/// Exact: true when the nu~ components admit no integer relation at all.
bool rationally_independent(const ExactVector& v);

struct DiophantineOffender {
  std::vector<int> k;  ///< drive part
  std::vector<int> l;  ///< lattice part
  double divisor = 0.0;
  double weighted = 0.0;  ///< |divisor| (|k|+|l|)^kappa
};

struct DiophantineResult {
  double gamma_hat = 0.0;
  double kappa = 0.0;
  int k_max = 0;
  std::size_t scanned = 0;
  DiophantineOffender offender;                      ///< global minimizer
  std::optional<DiophantineOffender> drive_offender;  ///< minimizer restricted to k != 0
  bool resonance = false;            ///< exact zero found (offender holds it)
  bool precision_exhausted = false;  ///< a value fell inside the evaluation error bound
};

/// Exhaustive minimization of |omega.k + nu~.l| (|k|+|l|)^kappa over 0 < |k|+|l| <= k_max.
DiophantineResult diophantine_scan(const ExactVector& omega, const ExactVector& nu_tilde, double kappa,
                                   int k_max);
/// Variant min |omega.k + m| (1 + |k|^kappa) over 0 < |k| <= k_max, m in the two nearest integers.
DiophantineResult diophantine_scan_integer_shift(const ExactVector& omega, double kappa, int k_max);

std::string to_string(const BigInt& v);
std::string to_string(const Rational& v);

}  // namespace nflab
