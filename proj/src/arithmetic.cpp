#include "nflab/arithmetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "nflab/error.hpp"

namespace nflab {

namespace mp = boost::multiprecision;

std::string to_string(const BigInt& v) { return v.str(); }
std::string to_string(const Rational& v) {
  if (mp::denominator(v) == 1) return mp::numerator(v).str();
  return mp::numerator(v).str() + "/" + mp::denominator(v).str();
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

/// "3", "-1/2", "0.25", "1e-3" as exact rationals.
Rational parse_rational(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) throw InvalidInput("empty rational literal");
  try {
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      const BigInt p(trim(s.substr(0, slash))), q(trim(s.substr(slash + 1)));
      if (q == 0) throw InvalidInput("zero denominator in '" + s + "'");
      return Rational(p, q);
    }
    std::string mant = s;
    long exp10 = 0;
    const auto e = s.find_first_of("eE");
    if (e != std::string::npos) {
      exp10 = std::stol(s.substr(e + 1));
      mant = s.substr(0, e);
    }
    const auto dot = mant.find('.');
    if (dot != std::string::npos) {
      exp10 -= static_cast<long>(mant.size() - dot - 1);
      mant.erase(dot, 1);
    }
    if (mant.empty() || mant == "-" || mant == "+") throw InvalidInput("bad rational literal '" + s + "'");
    if (mant[0] == '+') mant.erase(0, 1);
    // cpp_int reads a leading zero as octal
    const bool negative = mant[0] == '-';
    std::size_t first = negative ? 1 : 0;
    while (first + 1 < mant.size() && mant[first] == '0') ++first;
    mant = (negative ? "-" : "") + mant.substr(first);
    Rational r{BigInt(mant)};
    const BigInt ten = mp::pow(BigInt(10), static_cast<unsigned>(std::labs(exp10)));
    return exp10 >= 0 ? Rational(r * ten) : Rational(r / ten);
  } catch (const InvalidInput&) {
    throw;
  } catch (const std::exception&) {
    throw InvalidInput("bad rational literal '" + s + "'");
  }
}

HighPrec to_high(const Rational& r) {
  return HighPrec(mp::numerator(r)) / HighPrec(mp::denominator(r));
}

bool is_perfect_power(unsigned long n, int p) {
  const auto r = static_cast<unsigned long>(std::llround(std::pow(static_cast<double>(n), 1.0 / p)));
  for (unsigned long c = (r > 0 ? r - 1 : 0); c <= r + 1; ++c) {
    unsigned long v = 1;
    for (int i = 0; i < p; ++i) v *= c;
    if (v == n) return true;
  }
  return false;
}

unsigned long parse_radicand(const std::string& spec, std::size_t prefix) {
  const std::string digits = spec.substr(prefix);
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit))
    throw InvalidInput("generator '" + spec + "' needs a positive integer radicand");
  const unsigned long n = std::stoul(digits);
  if (n == 0) throw InvalidInput("generator '" + spec + "' has a zero radicand");
  return n;
}

HighPrec root_in_bracket(const std::vector<Rational>& poly, HighPrec lo, HighPrec hi, const std::string& spec) {
  auto eval = [&](const HighPrec& x) {
    HighPrec acc = 0;
    for (auto it = poly.rbegin(); it != poly.rend(); ++it) acc = acc * x + to_high(*it);
    return acc;
  };
  HighPrec flo = eval(lo), fhi = eval(hi);
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if ((flo < 0) == (fhi < 0)) throw InvalidInput("generator '" + spec + "': no sign change on the bracket");
  for (int it = 0; it < 400; ++it) {
    const HighPrec mid = (lo + hi) / 2;
    const HighPrec fm = eval(mid);
    if (fm == 0) return mid;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return (lo + hi) / 2;
}

}  // namespace

Generator make_generator(const std::string& raw) {
  const std::string spec = trim(raw);
  if (spec == "1") return {"1", HighPrec(1)};
  if (spec == "phi") return {"phi", (1 + mp::sqrt(HighPrec(5))) / 2};
  if (spec.rfind("sqrt", 0) == 0) {
    const unsigned long n = parse_radicand(spec, 4);
    if (is_perfect_power(n, 2)) throw InvalidInput("generator '" + spec + "' is rational; use a rational coefficient");
    return {spec, mp::sqrt(HighPrec(n))};
  }
  if (spec.rfind("cbrt", 0) == 0) {
    const unsigned long n = parse_radicand(spec, 4);
    if (is_perfect_power(n, 3)) throw InvalidInput("generator '" + spec + "' is rational; use a rational coefficient");
    return {spec, mp::cbrt(HighPrec(n))};
  }
  if (spec.rfind("root:", 0) == 0) {
    const auto parts = split(spec.substr(5), ':');
    if (parts.size() != 3) throw InvalidInput("root generator must read root:c0,c1,...:lo:hi");
    std::vector<Rational> poly;
    for (const auto& c : split(parts[0], ',')) poly.push_back(parse_rational(c));
    if (poly.size() < 3) throw InvalidInput("root generator needs a polynomial of degree at least 2");
    const HighPrec lo = to_high(parse_rational(parts[1])), hi = to_high(parse_rational(parts[2]));
    if (!(lo < hi)) throw InvalidInput("root generator bracket must satisfy lo < hi");
    return {spec, root_in_bracket(poly, lo, hi, spec)};
  }
  throw InvalidInput("unknown generator '" + spec + "'");
}

HighPrec ExactVector::value(std::size_t i) const {
  HighPrec acc = 0;
  for (std::size_t j = 0; j < generators.size(); ++j)
    if (coeffs[i][j] != 0) acc += to_high(coeffs[i][j]) * generators[j].value;
  return acc;
}

RVector ExactVector::approx() const {
  RVector out(static_cast<Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) out(static_cast<Index>(i)) = value(i).convert_to<double>();
  return out;
}

std::string ExactVector::describe(std::size_t i) const {
  std::string out;
  for (std::size_t j = 0; j < generators.size(); ++j) {
    const Rational& c = coeffs[i][j];
    if (c == 0) continue;
    if (!out.empty()) out += c < 0 ? " - " : " + ";
    else if (c < 0) out += "-";
    const Rational a = mp::abs(c);
    if (generators[j].name == "1")
      out += to_string(a);
    else
      out += (a == 1 ? "" : to_string(a) + "*") + generators[j].name;
  }
  return out.empty() ? "0" : out;
}

ExactVector exact_vector(const std::vector<std::string>& generators,
                         const std::vector<std::vector<std::string>>& coeffs) {
  ExactVector out;
  std::map<std::string, int> seen;
  for (const auto& g : generators) {
    Generator gen = make_generator(g);
    if (seen.count(gen.name)) throw InvalidInput("generator '" + gen.name + "' listed twice");
    seen[gen.name] = 1;
    out.generators.push_back(std::move(gen));
  }
  for (const auto& row : coeffs) {
    if (row.size() != generators.size())
      throw InvalidInput("coefficient row length does not match the generator count");
    std::vector<Rational> r;
    for (const auto& c : row) r.push_back(parse_rational(c));
    out.coeffs.push_back(std::move(r));
  }
  return out;
}

ExactVector parse_exact_vector(const std::string& text) {
  ExactVector out;
  std::map<std::string, std::size_t> index;
  auto generator_index = [&](const std::string& name) {
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    out.generators.push_back(make_generator(name));
    for (auto& row : out.coeffs) row.push_back(0);
    return index[name] = out.generators.size() - 1;
  };
  generator_index("1");
  for (const auto& component : split(text, ',')) {
    const std::string expr = trim(component);
    if (expr.empty()) throw InvalidInput("empty component in frequency list '" + text + "'");
    std::vector<Rational> row(out.generators.size(), 0);
    out.coeffs.push_back(row);
    auto& target = out.coeffs.back();
    // Split into signed terms.
    std::vector<std::pair<int, std::string>> terms;
    int sign = 1;
    std::string cur;
    for (std::size_t p = 0; p < expr.size(); ++p) {
      const char c = expr[p];
      const bool exponent_sign = p > 0 && (expr[p - 1] == 'e' || expr[p - 1] == 'E') && p >= 2 &&
                                 std::isdigit(static_cast<unsigned char>(expr[p - 2]));
      if ((c == '+' || c == '-') && !exponent_sign) {
        if (!trim(cur).empty()) terms.emplace_back(sign, trim(cur));
        else if (!terms.empty() || !trim(cur).empty()) throw InvalidInput("malformed expression '" + expr + "'");
        sign = c == '-' ? -1 : 1;
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (trim(cur).empty()) throw InvalidInput("malformed expression '" + expr + "'");
    terms.emplace_back(sign, trim(cur));
    for (const auto& [s, term] : terms) {
      Rational coeff = s;
      std::string name = "1";
      const auto star = term.find('*');
      if (star != std::string::npos) {
        coeff *= parse_rational(term.substr(0, star));
        name = trim(term.substr(star + 1));
      } else if (std::isalpha(static_cast<unsigned char>(term[0]))) {
        name = term;
      } else {
        coeff *= parse_rational(term);
      }
      const std::size_t j = generator_index(name);
      target.resize(out.generators.size(), 0);
      target[j] += coeff;
    }
  }
  for (auto& row : out.coeffs) row.resize(out.generators.size(), 0);
  return out;
}

std::vector<ExactVector> common_generators(const std::vector<ExactVector>& vectors) {
  std::vector<Generator> all;
  std::map<std::string, std::size_t> index;
  for (const auto& v : vectors)
    for (const auto& g : v.generators)
      if (!index.count(g.name)) {
        index[g.name] = all.size();
        all.push_back(g);
      }
  std::vector<ExactVector> out;
  for (const auto& v : vectors) {
    ExactVector e{all, {}};
    for (const auto& row : v.coeffs) {
      std::vector<Rational> r(all.size(), 0);
      for (std::size_t j = 0; j < v.generators.size(); ++j) r[index[v.generators[j].name]] = row[j];
      e.coeffs.push_back(std::move(r));
    }
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------- integer linear algebra

namespace {

BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

void row_axpy(IntVector& target, const IntVector& source, const BigInt& q) {
  for (std::size_t c = 0; c < target.size(); ++c) target[c] -= q * source[c];
}

IntMatrix identity(std::size_t n) {
  IntMatrix m(n, IntVector(n, 0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

IntMatrix transpose(const IntMatrix& a) {
  if (a.empty()) return {};
  IntMatrix t(a[0].size(), IntVector(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

/// Integer matrix with the same kernel-from-the-left as the rational coefficients of nu.
IntMatrix integer_coefficients(const ExactVector& nu) {
  const std::size_t d = nu.size(), g = nu.generators.size();
  IntMatrix a(d, IntVector(g, 0));
  for (std::size_t j = 0; j < g; ++j) {
    BigInt l = 1;
    for (std::size_t i = 0; i < d; ++i) l = mp::lcm(l, BigInt(mp::denominator(nu.coeffs[i][j])));
    for (std::size_t i = 0; i < d; ++i) {
      const Rational scaled = nu.coeffs[i][j] * l;
      a[i][j] = mp::numerator(scaled);
    }
  }
  return a;
}

}  // namespace

HermiteResult hermite_normal_form(const IntMatrix& a) {
  const std::size_t m = a.size();
  const std::size_t n = m ? a[0].size() : 0;
  HermiteResult res{a, identity(m), 0};
  IntMatrix& h = res.h;
  IntMatrix& u = res.u;
  std::size_t r = 0;
  for (std::size_t j = 0; j < n && r < m; ++j) {
    bool found = false;
    for (;;) {
      std::size_t p = m;
      for (std::size_t i = r; i < m; ++i)
        if (h[i][j] != 0 && (p == m || mp::abs(h[i][j]) < mp::abs(h[p][j]))) p = i;
      if (p == m) break;
      found = true;
      std::swap(h[p], h[r]);
      std::swap(u[p], u[r]);
      bool clean = true;
      for (std::size_t i = r + 1; i < m; ++i) {
        if (h[i][j] == 0) continue;
        const BigInt q = h[i][j] / h[r][j];
        row_axpy(h[i], h[r], q);
        row_axpy(u[i], u[r], q);
        if (h[i][j] != 0) clean = false;
      }
      if (clean) break;
    }
    if (!found) continue;
    if (h[r][j] < 0) {
      for (auto& x : h[r]) x = -x;
      for (auto& x : u[r]) x = -x;
    }
    for (std::size_t i = 0; i < r; ++i) {
      const BigInt q = floor_div(h[i][j], h[r][j]);
      if (q != 0) {
        row_axpy(h[i], h[r], q);
        row_axpy(u[i], u[r], q);
      }
    }
    ++r;
  }
  res.rank = static_cast<int>(r);
  return res;
}

std::vector<BigInt> invariant_factors(const IntMatrix& a) {
  IntMatrix cur = a;
  for (int guard = 0; guard < 64; ++guard) {
    cur = hermite_normal_form(cur).h;
    cur = transpose(hermite_normal_form(transpose(cur)).h);
    bool diagonal = true;
    for (std::size_t i = 0; i < cur.size(); ++i)
      for (std::size_t j = 0; j < cur[i].size(); ++j)
        if (i != j && cur[i][j] != 0) diagonal = false;
    if (diagonal) break;
  }
  std::vector<BigInt> d;
  for (std::size_t i = 0; i < cur.size() && i < (cur.empty() ? 0 : cur[0].size()); ++i)
    if (cur[i][i] != 0) d.push_back(mp::abs(cur[i][i]));
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      const BigInt g = mp::gcd(d[i], d[j]);
      const BigInt l = d[i] / g * d[j];
      d[i] = g;
      d[j] = l;
    }
  return d;
}

BigInt determinant(const IntMatrix& m) {
  const std::size_t n = m.size();
  if (n == 0) return 1;
  for (const auto& row : m)
    if (row.size() != n) throw InvalidInput("determinant of a non-square matrix");
  IntMatrix a = m;
  BigInt prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a[k][k] == 0) {
      std::size_t p = k + 1;
      while (p < n && a[p][k] == 0) ++p;
      if (p == n) return 0;
      std::swap(a[p], a[k]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j) a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
    prev = a[k][k];
  }
  return sign * a[n - 1][n - 1];
}

IntMatrix unimodular_inverse(const IntMatrix& m) {
  const std::size_t n = m.size();
  if (mp::abs(determinant(m)) != 1) throw InvalidInput("matrix is not unimodular");
  std::vector<std::vector<Rational>> a(n, std::vector<Rational>(2 * n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = Rational(m[i][j]);
    a[i][n + i] = 1;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (a[p][c] == 0) ++p;
    std::swap(a[p], a[c]);
    const Rational piv = a[c][c];
    for (auto& x : a[c]) x /= piv;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c || a[i][c] == 0) continue;
      const Rational f = a[i][c];
      for (std::size_t j = 0; j < 2 * n; ++j) a[i][j] -= f * a[c][j];
    }
  }
  IntMatrix inv(n, IntVector(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) inv[i][j] = mp::numerator(a[i][n + j]);
  return inv;
}

IntMatrix resonance_lattice(const ExactVector& nu) {
  const std::size_t d = nu.size();
  if (d == 0) return {};
  const HermiteResult hr = hermite_normal_form(integer_coefficients(nu));
  IntMatrix kernel(hr.u.begin() + hr.rank, hr.u.end());
  if (kernel.empty()) return {};
  const HermiteResult reduced = hermite_normal_form(kernel);
  return IntMatrix(reduced.h.begin(), reduced.h.begin() + reduced.rank);
}

IntMatrix complete_basis(const IntMatrix& lattice, int d) {
  if (d < 1) throw InvalidInput("complete_basis: dimension must be positive");
  for (const auto& row : lattice)
    if (static_cast<int>(row.size()) != d) throw InvalidInput("complete_basis: lattice row has the wrong length");
  const std::size_t r = lattice.size();
  if (r == 0) return identity(static_cast<std::size_t>(d));

  // V E^T = [T; 0], so E V^T = [T^T | 0].
  const HermiteResult hr = hermite_normal_form(transpose(lattice));
  if (hr.rank != static_cast<int>(r)) throw InvalidInput("complete_basis: lattice rows are linearly dependent");
  IntMatrix t(r, IntVector(r));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) t[i][j] = hr.h[i][j];
  if (mp::abs(determinant(t)) != 1) {
    BigInt worst = 1;
    for (const auto& f : invariant_factors(lattice))
      if (f != 1) worst = f;
    throw InvalidInput("complete_basis: rows do not extend to a basis of Z^d (invariant factor " + worst.str() + ")");
  }
  const IntMatrix v_inv = unimodular_inverse(hr.u);
  IntMatrix m = lattice;
  for (std::size_t c = r; c < static_cast<std::size_t>(d); ++c) {
    IntVector row(static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) row[i] = v_inv[i][c];
    m.push_back(std::move(row));
  }
  if (mp::abs(determinant(m)) != 1) throw NumericalFailure("complete_basis: completion lost unimodularity");
  return m;
}

RMatrix FrequencyDecomposition::v_columns() const {
  RMatrix out(static_cast<Index>(nu.size()), reduced_dim());
  for (int j = 0; j < reduced_dim(); ++j)
    for (std::size_t i = 0; i < nu.size(); ++i) out(static_cast<Index>(i), j) = v[j][i].convert_to<double>();
  return out;
}

bool FrequencyDecomposition::reconstructs() const {
  for (std::size_t i = 0; i < nu.size(); ++i)
    for (std::size_t g = 0; g < nu.generators.size(); ++g) {
      Rational acc = 0;
      for (int j = 0; j < reduced_dim(); ++j) acc += Rational(v[j][i]) * nu_tilde.coeffs[j][g];
      if (acc != nu.coeffs[i][g]) return false;
    }
  return true;
}

FrequencyDecomposition decompose_frequency(const ExactVector& nu) {
  const int d = static_cast<int>(nu.size());
  if (d < 1) throw InvalidInput("decompose_frequency: empty frequency vector");
  FrequencyDecomposition out;
  out.nu = nu;
  out.lattice = resonance_lattice(nu);
  out.m = complete_basis(out.lattice, d);
  const int r = out.rank();
  const std::size_t g = nu.generators.size();

  std::vector<std::vector<Rational>> check(static_cast<std::size_t>(d), std::vector<Rational>(g, 0));
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k)
      for (std::size_t j = 0; j < g; ++j) check[i][j] += Rational(out.m[i][k]) * nu.coeffs[k][j];
  for (int i = 0; i < r; ++i)
    for (std::size_t j = 0; j < g; ++j)
      if (check[i][j] != 0)
        throw InvalidInput("decompose_frequency: lattice row is not resonant; the generators are not independent");

  const IntMatrix inv = unimodular_inverse(out.m);
  out.nu_tilde.generators = nu.generators;
  for (int j = r; j < d; ++j) {
    std::vector<Rational> row = check[j];
    IntVector vj(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) vj[i] = inv[i][j];
    ExactVector probe{nu.generators, {row}};
    if (probe.value(0) < 0) {
      for (auto& x : row) x = -x;
      for (auto& x : vj) x = -x;
      for (auto& x : out.m[j]) x = -x;
    }
    out.nu_tilde.coeffs.push_back(std::move(row));
    out.v.push_back(std::move(vj));
  }
  if (!out.reconstructs()) throw NumericalFailure("decompose_frequency: reconstruction failed");
  return out;
}

bool rationally_independent(const ExactVector& v) { return resonance_lattice(v).empty(); }

// ---------------------------------------------------------------- Diophantine scans

namespace {

/// All z in Z^n with |z|_1 == s whose first nonzero entry is positive.
void shell(int n, int s, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> z(static_cast<std::size_t>(n), 0);
  std::function<void(int, int, bool)> rec = [&](int pos, int remaining, bool leading) {
    if (pos == n - 1) {
      for (int v : {remaining, -remaining}) {
        if (leading && v <= 0) continue;
        z[pos] = v;
        visit(z);
        if (remaining == 0) break;
      }
      z[pos] = 0;
      return;
    }
    for (int v = -remaining; v <= remaining; ++v) {
      if (leading && v < 0) continue;
      z[pos] = v;
      rec(pos + 1, remaining - std::abs(v), leading && v == 0);
    }
    z[pos] = 0;
  };
  if (n > 0 && s > 0) rec(0, s, true);
}

struct ScanComponents {
  std::vector<HighPrec> value;
  std::vector<double> approx;
  std::vector<IntVector> coeffs;  ///< common-denominator integer coefficients over generators
  std::vector<double> magnitude;
};

ScanComponents prepare(const ExactVector& v) {
  ScanComponents c;
  const std::size_t g = v.generators.size();
  BigInt l = 1;
  for (const auto& row : v.coeffs)
    for (const auto& x : row) l = mp::lcm(l, BigInt(mp::denominator(x)));
  for (std::size_t i = 0; i < v.size(); ++i) {
    c.value.push_back(v.value(i));
    c.approx.push_back(c.value.back().convert_to<double>());
    c.magnitude.push_back(std::abs(c.approx.back()));
    IntVector row(g);
    for (std::size_t j = 0; j < g; ++j) row[j] = mp::numerator(Rational(v.coeffs[i][j] * l));
    c.coeffs.push_back(std::move(row));
  }
  return c;
}

struct Evaluated {
  bool exact_zero = false;
  bool unresolved = false;
  double value = 0.0;
};

Evaluated evaluate(const ScanComponents& c, const std::vector<int>& z, HighPrec shift = 0,
                   const IntVector* shift_coeffs = nullptr) {
  Evaluated e;
  const std::size_t g = c.coeffs.empty() ? 0 : c.coeffs[0].size();
  bool zero = true;
  for (std::size_t j = 0; j < g && zero; ++j) {
    BigInt acc = shift_coeffs ? (*shift_coeffs)[j] : BigInt(0);
    for (std::size_t i = 0; i < z.size(); ++i)
      if (z[i] != 0) acc += z[i] * c.coeffs[i][j];
    zero = acc == 0;
  }
  if (zero) {
    e.exact_zero = true;
    return e;
  }
  HighPrec acc = shift;
  double scale = std::abs(shift.convert_to<double>());
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i] != 0) {
      acc += z[i] * c.value[i];
      scale += std::abs(z[i]) * c.magnitude[i];
    }
  e.value = acc.convert_to<double>();
  e.unresolved = std::abs(e.value) <= 1e-44 * (1.0 + scale);
  return e;
}

}  // namespace

DiophantineResult diophantine_scan(const ExactVector& omega, const ExactVector& nu_tilde, double kappa, int k_max) {
  if (!(kappa > 0.0)) throw InvalidInput("diophantine_scan: kappa must be positive");
  if (k_max < 1) throw InvalidInput("diophantine_scan: K_max must be at least 1");
  const auto common = common_generators({omega, nu_tilde});
  ExactVector joined{common[0].generators, common[0].coeffs};
  for (const auto& row : common[1].coeffs) joined.coeffs.push_back(row);
  const ScanComponents comp = prepare(joined);
  const int n = static_cast<int>(omega.size());
  const int total = static_cast<int>(joined.size());

  DiophantineResult res;
  res.kappa = kappa;
  res.k_max = k_max;
  double best = std::numeric_limits<double>::infinity();
  double best_drive = std::numeric_limits<double>::infinity();
  auto record = [&](const std::vector<int>& z, double divisor, double weighted) {
    DiophantineOffender o;
    o.k.assign(z.begin(), z.begin() + n);
    o.l.assign(z.begin() + n, z.end());
    o.divisor = divisor;
    o.weighted = weighted;
    return o;
  };
  for (int s = 1; s <= k_max && !res.resonance; ++s) {
    const double weight = std::pow(static_cast<double>(s), kappa);
    shell(total, s, [&](const std::vector<int>& z) {
      if (res.resonance) return;
      ++res.scanned;
      bool drive = false;
      for (int i = 0; i < n; ++i) drive = drive || z[i] != 0;
      // Cheap double screen; only candidates that could win are evaluated exactly.
      double approx = 0.0, err = 0.0;
      for (int i = 0; i < total; ++i) {
        approx += z[i] * comp.approx[i];
        err += std::abs(z[i]) * comp.magnitude[i];
      }
      err *= 1e-14;
      const double lower = std::max(0.0, std::abs(approx) - err) * weight;
      if (lower > best && (!drive || lower > best_drive)) return;
      const Evaluated e = evaluate(comp, z);
      if (e.exact_zero) {
        res.resonance = true;
        res.gamma_hat = 0.0;
        res.offender = record(z, 0.0, 0.0);
        return;
      }
      if (e.unresolved) res.precision_exhausted = true;
      const double weighted = std::abs(e.value) * weight;
      if (weighted < best) {
        best = weighted;
        res.offender = record(z, e.value, weighted);
      }
      if (drive && weighted < best_drive) {
        best_drive = weighted;
        res.drive_offender = record(z, e.value, weighted);
      }
    });
  }
  if (!res.resonance) res.gamma_hat = best;
  return res;
}

DiophantineResult diophantine_scan_integer_shift(const ExactVector& omega, double kappa, int k_max) {
  if (!(kappa > 0.0)) throw InvalidInput("diophantine_scan: kappa must be positive");
  if (k_max < 1) throw InvalidInput("diophantine_scan: K_max must be at least 1");
  const auto common = common_generators({omega, parse_exact_vector("1")});
  const ScanComponents comp = prepare(common[0]);
  const std::size_t one = [&] {
    for (std::size_t j = 0; j < common[0].generators.size(); ++j)
      if (common[0].generators[j].name == "1") return j;
    return std::size_t{0};
  }();
  // Integer m enters with coefficient m * lcm on the "1" generator.
  const BigInt denom = [&] {
    BigInt l = 1;
    for (const auto& row : common[0].coeffs)
      for (const auto& x : row) l = mp::lcm(l, BigInt(mp::denominator(x)));
    return l;
  }();
  const int n = static_cast<int>(omega.size());

  DiophantineResult res;
  res.kappa = kappa;
  res.k_max = k_max;
  double best = std::numeric_limits<double>::infinity();
  for (int s = 1; s <= k_max && !res.resonance; ++s) {
    const double weight = 1.0 + std::pow(static_cast<double>(s), kappa);
    shell(n, s, [&](const std::vector<int>& k) {
      if (res.resonance) return;
      HighPrec x = 0;
      for (int i = 0; i < n; ++i) x += k[i] * comp.value[i];
      const HighPrec fl = mp::floor(x);
      for (const HighPrec& target : {fl, HighPrec(fl + 1)}) {
        ++res.scanned;
        const BigInt m = -target.convert_to<BigInt>();
        IntVector shift(common[0].generators.size(), 0);
        shift[one] = m * denom;
        const Evaluated e = evaluate(comp, k, HighPrec(m), &shift);
        DiophantineOffender o{k, {static_cast<int>(m.convert_to<long long>())}, e.value, 0.0};
        if (e.exact_zero) {
          res.resonance = true;
          o.divisor = 0.0;
          res.offender = o;
          return;
        }
        if (e.unresolved) res.precision_exhausted = true;
        o.weighted = std::abs(e.value) * weight;
        if (o.weighted < best) {
          best = o.weighted;
          res.offender = o;
          res.drive_offender = o;
        }
      }
    });
  }
  res.gamma_hat = res.resonance ? 0.0 : best;
  return res;
}

}  // namespace nflab
