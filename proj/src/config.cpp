#include "nflab/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "nflab/error.hpp"
#include "nflab/ladder.hpp"

namespace nflab {

namespace {

void check_keys(const json& obj, const std::string& block, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InvalidInput("config: '" + block + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) throw InvalidInput("config: unknown key '" + it.key() + "' in '" + block + "'");
}

const json& require(const json& obj, const std::string& key, const std::string& block) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InvalidInput("config: missing required key '" + key + "' in '" + block + "'");
  return *it;
}

template <class T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& block) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw InvalidInput("config: bad value for '" + block + "." + key + "'");
  }
}

std::vector<double> doubles(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw InvalidInput("config: '" + where + "' must be a number or array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw InvalidInput("config: '" + where + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<int> ints(const json& v, const std::string& where) {
  if (v.is_number_integer()) return {v.get<int>()};
  if (!v.is_array()) throw InvalidInput("config: '" + where + "' must be an integer or array");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw InvalidInput("config: '" + where + "' must hold integers");
    out.push_back(e.get<int>());
  }
  return out;
}

// decimal literal of a JSON number, read exactly
std::string number_text(const json& v) {
  if (v.is_number_integer()) return v.dump();
  std::string s = v.dump();
  return s;
}

Complex parse_coeff(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw InvalidInput("config: '" + where + "' must be a number or [re, im]");
}

CMatrix parse_dense(const json& block, const std::string& where) {
  check_keys(block, where, {"k", "real", "imag"});
  const json& re = require(block, "real", where);
  if (!re.is_array() || re.empty()) throw InvalidInput("config: '" + where + ".real' must be a matrix");
  Index n = static_cast<Index>(re.size());
  CMatrix m = CMatrix::Zero(n, n);
  auto fill = [&](const json& rows, bool imag) {
    if (!rows.is_array() || static_cast<Index>(rows.size()) != n)
      throw InvalidInput("config: '" + where + "' rows must be square");
    for (Index i = 0; i < n; ++i) {
      const json& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Index>(row.size()) != n)
        throw InvalidInput("config: '" + where + "' rows must be square");
      for (Index j = 0; j < n; ++j) {
        double x = row[static_cast<std::size_t>(j)].get<double>();
        if (imag) m(i, j) += Complex(0.0, x); else m(i, j) += x;
      }
    }
  };
  fill(re, false);
  if (block.contains("imag")) fill(block["imag"], true);
  return m;
}

}  // namespace

ExactVector parse_exact(const json& value, const std::string& where) {
  try {
    if (value.is_number()) return parse_exact_vector(number_text(value));
    if (value.is_string()) return parse_exact_vector(value.get<std::string>());
    if (value.is_array()) {
      std::string text;
      for (const auto& e : value) {
        if (!text.empty()) text += ", ";
        if (e.is_number()) text += number_text(e);
        else if (e.is_string()) text += e.get<std::string>();
        else throw InvalidInput("config: '" + where + "' entries must be numbers or expressions");
      }
      return parse_exact_vector(text);
    }
    if (value.is_object()) {
      check_keys(value, where, {"generators", "coeffs"});
      auto gens = require(value, "generators", where).get<std::vector<std::string>>();
      std::vector<std::vector<std::string>> coeffs;
      for (const auto& row : require(value, "coeffs", where)) {
        std::vector<std::string> r;
        for (const auto& c : row) r.push_back(c.is_string() ? c.get<std::string>() : number_text(c));
        coeffs.push_back(std::move(r));
      }
      return exact_vector(gens, coeffs);
    }
  } catch (const json::exception&) {
    throw InvalidInput("config: malformed exact value in '" + where + "'");
  }
  throw InvalidInput("config: '" + where + "' must be a number, expression, array or object");
}

ModelSpec parse_model(const json& block) {
  ModelSpec spec;
  if (!block.is_object()) throw InvalidInput("config: 'model' must be an object");
  std::string type = get_or<std::string>(block, "type", "harmonic", "model");
  auto read_options = [&] {
    spec.options.buffer_fraction = get_or<double>(block, "buffer_fraction", 0.5, "model");
    spec.options.max_dim = get_or<Index>(block, "max_dim", 4096, "model");
  };
  if (type == "harmonic") {
    check_keys(block, "model", {"type", "nu", "cutoffs", "buffer_fraction", "max_dim"});
    spec.kind = ModelKind::harmonic;
    spec.nu_exact = parse_exact(require(block, "nu", "model"), "model.nu");
    RVector approx = spec.nu_exact->approx();
    spec.nu.assign(approx.data(), approx.data() + approx.size());
    spec.cutoffs = ints(require(block, "cutoffs", "model"), "model.cutoffs");
    if (spec.cutoffs.size() == 1 && spec.nu.size() > 1) spec.cutoffs.assign(spec.nu.size(), spec.cutoffs[0]);
    if (spec.cutoffs.size() != spec.nu.size())
      throw InvalidInput("config: 'model.cutoffs' must match the length of 'model.nu'");
  } else if (type == "anharmonic") {
    check_keys(block, "model", {"type", "k", "l", "a", "cutoff", "buffer_fraction", "max_dim"});
    spec.kind = ModelKind::anharmonic;
    spec.k = get_or<int>(block, "k", 2, "model");
    spec.l = get_or<int>(block, "l", 1, "model");
    spec.a = get_or<double>(block, "a", 1.0, "model");
    spec.cutoff = require(block, "cutoff", "model").get<int>();
  } else if (type == "zoll") {
    check_keys(block, "model", {"type", "d", "cutoff", "multiplicity", "buffer_fraction", "max_dim"});
    spec.kind = ModelKind::zoll;
    spec.d = get_or<int>(block, "d", 2, "model");
    spec.cutoff = require(block, "cutoff", "model").get<int>();
    std::string mult = get_or<std::string>(block, "multiplicity", "collapsed", "model");
    if (mult == "collapsed") spec.multiplicity = ZollMultiplicity::collapsed;
    else if (mult == "full") spec.multiplicity = ZollMultiplicity::full;
    else throw InvalidInput("config: 'model.multiplicity' must be 'collapsed' or 'full'");
  } else {
    throw InvalidInput("config: unknown model type '" + type + "'");
  }
  read_options();
  return spec;
}

ModelHandle build_model(const ModelSpec& spec, std::optional<int> cutoff) {
  switch (spec.kind) {
    case ModelKind::harmonic: {
      std::vector<int> cut = spec.cutoffs;
      if (cutoff) std::fill(cut.begin(), cut.end(), *cutoff);
      return build_harmonic_model(spec.nu, cut, spec.options);
    }
    case ModelKind::anharmonic:
      return build_anharmonic_model(spec.k, spec.l, spec.a, cutoff.value_or(spec.cutoff), spec.options);
    case ModelKind::zoll:
      return build_zoll_model(spec.d, cutoff.value_or(spec.cutoff), spec.multiplicity, spec.options);
  }
  throw InvalidInput("unknown model kind");
}

int DriveSpec::support() const {
  int s = 0;
  for (const auto& t : terms) {
    int n = 0;
    for (int x : t.k) n += std::abs(x);
    s = std::max(s, n);
  }
  return s;
}

DriveSpec parse_perturbation(const json& block) {
  check_keys(block, "perturbation", {"omega", "order", "terms", "cos", "sin", "dense"});
  DriveSpec drive;
  drive.omega_exact = parse_exact(require(block, "omega", "perturbation"), "perturbation.omega");
  drive.omega = drive.omega_exact->approx();
  drive.order = get_or<double>(block, "order", 0.0, "perturbation");
  const int n = static_cast<int>(drive.omega.size());

  auto read_k = [&](const json& t, const std::string& where, bool nonzero) {
    std::vector<int> k = t.contains("k") ? ints(t["k"], where + ".k") : std::vector<int>(n, 0);
    if (static_cast<int>(k.size()) != n)
      throw InvalidInput("config: '" + where + ".k' must have one entry per frequency");
    if (nonzero && std::all_of(k.begin(), k.end(), [](int x) { return x == 0; }))
      throw InvalidInput("config: '" + where + ".k' must be nonzero");
    return k;
  };
  auto read_word = [&](const json& t, const std::string& where) {
    if (!t.contains("word")) return std::vector<std::string>{"I"};
    try {
      return t["word"].get<std::vector<std::string>>();
    } catch (const json::exception&) {
      throw InvalidInput("config: '" + where + ".word' must be a list of symbols");
    }
  };

  auto list = [&](const char* key) {
    json arr = block.contains(key) ? block[key] : json::array();
    if (!arr.is_array()) throw InvalidInput(std::string("config: 'perturbation.") + key + "' must be an array");
    return arr;
  };

  int i = 0;
  for (const auto& t : list("terms")) {
    std::string where = "perturbation.terms[" + std::to_string(i++) + "]";
    check_keys(t, where, {"k", "coeff", "word"});
    DriveTerm term;
    term.k = read_k(t, where, false);
    term.coeff = t.contains("coeff") ? parse_coeff(t["coeff"], where + ".coeff") : Complex(1.0, 0.0);
    term.word = read_word(t, where);
    drive.terms.push_back(std::move(term));
  }
  for (const char* key : {"cos", "sin"}) {
    i = 0;
    for (const auto& t : list(key)) {
      std::string where = std::string("perturbation.") + key + "[" + std::to_string(i++) + "]";
      check_keys(t, where, {"k", "amplitude", "word"});
      DriveTerm term;
      term.kind = std::string(key) == "cos" ? DriveTerm::Kind::cosine : DriveTerm::Kind::sine;
      term.k = read_k(t, where, true);
      term.coeff = get_or<double>(t, "amplitude", 1.0, where);
      term.word = read_word(t, where);
      drive.terms.push_back(std::move(term));
    }
  }
  i = 0;
  for (const auto& t : list("dense")) {
    std::string where = "perturbation.dense[" + std::to_string(i++) + "]";
    DriveTerm term;
    term.kind = DriveTerm::Kind::dense;
    term.dense = parse_dense(t, where);
    term.k = read_k(t, where, false);
    drive.terms.push_back(std::move(term));
  }
  return drive;
}

QuasiPeriodicOperator build_perturbation(const ModelHandle& model, const DriveSpec& drive) {
  QuasiPeriodicOperator v(model, drive.omega, drive.order);
  for (const auto& term : drive.terms) {
    if (term.kind == DriveTerm::Kind::dense) {
      if (term.dense.rows() != model->buffer_dim())
        throw InvalidInput("config: dense perturbation has dimension " + std::to_string(term.dense.rows()) +
                           ", model buffer is " + std::to_string(model->buffer_dim()));
      v.add(term.k, term.dense);
      continue;
    }
    CMatrix w = ladder_word(*model, term.word);
    switch (term.kind) {
      case DriveTerm::Kind::plain:
        v.add(term.k, term.coeff * w);
        break;
      case DriveTerm::Kind::cosine:
        v.add(term.k, 0.5 * term.coeff * w);
        v.add(negate(term.k), 0.5 * term.coeff * w);
        break;
      case DriveTerm::Kind::sine:
        v.add(term.k, term.coeff / (2.0 * kI) * w);
        v.add(negate(term.k), -term.coeff / (2.0 * kI) * w);
        break;
      default:
        break;
    }
  }
  double defect = v.symmetry_defect();
  if (defect > 1e-12) {
    std::ostringstream os;
    os << "config: perturbation is not symmetric (max |V_-k - V_k^*| = " << defect << ")";
    throw InvalidInput(os.str());
  }
  return v;
}

namespace {

NormalFormSpec parse_normal_form(const json& block, const DriveSpec& drive) {
  check_keys(block, "normal_form",
             {"regime", "steps", "divisor_floor", "k_max", "quadrature_order", "mode", "series_depth", "lift",
              "scan_cutoffs", "m_grid", "s_grid", "tail_warning", "maro"});
  NormalFormSpec nf;
  nf.steps = get_or<int>(block, "steps", 0, "normal_form");
  if (nf.steps < 0) throw InvalidInput("config: 'normal_form.steps' must be >= 0");
  auto& o = nf.options;
  o.regime = regime_from_string(get_or<std::string>(block, "regime", "order_one", "normal_form"));
  o.rho = drive.order;
  o.divisor_floor = get_or<double>(block, "divisor_floor", 1e-6, "normal_form");
  o.transform.k_max_total = get_or<int>(block, "k_max", std::max(4, 2 * drive.support()), "normal_form");
  o.transform.quadrature_order = get_or<int>(block, "quadrature_order", 8, "normal_form");
  o.transform.series_depth = get_or<int>(block, "series_depth", 10, "normal_form");
  o.transform.tail_warning = get_or<double>(block, "tail_warning", 1e-8, "normal_form");
  std::string mode = get_or<std::string>(block, "mode", "quadrature", "normal_form");
  if (mode == "quadrature") o.transform.mode = TransformMode::quadrature;
  else if (mode == "series") o.transform.mode = TransformMode::series;
  else throw InvalidInput("config: 'normal_form.mode' must be 'quadrature' or 'series'");
  std::string lift = get_or<std::string>(block, "lift", "symmetric", "normal_form");
  if (lift == "symmetric") o.lift = LiftOrdering::symmetric;
  else if (lift == "left") o.lift = LiftOrdering::left;
  else throw InvalidInput("config: 'normal_form.lift' must be 'symmetric' or 'left'");
  if (block.contains("scan_cutoffs")) nf.scan_cutoffs = ints(block["scan_cutoffs"], "normal_form.scan_cutoffs");
  nf.scan.m_grid = block.contains("m_grid") ? doubles(block["m_grid"], "normal_form.m_grid") : default_order_grid();
  if (block.contains("s_grid")) {
    nf.scan.s_grid = doubles(block["s_grid"], "normal_form.s_grid");
    o.s_grid = nf.scan.s_grid;
  }
  if (block.contains("maro")) {
    const json& m = block["maro"];
    if (m.is_boolean()) {
      nf.maro_enabled = m.get<bool>();
    } else {
      check_keys(m, "normal_form.maro", {"enabled", "n_grid", "r_grid", "zero_floor"});
      nf.maro_enabled = get_or<bool>(m, "enabled", true, "normal_form.maro");
      if (m.contains("n_grid")) nf.maro.n_grid = doubles(m["n_grid"], "normal_form.maro.n_grid");
      if (m.contains("r_grid")) nf.maro.r_grid = doubles(m["r_grid"], "normal_form.maro.r_grid");
      nf.maro.zero_floor = get_or<double>(m, "zero_floor", nf.maro.zero_floor, "normal_form.maro");
    }
  }
  return nf;
}

PropagationSpec parse_propagation(const json& block) {
  check_keys(block, "propagation",
             {"t_start", "t_end", "dt", "r", "integrator", "tol", "initial_step", "max_step", "min_step", "frame",
              "initial_level", "leak_fraction", "leak_threshold", "stop_on_leak", "fit"});
  PropagationSpec p;
  p.enabled = true;
  p.t_start = get_or<double>(block, "t_start", 0.0, "propagation");
  p.t_end = require(block, "t_end", "propagation").get<double>();
  p.dt = get_or<double>(block, "dt", 0.5, "propagation");
  if (!(p.t_end > p.t_start) || !(p.dt > 0.0)) throw InvalidInput("config: propagation needs t_end > t_start and dt > 0");
  auto& o = p.options;
  if (block.contains("r")) o.r_list = doubles(block["r"], "propagation.r");
  o.integrator = integrator_from_string(get_or<std::string>(block, "integrator", "magnus2", "propagation"));
  o.tol = get_or<double>(block, "tol", o.tol, "propagation");
  o.initial_step = get_or<double>(block, "initial_step", o.initial_step, "propagation");
  o.max_step = get_or<double>(block, "max_step", o.max_step, "propagation");
  o.min_step = get_or<double>(block, "min_step", o.min_step, "propagation");
  o.leak_fraction = get_or<double>(block, "leak_fraction", o.leak_fraction, "propagation");
  o.leak_threshold = get_or<double>(block, "leak_threshold", o.leak_threshold, "propagation");
  o.stop_on_leak = get_or<bool>(block, "stop_on_leak", o.stop_on_leak, "propagation");
  p.frame = get_or<std::string>(block, "frame", "raw", "propagation");
  if (p.frame != "raw" && p.frame != "transformed" && p.frame != "both")
    throw InvalidInput("config: 'propagation.frame' must be 'raw', 'transformed' or 'both'");
  if (block.contains("initial_level")) p.initial_level = block["initial_level"].get<Index>();
  if (block.contains("fit")) {
    const json& f = block["fit"];
    if (f.is_boolean()) {
      p.fit_enabled = f.get<bool>();
    } else {
      check_keys(f, "propagation.fit", {"j_min", "min_windows"});
      p.fit.j_min = get_or<int>(f, "j_min", p.fit.j_min, "propagation.fit");
      p.fit.min_windows = get_or<int>(f, "min_windows", p.fit.min_windows, "propagation.fit");
    }
  }
  return p;
}

ArithmeticSpec parse_arithmetic(const json& block, const ModelSpec& model, const DriveSpec& drive) {
  check_keys(block, "arithmetic", {"nu", "omega", "kappa", "k_max", "enabled"});
  ArithmeticSpec a;
  a.enabled = get_or<bool>(block, "enabled", true, "arithmetic");
  if (block.contains("nu")) a.nu = parse_exact(block["nu"], "arithmetic.nu");
  else a.nu = model.nu_exact;
  if (block.contains("omega")) a.omega = parse_exact(block["omega"], "arithmetic.omega");
  else a.omega = drive.omega_exact;
  a.kappa = get_or<double>(block, "kappa", 2.0, "arithmetic");
  a.k_max = get_or<int>(block, "k_max", 20, "arithmetic");
  if (a.enabled && !a.nu) throw InvalidInput("config: 'arithmetic.nu' is required for non-harmonic models");
  return a;
}

ChecksSpec parse_checks(const json& block) {
  check_keys(block, "checks", {"epsilon", "delta", "contraction", "maro_gain", "frame_difference"});
  ChecksSpec c;
  if (block.contains("epsilon")) {
    int i = 0;
    for (const auto& e : block["epsilon"]) {
      std::string where = "checks.epsilon[" + std::to_string(i++) + "]";
      check_keys(e, where, {"r", "frame", "min", "max"});
      EpsilonCheck ec;
      ec.r = require(e, "r", where).get<double>();
      ec.frame = get_or<std::string>(e, "frame", "raw", where);
      if (ec.frame != "raw" && ec.frame != "transformed")
        throw InvalidInput("config: '" + where + ".frame' must be 'raw' or 'transformed'");
      ec.lo = get_or<double>(e, "min", ec.lo, where);
      ec.hi = get_or<double>(e, "max", ec.hi, where);
      c.epsilon.push_back(ec);
    }
  }
  if (block.contains("delta")) c.delta = block["delta"].get<double>();
  if (block.contains("contraction")) c.contraction = block["contraction"].get<double>();
  if (block.contains("maro_gain")) c.maro_gain = block["maro_gain"].get<double>();
  if (block.contains("frame_difference")) c.frame_difference = block["frame_difference"].get<double>();
  return c;
}

}  // namespace

RunConfig parse_config(const json& config) {
  check_keys(config, "config",
             {"model", "perturbation", "normal_form", "propagation", "arithmetic", "output", "seed", "checks"});
  RunConfig rc;
  rc.raw = config;
  try {
    rc.seed = get_or<std::uint64_t>(config, "seed", 0, "config");
    rc.model_block = require(config, "model", "config");
    rc.model = parse_model(rc.model_block);
    rc.drive_block = config.contains("perturbation") ? config["perturbation"] : json{{"omega", 1}};
    rc.drive = parse_perturbation(rc.drive_block);
    rc.normal_form = parse_normal_form(config.value("normal_form", json::object()), rc.drive);
    if (config.contains("propagation")) rc.propagation = parse_propagation(config["propagation"]);
    if (config.contains("arithmetic")) rc.arithmetic = parse_arithmetic(config["arithmetic"], rc.model, rc.drive);
    if (config.contains("output")) {
      const json& o = config["output"];
      check_keys(o, "output", {"dir", "run_id", "dump_operators"});
      rc.output.dir = get_or<std::string>(o, "dir", rc.output.dir, "output");
      rc.output.run_id = get_or<std::string>(o, "run_id", rc.output.run_id, "output");
      rc.output.dump_operators = get_or<bool>(o, "dump_operators", false, "output");
    }
    if (config.contains("checks")) rc.checks = parse_checks(config["checks"]);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  if (rc.output.run_id.empty() ||
      rc.output.run_id.find_first_of("/\\") != std::string::npos)
    throw InvalidInput("config: 'output.run_id' must be a plain file name");
  return rc;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config '" + path + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw InvalidInput("config '" + path + "': " + e.what());
  }
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nflab
