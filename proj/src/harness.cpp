#include "nflab/harness.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "nflab/error.hpp"
#include "nflab/homological.hpp"
#include "nflab/ladder.hpp"

namespace nflab {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json intmatrix_json(const IntMatrix& m) {
  json out = json::array();
  for (const auto& row : m) {
    json r = json::array();
    for (const auto& x : row) r.push_back(to_string(x));
    out.push_back(r);
  }
  return out;
}

json exact_json(const ExactVector& v) {
  json out = json::array();
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(v.describe(i));
  return out;
}

json offender_json(const DiophantineOffender& o) {
  return {{"k", o.k}, {"l", o.l}, {"divisor", o.divisor}, {"weighted", o.weighted}};
}

json census_json(const DivisorCensus& c) {
  return {{"min_divisor", std::isfinite(c.min_divisor) ? json(c.min_divisor) : json(nullptr)},
          {"floor", c.floor},
          {"absorbed_count", c.absorbed_count},
          {"absorbed_norm", c.absorbed_norm},
          {"resonant_count", c.resonant_count}};
}

json step_json(const StepRecord& r, const std::vector<double>& s_grid) {
  return {{"step", r.step},
          {"delta", r.delta},
          {"census", census_json(r.census)},
          {"tail_norm", r.tail_norm},
          {"report_tail_norm", r.report_tail_norm},
          {"tail_warning", r.tail_warning},
          {"x_order", r.x_order},
          {"v_order", r.v_order},
          {"homological_residual", r.homological_residual},
          {"z_k0_defect", r.z_k0_defect},
          {"x_symmetry_defect", r.x_symmetry_defect},
          {"s_grid", s_grid},
          {"v_seminorms", r.v_seminorms},
          {"v_order_estimate", opt(r.v_order_estimate)},
          {"x_order_estimate", opt(r.x_order_estimate)},
          {"v_at_grid_floor", r.v_at_grid_floor},
          {"contractive", r.contractive}};
}

json scan_json(const OrderScanResult& s) {
  return {{"order", opt(s.order)},
          {"at_grid_floor", s.at_grid_floor},
          {"lambda_max", s.lambda_max},
          {"m_grid", s.m_grid},
          {"s_grid", s.s_grid},
          {"growth", s.growth}};
}

/// Resonance data for the order-one solver.
ResonanceData make_resonance(const RunConfig& rc, const ModelHandle& model,
                             const std::optional<FrequencyDecomposition>& dec) {
  if (model->kind() == ModelKind::harmonic && dec)
    return resonance_data(*model, dec->v_columns(), dec->nu_tilde.approx(), rc.drive.omega);
  const double ratio = model->h0_eigs()(0) / model->k0_eigs()(0);
  return resonance_data_scalar(*model, ratio, rc.drive.omega);
}

std::vector<double> trajectory_difference(const Trajectory& a, const Trajectory& b) {
  std::vector<double> out;
  const std::size_t n = std::min(a.states.size(), b.states.size());
  for (std::size_t i = 0; i < n; ++i) out.push_back((a.states[i] - b.states[i]).norm());
  return out;
}

struct StageRunner {
  json& manifest;
  std::string current = "config";
  void enter(const std::string& name) { current = name; }
};

}  // namespace

json decomposition_json(const FrequencyDecomposition& dec) {
  return {{"nu", exact_json(dec.nu)},
          {"rank", dec.rank()},
          {"lattice", intmatrix_json(dec.lattice)},
          {"completion", intmatrix_json(dec.m)},
          {"det_completion", to_string(dec.m.empty() ? BigInt(1) : determinant(dec.m))},
          {"nu_tilde", exact_json(dec.nu_tilde)},
          {"v", intmatrix_json(dec.v)},
          {"reconstructs", dec.reconstructs()}};
}

json diophantine_json(const DiophantineResult& r) {
  return {{"gamma_hat", r.gamma_hat},
          {"kappa", r.kappa},
          {"k_max", r.k_max},
          {"scanned", r.scanned},
          {"offender", offender_json(r.offender)},
          {"drive_offender", r.drive_offender ? offender_json(*r.drive_offender) : json(nullptr)},
          {"resonance", r.resonance},
          {"precision_exhausted", r.precision_exhausted}};
}

json maro_json(const MaroResult& r) {
  return {{"largest_bounded", opt(r.largest_bounded)},
          {"n_grid", r.n_grid},
          {"r_grid", r.r_grid},
          {"lambda_max", r.lambda_max},
          {"growth", r.growth},
          {"bounded", r.bounded},
          {"predicted_exponent", r.predicted_exponent}};
}

json fit_json(const GrowthFit& f) {
  return {{"r", f.r},
          {"epsilon_hat", f.epsilon_hat},
          {"window_start", f.window_start},
          {"envelope", f.envelope},
          {"envelope_slopes", f.envelope_slopes},
          {"window_slopes", f.window_slopes},
          {"constants", f.constants},
          {"residual", f.residual}};
}

void write_json_atomic(const json& value, const std::string& path) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out << value.dump(2) << '\n';
    if (!out) throw InvalidInput("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

void dump_operator(const QuasiPeriodicOperator& op, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path);
  out.write("NFLABOP1", 8);
  const std::int32_t angles = op.angles();
  const std::int64_t dim = op.dim();
  const std::int64_t count = static_cast<std::int64_t>(op.coefficients().size());
  out.write(reinterpret_cast<const char*>(&angles), sizeof angles);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& [k, m] : op.coefficients()) {
    for (int x : k) {
      const std::int32_t v = x;
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(sizeof(Complex) * rm.size()));
  }
}

RunOutcome run_config(const json& config, const RunOptions& options) {
  RunOutcome outcome;
  json& manifest = outcome.manifest;
  manifest["library_version"] = kLibraryVersion;
  manifest["config_hash"] = fnv1a_hex(config.dump());
  manifest["started"] = utc_now();
  manifest["status"] = "running";
  manifest["stages"] = json::object();
  manifest["verdicts"] = json::array();
  manifest["artifacts"] = json::array();

  StageRunner stage{manifest};
  RunConfig rc;
  fs::path out_dir;
  auto finish = [&](int code) {
    manifest["finished"] = utc_now();
    outcome.exit_code = code;
    if (options.write_files && !out_dir.empty()) {
      outcome.manifest_path = (out_dir / (rc.output.run_id + ".manifest.json")).string();
      try {
        write_json_atomic(manifest, outcome.manifest_path);
      } catch (const std::exception& e) {
        manifest["write_error"] = e.what();
        outcome.manifest_path.clear();
        if (outcome.exit_code == 0) outcome.exit_code = 2;
      }
    }
    return outcome;
  };

  try {
    rc = parse_config(config);
    manifest["run_id"] = rc.output.run_id;
    manifest["seed"] = rc.seed;
    out_dir = options.out_dir ? fs::path(*options.out_dir) : fs::path(rc.output.dir);
    if (options.write_files) fs::create_directories(out_dir);
    const bool dump = options.dump_operators || rc.output.dump_operators;

    stage.enter("model");
    ModelHandle model = build_model(rc.model);
    manifest["model_hash"] = fnv1a_hex(rc.model_block.dump() + "|" + model->describe());
    manifest["drive_hash"] = fnv1a_hex(rc.drive_block.dump());
    manifest["stages"]["model"] = {{"kind", to_string(model->kind())},
                                   {"description", model->describe()},
                                   {"buffer_dim", model->buffer_dim()},
                                   {"report_dim", model->report_dim()},
                                   {"modes", model->modes()},
                                   {"mu", model->mu()},
                                   {"lambda_shift", model->lambda_shift()},
                                   {"integer_spectrum", model->integer_spectrum()}};

    stage.enter("arithmetic");
    std::optional<FrequencyDecomposition> dec;
    if (rc.arithmetic.enabled) {
      dec = decompose_frequency(*rc.arithmetic.nu);
      json a = {{"decomposition", decomposition_json(*dec)}};
      if (rc.arithmetic.omega) {
        DiophantineResult scan = diophantine_scan(*rc.arithmetic.omega, dec->nu_tilde, rc.arithmetic.kappa,
                                                  rc.arithmetic.k_max);
        a["omega"] = exact_json(*rc.arithmetic.omega);
        a["scan"] = diophantine_json(scan);
        manifest["gamma_hat"] = scan.gamma_hat;
      }
      manifest["stages"]["arithmetic"] = a;
    } else if (rc.model.nu_exact && rc.normal_form.options.regime == Regime::order_one) {
      dec = decompose_frequency(*rc.model.nu_exact);
    }

    stage.enter("normal_form");
    const NormalFormSpec& nfs = rc.normal_form;
    std::vector<ModelHandle> models{model};
    std::size_t primary = 0;
    if (!nfs.scan_cutoffs.empty()) {
      const int own = model->kind() == ModelKind::harmonic ? rc.model.cutoffs.front() : rc.model.cutoff;
      models.clear();
      bool found = false;
      for (int c : nfs.scan_cutoffs) {
        if (c == own && !found && (model->kind() != ModelKind::harmonic ||
                                   std::all_of(rc.model.cutoffs.begin(), rc.model.cutoffs.end(),
                                               [own](int x) { return x == own; }))) {
          primary = models.size();
          models.push_back(model);
          found = true;
        } else {
          models.push_back(build_model(rc.model, c));
        }
      }
      if (!found) {
        primary = 0;
        models.insert(models.begin(), model);
      }
    }
    std::vector<FamilyMember> family;
    std::vector<QuasiPeriodicOperator> v0s;
    for (const auto& m : models) {
      FamilyMember fm{build_perturbation(m, rc.drive), std::nullopt};
      if (nfs.options.regime == Regime::order_one && nfs.steps > 0) fm.freq = make_resonance(rc, m, dec);
      v0s.push_back(fm.v0);
      family.push_back(std::move(fm));
    }
    std::vector<NormalFormResult> results;
    if (family.size() >= 2) {
      results = iterate_family(family, nfs.steps, nfs.options, FamilyOptions{nfs.scan, 8});
    } else {
      const ResonanceData* freq = family[0].freq ? &*family[0].freq : nullptr;
      results.push_back(iterate(family[0].v0, nfs.steps, freq, nfs.options));
    }
    const NormalFormResult& nf = results[primary];
    json nfj = {{"regime", to_string(nfs.options.regime)},
                {"rho", nfs.options.rho},
                {"mu", model->mu()},
                {"delta", nf.delta},
                {"steps_requested", nfs.steps},
                {"steps_completed", nf.steps.size()},
                {"status", nf.status},
                {"halted", nf.halted},
                {"k_max", nfs.options.transform.k_max_total}};
    json sizes = json::array();
    for (const auto& m : models) sizes.push_back(m->report_dim());
    nfj["family_report_dims"] = sizes;
    nfj["primary_index"] = primary;
    if (family.size() >= 2) {
      OrderScanResult s0 = order_scan(v0s, nfs.scan, 8);
      nfj["v0_scan"] = scan_json(s0);
      nfj["v0_order_estimate"] = opt(s0.order);
    }
    json steps = json::array();
    for (const auto& r : nf.steps) steps.push_back(step_json(r, nfs.options.s_grid));
    nfj["steps"] = steps;
    manifest["stages"]["normal_form"] = nfj;
    json deltas = json::array();
    for (const auto& r : nf.steps) deltas.push_back(r.delta);
    manifest["delta_per_step"] = deltas;

    if (dump && options.write_files) {
      const fs::path dir = out_dir / (rc.output.run_id + "_operators");
      fs::create_directories(dir);
      auto emit = [&](const QuasiPeriodicOperator& op, const std::string& name) {
        const fs::path p = dir / (name + ".bin");
        dump_operator(op, p.string());
        manifest["artifacts"].push_back(p.string());
      };
      emit(nf.remainders.front(), "V0");
      emit(nf.z, "Z");
      emit(nf.v, "V" + std::to_string(nf.steps.size()));
      for (std::size_t j = 0; j < nf.generators.size(); ++j) emit(nf.generators[j], "X" + std::to_string(j + 1));
    }

    stage.enter("maro");
    std::optional<MaroResult> maro_raw, maro_tr;
    if (nfs.maro_enabled && results.size() >= 2) {
      std::vector<Hamiltonian> raw, tr;
      for (const auto& r : results) {
        raw.push_back(r.original());
        tr.push_back(r.transformed());
      }
      maro_raw = maro_check(raw, nfs.maro);
      maro_tr = maro_check(tr, nfs.maro);
      json mj = {{"raw", maro_json(*maro_raw)}, {"transformed", maro_json(*maro_tr)}};
      if (maro_raw->largest_bounded && maro_tr->largest_bounded)
        mj["gain"] = *maro_tr->largest_bounded - *maro_raw->largest_bounded;
      manifest["stages"]["maro"] = mj;
    }

    std::map<std::string, std::vector<GrowthFit>> fits;
    std::optional<double> final_difference;
    if (rc.propagation.enabled && options.propagate) {
      stage.enter("propagate");
      const PropagationSpec& ps = rc.propagation;
      CVector psi0;
      if (ps.initial_level) {
        if (*ps.initial_level < 0 || *ps.initial_level >= model->buffer_dim())
          throw InvalidInput("config: 'propagation.initial_level' outside the buffer");
        psi0 = CVector::Zero(model->buffer_dim());
        psi0(*ps.initial_level) = 1.0;
      } else {
        psi0 = ground_state(*model);
      }
      const std::vector<double> grid = uniform_grid(ps.t_start, ps.t_end, ps.dt);
      PropagationOptions po = ps.options;
      po.store_states = ps.frame == "both";
      std::map<std::string, Trajectory> traj;
      if (ps.frame != "transformed") traj["raw"] = propagate(nf.original(), psi0, grid, po);
      if (ps.frame != "raw") traj["transformed"] = propagate_transformed(nf, psi0, grid, po);
      json pj = json::object();
      for (auto& [frame, tr] : traj) {
        json f = {{"status", tr.status},
                  {"contaminated", tr.contaminated},
                  {"trip_time", opt(tr.trip_time)},
                  {"accepted_steps", tr.accepted_steps},
                  {"rejected_steps", tr.rejected_steps},
                  {"integrator", to_string(po.integrator)},
                  {"samples", tr.t.size()}};
        double ud = 0.0, lk = 0.0;
        for (double x : tr.unitarity_defect) ud = std::max(ud, x);
        for (double x : tr.leak) lk = std::max(lk, x);
        f["max_unitarity_defect"] = ud;
        f["max_leak"] = lk;
        if (!tr.norms.empty()) f["final_norms"] = tr.norms.back();
        if (options.write_files) {
          const fs::path csv = out_dir / (rc.output.run_id + "_" + frame + ".csv");
          write_csv(tr, csv.string());
          f["csv"] = csv.string();
          manifest["artifacts"].push_back(csv.string());
        }
        pj[frame] = f;
      }
      if (traj.size() == 2) {
        std::vector<double> diff = trajectory_difference(traj["raw"], traj["transformed"]);
        if (!diff.empty()) {
          final_difference = diff.back();
          pj["frame_difference_final"] = diff.back();
          pj["frame_difference_max"] = *std::max_element(diff.begin(), diff.end());
        }
      }
      manifest["stages"]["propagate"] = pj;

      stage.enter("fits");
      const double needed = std::ldexp(1.0, ps.fit.j_min + ps.fit.min_windows);
      json fj = json::object();
      if (!ps.fit_enabled) {
        fj["skipped"] = "disabled";
      } else if (ps.t_end < needed) {
        std::ostringstream os;
        os << "time span shorter than " << needed << " (too few dyadic windows)";
        fj["skipped"] = os.str();
      } else {
        for (auto& [frame, tr] : traj) {
          json arr = json::array();
          for (std::size_t i = 0; i < tr.r_list.size(); ++i) {
            GrowthFit g = fit_growth(tr, i, ps.fit);
            fits[frame].push_back(g);
            arr.push_back(fit_json(g));
          }
          fj[frame] = arr;
        }
      }
      manifest["stages"]["fits"] = fj;
    }

    stage.enter("checks");
    const ChecksSpec& ck = rc.checks;
    auto verdict = [&](const std::string& name, bool pass, const std::string& detail) {
      manifest["verdicts"].push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
    };
    for (const auto& e : ck.epsilon) {
      std::ostringstream name, detail;
      name << "epsilon_" << e.frame << "_r" << e.r;
      const GrowthFit* g = nullptr;
      for (const auto& f : fits[e.frame])
        if (std::abs(f.r - e.r) < 1e-12) g = &f;
      if (!g) {
        verdict(name.str(), false, "no fit for this frame and r");
        continue;
      }
      detail << "epsilon_hat=" << g->epsilon_hat << " bounds [" << e.lo << ", " << e.hi << "]";
      verdict(name.str(), g->epsilon_hat >= e.lo && g->epsilon_hat <= e.hi, detail.str());
    }
    if (ck.delta) {
      std::ostringstream d;
      d << "delta=" << nf.delta << " expected " << *ck.delta;
      verdict("delta", std::abs(nf.delta - *ck.delta) <= 1e-12, d.str());
    }
    if (ck.contraction) {
      std::vector<std::optional<double>> est;
      if (nfj.contains("v0_order_estimate") && !nfj["v0_order_estimate"].is_null())
        est.push_back(nfj["v0_order_estimate"].get<double>());
      else
        est.push_back(std::nullopt);
      for (const auto& r : nf.steps) est.push_back(r.v_order_estimate);
      bool pass = est.size() >= 2;
      std::ostringstream d;
      d << "estimates";
      for (std::size_t i = 0; i < est.size(); ++i) {
        if (est[i]) d << ' ' << *est[i]; else d << " n/a";
        if (i > 0) {
          if (!est[i] || !est[i - 1] || *est[i - 1] - *est[i] < *ck.contraction - 1e-12) pass = false;
        }
      }
      d << " required drop " << *ck.contraction;
      verdict("contraction", pass, d.str());
    }
    if (ck.maro_gain) {
      bool pass = false;
      std::ostringstream d;
      if (maro_raw && maro_tr && maro_raw->largest_bounded && maro_tr->largest_bounded) {
        const double step = nfs.maro.n_grid.size() >= 2 ? nfs.maro.n_grid[1] - nfs.maro.n_grid[0] : 1.0;
        const double gain = (*maro_tr->largest_bounded - *maro_raw->largest_bounded) / step;
        pass = gain >= *ck.maro_gain - 1e-12;
        d << "N' raw=" << *maro_raw->largest_bounded << " transformed=" << *maro_tr->largest_bounded
          << " gain=" << gain << " grid units";
      } else {
        d << "maro tables missing or inconclusive";
      }
      verdict("maro_gain", pass, d.str());
    }
    if (ck.frame_difference) {
      std::ostringstream d;
      if (final_difference) d << "difference=" << *final_difference << " bound " << *ck.frame_difference;
      else d << "needs propagation.frame = both";
      verdict("frame_difference", final_difference && *final_difference <= *ck.frame_difference, d.str());
    }

    bool all = true;
    for (const auto& v : manifest["verdicts"]) all = all && v["pass"].get<bool>();
    manifest["status"] = all ? "ok" : "acceptance_failed";
    return finish(all ? 0 : 4);
  } catch (const Error& e) {
    manifest["status"] = "failed";
    manifest["failure_stage"] = stage.current;
    manifest["failure"] = e.what();
    return finish(e.exit_code());
  } catch (const std::exception& e) {
    manifest["status"] = "failed";
    manifest["failure_stage"] = stage.current;
    manifest["failure"] = e.what();
    return finish(3);
  }
}

RunOutcome run_config_file(const std::string& path, const RunOptions& options) {
  json config;
  try {
    config = load_json_file(path);
  } catch (const Error& e) {
    RunOutcome out;
    out.manifest = {{"status", "failed"}, {"failure_stage", "config"}, {"failure", e.what()}};
    out.exit_code = e.exit_code();
    return out;
  }
  return run_config(config, options);
}

namespace {

std::optional<double> jget(const json& j, std::initializer_list<const char*> path) {
  const json* cur = &j;
  for (const char* p : path) {
    if (!cur->is_object() || !cur->contains(p)) return std::nullopt;
    cur = &(*cur)[p];
  }
  if (!cur->is_number()) return std::nullopt;
  return cur->get<double>();
}

}  // namespace

json compare_manifests(const json& a, const json& b) {
  for (const char* key : {"model_hash", "drive_hash"}) {
    if (!a.contains(key) || !b.contains(key)) throw InvalidInput(std::string("compare: manifest lacks '") + key + "'");
    if (a[key] != b[key])
      throw InvalidInput(std::string("compare: manifests differ in ") + key + " (" + a[key].get<std::string>() +
                         " vs " + b[key].get<std::string>() + ")");
  }
  json report;
  report["model_hash"] = a["model_hash"];
  report["drive_hash"] = a["drive_hash"];
  report["runs"] = {a.value("run_id", "a"), b.value("run_id", "b")};
  report["steps"] = {jget(a, {"stages", "normal_form", "steps_completed"}).value_or(0),
                     jget(b, {"stages", "normal_form", "steps_completed"}).value_or(0)};

  double max_delta = 0.0;
  json eps = json::array();
  for (const char* frame : {"raw", "transformed"}) {
    const json* fa = nullptr;
    const json* fb = nullptr;
    if (a.contains("stages") && a["stages"].contains("fits") && a["stages"]["fits"].contains(frame))
      fa = &a["stages"]["fits"][frame];
    if (b.contains("stages") && b["stages"].contains("fits") && b["stages"]["fits"].contains(frame))
      fb = &b["stages"]["fits"][frame];
    if (!fa && !fb) continue;
    auto lookup = [](const json* arr, double r) -> std::optional<double> {
      if (!arr) return std::nullopt;
      for (const auto& f : *arr)
        if (std::abs(f["r"].get<double>() - r) < 1e-12) return f["epsilon_hat"].get<double>();
      return std::nullopt;
    };
    std::vector<double> rs;
    for (const json* arr : {fa, fb})
      if (arr)
        for (const auto& f : *arr) {
          double r = f["r"].get<double>();
          if (std::find_if(rs.begin(), rs.end(), [r](double x) { return std::abs(x - r) < 1e-12; }) == rs.end())
            rs.push_back(r);
        }
    for (double r : rs) {
      auto ea = lookup(fa, r), eb = lookup(fb, r);
      json row = {{"frame", frame}, {"r", r}, {"a", opt(ea)}, {"b", opt(eb)}, {"delta", nullptr}};
      if (ea && eb) {
        row["delta"] = *eb - *ea;
        max_delta = std::max(max_delta, std::abs(*eb - *ea));
      }
      eps.push_back(row);
    }
  }
  report["epsilon"] = eps;

  json maro = json::object();
  auto side = [](const json& m) {
    json out = json::object();
    for (const char* which : {"raw", "transformed"}) {
      auto v = jget(m, {"stages", "maro", which, "largest_bounded"});
      out[which] = opt(v);
    }
    if (m.contains("stages") && m["stages"].contains("maro")) {
      out["bounded_raw"] = m["stages"]["maro"]["raw"]["bounded"];
      out["bounded_transformed"] = m["stages"]["maro"]["transformed"]["bounded"];
      out["n_grid"] = m["stages"]["maro"]["raw"]["n_grid"];
    }
    return out;
  };
  maro["a"] = side(a);
  maro["b"] = side(b);
  auto ta = jget(a, {"stages", "maro", "transformed", "largest_bounded"});
  auto tb = jget(b, {"stages", "maro", "transformed", "largest_bounded"});
  maro["transformed_gain"] = (ta && tb) ? json(*tb - *ta) : json(nullptr);
  if (ta && tb) max_delta = std::max(max_delta, std::abs(*tb - *ta));
  report["maro"] = maro;

  json pred = json::array();
  for (const auto* m : {&a, &b}) {
    auto n = jget(*m, {"stages", "maro", "transformed", "largest_bounded"});
    if (!n || *n <= -1.0) continue;
    const json* fits = nullptr;
    if ((*m)["stages"].contains("fits")) {
      const json& f = (*m)["stages"]["fits"];
      if (f.contains("transformed")) fits = &f["transformed"];
      else if (f.contains("raw")) fits = &f["raw"];
    }
    for (double r : (*m)["stages"]["maro"]["transformed"]["r_grid"].get<std::vector<double>>()) {
      json row = {{"run", m->value("run_id", "")}, {"r", r}, {"n_prime", *n}, {"predicted", r / (1.0 + *n)},
                  {"measured", nullptr}};
      if (fits)
        for (const auto& f : *fits)
          if (std::abs(f["r"].get<double>() - r) < 1e-12) row["measured"] = f["epsilon_hat"];
      pred.push_back(row);
    }
  }
  report["predicted_vs_measured"] = pred;
  report["max_abs_delta"] = max_delta;
  report["identical"] = max_delta <= 1e-10;
  return report;
}

void write_compare_series(const json& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << std::setprecision(12);
  int block = 0;
  for (const char* which : {"a", "b"}) {
    for (const char* frame : {"raw", "transformed"}) {
      bool any = false;
      for (const auto& row : report["epsilon"]) {
        if (row["frame"] != frame || row[which].is_null()) continue;
        if (!any) {
          if (block++) out << "\n\n";
          out << "# run " << which << " frame " << frame << ": r epsilon_hat\n";
          any = true;
        }
        out << row["r"].get<double>() << ' ' << row[which].get<double>() << '\n';
      }
    }
  }
  std::string current;
  for (const auto& row : report["predicted_vs_measured"]) {
    const std::string run = row["run"].get<std::string>();
    if (block == 0 || run != current) {
      if (block++) out << "\n\n";
      out << "# run " << run << " N'=" << row["n_prime"].get<double>() << ": r predicted_exponent\n";
      current = run;
    }
    out << row["r"].get<double>() << ' ' << row["predicted"].get<double>() << '\n';
  }
}

std::vector<SelftestLine> selftest(std::uint64_t seed) {
  std::vector<SelftestLine> lines;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  auto add = [&](const std::string& name, bool pass, double value, double bound) {
    std::ostringstream d;
    d << std::setprecision(3) << value << " (bound " << bound << ")";
    lines.push_back({name, pass, d.str()});
  };
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      lines.push_back({name, false, e.what()});
    }
  };
  const double nu_half[] = {0.5};
  const int cut32[] = {32};
  ModelHandle model = build_harmonic_model(nu_half, cut32);
  const Index n = model->buffer_dim();
  auto random_symmetric = [&] {
    CMatrix m(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));
    return CMatrix((m + m.adjoint()) / 2.0);
  };

  guarded("averaging_commutes_with_K0", [&] {
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      GradedOperator avg = average(GradedOperator(model, random_symmetric(), 0.0));
      worst = std::max(worst, commutator_with_k0(*model, avg.matrix()).cwiseAbs().maxCoeff());
    }
    add("averaging_commutes_with_K0", worst <= 1e-12, worst, 1e-12);
  });
  guarded("K0_homological_identity", [&] {
    GradedOperator a(model, random_symmetric(), 0.0);
    K0Solution sol = solve_K0_homological(a);
    CMatrix lhs = -kI * commutator_with_k0(*model, sol.y.matrix());
    double err = (lhs - (a.matrix() - sol.average.matrix())).cwiseAbs().maxCoeff();
    add("K0_homological_identity", err <= 1e-12, err, 1e-12);
  });
  guarded("quasiperiodic_residual", [&] {
    RVector omega(1);
    omega << std::sqrt(2.0);
    QuasiPeriodicOperator w(model, omega, 0.0);
    for (int k = 1; k <= 3; ++k) {
      CMatrix c = random_symmetric() / (1.0 + k);
      w.add({k}, c);
      w.add({-k}, c.adjoint());
    }
    w.add({0}, random_symmetric());
    ResonanceData freq = resonance_data_scalar(*model, 0.5, omega);
    QuasiPeriodicSolution sol = solve_quasiperiodic(w, freq);
    double res = homological_residual(sol, w, freq);
    add("quasiperiodic_residual", res <= 1e-9 && sol.census.absorbed_count == 0, res, 1e-9);
  });
  guarded("lattice_completion_unimodular", [&] {
    FrequencyDecomposition d = decompose_frequency(parse_exact_vector("1, 1, 1"));
    BigInt det = determinant(d.m);
    bool pass = abs(det) == 1 && d.reconstructs() && d.reduced_dim() == 1;
    lines.push_back({"lattice_completion_unimodular", pass, "det=" + to_string(det)});
  });
  guarded("primitivity_rejection", [&] {
    bool fired = false;
    std::string msg;
    try {
      complete_basis(IntMatrix{{BigInt(2), BigInt(0)}}, 2);
    } catch (const InvalidInput& e) {
      fired = true;
      msg = e.what();
    }
    lines.push_back({"primitivity_rejection", fired, fired ? msg : "no rejection"});
  });
  guarded("diophantine_gamma_positive", [&] {
    DiophantineResult r = diophantine_scan(parse_exact_vector("sqrt2"), parse_exact_vector("1"), 2.0, 30);
    add("diophantine_gamma_positive", r.gamma_hat > 0.0 && !r.resonance, r.gamma_hat, 0.0);
  });
  guarded("unitary_exp_unitarity", [&] {
    CMatrix x = random_symmetric();
    CMatrix u = unitary_exp(x, 0.7);
    double err = (u.adjoint() * u - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
    add("unitary_exp_unitarity", err <= 1e-12, err, 1e-12);
  });
  guarded("free_propagation_preserves_norms", [&] {
    RVector omega(1);
    omega << 1.0;
    Hamiltonian h{QuasiPeriodicOperator(model, omega, 0.0)};
    CVector psi0 = CVector::Zero(n);
    psi0(3) = 1.0;
    PropagationOptions po;
    po.integrator = Integrator::magnus4;
    Trajectory tr = propagate(h, psi0, uniform_grid(0.0, 5.0, 1.0), po);
    double err = 0.0;
    for (std::size_t i = 0; i < tr.norms.size(); ++i)
      for (std::size_t r = 0; r < tr.r_list.size(); ++r)
        err = std::max(err, std::abs(tr.norms[i][r] - tr.norms[0][r]));
    add("free_propagation_preserves_norms", err <= 1e-10, err, 1e-10);
  });
  guarded("conjugation_round_trip", [&] {
    RVector omega(1);
    omega << std::sqrt(2.0);
    QuasiPeriodicOperator x(model, omega, 0.0);
    CMatrix c = 0.1 * random_symmetric();
    x.add({1}, c);
    x.add({-1}, c.adjoint());
    std::vector<QuasiPeriodicOperator> gens{x, x};
    CVector psi = CVector::Random(n);
    psi.normalize();
    const double theta[] = {0.3};
    CVector back = conjugate_state(conjugate_state(psi, gens, theta, ChainDirection::inverse), gens, theta,
                                   ChainDirection::forward);
    double err = (back - psi).norm();
    add("conjugation_round_trip", err <= 1e-12, err, 1e-12);
  });
  return lines;
}

}  // namespace nflab
