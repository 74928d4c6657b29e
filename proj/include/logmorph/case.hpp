#pragma once

// Declarative case runner.  A JSON config selects mesh, ambient flow, model
// parameters, stabilization and solver settings; run_case advances the
// morphology field and writes the state field, stress indicator fields, an
// optional line sample, a solver log, and a metrics file into an output
// directory.  All settings default to the 2D stirrer case.

#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "solver.hpp"

namespace logmorph {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LineSpec {
  bool enabled = false;
  Vec<2> p0{}, p1{};
  int n = 200;
};

struct CaseConfig {
  std::string mesh_path;  // empty: generate the mini stirrer
  int mesh_n = 45;
  FlowSpec<2> flow;
  ModelParams model;
  GuardThresholds guards;
  StabConfig stab;
  SolverConfig solver;
  SymTensor<2> psi0{};  // initial log-shape (exponentiated for the S form)
  std::string out_dir = "out";
  int dump_every = 0;  // intermediate state dumps, 0 = final only
  LineSpec line;

  CaseConfig() {
    flow.kind = FlowKind::mrf_stirrer;
    flow.omega = 50 * std::numbers::pi_v<real>;
    solver.ramp_steps = 30;
  }
};

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::galerkin: return "galerkin";
    case Scheme::supg: return "supg";
    case Scheme::vms: return "vms";
    case Scheme::gls_morph: return "gls_morph";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "galerkin") return Scheme::galerkin;
  if (s == "supg") return Scheme::supg;
  if (s == "vms") return Scheme::vms;
  if (s == "gls_morph") return Scheme::gls_morph;
  throw ConfigError("unknown scheme '" + s + "' (galerkin|supg|vms|gls_morph)");
}

// display name in the style of the run-comparison tables
inline std::string scheme_label(Scheme s) {
  return s == Scheme::gls_morph ? "morph-gls" : "log-morph-" + scheme_name(s);
}

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, val] : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (key == k) ok = true;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <class T> inline void fetch(const json& j, const char* where, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + ": wrong type");
  }
}

inline void fetch_vec2(const json& j, const char* where, const char* key, Vec<2>& out) {
  if (!j.contains(key)) return;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2) throw ConfigError(std::string(where) + "." + key + ": expected [x, y]");
  try {
    out[0] = a[0].get<real>();
    out[1] = a[1].get<real>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + ": wrong type");
  }
}

}  // namespace detail

inline CaseConfig load_case(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::fetch;
  CaseConfig c;
  check_keys(j, "config",
             {"mesh", "flow", "model", "guards", "stabilization", "solver", "initial_psi", "output"});

  if (j.contains("mesh")) {
    const auto& m = j.at("mesh");
    check_keys(m, "mesh", {"kind", "path", "n"});
    std::string kind = "mini_stirrer";
    fetch(m, "mesh", "kind", kind);
    if (kind == "file") {
      fetch(m, "mesh", "path", c.mesh_path);
      if (c.mesh_path.empty()) throw ConfigError("mesh: kind 'file' needs a path");
    } else if (kind == "mini_stirrer") {
      fetch(m, "mesh", "n", c.mesh_n);
      if (c.mesh_n < 4) throw ConfigError("mesh.n: too small");
    } else {
      throw ConfigError("mesh.kind: unknown '" + kind + "' (mini_stirrer|file)");
    }
  }

  if (j.contains("flow")) {
    const auto& f = j.at("flow");
    check_keys(f, "flow",
               {"kind", "frame", "gammadot", "omega", "center", "r_interface", "r_outer", "path"});
    std::string kind = "mrf_stirrer", frame = "inertial";
    fetch(f, "flow", "kind", kind);
    fetch(f, "flow", "frame", frame);
    if (kind == "quiescent") c.flow.kind = FlowKind::quiescent;
    else if (kind == "simple_shear") c.flow.kind = FlowKind::simple_shear;
    else if (kind == "rigid_rotation") c.flow.kind = FlowKind::rigid_rotation;
    else if (kind == "mrf_stirrer") c.flow.kind = FlowKind::mrf_stirrer;
    else if (kind == "file") c.flow.kind = FlowKind::file;
    else throw ConfigError("flow.kind: unknown '" + kind + "'");
    if (frame == "inertial") c.flow.frame = Frame::inertial;
    else if (frame == "rotating") c.flow.frame = Frame::rotating;
    else throw ConfigError("flow.frame: unknown '" + frame + "' (inertial|rotating)");
    fetch(f, "flow", "gammadot", c.flow.gammadot);
    fetch(f, "flow", "omega", c.flow.omega);
    detail::fetch_vec2(f, "flow", "center", c.flow.center);
    fetch(f, "flow", "r_interface", c.flow.r_interface);
    fetch(f, "flow", "r_outer", c.flow.r_outer);
    fetch(f, "flow", "path", c.flow.path);
    if (c.flow.kind == FlowKind::file && c.flow.path.empty())
      throw ConfigError("flow: kind 'file' needs a path");
    if (c.flow.kind == FlowKind::mrf_stirrer && !(c.flow.r_interface > 0))
      throw ConfigError("flow.r_interface: must be > 0");
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, "model", {"alpha1", "alpha2", "alpha3", "mu", "rho"});
    fetch(m, "model", "alpha1", c.model.alpha1);
    fetch(m, "model", "alpha2", c.model.alpha2);
    fetch(m, "model", "alpha3", c.model.alpha3);
    fetch(m, "model", "mu", c.model.mu);
    fetch(m, "model", "rho", c.model.rho);
  }

  if (j.contains("guards")) {
    const auto& g = j.at("guards");
    check_keys(g, "guards", {"dd_small", "arg_small", "dd_small_newton", "arg_small_newton"});
    fetch(g, "guards", "dd_small", c.guards.dd_small);
    fetch(g, "guards", "arg_small", c.guards.arg_small);
    fetch(g, "guards", "dd_small_newton", c.guards.dd_small_newton);
    fetch(g, "guards", "arg_small_newton", c.guards.arg_small_newton);
  }

  if (j.contains("stabilization")) {
    const auto& s = j.at("stabilization");
    check_keys(s, "stabilization", {"scheme", "alpha_tau", "alpha_dc", "penalty_eps"});
    std::string scheme;
    fetch(s, "stabilization", "scheme", scheme);
    if (!scheme.empty()) c.stab.scheme = parse_scheme(scheme);
    fetch(s, "stabilization", "alpha_tau", c.stab.alpha_tau);
    fetch(s, "stabilization", "alpha_dc", c.stab.alpha_dc);
    fetch(s, "stabilization", "penalty_eps", c.stab.penalty_eps);
  }

  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    check_keys(s, "solver",
               {"dt", "t_end", "bdf_order", "nr_tol", "nr_max", "krylov_dim", "gmres_rtol", "gmres_max",
                "ilut_fill", "ilut_droptol", "ramp_steps", "strict"});
    fetch(s, "solver", "dt", c.solver.dt);
    fetch(s, "solver", "t_end", c.solver.t_end);
    fetch(s, "solver", "bdf_order", c.solver.bdf_order);
    fetch(s, "solver", "nr_tol", c.solver.nr_tol);
    fetch(s, "solver", "nr_max", c.solver.nr_max);
    fetch(s, "solver", "krylov_dim", c.solver.krylov_dim);
    fetch(s, "solver", "gmres_rtol", c.solver.gmres_rtol);
    fetch(s, "solver", "gmres_max", c.solver.gmres_max);
    fetch(s, "solver", "ilut_fill", c.solver.ilut.fill);
    fetch(s, "solver", "ilut_droptol", c.solver.ilut.droptol);
    fetch(s, "solver", "ramp_steps", c.solver.ramp_steps);
    fetch(s, "solver", "strict", c.solver.strict);
  }

  if (j.contains("initial_psi")) {
    const auto& a = j.at("initial_psi");
    if (!a.is_array() || a.size() != 3) throw ConfigError("initial_psi: expected [xx, xy, yy]");
    try {
      for (int k = 0; k < 3; ++k) c.psi0[k] = a[k].get<real>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("initial_psi: wrong type");
    }
  }

  if (j.contains("output")) {
    const auto& o = j.at("output");
    check_keys(o, "output", {"dir", "dump_every", "line"});
    fetch(o, "output", "dir", c.out_dir);
    fetch(o, "output", "dump_every", c.dump_every);
    if (c.dump_every < 0) throw ConfigError("output.dump_every: must be >= 0");
    if (o.contains("line")) {
      const auto& l = o.at("line");
      check_keys(l, "output.line", {"p0", "p1", "n"});
      c.line.enabled = true;
      detail::fetch_vec2(l, "output.line", "p0", c.line.p0);
      detail::fetch_vec2(l, "output.line", "p1", c.line.p1);
      fetch(l, "output.line", "n", c.line.n);
      if (c.line.n < 1) throw ConfigError("output.line.n: must be >= 1");
    }
  }

  try {
    validate(c.stab);
    validate(c.solver);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const real steps = c.solver.t_end / c.solver.dt;
  const int nsteps = int(std::llround(steps));
  if (std::abs(steps - nsteps) > 1e-9 * std::max<real>(1, nsteps))
    throw ConfigError("solver: t_end must be an integer multiple of dt");
  if (c.dump_every > 0 && nsteps % c.dump_every != 0)
    throw ConfigError("output.dump_every: must divide the step count");
  return c;
}

inline CaseConfig load_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse failure in " + path + ": " + e.what());
  }
  return load_case(j);
}

namespace detail {

inline SymTensor<2> exp_sym2(const SymTensor<2>& a) { return mat_exp_neg(eig_sym(-1.0 * a)); }

// indicator value with non-physical states reported as nan rather than
// aborting the dump (a diverged S-form run can leave non-PD nodes)
template <class F> inline real try_indicator(F&& f) {
  try {
    return f();
  } catch (const std::domain_error&) {
    return std::numeric_limits<real>::quiet_NaN();
  }
}

}  // namespace detail

// Artifacts written under cfg.out_dir:
//   mesh.txt                the mesh actually used
//   psi.csv / s.csv         final state field (and psi_NNNNNN.csv dumps)
//   distortion.csv          cell distortion D per node
//   sigma_eff.csv           effective shear stress per node [Pa]
//   sigma_f.csv             instantaneous fluid shear stress per node [Pa]
//   line.csv                sigma_eff along the configured line
//   solver.log              one line per Newton iteration
//   metrics.json            run statistics, table column order
inline RunMetrics run_case(const CaseConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const auto at = [&](const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); };

  const Mesh<2> mesh = cfg.mesh_path.empty() ? gen_mini_stirrer(cfg.mesh_n) : load_mesh<2>(cfg.mesh_path);
  save_mesh(at("mesh.txt"), mesh);

  FEMSystem<2> sys;
  sys.mesh = &mesh;
  sys.flow.spec = cfg.flow;
  sys.stab = cfg.stab;
  sys.p = cfg.model;
  sys.guards = cfg.guards;
  sys.setup();
  if (cfg.flow.kind == FlowKind::file) sys.flow.file = ingest_flow<2>(cfg.flow.path, mesh);

  const bool logf = sys.log_form();
  const std::string state_name = logf ? "psi" : "s";
  const SymTensor<2> state0 = logf ? cfg.psi0 : detail::exp_sym2(cfg.psi0);
  std::vector<real> y(sys.n_dofs());
  for (int i = 0; i < mesh.n_nodes(); ++i)
    for (int c = 0; c < 3; ++c) y[i * 3 + c] = state0[c];

  const auto dump_state = [&](const std::vector<real>& v, const std::string& name) {
    Field f = make_sym_field<2>(mesh.n_nodes());
    f.v = v;
    save_field(at(name + ".csv"), mesh, f);
  };

  std::ofstream log(at("solver.log"));
  if (!log) throw std::runtime_error("cannot open for writing: " + at("solver.log"));
  const RunMetrics m = advance_bdf(sys, y, cfg.solver, &log, [&](int step, const std::vector<real>& v) {
    if (cfg.dump_every > 0 && step % cfg.dump_every == 0) {
      char tag[32];
      std::snprintf(tag, sizeof tag, "%s_%06d", state_name.c_str(), step);
      dump_state(v, tag);
    }
  });

  dump_state(y, state_name);

  // nodal shape indicators from the final state
  Field dist, seff, sf;
  dist.comps = seff.comps = sf.comps = 1;
  dist.v.assign(mesh.n_nodes(), 0.0);
  seff.v.assign(mesh.n_nodes(), 0.0);
  sf.v.assign(mesh.n_nodes(), 0.0);
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    SymTensor<2> t;
    for (int c = 0; c < 3; ++c) t[c] = y[i * 3 + c];
    const SymTensor<2> s = logf ? detail::exp_sym2(t) : t;
    const real d = detail::try_indicator([&] { return distortion(eig_sym(s)); });
    dist.v[i] = d;
    seff.v[i] = detail::try_indicator([&] { return sigma_eff(d, cfg.model); });
  }

  // instantaneous fluid stress from the ambient kinematics (final ramp state)
  if (cfg.flow.kind == FlowKind::file) {
    std::vector<int> touch(mesh.n_nodes(), 0);
    std::vector<SymTensor<2>> emean(mesh.n_nodes());
    std::array<real, 3> nctr;
    nctr.fill(1.0 / 3);
    for (int e = 0; e < mesh.n_elems(); ++e) {
      const Vec<2> xc = (1.0 / 3) * (mesh.nodes[mesh.elems[e][0]] + mesh.nodes[mesh.elems[e][1]] +
                                     mesh.nodes[mesh.elems[e][2]]);
      const KinematicsSample<2> kin = sys.flow.at_element(e, nctr, xc, mesh.mrf(e));
      for (int v = 0; v < 3; ++v) {
        emean[mesh.elems[e][v]] += kin.E;
        ++touch[mesh.elems[e][v]];
      }
    }
    for (int i = 0; i < mesh.n_nodes(); ++i)
      sf.v[i] = sigma_f((1.0 / std::max(1, touch[i])) * emean[i], cfg.model.mu);
  } else {
    for (int i = 0; i < mesh.n_nodes(); ++i) {
      const KinematicsSample<2> kin = sample(sys.flow.spec, mesh.nodes[i], false, sys.flow.omega_scale);
      sf.v[i] = sigma_f(kin.E, cfg.model.mu);
    }
  }
  save_field(at("distortion.csv"), mesh, dist, "distortion");
  save_field(at("sigma_eff.csv"), mesh, seff, "sigma_eff");
  save_field(at("sigma_f.csv"), mesh, sf, "sigma_f");

  if (cfg.line.enabled)
    save_csv(at("line.csv"), "s,sigma_eff", line_sample(mesh, seff, cfg.line.p0, cfg.line.p1, cfg.line.n));

  nlohmann::ordered_json mj;
  mj["case"] = {{"scheme", scheme_name(cfg.stab.scheme)},
                {"label", scheme_label(cfg.stab.scheme)},
                {"form", logf ? "log" : "morph"},
                {"n_nodes", mesh.n_nodes()},
                {"n_elems", mesh.n_elems()},
                {"dt", cfg.solver.dt},
                {"n_steps", m.n_steps}};
  mj["n_gmres"] = m.n_gmres_total;
  mj["n_nr"] = m.n_nr_total;
  mj["eps_det"] = m.eps_det;
  mj["max_det_dev"] = m.max_det_dev;
  mj["n_unconverged"] = m.n_unconverged;
  mj["diverged"] = m.diverged;
  mj["step_converged"] = m.step_converged;
  std::ofstream mo(at("metrics.json"));
  if (!mo) throw std::runtime_error("cannot open for writing: " + at("metrics.json"));
  mo << mj.dump(2) << "\n";
  return m;
}

// metrics file contents, as read back for comparisons
struct CaseMetrics {
  std::string label, form;
  int n_nodes = 0, n_elems = 0, n_steps = 0;
  long n_gmres = 0, n_nr = 0;
  real eps_det = 0, max_det_dev = 0;
  int n_unconverged = 0;
  bool diverged = false;
};

inline CaseMetrics load_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metrics: " + path);
  nlohmann::json j;
  try {
    in >> j;
    CaseMetrics m;
    m.label = j.at("case").at("label").get<std::string>();
    m.form = j.at("case").at("form").get<std::string>();
    m.n_nodes = j.at("case").at("n_nodes").get<int>();
    m.n_elems = j.at("case").at("n_elems").get<int>();
    m.n_steps = j.at("case").at("n_steps").get<int>();
    m.n_gmres = j.at("n_gmres").get<long>();
    m.n_nr = j.at("n_nr").get<long>();
    m.eps_det = j.at("eps_det").get<real>();
    m.max_det_dev = j.at("max_det_dev").get<real>();
    m.n_unconverged = j.at("n_unconverged").get<int>();
    m.diverged = j.at("diverged").get<bool>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed metrics file " + path + ": " + e.what());
  }
}

// side-by-side run report with ordering flags
inline std::string compare_runs(const CaseMetrics& a, const CaseMetrics& b) {
  if (a.n_nodes != b.n_nodes || a.n_elems != b.n_elems || a.n_steps != b.n_steps)
    throw ConfigError("compare: runs are not the same case (mesh or step count differs)");
  std::ostringstream out;
  char buf[256];
  const auto row = [&](const char* name, real va, real vb) {
    std::snprintf(buf, sizeof buf, "%-14s %14.6g %14.6g %14.6g\n", name, double(va), double(vb),
                  double(vb - va));
    out << buf;
  };
  std::snprintf(buf, sizeof buf, "%-14s %14s %14s %14s\n", "metric", a.label.c_str(), b.label.c_str(),
                "delta");
  out << buf;
  row("n_gmres", real(a.n_gmres), real(b.n_gmres));
  row("n_nr", real(a.n_nr), real(b.n_nr));
  row("eps_det", a.eps_det, b.eps_det);
  row("max_det_dev", a.max_det_dev, b.max_det_dev);
  row("n_unconverged", a.n_unconverged, b.n_unconverged);

  out << "flags:\n";
  bool any = false;
  const real lo = std::min(a.eps_det, b.eps_det), hi = std::max(a.eps_det, b.eps_det);
  if (lo > 0 && hi >= 1e3 * lo) {
    std::snprintf(buf, sizeof buf, "  eps_det: %s smaller by %.2e x\n",
                  (a.eps_det < b.eps_det ? a.label : b.label).c_str(), double(hi / lo));
    out << buf;
    any = true;
  }
  if (a.n_nr != b.n_nr) {
    std::snprintf(buf, sizeof buf, "  n_nr: %s needs fewer newton iterations (%ld vs %ld)\n",
                  (a.n_nr < b.n_nr ? a.label : b.label).c_str(), std::min(a.n_nr, b.n_nr),
                  std::max(a.n_nr, b.n_nr));
    out << buf;
    any = true;
  }
  if (a.n_gmres != b.n_gmres) {
    std::snprintf(buf, sizeof buf, "  n_gmres: %s needs fewer linear iterations (%ld vs %ld)\n",
                  (a.n_gmres < b.n_gmres ? a.label : b.label).c_str(), std::min(a.n_gmres, b.n_gmres),
                  std::max(a.n_gmres, b.n_gmres));
    out << buf;
    any = true;
  }
  if (a.diverged != b.diverged) {
    out << "  divergence: " << (a.diverged ? a.label : b.label) << " diverged, the other did not\n";
    any = true;
  }
  if (!any) out << "  none: all deltas zero\n";
  return out.str();
}

}  // namespace logmorph
