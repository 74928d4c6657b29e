// Case runner for the log-morphology cell deformation model.
//
//   logmorph run [-c case.json] [-o outdir] [--scheme vms] [--strict]
//   logmorph gen-mesh [-n 45] [-o mesh.txt]
//   logmorph sample -m mesh.txt -f field.csv --p0 X Y --p1 X Y [-n 200] [-o line.csv]
//   logmorph compare a/metrics.json b/metrics.json [-o report.txt]
//
// Exit codes: 0 success, 1 diverged run in strict mode (or runtime failure),
// 2 configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "logmorph/logmorph.hpp"

using namespace logmorph;

namespace {

// component names from a field file header (node_id,x,y,<names>)
std::string field_value_names(const std::string& path) {
  std::ifstream in(path);
  std::string header;
  if (!in || !std::getline(in, header)) throw std::runtime_error("cannot read header of " + path);
  int commas = 0;
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == ',' && ++commas == 3) return header.substr(i + 1);
  throw std::runtime_error("malformed field header in " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"log-morphology red blood cell deformation runner"};
  app.require_subcommand(1);

  std::string cfg_path, out_dir, scheme_override;
  bool strict = false, tolerant = false;
  auto* cmd_run = app.add_subcommand("run", "run a case from a JSON config");
  cmd_run->add_option("-c,--config", cfg_path, "case config (omit for the built-in stirrer defaults)");
  cmd_run->add_option("-o,--out", out_dir, "output directory override");
  cmd_run->add_option("--scheme", scheme_override, "stabilization override: galerkin|supg|vms|gls_morph");
  cmd_run->add_flag("--strict", strict, "stop on an unconverged step and exit 1");
  cmd_run->add_flag("--tolerant", tolerant, "continue past unconverged steps (overrides config)");

  int mesh_n = 45;
  std::string mesh_out = "mini_stirrer.txt";
  auto* cmd_gen = app.add_subcommand("gen-mesh", "write the generated mini-stirrer mesh");
  cmd_gen->add_option("-n,--nodes", mesh_n, "nodes per side");
  cmd_gen->add_option("-o,--out", mesh_out, "mesh file path");

  std::string mesh_path, field_path, csv_out = "line.csv";
  std::vector<double> p0v, p1v;
  int nsamp = 200;
  auto* cmd_sample = app.add_subcommand("sample", "sample a nodal field along a line");
  cmd_sample->add_option("-m,--mesh", mesh_path, "mesh file")->required();
  cmd_sample->add_option("-f,--field", field_path, "field CSV")->required();
  cmd_sample->add_option("--p0", p0v, "line start X Y")->expected(2)->required();
  cmd_sample->add_option("--p1", p1v, "line end X Y")->expected(2)->required();
  cmd_sample->add_option("-n,--samples", nsamp, "number of intervals");
  cmd_sample->add_option("-o,--out", csv_out, "output CSV");

  std::vector<std::string> metrics_paths;
  std::string report_out;
  auto* cmd_cmp = app.add_subcommand("compare", "compare two run metrics files");
  cmd_cmp->add_option("metrics", metrics_paths, "two metrics.json paths")->expected(2)->required();
  cmd_cmp->add_option("-o,--out", report_out, "also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (cmd_run->parsed()) {
      CaseConfig cfg = cfg_path.empty() ? CaseConfig{} : load_case_file(cfg_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (!scheme_override.empty()) cfg.stab.scheme = parse_scheme(scheme_override);
      if (strict) cfg.solver.strict = true;
      if (tolerant) cfg.solver.strict = false;
      const RunMetrics m = run_case(cfg);
      std::printf("%s: %d steps, n_gmres %ld, n_nr %ld, eps_det %.3e, max|det-1| %.3e%s\n",
                  scheme_label(cfg.stab.scheme).c_str(), m.n_steps, m.n_gmres_total, m.n_nr_total,
                  double(m.eps_det), double(m.max_det_dev),
                  m.n_unconverged ? " [unconverged steps]" : "");
      std::printf("artifacts in %s\n", cfg.out_dir.c_str());
      return (cfg.solver.strict && m.diverged) ? 1 : 0;
    }
    if (cmd_gen->parsed()) {
      const Mesh<2> mesh = gen_mini_stirrer(mesh_n);
      save_mesh(mesh_out, mesh);
      std::printf("wrote %s: %d nodes, %d elements\n", mesh_out.c_str(), mesh.n_nodes(), mesh.n_elems());
      return 0;
    }
    if (cmd_sample->parsed()) {
      const Mesh<2> mesh = load_mesh<2>(mesh_path);
      const Field f = load_field<2>(field_path, mesh);
      Vec<2> p0, p1;
      p0[0] = p0v[0];
      p0[1] = p0v[1];
      p1[0] = p1v[0];
      p1[1] = p1v[1];
      save_csv(csv_out, "s," + field_value_names(field_path), line_sample(mesh, f, p0, p1, nsamp));
      std::printf("wrote %s: %d samples\n", csv_out.c_str(), nsamp + 1);
      return 0;
    }
    if (cmd_cmp->parsed()) {
      const std::string report = compare_runs(load_metrics(metrics_paths[0]), load_metrics(metrics_paths[1]));
      std::cout << report;
      if (!report_out.empty()) {
        std::ofstream out(report_out);
        if (!out) throw std::runtime_error("cannot open for writing: " + report_out);
        out << report;
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
