// cbct: cone-beam CT reconstruction toolkit CLI.
//
// Subcommands: phantom, project, backproject, noise, enhance, recon,
// pipeline, eval, info. Exit codes: 0 success, 1 computational failure,
// 2 usage or IO error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "cbct/arrays.hpp"
#include "cbct/enhance.hpp"
#include "cbct/noise.hpp"
#include "cbct/phantoms.hpp"
#include "cbct/pipeline.hpp"
#include "cbct/projector.hpp"
#include "cbct/solvers.hpp"
#include "cbct/threads.hpp"

namespace {

struct Common {
  std::string config_path;
  int threads = 0;
};

cbct::PipelineConfig load_base_config(const Common& common) {
  if (common.threads > 0) cbct::set_thread_cap(common.threads);
  if (common.config_path.empty()) return cbct::desk_config();
  const cbct::Config ini = cbct::load_config_file(common.config_path);
  return cbct::pipeline_config_from(ini);
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("-c,--config", common.config_path,
                  "INI config with [geometry] [dose] [sem] [solver] [iem] [eval] [io]");
  cmd->add_option("--threads", common.threads, "cap worker threads (also: CBCT_THREADS)");
}

int run_phantom(const Common& common, const std::string& type, const std::string& out,
                double radius, double value, double cx, double cy, double cz) {
  const auto cfg = load_base_config(common);
  const auto& g = cfg.geometry;
  cbct::Volume vol;
  if (type == "shepp_logan")
    vol = cbct::shepp_logan_3d(g.nx, g.ny, g.nz, g.voxel_size);
  else if (type == "sphere")
    vol = cbct::sphere_phantom({cx, cy, cz}, radius, value, g.nx, g.ny, g.nz, g.voxel_size);
  else
    throw CLI::ValidationError("--type", "unknown phantom '" + type +
                                             "' (known: shepp_logan, sphere)");
  cbct::write_array(out, vol);
  std::printf("wrote %s (%dx%dx%d, voxel %g mm)\n", out.c_str(), vol.nx, vol.ny, vol.nz,
              vol.voxel_size);
  return 0;
}

int run_project(const Common& common, const std::string& in, const std::string& out) {
  const auto cfg = load_base_config(common);
  const cbct::SystemOperator op(cfg.geometry);
  const cbct::Volume vol = cbct::read_volume(in);
  const cbct::Sinogram sino = cbct::forward_project(op, vol);
  cbct::write_array(out, sino);
  std::printf("wrote %s (%d views, %dx%d detector)\n", out.c_str(), sino.num_views,
              sino.nv, sino.nu);
  return 0;
}

int run_backproject(const Common& common, const std::string& in, const std::string& out) {
  const auto cfg = load_base_config(common);
  const cbct::SystemOperator op(cfg.geometry);
  const cbct::Sinogram sino = cbct::read_sinogram(in);
  const cbct::Volume vol = cbct::back_project(op, sino);
  cbct::write_array(out, vol);
  std::printf("wrote %s (%dx%dx%d)\n", out.c_str(), vol.nx, vol.ny, vol.nz);
  return 0;
}

int run_noise(const Common& common, const std::string& in, const std::string& out,
              const std::string& dose, std::optional<double> i0,
              std::optional<std::uint64_t> seed) {
  auto cfg = load_base_config(common);
  cbct::DoseModel model = cfg.dose;
  if (dose == "low")
    model.i0 = 1e4;
  else if (dose == "clinical")
    model.i0 = 1e6;
  else if (!dose.empty())
    throw CLI::ValidationError("--dose", "unknown preset '" + dose +
                                             "' (known: low, clinical)");
  if (i0) model.i0 = *i0;
  if (seed) model.seed = *seed;
  const cbct::Sinogram clean = cbct::read_sinogram(in);
  const cbct::Sinogram noisy = cbct::simulate_dose(clean, model);
  cbct::write_array(out, noisy, cbct::ScalarType::Float32,
                    {{"i0", std::to_string(model.i0)}, {"seed", std::to_string(model.seed)}});
  std::printf("wrote %s (i0 = %g, seed = %llu)\n", out.c_str(), model.i0,
              static_cast<unsigned long long>(model.seed));
  return 0;
}

int run_enhance(const Common& common, const std::string& in, const std::string& out,
                const std::string& domain) {
  const auto cfg = load_base_config(common);
  const cbct::ArrayInfo info = cbct::read_array_info(in);
  const std::string use_domain = domain.empty()
                                     ? (info.kind == "sinogram" ? "sinogram" : "image")
                                     : domain;
  if (use_domain == "sinogram") {
    const cbct::Sinogram s = cbct::read_sinogram(in);
    cbct::write_array(out, cbct::enhance(cfg.sem, s));
  } else if (use_domain == "image") {
    const cbct::Volume v = cbct::read_volume(in);
    cbct::write_array(out, cbct::enhance(cfg.iem, v));
  } else {
    throw CLI::ValidationError("--domain", "must be sinogram or image");
  }
  std::printf("wrote %s (%s domain)\n", out.c_str(), use_domain.c_str());
  return 0;
}

int run_recon(const Common& common, const std::string& method, const std::string& in,
              const std::string& out, const std::string& report_path,
              std::optional<int> iters, std::optional<double> grad_tol, bool nonneg,
              const std::string& window) {
  auto cfg = load_base_config(common);
  cfg.method = method;
  if (iters) cfg.solver.max_iters = *iters;
  if (grad_tol) cfg.solver.grad_tol = *grad_tol;
  if (nonneg) cfg.solver.nonneg = true;
  if (window == "hann")
    cfg.fdk.window = cbct::FdkWindow::hann;
  else if (window == "ramlak")
    cfg.fdk.window = cbct::FdkWindow::ramlak;
  else if (!window.empty())
    throw CLI::ValidationError("--window", "must be ramlak or hann");
  cfg.sem = cbct::identity_stage(cbct::EnhanceDomain::sinogram);
  cfg.iem = cbct::identity_stage(cbct::EnhanceDomain::image);
  cfg.input_path = in;
  cfg.output_path = out;
  cfg.report_path = report_path;
  const auto result = cbct::run_pipeline(cfg);
  std::printf("wrote %s (method %s, %.3f s)\n", out.c_str(), method.c_str(),
              result.report.total_seconds);
  return 0;
}

int run_pipeline_cmd(const Common& common, const std::string& in, const std::string& out,
                     const std::string& truth, const std::string& report_path,
                     bool intermediates) {
  auto cfg = load_base_config(common);
  if (!in.empty()) cfg.input_path = in;
  if (!out.empty()) cfg.output_path = out;
  if (!truth.empty()) cfg.truth_path = truth;
  if (!report_path.empty()) cfg.report_path = report_path;
  if (intermediates) cfg.write_intermediates = true;
  const auto result = cbct::run_pipeline(cfg);
  std::printf("pipeline %s: sem %.3f s, recon %.3f s, iem %.3f s\n",
              result.report.method.c_str(), result.report.stages[0].seconds,
              result.report.stages[1].seconds, result.report.stages[2].seconds);
  for (const auto& stage : result.report.stages)
    if (stage.mse_vs_truth)
      std::printf("  mse after %-6s %.8g\n", stage.name.c_str(), *stage.mse_vs_truth);
  return 0;
}

int run_eval(const Common& common, const std::string& methods, const std::string& doses,
             const std::string& seeds, const std::string& out_prefix) {
  auto cfg = load_base_config(common);
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ','))
      if (!item.empty()) out.push_back(item);
    return out;
  };
  std::vector<std::string> m = methods.empty() ? cfg.eval_methods : split(methods);
  std::vector<std::string> d = doses == "none" ? std::vector<std::string>{}
                               : doses.empty() ? cfg.eval_doses
                                               : split(doses);
  std::vector<std::uint64_t> s = cfg.eval_seeds;
  if (!seeds.empty()) {
    s.clear();
    for (const auto& t : split(seeds)) s.push_back(std::stoull(t));
  }
  const auto rows = cbct::evaluate_methods(cfg, m, d, s);
  std::fputs(cbct::eval_table_text(rows).c_str(), stdout);
  if (!out_prefix.empty()) {
    const std::string jsonl_path = out_prefix + ".jsonl";
    std::ofstream jsonl(jsonl_path);
    if (!jsonl) throw cbct::IoError("cannot open for writing: " + jsonl_path);
    jsonl << cbct::eval_rows_jsonl(rows);
    const std::string table_path = out_prefix + ".txt";
    std::ofstream table(table_path);
    if (!table) throw cbct::IoError("cannot open for writing: " + table_path);
    table << cbct::eval_table_text(rows);
    std::printf("wrote %s and %s\n", jsonl_path.c_str(), table_path.c_str());
  }
  return 0;
}

int run_info(const std::string& path) {
  const cbct::ArrayInfo info = cbct::read_array_info(path);
  std::printf("%s\n", path.c_str());
  std::printf("  kind:   %s\n", info.kind.c_str());
  std::printf("  dtype:  %s\n", info.dtype.c_str());
  std::printf("  dims:   %lld x %lld x %lld (layout %s)\n",
              static_cast<long long>(info.dims[0]), static_cast<long long>(info.dims[1]),
              static_cast<long long>(info.dims[2]), info.layout.c_str());
  if (info.kind == "volume") std::printf("  voxel:  %g mm\n", info.voxel_size);
  for (const auto& [k, v] : info.extra) std::printf("  %s: %s\n", k.c_str(), v.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cbct: cone-beam CT reconstruction toolkit"};
  app.require_subcommand(1);

  Common common;

  // phantom
  auto* phantom = app.add_subcommand("phantom", "rasterize a synthetic volume");
  add_common(phantom, common);
  std::string ph_type = "shepp_logan", ph_out;
  double ph_radius = 0.25, ph_value = 1.0, ph_cx = 0, ph_cy = 0, ph_cz = 0;
  phantom->add_option("--type", ph_type, "shepp_logan | sphere");
  phantom->add_option("-o,--out", ph_out, ".ctarr output")->required();
  phantom->add_option("--radius", ph_radius, "sphere radius (normalized)");
  phantom->add_option("--value", ph_value, "sphere density");
  phantom->add_option("--cx", ph_cx, "sphere center x (normalized)");
  phantom->add_option("--cy", ph_cy, "sphere center y (normalized)");
  phantom->add_option("--cz", ph_cz, "sphere center z (normalized)");

  // project / backproject
  auto* project = app.add_subcommand("project", "forward-project a volume");
  add_common(project, common);
  std::string pr_in, pr_out;
  project->add_option("-i,--volume", pr_in, "input volume .ctarr")->required();
  project->add_option("-o,--out", pr_out, "output sinogram .ctarr")->required();

  auto* backproject = app.add_subcommand("backproject", "apply the adjoint operator");
  add_common(backproject, common);
  std::string bp_in, bp_out;
  backproject->add_option("-i,--sino", bp_in, "input sinogram .ctarr")->required();
  backproject->add_option("-o,--out", bp_out, "output volume .ctarr")->required();

  // noise
  auto* noise = app.add_subcommand("noise", "simulate a dose-limited acquisition");
  add_common(noise, common);
  std::string no_in, no_out, no_dose;
  std::optional<double> no_i0;
  std::optional<std::uint64_t> no_seed;
  noise->add_option("-i,--in", no_in, "clean sinogram .ctarr")->required();
  noise->add_option("-o,--out", no_out, "noisy sinogram .ctarr")->required();
  noise->add_option("--dose", no_dose, "low | clinical");
  noise->add_option("--i0", no_i0, "photons per pixel (overrides preset)");
  noise->add_option("--seed", no_seed, "noise seed");

  // enhance
  auto* enhance_cmd = app.add_subcommand("enhance", "apply the [sem]/[iem] enhancer");
  add_common(enhance_cmd, common);
  std::string en_in, en_out, en_domain;
  enhance_cmd->add_option("-i,--in", en_in, "input .ctarr")->required();
  enhance_cmd->add_option("-o,--out", en_out, "output .ctarr")->required();
  enhance_cmd->add_option("--domain", en_domain, "sinogram | image (default: by file kind)");

  // recon
  auto* recon = app.add_subcommand("recon", "reconstruct a sinogram");
  add_common(recon, common);
  std::string rc_method, rc_in, rc_out, rc_report, rc_window;
  std::optional<int> rc_iters;
  std::optional<double> rc_tol;
  bool rc_nonneg = false;
  recon->add_option("-m,--method", rc_method, "fdk | sirt | gd | nag")
      ->required()
      ->check(CLI::IsMember({"fdk", "sirt", "gd", "nag"}));
  recon->add_option("-i,--sino", rc_in, "input sinogram .ctarr")->required();
  recon->add_option("-o,--out", rc_out, "output volume .ctarr")->required();
  recon->add_option("--report", rc_report, "JSON solver report path");
  recon->add_option("--iters", rc_iters, "iteration budget");
  recon->add_option("--grad-tol", rc_tol, "relative stopping tolerance");
  recon->add_flag("--nonneg", rc_nonneg, "project iterates onto x >= 0");
  recon->add_option("--window", rc_window, "fdk filter window: ramlak | hann");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "run sem -> recon -> iem");
  add_common(pipeline, common);
  std::string pl_in, pl_out, pl_truth, pl_report;
  bool pl_intermediates = false;
  pipeline->add_option("-i,--sino", pl_in, "input sinogram .ctarr (or [io] input)");
  pipeline->add_option("-o,--out", pl_out, "output volume .ctarr");
  pipeline->add_option("--truth", pl_truth, "ground-truth volume for MSE reporting");
  pipeline->add_option("--report", pl_report, "JSON run report path");
  pipeline->add_flag("--intermediates", pl_intermediates, "also write the SEM sinogram");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "method x dose x seed MSE sweep");
  add_common(eval_cmd, common);
  std::string ev_methods, ev_doses, ev_seeds, ev_out;
  eval_cmd->add_option("--methods", ev_methods, "csv, e.g. fdk,sirt,nag,nag+sem,nag+sem+iem");
  eval_cmd->add_option("--doses", ev_doses, "csv of low|clinical|<i0>, or 'none'");
  eval_cmd->add_option("--seeds", ev_seeds, "csv of integer seeds");
  eval_cmd->add_option("-o,--out-prefix", ev_out, "write <prefix>.jsonl and <prefix>.txt");

  // info
  auto* info = app.add_subcommand("info", "print a .ctarr header");
  std::string in_path;
  info->add_option("file", in_path, ".ctarr file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*phantom)
      return run_phantom(common, ph_type, ph_out, ph_radius, ph_value, ph_cx, ph_cy, ph_cz);
    if (*project) return run_project(common, pr_in, pr_out);
    if (*backproject) return run_backproject(common, bp_in, bp_out);
    if (*noise) return run_noise(common, no_in, no_out, no_dose, no_i0, no_seed);
    if (*enhance_cmd) return run_enhance(common, en_in, en_out, en_domain);
    if (*recon)
      return run_recon(common, rc_method, rc_in, rc_out, rc_report, rc_iters, rc_tol,
                       rc_nonneg, rc_window);
    if (*pipeline)
      return run_pipeline_cmd(common, pl_in, pl_out, pl_truth, pl_report, pl_intermediates);
    if (*eval_cmd) return run_eval(common, ev_methods, ev_doses, ev_seeds, ev_out);
    if (*info) return run_info(in_path);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const cbct::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
