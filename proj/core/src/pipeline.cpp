#include "cbct/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cbct/phantoms.hpp"
#include "cbct/projector.hpp"
#include "json.hpp"

namespace cbct {

namespace {

using nlohmann::json;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

DoseModel dose_from_config(const ConfigSection& s, const DoseModel& base) {
  DoseModel m = base;
  const std::string preset = get_string_or(s, "dose", "");
  if (preset == "low")
    m.i0 = 1e4;
  else if (preset == "clinical")
    m.i0 = 1e6;
  else if (!preset.empty())
    throw std::invalid_argument("dose: unknown preset '" + preset +
                                "' (known: low, clinical)");
  m.i0 = get_double_or(s, "i0", m.i0);
  m.count_floor = get_double_or(s, "count_floor", m.count_floor);
  m.seed = get_u64_or(s, "seed", m.seed);
  return m;
}

LsSolverConfig solver_from_config(const ConfigSection& s, const LsSolverConfig& base) {
  LsSolverConfig c = base;
  c.max_iters = get_int_or(s, "max_iters", c.max_iters);
  c.grad_tol = get_double_or(s, "grad_tol", c.grad_tol);
  if (s.count("lipschitz")) c.lipschitz = get_double(s, "lipschitz");
  c.safety = get_double_or(s, "safety", c.safety);
  c.nonneg = get_bool_or(s, "nonneg", c.nonneg);
  c.record_history = get_bool_or(s, "record_history", c.record_history);
  return c;
}

FdkConfig fdk_from_config(const ConfigSection& s, const FdkConfig& base) {
  FdkConfig c = base;
  const std::string window = get_string_or(s, "window", "");
  if (window == "ramlak")
    c.window = FdkWindow::ramlak;
  else if (window == "hann")
    c.window = FdkWindow::hann;
  else if (!window.empty())
    throw std::invalid_argument("fdk: unknown window '" + window +
                                "' (known: ramlak, hann)");
  c.pad_to = get_int_or(s, "pad_to", c.pad_to);
  return c;
}

struct MethodSpec {
  std::string base;  // fdk | sirt | gd | nag
  bool sem = false;
  bool iem = false;
};

MethodSpec parse_method_label(const std::string& label) {
  MethodSpec spec;
  std::string part;
  std::istringstream in(label);
  bool first = true;
  while (std::getline(in, part, '+')) {
    if (first) {
      spec.base = part;
      first = false;
    } else if (part == "sem") {
      spec.sem = true;
    } else if (part == "iem") {
      spec.iem = true;
    } else {
      throw std::invalid_argument("eval: unknown stage '" + part + "' in method label '" +
                                  label + "' (known stages: sem, iem)");
    }
  }
  if (spec.base != "fdk" && spec.base != "sirt" && spec.base != "gd" && spec.base != "nag")
    throw std::invalid_argument("eval: unknown method '" + spec.base +
                                "' (known: fdk, sirt, gd, nag)");
  return spec;
}

Volume reconstruct(const PipelineConfig& cfg, const std::string& method,
                   const Sinogram& sino, SolverReport* solver_report) {
  const SystemOperator op(cfg.geometry);
  if (method == "fdk") return fdk(sino, cfg.geometry, cfg.fdk);
  LsResult res;
  if (method == "nag")
    res = nag_ls(op, sino, cfg.solver);
  else if (method == "gd")
    res = gd_ls(op, sino, cfg.solver);
  else if (method == "sirt")
    res = sirt(op, sino, cfg.solver);
  else
    throw std::invalid_argument("recon: unknown method '" + method +
                                "' (known: fdk, sirt, gd, nag)");
  if (solver_report) *solver_report = res.report;
  return std::move(res.x);
}

}  // namespace

PipelineConfig desk_config() {
  PipelineConfig cfg;
  cfg.geometry = make_circular(57.5, 105.0, 64, 64, 0.1, 0.1, 120, 64, 64, 64, 0.05);
  cfg.dose = clinical_dose(0);
  cfg.solver.max_iters = 100;
  cfg.solver.grad_tol = 1e-4;
  cfg.solver.record_history = false;
  return cfg;
}

PipelineConfig pipeline_config_from(const Config& ini, const PipelineConfig& base) {
  PipelineConfig cfg = base;
  if (auto it = ini.find("geometry"); it != ini.end() && !it->second.empty()) {
    ConfigSection merged = geometry_to_config(base.geometry);
    for (const auto& [k, v] : it->second) merged[k] = v;
    cfg.geometry = geometry_from_config(merged);
  }
  if (auto it = ini.find("dose"); it != ini.end())
    cfg.dose = dose_from_config(it->second, base.dose);
  if (auto it = ini.find("sem"); it != ini.end())
    cfg.sem = load_enhancer(it->second, EnhanceDomain::sinogram);
  if (auto it = ini.find("iem"); it != ini.end())
    cfg.iem = load_enhancer(it->second, EnhanceDomain::image);
  if (auto it = ini.find("solver"); it != ini.end()) {
    const auto& s = it->second;
    cfg.method = get_string_or(s, "method", cfg.method);
    cfg.solver = solver_from_config(s, base.solver);
    cfg.fdk = fdk_from_config(s, base.fdk);
  }
  if (auto it = ini.find("eval"); it != ini.end()) {
    const auto& s = it->second;
    cfg.eval_phantom = get_string_or(s, "phantom", cfg.eval_phantom);
    cfg.eval_density_scale = get_double_or(s, "density_scale", cfg.eval_density_scale);
    if (s.count("methods")) cfg.eval_methods = split_csv(s.at("methods"));
    if (s.count("doses")) cfg.eval_doses = split_csv(s.at("doses"));
    if (s.count("seeds")) {
      cfg.eval_seeds.clear();
      for (const auto& t : split_csv(s.at("seeds")))
        cfg.eval_seeds.push_back(std::stoull(t));
    }
    cfg.truth_path = get_string_or(s, "truth", cfg.truth_path);
  }
  if (auto it = ini.find("io"); it != ini.end()) {
    const auto& s = it->second;
    cfg.input_path = get_string_or(s, "input", cfg.input_path);
    cfg.output_path = get_string_or(s, "output", cfg.output_path);
    cfg.truth_path = get_string_or(s, "truth", cfg.truth_path);
    cfg.report_path = get_string_or(s, "report", cfg.report_path);
    cfg.write_intermediates = get_bool_or(s, "write_intermediates", cfg.write_intermediates);
  }
  if (cfg.method != "fdk" && cfg.method != "sirt" && cfg.method != "gd" &&
      cfg.method != "nag")
    throw std::invalid_argument("solver: unknown method '" + cfg.method +
                                "' (known: fdk, sirt, gd, nag)");
  return cfg;
}

PipelineConfig pipeline_config_from(const Config& ini) {
  return pipeline_config_from(ini, desk_config());
}

PipelineResult run_pipeline_on(const PipelineConfig& cfg, const Sinogram& measured,
                               const Volume* truth) {
  PipelineResult out;
  out.report.method = cfg.method;
  const double t_start = now_seconds();

  double t0 = now_seconds();
  Sinogram enhanced = enhance(cfg.sem, measured);
  StageReport sem{"sem", now_seconds() - t0, std::nullopt};
  out.report.stages.push_back(sem);

  t0 = now_seconds();
  Volume recon = reconstruct(cfg, cfg.method, enhanced, &out.report.solver);
  StageReport rec{"recon", now_seconds() - t0, std::nullopt};
  if (truth) rec.mse_vs_truth = mse(recon, *truth);
  out.report.stages.push_back(rec);

  t0 = now_seconds();
  out.volume = enhance(cfg.iem, recon);
  StageReport iem{"iem", now_seconds() - t0, std::nullopt};
  if (truth) iem.mse_vs_truth = mse(out.volume, *truth);
  out.report.stages.push_back(iem);

  out.report.total_seconds = now_seconds() - t_start;
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  if (cfg.input_path.empty())
    throw std::invalid_argument("pipeline: no input sinogram configured");
  const Sinogram measured = read_sinogram(cfg.input_path);
  Volume truth;
  const bool have_truth = !cfg.truth_path.empty();
  if (have_truth) truth = read_volume(cfg.truth_path);

  PipelineResult result = run_pipeline_on(cfg, measured, have_truth ? &truth : nullptr);

  if (cfg.write_intermediates && !cfg.output_path.empty()) {
    const Sinogram enhanced = enhance(cfg.sem, measured);
    write_array(cfg.output_path + ".sem.ctarr", enhanced);
  }
  if (!cfg.output_path.empty()) write_array(cfg.output_path, result.volume);
  if (!cfg.report_path.empty()) {
    std::ofstream out(cfg.report_path);
    if (!out) throw IoError("cannot open for writing: " + cfg.report_path);
    out << report_to_json(result.report) << "\n";
  }
  return result;
}

std::string report_to_json(const PipelineRunReport& report) {
  json j;
  j["method"] = report.method;
  j["total_seconds"] = report.total_seconds;
  j["stages"] = json::array();
  for (const auto& s : report.stages) {
    json js;
    js["name"] = s.name;
    js["seconds"] = s.seconds;
    if (s.mse_vs_truth) js["mse_vs_truth"] = *s.mse_vs_truth;
    j["stages"].push_back(js);
  }
  if (!report.solver.objective_history.empty() || report.solver.iterations_run > 0) {
    json js;
    js["iterations_run"] = report.solver.iterations_run;
    js["final_grad_norm"] = report.solver.final_grad_norm;
    js["terminated_by"] =
        report.solver.terminated_by == StopReason::grad_tol ? "grad_tol" : "max_iters";
    js["lipschitz_used"] = report.solver.lipschitz_used;
    js["objective_history"] = report.solver.objective_history;
    j["solver"] = js;
  }
  return j.dump(2);
}

Volume eval_ground_truth(const PipelineConfig& cfg) {
  if (!cfg.truth_path.empty()) return read_volume(cfg.truth_path);
  const auto& g = cfg.geometry;
  Volume truth;
  if (cfg.eval_phantom == "shepp_logan")
    truth = shepp_logan_3d(g.nx, g.ny, g.nz, g.voxel_size);
  else if (cfg.eval_phantom == "sphere")
    truth = sphere_phantom({0, 0, 0}, 0.6, 1.0, g.nx, g.ny, g.nz, g.voxel_size);
  else
    throw std::invalid_argument("eval: unknown phantom '" + cfg.eval_phantom +
                                "' (known: shepp_logan, sphere)");
  if (cfg.eval_density_scale != 1.0)
    for (auto& v : truth.data) v *= float(cfg.eval_density_scale);
  return truth;
}

std::vector<EvalRow> evaluate_methods(const PipelineConfig& cfg,
                                      const std::vector<std::string>& methods,
                                      const std::vector<std::string>& doses,
                                      const std::vector<std::uint64_t>& seeds) {
  const Volume truth = eval_ground_truth(cfg);
  const SystemOperator op(cfg.geometry);
  const Sinogram clean = op.forward(truth);
  double peak = 0.0;
  for (float v : truth.data) peak = std::max(peak, double(v));
  if (peak <= 0.0) peak = 1.0;

  const std::vector<std::uint64_t> use_seeds =
      seeds.empty() ? std::vector<std::uint64_t>{cfg.dose.seed} : seeds;

  // Work shared between rows ("nag", "nag+sem", "nag+sem+iem" reuse the same
  // reconstruction of the same acquisition) is computed once and reused; the
  // recorded wall time of a cached stage is attributed to every row using it.
  struct TimedSino {
    Sinogram sino;
    double seconds;
  };
  struct TimedVol {
    Volume vol;
    double seconds;
  };
  std::map<std::string, TimedSino> sino_cache;
  std::map<std::string, TimedVol> recon_cache;

  auto acquisition = [&](const std::string& dose_label,
                         std::uint64_t seed) -> const TimedSino& {
    const std::string key = dose_label + "|" + std::to_string(seed);
    auto it = sino_cache.find(key);
    if (it != sino_cache.end()) return it->second;
    if (dose_label == "none") return sino_cache.emplace(key, TimedSino{clean, 0.0}).first->second;
    DoseModel model = cfg.dose;
    if (dose_label == "low")
      model.i0 = 1e4;
    else if (dose_label == "clinical")
      model.i0 = 1e6;
    else
      model.i0 = std::stod(dose_label);  // numeric i0
    model.seed = seed;
    return sino_cache.emplace(key, TimedSino{simulate_dose(clean, model), 0.0})
        .first->second;
  };
  auto enhanced_acquisition = [&](const std::string& dose_label,
                                  std::uint64_t seed) -> const TimedSino& {
    const std::string key = "sem|" + dose_label + "|" + std::to_string(seed);
    auto it = sino_cache.find(key);
    if (it != sino_cache.end()) return it->second;
    const TimedSino& raw = acquisition(dose_label, seed);
    const double t0 = now_seconds();
    Sinogram enhanced = enhance(cfg.sem, raw.sino);
    const double dt = now_seconds() - t0;
    return sino_cache.emplace(key, TimedSino{std::move(enhanced), dt}).first->second;
  };
  auto reconstruction = [&](const MethodSpec& spec, const std::string& dose_label,
                            std::uint64_t seed) -> const TimedVol& {
    const std::string key = spec.base + "|" + (spec.sem ? "sem" : "raw") + "|" +
                            dose_label + "|" + std::to_string(seed);
    auto it = recon_cache.find(key);
    if (it != recon_cache.end()) return it->second;
    const TimedSino& input =
        spec.sem ? enhanced_acquisition(dose_label, seed) : acquisition(dose_label, seed);
    const double t0 = now_seconds();
    Volume vol = reconstruct(cfg, spec.base, input.sino, nullptr);
    const double dt = now_seconds() - t0;
    return recon_cache.emplace(key, TimedVol{std::move(vol), dt}).first->second;
  };

  std::vector<EvalRow> rows;
  for (const auto& label : methods) {
    const MethodSpec spec = parse_method_label(label);
    const std::vector<std::string> use_doses =
        doses.empty() ? std::vector<std::string>{"none"} : doses;
    for (const auto& dose_label : use_doses) {
      EvalRow row{label, dose_label, 0, 0, 0};
      const auto cell_seeds =
          dose_label == "none" ? std::vector<std::uint64_t>{0} : use_seeds;
      for (const auto seed : cell_seeds) {
        const TimedVol& rec = reconstruction(spec, dose_label, seed);
        double seconds = rec.seconds;
        if (spec.sem) seconds += enhanced_acquisition(dose_label, seed).seconds;
        Volume vol = rec.vol;
        if (spec.iem) {
          const double t0 = now_seconds();
          vol = enhance(cfg.iem, vol);
          seconds += now_seconds() - t0;
        }
        row.wall_time += seconds;
        row.mse += mse(vol, truth);
      }
      row.mse /= double(cell_seeds.size());
      row.wall_time /= double(cell_seeds.size());
      row.psnr = psnr(peak, row.mse);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string eval_table_text(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %-10s %-12s %-10s %-10s\n", "method", "dose",
                "mse", "psnr_db", "seconds");
  out << line;
  out << std::string(64, '-') << "\n";
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-18s %-10s %-12.6g %-10.4g %-10.3g\n",
                  r.method_label.c_str(), r.dose_label.c_str(), r.mse, r.psnr,
                  r.wall_time);
    out << line;
  }
  return out.str();
}

std::string eval_rows_jsonl(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  for (const auto& r : rows) {
    json j;
    j["method"] = r.method_label;
    j["dose"] = r.dose_label;
    j["mse"] = r.mse;
    j["psnr_db"] = std::isfinite(r.psnr) ? json(r.psnr) : json("inf");
    j["wall_time_seconds"] = r.wall_time;
    out << j.dump() << "\n";
  }
  return out.str();
}

}  // namespace cbct
