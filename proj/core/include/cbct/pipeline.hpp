#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbct/config.hpp"
#include "cbct/enhance.hpp"
#include "cbct/geometry.hpp"
#include "cbct/noise.hpp"
#include "cbct/solvers.hpp"

namespace cbct {

// End-to-end run description: SEM -> reconstruction -> IEM, each enhancement
// stage replaceable by identity.
struct PipelineConfig {
  ConeBeamGeometry geometry;
  DoseModel dose;
  EnhancementStage sem = identity_stage(EnhanceDomain::sinogram);
  std::string method = "nag";  // fdk | sirt | gd | nag
  LsSolverConfig solver;
  FdkConfig fdk;
  EnhancementStage iem = identity_stage(EnhanceDomain::image);

  std::string input_path;   // measured sinogram (.ctarr)
  std::string output_path;  // reconstructed volume (.ctarr)
  std::string truth_path;   // optional ground-truth volume for MSE reporting
  std::string report_path;  // optional JSON run report
  bool write_intermediates = false;

  // [eval] section
  std::string eval_phantom = "shepp_logan";  // shepp_logan | sphere
  double eval_density_scale = 1.0;
  std::vector<std::string> eval_methods{"fdk", "sirt", "nag", "nag+sem", "nag+sem+iem"};
  std::vector<std::string> eval_doses{"low", "clinical"};
  std::vector<std::uint64_t> eval_seeds{1, 2, 3};
};

// Desk-scale defaults: 64^3 volume, 64x64 detector, 120 views, geometry
// shrunk so shepp-logan line integrals land in the 0-4 range where both
// dose presets are meaningful.
PipelineConfig desk_config();

// Fills a PipelineConfig from INI sections [geometry] [dose] [sem] [solver]
// [iem] [eval], leaving defaults where keys are absent.
PipelineConfig pipeline_config_from(const Config& ini, const PipelineConfig& base);
PipelineConfig pipeline_config_from(const Config& ini);

struct StageReport {
  std::string name;
  double seconds = 0.0;
  std::optional<double> mse_vs_truth;  // volume-domain stages, when truth given
};

struct PipelineRunReport {
  std::string method;
  std::vector<StageReport> stages;  // always sem, recon, iem
  double total_seconds = 0.0;
  SolverReport solver;  // iterative methods only (empty history for fdk)
};

struct PipelineResult {
  Volume volume;
  PipelineRunReport report;
};

// Core pipeline on an in-memory sinogram.
PipelineResult run_pipeline_on(const PipelineConfig& cfg, const Sinogram& measured,
                               const Volume* truth);
// File-driven variant: loads input_path (and truth_path when set), writes
// output/report/intermediate artifacts as configured.
PipelineResult run_pipeline(const PipelineConfig& cfg);

std::string report_to_json(const PipelineRunReport& report);

struct EvalRow {
  std::string method_label;
  std::string dose_label;
  double mse = 0.0;
  double psnr = 0.0;
  double wall_time = 0.0;  // seconds, averaged over seeds
};

// Table-style sweep: for each (method, dose) simulate each seed's acquisition,
// run the pipeline variant, and average MSE/PSNR against the ground truth.
// Method labels are a base solver plus optional stages, e.g. "nag+sem+iem".
// An empty dose list evaluates the noiseless sinogram once per method.
std::vector<EvalRow> evaluate_methods(const PipelineConfig& cfg,
                                      const std::vector<std::string>& methods,
                                      const std::vector<std::string>& doses,
                                      const std::vector<std::uint64_t>& seeds);

std::string eval_table_text(const std::vector<EvalRow>& rows);
std::string eval_rows_jsonl(const std::vector<EvalRow>& rows);

// Ground truth used by evaluate_methods for the configured phantom.
Volume eval_ground_truth(const PipelineConfig& cfg);

}  // namespace cbct
