#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "cbct/noise.hpp"
#include "cbct/phantoms.hpp"
#include "cbct/pipeline.hpp"
#include "cbct/projector.hpp"
#include "doctest.h"

using namespace cbct;

namespace {

PipelineConfig small_cfg() {
  PipelineConfig cfg = desk_config();
  cfg.geometry = make_circular(57.5, 105.0, 32, 32, 0.2, 0.2, 24, 32, 32, 32, 0.1);
  cfg.solver.max_iters = 15;
  cfg.solver.record_history = false;
  return cfg;
}

Sinogram noisy_fixture(const PipelineConfig& cfg, std::uint64_t seed, Volume* truth_out) {
  const Volume truth = shepp_logan_3d(cfg.geometry.nx, cfg.geometry.ny, cfg.geometry.nz,
                                      cfg.geometry.voxel_size);
  const Sinogram clean = forward_project(SystemOperator(cfg.geometry), truth);
  if (truth_out) *truth_out = truth;
  return simulate_dose(clean, low_dose(seed));
}

}  // namespace

TEST_CASE("ini text populates every section") {
  const char* text = R"(
# experiment configuration
[geometry]
nx = 32
ny = 32
nz = 32
nu = 32
nv = 32
num_views = 24
sod = 57.5
sdd = 105
du = 0.2
dv = 0.2
voxel_size = 0.1

[dose]
dose = low
seed = 9

[sem]
kind = gaussian
sigma = 1.5

[solver]
method = nag
max_iters = 7
nonneg = true

[iem]
kind = tv
lambda = 0.05
iterations = 10

[eval]
methods = fdk, nag
doses = low
seeds = 4, 5
)";
  const auto cfg = pipeline_config_from(parse_config(text));
  CHECK(cfg.geometry.nx == 32);
  CHECK(cfg.geometry.num_views == 24);
  CHECK(cfg.dose.i0 == doctest::Approx(1e4));
  CHECK(cfg.dose.seed == 9);
  CHECK(cfg.sem.enhancer.kind == EnhancerKind::gaussian);
  CHECK(cfg.sem.enhancer.sigma == doctest::Approx(1.5));
  CHECK(cfg.method == "nag");
  CHECK(cfg.solver.max_iters == 7);
  CHECK(cfg.solver.nonneg);
  CHECK(cfg.iem.enhancer.kind == EnhancerKind::tv);
  CHECK(cfg.iem.enhancer.lambda == doctest::Approx(0.05));
  CHECK(cfg.eval_methods == std::vector<std::string>{"fdk", "nag"});
  CHECK(cfg.eval_doses == std::vector<std::string>{"low"});
  CHECK(cfg.eval_seeds == std::vector<std::uint64_t>{4, 5});
}

TEST_CASE("malformed config lines are rejected") {
  CHECK_THROWS_AS(parse_config("[geometry\nsod = 1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("novalue"), std::invalid_argument);
  CHECK_THROWS_AS(pipeline_config_from(parse_config("[solver]\nmethod = art")),
                  std::invalid_argument);
  CHECK_THROWS_AS(pipeline_config_from(parse_config("[geometry]\nsod = abc")),
                  std::invalid_argument);
}

TEST_CASE("identity stages reproduce the bare reconstruction bitwise") {
  auto cfg = small_cfg();
  cfg.method = "fdk";
  const Sinogram clean =
      forward_project(SystemOperator(cfg.geometry),
                      shepp_logan_3d(cfg.geometry.nx, cfg.geometry.ny, cfg.geometry.nz,
                                     cfg.geometry.voxel_size));
  const auto piped = run_pipeline_on(cfg, clean, nullptr);
  const Volume direct = fdk(clean, cfg.geometry, cfg.fdk);
  CHECK(piped.volume.data == direct.data);
}

TEST_CASE("pipeline reports cover all stages with nonnegative times") {
  auto cfg = small_cfg();
  cfg.sem = default_sem();
  cfg.iem = default_iem();
  cfg.iem.enhancer.iterations = 5;
  Volume truth;
  const Sinogram noisy = noisy_fixture(cfg, 3, &truth);
  const auto result = run_pipeline_on(cfg, noisy, &truth);
  REQUIRE(result.report.stages.size() == 3);
  CHECK(result.report.stages[0].name == "sem");
  CHECK(result.report.stages[1].name == "recon");
  CHECK(result.report.stages[2].name == "iem");
  for (const auto& s : result.report.stages) CHECK(s.seconds >= 0.0);
  CHECK(result.report.stages[1].mse_vs_truth.has_value());
  CHECK(result.report.stages[2].mse_vs_truth.has_value());
  const std::string json = report_to_json(result.report);
  CHECK(json.find("\"recon\"") != std::string::npos);
  CHECK(json.find("mse_vs_truth") != std::string::npos);
}

TEST_CASE("pipeline runs are deterministic end to end") {
  auto cfg = small_cfg();
  cfg.sem = default_sem();
  cfg.iem = default_iem();
  cfg.iem.enhancer.iterations = 5;
  const Sinogram noisy = noisy_fixture(cfg, 8, nullptr);
  const auto a = run_pipeline_on(cfg, noisy, nullptr);
  const auto b = run_pipeline_on(cfg, noisy, nullptr);
  CHECK(a.volume.data == b.volume.data);
}

TEST_CASE("file-driven pipeline writes artifacts and reads them back") {
  namespace fs = std::filesystem;
  auto cfg = small_cfg();
  cfg.method = "fdk";
  const auto dir = fs::temp_directory_path() / "cbct_pipeline_test";
  fs::create_directories(dir);
  Volume truth;
  const Sinogram noisy = noisy_fixture(cfg, 5, &truth);
  cfg.input_path = (dir / "in.ctarr").string();
  cfg.output_path = (dir / "out.ctarr").string();
  cfg.truth_path = (dir / "truth.ctarr").string();
  cfg.report_path = (dir / "report.json").string();
  write_array(cfg.input_path, noisy);
  write_array(cfg.truth_path, truth);
  const auto result = run_pipeline(cfg);
  const Volume reread = read_volume(cfg.output_path);
  CHECK(reread.data == result.volume.data);
  CHECK(fs::exists(cfg.report_path));
  fs::remove_all(dir);
}

TEST_CASE("missing input files raise IoError naming the path") {
  auto cfg = small_cfg();
  cfg.input_path = "/nonexistent/input.ctarr";
  CHECK_THROWS_WITH_AS(run_pipeline(cfg), doctest::Contains("input.ctarr"), IoError);
}

TEST_CASE("degenerate sweep: one method, no doses") {
  auto cfg = small_cfg();
  cfg.method = "fdk";
  const Volume truth = eval_ground_truth(cfg);
  const Sinogram clean = forward_project(SystemOperator(cfg.geometry), truth);
  const auto rows = evaluate_methods(cfg, {"fdk"}, {}, {});
  REQUIRE(rows.size() == 1);
  const Volume direct = fdk(clean, cfg.geometry, cfg.fdk);
  CHECK(rows[0].mse == doctest::Approx(mse(direct, truth)).epsilon(1e-12));
  CHECK(rows[0].dose_label == "none");
}

TEST_CASE("sweep cardinality is methods x doses") {
  auto cfg = small_cfg();
  cfg.solver.max_iters = 5;
  const auto rows =
      evaluate_methods(cfg, {"fdk", "nag", "nag+sem"}, {"low", "clinical"}, {1, 2});
  CHECK(rows.size() == 6);
  // row order is method-major, dose-minor
  CHECK(rows[0].method_label == "fdk");
  CHECK(rows[0].dose_label == "low");
  CHECK(rows[1].dose_label == "clinical");
  CHECK(rows[4].method_label == "nag+sem");
  const std::string table = eval_table_text(rows);
  CHECK(table.find("nag+sem") != std::string::npos);
  const std::string jsonl = eval_rows_jsonl(rows);
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 6);
}

TEST_CASE("unknown method labels are rejected") {
  auto cfg = small_cfg();
  CHECK_THROWS_AS(evaluate_methods(cfg, {"swin"}, {"low"}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_methods(cfg, {"nag+foo"}, {"low"}, {1}), std::invalid_argument);
}
