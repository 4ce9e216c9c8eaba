// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Criteria run at their stated tolerances and report the
// measured quantities for diagnosis.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cbct/enhance.hpp"
#include "cbct/noise.hpp"
#include "cbct/phantoms.hpp"
#include "cbct/pipeline.hpp"
#include "cbct/projector.hpp"
#include "cbct/solvers.hpp"

using namespace cbct;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << "    violated: " << what << "\n";
    }
  }
  void note(const std::string& what) { detail << "    " << what << "\n"; }
};

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double dotf(const std::vector<float>& a, const std::vector<float>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += double(a[i]) * double(b[i]);
  return acc;
}
double norm2f(const std::vector<float>& a) { return std::sqrt(dotf(a, a)); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// criterion 1: adjoint identity across geometries
void criterion_adjoint(Check& c) {
  const std::vector<ConeBeamGeometry> geoms = {
      make_circular(50.0, 100.0, 8, 8, 2.0, 2.0, 6, 8, 8, 8, 1.0),
      make_circular(60.0, 90.0, 7, 9, 1.5, 0.8, 5, 8, 6, 10, 1.0),   // anisotropic pitch
      make_circular(40.0, 120.0, 12, 4, 1.0, 3.0, 3, 9, 9, 5, 0.7),  // odd dims
      make_circular(57.5, 105.0, 16, 16, 0.4, 0.45, 10, 16, 16, 16, 0.1),
      make_circular(80.0, 160.0, 10, 6, 2.5, 1.0, 8, 12, 10, 6, 1.1),
  };
  double worst = 0.0;
  unsigned seed = 1;
  for (const auto& g : geoms) {
    const SystemOperator op(g);
    for (int trial = 0; trial < 20; ++trial) {
      std::mt19937 rng(seed++);
      std::normal_distribution<float> dist;
      Volume x = Volume::zeros(g.nx, g.ny, g.nz, g.voxel_size);
      for (auto& v : x.data) v = dist(rng);
      Sinogram y = Sinogram::zeros(g.num_views, g.nv, g.nu);
      for (auto& v : y.data) v = dist(rng);
      const Sinogram ax = forward_project(op, x);
      const Volume aty = back_project(op, y);
      const double lhs = dotf(ax.data, y.data);
      const double rhs = dotf(x.data, aty.data);
      const double budget =
          1e-4 * (norm2f(ax.data) * norm2f(y.data) + norm2f(x.data) * norm2f(aty.data));
      const double err = std::abs(lhs - rhs);
      worst = std::max(worst, budget > 0 ? err / budget : 0.0);
      c.require(err <= budget, "adjoint identity, |<Ax,y>-<x,A'y>| = " + fmt(err) +
                                   " > budget " + fmt(budget));
    }
  }
  c.note("worst error/budget ratio: " + fmt(worst));
}

// ---------------------------------------------------------------------------
// criterion 2: dense-oracle equivalence on the 8^3 / 6-view geometry
void criterion_dense(Check& c) {
  const auto g = make_circular(50.0, 100.0, 8, 8, 2.0, 2.0, 6, 8, 8, 8, 1.0);
  const SystemOperator op(g);
  const Eigen::MatrixXd A = dense_matrix(op);

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> dist;
  Eigen::VectorXd x(A.cols()), y(A.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = dist(rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = dist(rng);

  std::vector<double> xv(x.data(), x.data() + x.size()), fwd(std::size_t(A.rows()));
  op.forward_into(std::span<const double>(xv), std::span<double>(fwd));
  const Eigen::VectorXd Ax = A * x;
  double max_fwd = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    max_fwd = std::max(max_fwd, std::abs(fwd[std::size_t(i)] - Ax[i]));

  std::vector<double> yv(y.data(), y.data() + y.size()), bck(std::size_t(A.cols()));
  op.back_into(std::span<const double>(yv), std::span<double>(bck));
  const Eigen::VectorXd Aty = A.transpose() * y;
  double max_bck = 0.0;
  for (Eigen::Index i = 0; i < A.cols(); ++i)
    max_bck = std::max(max_bck, std::abs(bck[std::size_t(i)] - Aty[i]));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A.transpose() * A);
  const double lambda_max = eig.eigenvalues().maxCoeff();
  const auto pw = operator_norm_sq(op, 2000, 1e-12, 42);

  c.require(max_fwd <= 1e-5, "forward vs dense max abs = " + fmt(max_fwd));
  c.require(max_bck <= 1e-5, "adjoint vs dense max abs = " + fmt(max_bck));
  c.require(std::abs(pw.value - lambda_max) <= 0.01 * lambda_max,
            "operator_norm_sq " + fmt(pw.value) + " vs dense " + fmt(lambda_max));
  c.note("max |forward - dense| = " + fmt(max_fwd) + ", max |adjoint - dense| = " +
         fmt(max_bck));
  c.note("power iteration " + fmt(pw.value) + " vs dense lambda_max " + fmt(lambda_max));
}

// ---------------------------------------------------------------------------
// criterion 3: analytic ball projection accuracy at 64^3
void criterion_ball_projection(Check& c) {
  const auto g = make_circular(57.5, 105.0, 64, 64, 0.1, 0.1, 120, 64, 64, 64, 0.05);
  const SystemOperator op(g);
  const double radius = 0.5, value = 1.0;
  const double r_mm = radius * double(g.nx) * g.voxel_size / 2.0;
  const Volume ball =
      sphere_phantom({0, 0, 0}, radius, value, g.nx, g.ny, g.nz, g.voxel_size);
  const Sinogram expect = analytic_sphere_sinogram(g, {0, 0, 0}, radius, value);
  const Sinogram got = forward_project(op, ball);

  double max_err = 0.0, rms_err = 0.0, rms_ref = 0.0;
  const double core = 0.8 * r_mm;
  for (std::size_t i = 0; i < got.data.size(); ++i) {
    const double e = double(got.data[i]) - double(expect.data[i]);
    max_err = std::max(max_err, std::abs(e));
    // impact parameter from the exact chord: chord = 2 sqrt(r^2 - d^2)
    const double chord = expect.data[i];
    const double d2 = r_mm * r_mm - chord * chord / (4.0 * value * value);
    if (chord > 0.0 && d2 < core * core) {
      rms_err += e * e;
      rms_ref += chord * chord;
    }
  }
  const double rms_rel = std::sqrt(rms_err / rms_ref);
  c.require(max_err <= 2.0 * g.voxel_size * value,
            "max |forward - chord| = " + fmt(max_err) + " > " +
                fmt(2.0 * g.voxel_size * value));
  c.require(rms_rel <= 0.01, "core-ray relative RMS = " + fmt(rms_rel));
  c.note("max abs err " + fmt(max_err) + " (budget " + fmt(2.0 * g.voxel_size * value) +
         "), core RMS " + fmt(rms_rel));
}

// ---------------------------------------------------------------------------
// criteria 4 and 5: Nesterov bound and acceleration on dense-oracle problems
struct OracleProblem {
  std::string name;
  SystemOperator op;
  Sinogram b;
  Eigen::VectorXd x_star;
  double f_star;
  double f0;
};

OracleProblem make_problem(const std::string& name, int views, unsigned seed,
                           double noise) {
  const auto g = make_circular(50.0, 100.0, 8, 8, 2.0, 2.0, views, 8, 8, 8, 1.0);
  SystemOperator op(g);
  const Eigen::MatrixXd A = dense_matrix(op);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::VectorXd xt(A.cols());
  for (Eigen::Index i = 0; i < xt.size(); ++i) xt[i] = dist(rng);
  Eigen::VectorXd b = A * xt;
  if (noise > 0.0)
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] += noise * dist(rng);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);  // min-norm solve
  Eigen::VectorXd x_star = cod.solve(b);
  const double f_star = 0.5 * (A * x_star - b).squaredNorm();
  Sinogram bs = Sinogram::zeros(g.num_views, g.nv, g.nu);
  for (Eigen::Index i = 0; i < b.size(); ++i) bs.data[std::size_t(i)] = float(b[i]);
  return OracleProblem{name,   std::move(op), std::move(bs),
                       x_star, f_star,        0.5 * b.squaredNorm()};
}

void criterion_nesterov_bound(Check& c) {
  const std::vector<OracleProblem> problems = {
      make_problem("consistent", 12, 101, 0.0),
      make_problem("inconsistent", 12, 102, 0.5),
      make_problem("rank-deficient", 6, 103, 0.3),  // 384 rays < 512 voxels
  };
  for (const auto& p : problems) {
    LsSolverConfig cfg;
    cfg.max_iters = 250;
    cfg.grad_tol = 0.0;
    const auto res = nag_ls(p.op, p.b, cfg);
    const double Lhat = res.report.lipschitz_used;
    const Eigen::MatrixXd A = dense_matrix(p.op);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A.transpose() * A);
    const double lambda_max = eig.eigenvalues().maxCoeff();
    c.require(Lhat >= lambda_max,
              p.name + ": step constant " + fmt(Lhat) + " below lambda_max " +
                  fmt(lambda_max));
    const double dist0 = p.x_star.squaredNorm();
    const auto& h = res.report.objective_history;
    double worst_margin = 1e300;
    bool ok = true;
    for (std::size_t k = 0; k < h.size(); ++k) {
      const double bound = 2.0 * Lhat * dist0 / double((k + 1) * (k + 1));
      const double gap = h[k] - p.f_star;
      worst_margin = std::min(worst_margin, bound - gap);
      if (gap > bound) ok = false;
    }
    c.require(ok, p.name + ": objective gap exceeded the accelerated bound");
    c.note(p.name + ": smallest bound margin " + fmt(worst_margin) + " over " +
           std::to_string(h.size()) + " iterates");
  }
}

void criterion_acceleration(Check& c) {
  const OracleProblem p = make_problem("inconsistent", 12, 102, 0.5);
  const double target_gap = 1e-6 * p.f0;

  auto first_hit = [&](bool momentum, int budget) {
    LsSolverConfig cfg;
    cfg.max_iters = budget;
    cfg.grad_tol = 0.0;
    const auto res = momentum ? nag_ls(p.op, p.b, cfg) : gd_ls(p.op, p.b, cfg);
    const auto& h = res.report.objective_history;
    for (std::size_t k = 0; k < h.size(); ++k)
      if (h[k] - p.f_star <= target_gap) return int(k);
    return -1;
  };
  const int k_gd = first_hit(false, 200000);
  c.require(k_gd > 0, "gradient descent never reached the 1e-6 relative gap");
  if (k_gd > 0) {
    const int k_nag = first_hit(true, k_gd);
    c.require(k_nag > 0 && 2 * k_nag <= k_gd,
              "nag took " + std::to_string(k_nag) + " iterations vs gd " +
                  std::to_string(k_gd));
    c.note("iterations to gap: nag " + std::to_string(k_nag) + ", gd " +
           std::to_string(k_gd) + " (ratio " +
           fmt(k_nag > 0 ? double(k_nag) / double(k_gd) : -1.0) + ")");
  }
}

// ---------------------------------------------------------------------------
// criterion 6: FDK sanity on the analytic ball
void criterion_fdk(Check& c) {
  const auto g = make_circular(57.5, 105.0, 64, 64, 0.1, 0.1, 180, 64, 64, 64, 0.05);
  const double radius = 0.5, value = 1.0;
  const Sinogram sino = analytic_sphere_sinogram(g, {0, 0, 0}, radius, value);
  const Volume rec = fdk(sino, g);
  double sum = 0.0;
  int count = 0;
  const double r_inner = 0.5 * radius;
  for (int z = 0; z < g.nz; ++z)
    for (int y = 0; y < g.ny; ++y)
      for (int x = 0; x < g.nx; ++x) {
        const double px = (x - (g.nx - 1) / 2.0) * 2.0 / g.nx;
        const double py = (y - (g.ny - 1) / 2.0) * 2.0 / g.ny;
        const double pz = (z - (g.nz - 1) / 2.0) * 2.0 / g.nz;
        if (px * px + py * py + pz * pz <= r_inner * r_inner) {
          sum += rec.at(x, y, z);
          ++count;
        }
      }
  const double interior_mean = sum / count;
  c.require(std::abs(interior_mean - value) <= 0.10 * value,
            "interior mean " + fmt(interior_mean) + " vs true " + fmt(value));
  c.note("interior mean " + fmt(interior_mean) + " (true " + fmt(value) + ", " +
         std::to_string(count) + " voxels)");
}

// ---------------------------------------------------------------------------
// criterion 7: method ordering at desk scale
void criterion_ordering(Check& c) {
  PipelineConfig cfg = desk_config();
  cfg.sem = default_sem();
  cfg.iem = default_iem();
  const std::vector<std::string> methods{"fdk", "nag", "nag+sem", "nag+sem+iem"};
  const auto rows = evaluate_methods(cfg, methods, {"low", "clinical"}, {1, 2, 3});
  auto find = [&](const std::string& m, const std::string& d) {
    for (const auto& r : rows)
      if (r.method_label == m && r.dose_label == d) return r.mse;
    return -1.0;
  };
  const double fdk_low = find("fdk", "low");
  const double nag_low = find("nag", "low");
  const double sem_low = find("nag+sem", "low");
  const double iem_low = find("nag+sem+iem", "low");
  c.note("low dose mse: fdk " + fmt(fdk_low) + ", nag " + fmt(nag_low) + ", nag+sem " +
         fmt(sem_low) + ", nag+sem+iem " + fmt(iem_low));
  c.require(fdk_low > nag_low, "mse(fdk) > mse(nag) at low dose");
  c.require(nag_low > sem_low, "mse(nag) > mse(nag+sem) at low dose");
  c.require(sem_low >= iem_low, "mse(nag+sem) >= mse(nag+sem+iem) at low dose");

  const double nag_clin = find("nag", "clinical");
  const double sem_clin = find("nag+sem", "clinical");
  const double iem_clin = find("nag+sem+iem", "clinical");
  c.note("clinical dose mse: nag " + fmt(nag_clin) + ", nag+sem " + fmt(sem_clin) +
         ", nag+sem+iem " + fmt(iem_clin));
  c.require(sem_low < nag_low && sem_clin < nag_clin,
            "nag+sem beats bare nag at both doses");
  c.require(iem_low < nag_low && iem_clin < nag_clin,
            "nag+sem+iem beats bare nag at both doses");
}

// ---------------------------------------------------------------------------
// criterion 8: end-to-end determinism
void criterion_determinism(Check& c) {
  namespace fs = std::filesystem;
  PipelineConfig cfg = desk_config();
  cfg.sem = default_sem();
  cfg.iem = default_iem();
  cfg.solver.max_iters = 30;
  const Volume truth = eval_ground_truth(cfg);
  const Sinogram clean = forward_project(SystemOperator(cfg.geometry), truth);
  const Sinogram noisy = simulate_dose(clean, low_dose(7));

  const auto dir = fs::temp_directory_path() / "cbct_acceptance_det";
  fs::create_directories(dir);
  cfg.input_path = (dir / "in.ctarr").string();
  write_array(cfg.input_path, noisy);

  cfg.output_path = (dir / "run1.ctarr").string();
  const auto r1 = run_pipeline(cfg);
  cfg.output_path = (dir / "run2.ctarr").string();
  const auto r2 = run_pipeline(cfg);

  c.require(r1.volume.data == r2.volume.data, "in-memory volumes differ between runs");
  auto bytes = [](const std::string& path) {
    auto [h, p] = read_ctarr_raw(path);
    return std::pair(h, p);
  };
  const auto f1 = bytes((dir / "run1.ctarr").string());
  const auto f2 = bytes((dir / "run2.ctarr").string());
  c.require(f1.first == f2.first && f1.second == f2.second,
            "written artifacts differ between runs");
  fs::remove_all(dir);
  c.note("two pipeline runs produced bitwise-identical volumes and files");
}

// ---------------------------------------------------------------------------
// criterion 9: format round-trip fuzzing
void criterion_roundtrip(Check& c) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "cbct_acceptance_fmt";
  fs::create_directories(dir);
  const std::string path = (dir / "fuzz.ctarr").string();

  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(1, 9);
  std::uniform_int_distribution<int> kind(0, 2);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  const float specials[] = {0.0f,
                            -0.0f,
                            1.0f,
                            -1.0f,
                            std::numeric_limits<float>::max(),
                            std::numeric_limits<float>::lowest(),
                            std::numeric_limits<float>::min(),
                            std::numeric_limits<float>::denorm_min(),
                            -std::numeric_limits<float>::denorm_min()};
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int variant = kind(rng);
    const ScalarType dtype = (trial % 2 == 0) ? ScalarType::Float32 : ScalarType::Float64;
    if (variant == 0) {
      Volume v = Volume::zeros(dim(rng), dim(rng), dim(rng), 0.25 * double(dim(rng)));
      for (auto& x : v.data) x = dist(rng) * std::exp(dist(rng) * 10.0f);
      for (std::size_t i = 0; i < v.size(); i += 3)
        v.data[i] = specials[(trial + i) % std::size(specials)];
      write_array(path, v, dtype);
      const Volume r = read_volume(path);
      if (!(r.data == v.data && r.same_shape(v) && r.voxel_size == v.voxel_size))
        ++failures;
    } else if (variant == 1) {
      Sinogram s = Sinogram::zeros(dim(rng), dim(rng), dim(rng));
      for (auto& x : s.data) x = dist(rng) * std::exp(dist(rng) * 10.0f);
      for (std::size_t i = 0; i < s.size(); i += 3)
        s.data[i] = specials[(trial + i) % std::size(specials)];
      write_array(path, s, dtype);
      const Sinogram r = read_sinogram(path);
      if (!(r.data == s.data && r.same_shape(s))) ++failures;
    } else {
      // raw f64 payloads with extreme doubles
      const int n = dim(rng) * dim(rng);
      std::vector<double> payload(static_cast<std::size_t>(n));
      for (auto& x : payload) x = double(dist(rng)) * std::exp(double(dist(rng)) * 200.0);
      payload[0] = std::numeric_limits<double>::max();
      if (payload.size() > 1) payload[1] = std::numeric_limits<double>::denorm_min();
      const std::string header = std::string(R"({"kind":"volume","dtype":"f64","dims":[)") +
                                 std::to_string(n) + R"(,1,1],"layout":"x,y,z"})";
      write_ctarr_raw(path, header, payload.data(), payload.size() * sizeof(double));
      auto [h, bytes] = read_ctarr_raw(path);
      if (h != header || bytes.size() != payload.size() * sizeof(double) ||
          std::memcmp(bytes.data(), payload.data(), bytes.size()) != 0)
        ++failures;
    }
  }
  fs::remove_all(dir);
  c.require(failures == 0, std::to_string(failures) + " of 1000 round-trips not bit-exact");
  c.note("1000 randomized arrays round-tripped bit-exactly");
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<void(Check&)> fn;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "adjoint correctness across geometries", 30.0, criterion_adjoint},
      {2, "dense-oracle equivalence (8^3, 6 views)", 10.0, criterion_dense},
      {3, "analytic ball projection accuracy (64^3)", 60.0, criterion_ball_projection},
      {4, "accelerated objective bound on dense-oracle problems", 0.0,
       criterion_nesterov_bound},
      {5, "acceleration vs gradient descent", 0.0, criterion_acceleration},
      {6, "fdk ball reconstruction (64^3, 180 views)", 120.0, criterion_fdk},
      {7, "method ordering at desk scale", 900.0, criterion_ordering},
      {8, "end-to-end determinism", 0.0, criterion_determinism},
      {9, "format round-trip fuzzing", 0.0, criterion_roundtrip},
  };

  int failures = 0;
  for (const auto& crit : criteria) {
    Check check;
    const double t0 = now_s();
    try {
      crit.fn(check);
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail << "    exception: " << e.what() << "\n";
    }
    const double elapsed = now_s() - t0;
    if (crit.budget_s > 0.0 && elapsed > crit.budget_s) {
      check.ok = false;
      check.detail << "    runtime " << fmt(elapsed) << " s exceeded budget "
                   << fmt(crit.budget_s) << " s\n";
    }
    std::printf("%s  criterion %d: %s  (%.1f s)\n", check.ok ? "PASS" : "FAIL", crit.id,
                crit.name, elapsed);
    std::fputs(check.detail.str().c_str(), stdout);
    std::fflush(stdout);
    if (!check.ok) ++failures;
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
