#include "cbct/solvers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cbct {

namespace {

constexpr std::uint64_t kPowerIterSeed = 0x5eed0001u;

double nrm2(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

void check_shapes(const SystemOperator& op, const Sinogram& b) {
  const auto& g = op.geometry();
  if (b.num_views != g.num_views || b.nv != g.nv || b.nu != g.nu)
    throw std::invalid_argument("solver: sinogram dims do not match geometry");
}

void check_cfg(const LsSolverConfig& cfg) {
  if (cfg.max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
  if (!(cfg.grad_tol >= 0.0)) throw std::invalid_argument("solver: grad_tol must be >= 0");
  if (!(cfg.safety >= 1.0)) throw std::invalid_argument("solver: safety must be >= 1");
}

void check_iterate_finite(double value, int iteration) {
  if (!std::isfinite(value))
    throw std::runtime_error("solver: non-finite iterate at iteration " +
                             std::to_string(iteration));
}

Volume to_volume(const ConeBeamGeometry& g, const std::vector<double>& x) {
  Volume v = Volume::zeros(g.nx, g.ny, g.nz, g.voxel_size);
  for (std::size_t i = 0; i < x.size(); ++i) v.data[i] = float(x[i]);
  return v;
}

// 0.5*||A x - b||^2, one extra forward apply.
double objective_of(const SystemOperator& op, const std::vector<double>& x,
                    const std::vector<double>& b, std::vector<double>& scratch) {
  op.forward_into(std::span<const double>(x), std::span<double>(scratch));
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double r = scratch[i] - b[i];
    acc += r * r;
  }
  return 0.5 * acc;
}

LsResult run_first_order(const SystemOperator& op, const Sinogram& b,
                         const LsSolverConfig& cfg, bool momentum) {
  check_shapes(op, b);
  check_cfg(cfg);
  const auto& g = op.geometry();
  const std::size_t nvox = g.num_voxels(), nray = g.num_rays();

  SolverReport report;
  const double L =
      cfg.lipschitz ? *cfg.lipschitz : operator_norm_sq(op, 50, 1e-6, kPowerIterSeed).value;
  const double Lhat = cfg.safety * L;
  if (!(Lhat > 0.0))
    throw std::invalid_argument("solver: lipschitz estimate must be positive, got " +
                                std::to_string(Lhat));
  report.lipschitz_used = Lhat;
  const double step = 1.0 / Lhat;

  const std::vector<double> bd(b.data.begin(), b.data.end());
  std::vector<double> atb(nvox);
  op.back_into(std::span<const double>(bd), std::span<double>(atb));
  const double grad_ref = nrm2(atb);

  std::vector<double> x(nvox, 0.0), xprev(nvox, 0.0), y(nvox, 0.0);
  std::vector<double> r(nray), grad(nvox);
  double t = 1.0;

  for (int k = 0; k < cfg.max_iters; ++k) {
    // r = A y_k - b  (y_k == x_k without momentum)
    op.forward_into(std::span<const double>(momentum ? y : x), std::span<double>(r));
    double f_at = 0.0;
    for (std::size_t i = 0; i < nray; ++i) {
      r[i] -= bd[i];
      f_at += r[i] * r[i];
    }
    f_at *= 0.5;
    if (k == 0 && cfg.record_history) report.objective_history.push_back(f_at);  // f(x_0)

    op.back_into(std::span<const double>(r), std::span<double>(grad));
    const double gnorm = nrm2(grad);
    check_iterate_finite(gnorm, k);
    report.final_grad_norm = gnorm;

    if (momentum) {
      xprev.swap(x);
      for (std::size_t i = 0; i < nvox; ++i) {
        double xi = y[i] - step * grad[i];
        if (cfg.nonneg && xi < 0.0) xi = 0.0;
        x[i] = xi;
      }
      const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
      const double beta = (t - 1.0) / t_next;
      for (std::size_t i = 0; i < nvox; ++i) y[i] = x[i] + beta * (x[i] - xprev[i]);
      t = t_next;
    } else {
      for (std::size_t i = 0; i < nvox; ++i) {
        double xi = x[i] - step * grad[i];
        if (cfg.nonneg && xi < 0.0) xi = 0.0;
        x[i] = xi;
      }
    }
    report.iterations_run = k + 1;

    if (cfg.record_history) {
      const double f_next = objective_of(op, x, bd, r);
      check_iterate_finite(f_next, k + 1);
      report.objective_history.push_back(f_next);
    }

    if (gnorm == 0.0 || (grad_ref > 0.0 && gnorm < cfg.grad_tol * grad_ref)) {
      report.terminated_by = StopReason::grad_tol;
      break;
    }
    report.terminated_by =
        (k + 1 == cfg.max_iters) ? StopReason::max_iters : report.terminated_by;
  }
  return {to_volume(g, x), std::move(report)};
}

}  // namespace

LsResult nag_ls(const SystemOperator& op, const Sinogram& b, const LsSolverConfig& cfg) {
  return run_first_order(op, b, cfg, true);
}

LsResult gd_ls(const SystemOperator& op, const Sinogram& b, const LsSolverConfig& cfg) {
  return run_first_order(op, b, cfg, false);
}

LsResult sirt(const SystemOperator& op, const Sinogram& b, const LsSolverConfig& cfg) {
  check_shapes(op, b);
  check_cfg(cfg);
  const auto& g = op.geometry();
  const std::size_t nvox = g.num_voxels(), nray = g.num_rays();
  constexpr double kEps = 1e-12;

  SolverReport report;

  // R = 1/row-sums = 1/(A 1), C = 1/column-sums = 1/(A^T 1); zero sums drop out.
  std::vector<double> ones_vol(nvox, 1.0), row_sums(nray);
  op.forward_into(std::span<const double>(ones_vol), std::span<double>(row_sums));
  std::vector<double> ones_sino(nray, 1.0), col_sums(nvox);
  op.back_into(std::span<const double>(ones_sino), std::span<double>(col_sums));
  std::vector<double> rinv(nray), cinv(nvox);
  for (std::size_t i = 0; i < nray; ++i) rinv[i] = row_sums[i] > kEps ? 1.0 / row_sums[i] : 0.0;
  for (std::size_t j = 0; j < nvox; ++j) cinv[j] = col_sums[j] > kEps ? 1.0 / col_sums[j] : 0.0;

  const std::vector<double> bd(b.data.begin(), b.data.end());
  const double bnorm = nrm2(bd);
  const double res_ref = bnorm > 0.0 ? bnorm : 1.0;

  std::vector<double> x(nvox, 0.0), r(nray), upd(nvox);

  for (int k = 0; k < cfg.max_iters; ++k) {
    // r = b - A x
    op.forward_into(std::span<const double>(x), std::span<double>(r));
    double resn = 0.0;
    for (std::size_t i = 0; i < nray; ++i) {
      r[i] = bd[i] - r[i];
      resn += r[i] * r[i];
    }
    if (cfg.record_history) report.objective_history.push_back(0.5 * resn);  // f(x_k)
    resn = std::sqrt(resn);
    check_iterate_finite(resn, k);
    report.final_grad_norm = resn;

    for (std::size_t i = 0; i < nray; ++i) r[i] *= rinv[i];
    op.back_into(std::span<const double>(r), std::span<double>(upd));
    for (std::size_t j = 0; j < nvox; ++j) {
      double xj = x[j] + cinv[j] * upd[j];
      if (cfg.nonneg && xj < 0.0) xj = 0.0;
      x[j] = xj;
    }
    report.iterations_run = k + 1;

    if (resn == 0.0 || resn < cfg.grad_tol * res_ref) {
      report.terminated_by = StopReason::grad_tol;
      break;
    }
    report.terminated_by =
        (k + 1 == cfg.max_iters) ? StopReason::max_iters : report.terminated_by;
  }

  if (cfg.record_history) {  // close the history with f(x_final)
    const double f_final = objective_of(op, x, bd, r);
    check_iterate_finite(f_final, report.iterations_run);
    report.objective_history.push_back(f_final);
  }
  return {to_volume(g, x), std::move(report)};
}

}  // namespace cbct
