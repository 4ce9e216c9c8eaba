#pragma once

#include <optional>
#include <vector>

#include "cbct/arrays.hpp"
#include "cbct/geometry.hpp"
#include "cbct/projector.hpp"

namespace cbct {

enum class StopReason { max_iters, grad_tol };

struct LsSolverConfig {
  int max_iters = 100;
  double grad_tol = 1e-8;            // relative to ||A^T b|| (gd/nag) or ||b|| (sirt)
  std::optional<double> lipschitz;   // lambda_max(A^T A); estimated when absent
  double safety = 1.05;              // multiplier on the estimate, >= 1
  bool nonneg = false;
  bool record_history = true;
};

struct SolverReport {
  int iterations_run = 0;
  std::vector<double> objective_history;  // f(x_k), length iterations_run + 1
  double final_grad_norm = 0.0;
  StopReason terminated_by = StopReason::max_iters;
  double lipschitz_used = 0.0;  // 0 for sirt (no step-size constant)
};

struct LsResult {
  Volume x;
  SolverReport report;
};

// Least squares f(x) = 0.5*||Ax - b||^2 from x0 = 0, fixed step 1/(safety*L).
// nag_ls adds the t_k momentum schedule; gd_ls is the plain-descent control.
LsResult nag_ls(const SystemOperator& op, const Sinogram& b, const LsSolverConfig& cfg);
LsResult gd_ls(const SystemOperator& op, const Sinogram& b, const LsSolverConfig& cfg);

// Diagonally scaled Landweber iteration x <- x + C A^T R (b - A x) with
// R = 1/row-sums, C = 1/column-sums, both matrix-free.
LsResult sirt(const SystemOperator& op, const Sinogram& b, const LsSolverConfig& cfg);

enum class FdkWindow { ramlak, hann };

struct FdkConfig {
  FdkWindow window = FdkWindow::ramlak;
  int pad_to = 0;  // 0 = next power of two >= 2*nu; explicit values must be >= 2*nu
};

// Feldkamp reconstruction of a full circular scan: cosine weighting, row-wise
// ramp filtering, distance-weighted backprojection.
Volume fdk(const Sinogram& b, const ConeBeamGeometry& geom, const FdkConfig& cfg = {});

}  // namespace cbct
