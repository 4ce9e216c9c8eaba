#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>

#include "cbct/arrays.hpp"
#include "cbct/geometry.hpp"

namespace cbct {

enum class ProjectionMethod { joseph };

// Matrix-free system operator A for a cone-beam geometry. forward and back
// are exact transposes of one another as linear maps: the backprojector
// scatters with the same interpolation weights and path-length factors the
// forward projector gathers with.
class SystemOperator {
 public:
  explicit SystemOperator(ConeBeamGeometry geom,
                          ProjectionMethod method = ProjectionMethod::joseph);

  const ConeBeamGeometry& geometry() const { return geom_; }
  ProjectionMethod method() const { return method_; }

  Sinogram forward(const Volume& x) const;
  Volume back(const Sinogram& y) const;

  // Precision-generic applies on raw buffers in the canonical layouts.
  // Ray sums and scatter accumulation always run in 64-bit.
  void forward_into(std::span<const float> vol, std::span<float> sino) const;
  void forward_into(std::span<const double> vol, std::span<double> sino) const;
  void back_into(std::span<const float> sino, std::span<float> vol) const;
  void back_into(std::span<const double> sino, std::span<double> vol) const;

 private:
  ConeBeamGeometry geom_;
  ProjectionMethod method_;
};

Sinogram forward_project(const SystemOperator& op, const Volume& x);
Volume back_project(const SystemOperator& op, const Sinogram& y);

// Materializes A column by column (column j = forward of the j-th unit basis
// volume). Rows follow the sinogram layout, columns the volume layout.
// Guarded to tiny geometries: voxels <= 4096, rays <= 16384.
Eigen::MatrixXd dense_matrix(const SystemOperator& op);

struct PowerIterResult {
  double value = 0.0;  // Rayleigh-quotient estimate of lambda_max(A^T A)
  bool converged = false;
  int iterations = 0;
};

// Power iteration on x -> A^T(Ax) from a seeded random start. Deterministic
// given (seed, geometry, thread count).
PowerIterResult operator_norm_sq(const SystemOperator& op, int max_iters, double tol,
                                 std::uint64_t seed);

}  // namespace cbct
