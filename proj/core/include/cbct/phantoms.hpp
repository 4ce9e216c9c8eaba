#pragma once

#include <vector>

#include "cbct/arrays.hpp"
#include "cbct/geometry.hpp"

namespace cbct {

// Additive ellipsoid in normalized coordinates: the volume grid spans
// [-1,1]^3 regardless of voxel count.
struct Ellipsoid {
  Vec3 center;
  Vec3 semi_axes;       // all > 0
  double euler_z = 0.0; // rotation about z, radians
  double density = 0.0;
};

bool contains(const Ellipsoid& e, const Vec3& p);

// The 10-ellipsoid Kak-Slaney 3D head phantom parameter set, loaded from the
// table committed under core/data/.
const std::vector<Ellipsoid>& shepp_logan_ellipsoids();

// Voxel-center point sampling; values clamped to >= 0.
Volume rasterize_ellipsoids(const std::vector<Ellipsoid>& ellipsoids, int nx, int ny,
                            int nz, double voxel_size = 1.0, bool clamp_nonneg = true);
Volume shepp_logan_3d(int nx, int ny, int nz, double voxel_size = 1.0);

// Binary ball, center/radius in normalized coordinates.
Volume sphere_phantom(const Vec3& center, double radius, double value, int nx, int ny,
                      int nz, double voxel_size = 1.0);

// Exact line integrals of the same ball under the given geometry:
// 2*value*sqrt(r^2 - d^2) per ray, d = perpendicular ray-to-center distance.
// Requires a cubic grid (nx == ny == nz) so normalized lengths scale uniformly.
Sinogram analytic_sphere_sinogram(const ConeBeamGeometry& g, const Vec3& center,
                                  double radius, double value);

}  // namespace cbct
