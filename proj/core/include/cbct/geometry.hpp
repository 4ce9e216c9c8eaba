#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "cbct/config.hpp"

namespace cbct {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Circular cone-beam acquisition: point source orbiting in the z = 0 plane,
// flat detector opposite the source, volume centered at the origin, z is the
// rotation axis, right-handed coordinates. Lengths in mm, angles in radians.
struct ConeBeamGeometry {
  double sod = 0.0;   // source to rotation axis
  double sdd = 0.0;   // source to detector
  int nu = 0, nv = 0; // detector columns, rows
  double du = 0.0, dv = 0.0;
  int num_views = 0;
  std::vector<double> angles;
  int nx = 0, ny = 0, nz = 0;
  double voxel_size = 0.0; // isotropic

  std::size_t num_voxels() const {
    return std::size_t(nx) * std::size_t(ny) * std::size_t(nz);
  }
  std::size_t num_rays() const {
    return std::size_t(num_views) * std::size_t(nv) * std::size_t(nu);
  }
};

// Throws std::invalid_argument naming the offending field.
void validate(const ConeBeamGeometry& g);

// Uniform full-scan geometry: angles[i] = 2*pi*i/num_views.
ConeBeamGeometry make_circular(double sod, double sdd, int nu, int nv, double du,
                               double dv, int num_views, int nx, int ny, int nz,
                               double voxel_size);

Vec3 source_position(const ConeBeamGeometry& g, int view_index);
Vec3 detector_center(const ConeBeamGeometry& g, int view_index);
// In-plane tangent direction of increasing u; v runs along +z.
Vec3 detector_u_axis(const ConeBeamGeometry& g, int view_index);
Vec3 detector_pixel_center(const ConeBeamGeometry& g, int view_index, int u_index,
                           int v_index);

// [geometry] config section round-trip. Missing keys fall back to the
// full-scale defaults (sod 575, sdd 1050, 256x256 detector at 1 mm pitch,
// 360 views, 256^3 volume at 0.5 mm voxels).
ConeBeamGeometry geometry_from_config(const ConfigSection& s);
ConfigSection geometry_to_config(const ConeBeamGeometry& g);

}  // namespace cbct
