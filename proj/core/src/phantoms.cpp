#include "cbct/phantoms.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cbct/shepp_logan_table.hpp"
#include "cbct/threads.hpp"
#include "json.hpp"

namespace cbct {

bool contains(const Ellipsoid& e, const Vec3& p) {
  const double ca = std::cos(e.euler_z), sa = std::sin(e.euler_z);
  const double dx = p.x - e.center.x, dy = p.y - e.center.y, dz = p.z - e.center.z;
  // rotate into the ellipsoid frame (inverse of the z-rotation)
  const double rx = ca * dx + sa * dy;
  const double ry = -sa * dx + ca * dy;
  const double qx = rx / e.semi_axes.x, qy = ry / e.semi_axes.y, qz = dz / e.semi_axes.z;
  return qx * qx + qy * qy + qz * qz <= 1.0;
}

const std::vector<Ellipsoid>& shepp_logan_ellipsoids() {
  static const std::vector<Ellipsoid> table = [] {
    const auto j = nlohmann::json::parse(detail::kSheppLoganTableJson);
    std::vector<Ellipsoid> es;
    for (const auto& row : j.at("ellipsoids")) {
      Ellipsoid e;
      e.density = row.at(0).get<double>();
      e.semi_axes = {row.at(1).get<double>(), row.at(2).get<double>(),
                     row.at(3).get<double>()};
      e.center = {row.at(4).get<double>(), row.at(5).get<double>(), row.at(6).get<double>()};
      e.euler_z = row.at(7).get<double>() * std::numbers::pi / 180.0;
      es.push_back(e);
    }
    return es;
  }();
  return table;
}

namespace {

void check_dims(int nx, int ny, int nz, int min_dim) {
  if (nx < min_dim || ny < min_dim || nz < min_dim)
    throw std::invalid_argument("phantom: dims must be at least " + std::to_string(min_dim));
}

inline double norm_coord(int i, int n) {
  return (double(i) - double(n - 1) / 2.0) * (2.0 / double(n));
}

}  // namespace

Volume rasterize_ellipsoids(const std::vector<Ellipsoid>& ellipsoids, int nx, int ny,
                            int nz, double voxel_size, bool clamp_nonneg) {
  check_dims(nx, ny, nz, 1);
  for (const auto& e : ellipsoids)
    if (!(e.semi_axes.x > 0.0 && e.semi_axes.y > 0.0 && e.semi_axes.z > 0.0))
      throw std::invalid_argument("phantom: ellipsoid semi_axes must be positive");
  Volume vol = Volume::zeros(nx, ny, nz, voxel_size);
  const int nthreads = thread_count();
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (int z = 0; z < nz; ++z) {
    const double pz = norm_coord(z, nz);
    for (int y = 0; y < ny; ++y) {
      const double py = norm_coord(y, ny);
      for (int x = 0; x < nx; ++x) {
        const Vec3 p{norm_coord(x, nx), py, pz};
        double acc = 0.0;
        for (const auto& e : ellipsoids)
          if (contains(e, p)) acc += e.density;
        if (clamp_nonneg && acc < 0.0) acc = 0.0;
        vol.at(x, y, z) = float(acc);
      }
    }
  }
  return vol;
}

Volume shepp_logan_3d(int nx, int ny, int nz, double voxel_size) {
  check_dims(nx, ny, nz, 8);
  return rasterize_ellipsoids(shepp_logan_ellipsoids(), nx, ny, nz, voxel_size, true);
}

Volume sphere_phantom(const Vec3& center, double radius, double value, int nx, int ny,
                      int nz, double voxel_size) {
  check_dims(nx, ny, nz, 1);
  if (!(radius > 0.0)) throw std::invalid_argument("sphere_phantom: radius must be positive");
  if (std::abs(center.x) + radius > 1.0 || std::abs(center.y) + radius > 1.0 ||
      std::abs(center.z) + radius > 1.0)
    throw std::invalid_argument("sphere_phantom: sphere must lie inside [-1,1]^3");
  Volume vol = Volume::zeros(nx, ny, nz, voxel_size);
  const double r2 = radius * radius;
  const int nthreads = thread_count();
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (int z = 0; z < nz; ++z) {
    const double dz = norm_coord(z, nz) - center.z;
    for (int y = 0; y < ny; ++y) {
      const double dy = norm_coord(y, ny) - center.y;
      for (int x = 0; x < nx; ++x) {
        const double dx = norm_coord(x, nx) - center.x;
        if (dx * dx + dy * dy + dz * dz <= r2) vol.at(x, y, z) = float(value);
      }
    }
  }
  return vol;
}

Sinogram analytic_sphere_sinogram(const ConeBeamGeometry& g, const Vec3& center,
                                  double radius, double value) {
  validate(g);
  if (g.nx != g.ny || g.ny != g.nz)
    throw std::invalid_argument("analytic_sphere_sinogram: cubic grid required");
  // normalized -> mm: the grid spans nx*voxel_size millimetres
  const double scale = double(g.nx) * g.voxel_size / 2.0;
  const Vec3 c_mm{center.x * scale, center.y * scale, center.z * scale};
  const double r_mm = radius * scale;
  Sinogram sino = Sinogram::zeros(g.num_views, g.nv, g.nu);
  const double cu = double(g.nu - 1) / 2.0, cv = double(g.nv - 1) / 2.0;
  const int nthreads = thread_count();
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (int view = 0; view < g.num_views; ++view) {
    const Vec3 src = source_position(g, view);
    const Vec3 det = detector_center(g, view);
    const Vec3 ua = detector_u_axis(g, view);
    const Vec3 sc = c_mm - src;
    for (int v = 0; v < g.nv; ++v) {
      const double voff = (double(v) - cv) * g.dv;
      for (int u = 0; u < g.nu; ++u) {
        const double uoff = (double(u) - cu) * g.du;
        const Vec3 q{det.x + uoff * ua.x, det.y + uoff * ua.y, voff};
        Vec3 dir = q - src;
        const double dn = norm(dir);
        dir = (1.0 / dn) * dir;
        const double along = dot(sc, dir);
        const double d2 = dot(sc, sc) - along * along;
        const double h2 = r_mm * r_mm - d2;
        sino.at(view, v, u) = h2 > 0.0 ? float(2.0 * value * std::sqrt(h2)) : 0.0f;
      }
    }
  }
  return sino;
}

}  // namespace cbct
