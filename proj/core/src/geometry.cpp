#include "cbct/geometry.hpp"

#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cbct {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw std::invalid_argument("geometry: " + field + " " + what);
}

void check_index(int value, int limit, const char* name) {
  if (value < 0 || value >= limit)
    throw std::out_of_range(std::string("geometry: ") + name + " index " +
                            std::to_string(value) + " out of range [0, " +
                            std::to_string(limit) + ")");
}

}  // namespace

void validate(const ConeBeamGeometry& g) {
  if (!(g.sod > 0.0)) fail("sod", "must be positive");
  if (!(g.sdd > g.sod)) fail("sdd", "must exceed sod");
  if (g.nu <= 0) fail("nu", "must be positive");
  if (g.nv <= 0) fail("nv", "must be positive");
  if (!(g.du > 0.0)) fail("du", "must be positive");
  if (!(g.dv > 0.0)) fail("dv", "must be positive");
  if (g.num_views <= 0) fail("num_views", "must be positive");
  if (g.angles.size() != std::size_t(g.num_views))
    fail("angles", "must have length num_views");
  for (double a : g.angles)
    if (!(a >= 0.0 && a < kTwoPi)) fail("angles", "must lie in [0, 2*pi)");
  if (g.nx <= 0) fail("nx", "must be positive");
  if (g.ny <= 0) fail("ny", "must be positive");
  if (g.nz <= 0) fail("nz", "must be positive");
  if (!(g.voxel_size > 0.0)) fail("voxel_size", "must be positive");
  // The source must stay outside the volume's circumscribing sphere.
  const double rx = double(g.nx), ry = double(g.ny), rz = double(g.nz);
  const double radius = g.voxel_size * std::sqrt(rx * rx + ry * ry + rz * rz) / 2.0;
  if (!(radius < g.sod))
    fail("sod", "must exceed the volume's circumscribing sphere radius " +
                    std::to_string(radius));
}

ConeBeamGeometry make_circular(double sod, double sdd, int nu, int nv, double du,
                               double dv, int num_views, int nx, int ny, int nz,
                               double voxel_size) {
  ConeBeamGeometry g;
  g.sod = sod;
  g.sdd = sdd;
  g.nu = nu;
  g.nv = nv;
  g.du = du;
  g.dv = dv;
  g.num_views = num_views;
  if (num_views > 0) {
    g.angles.resize(std::size_t(num_views));
    for (int i = 0; i < num_views; ++i) g.angles[i] = kTwoPi * double(i) / double(num_views);
  }
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  g.voxel_size = voxel_size;
  validate(g);
  return g;
}

Vec3 source_position(const ConeBeamGeometry& g, int view_index) {
  check_index(view_index, g.num_views, "view");
  const double a = g.angles[std::size_t(view_index)];
  return {g.sod * std::cos(a), g.sod * std::sin(a), 0.0};
}

Vec3 detector_center(const ConeBeamGeometry& g, int view_index) {
  check_index(view_index, g.num_views, "view");
  const double a = g.angles[std::size_t(view_index)];
  const double r = g.sdd - g.sod;
  return {-r * std::cos(a), -r * std::sin(a), 0.0};
}

Vec3 detector_u_axis(const ConeBeamGeometry& g, int view_index) {
  check_index(view_index, g.num_views, "view");
  const double a = g.angles[std::size_t(view_index)];
  return {-std::sin(a), std::cos(a), 0.0};
}

Vec3 detector_pixel_center(const ConeBeamGeometry& g, int view_index, int u_index,
                           int v_index) {
  check_index(view_index, g.num_views, "view");
  check_index(u_index, g.nu, "u");
  check_index(v_index, g.nv, "v");
  const Vec3 c = detector_center(g, view_index);
  const Vec3 t = detector_u_axis(g, view_index);
  const double u = (double(u_index) - double(g.nu - 1) / 2.0) * g.du;
  const double v = (double(v_index) - double(g.nv - 1) / 2.0) * g.dv;
  return {c.x + u * t.x, c.y + u * t.y, v};
}

ConeBeamGeometry geometry_from_config(const ConfigSection& s) {
  return make_circular(get_double_or(s, "sod", 575.0), get_double_or(s, "sdd", 1050.0),
                       get_int_or(s, "nu", 256), get_int_or(s, "nv", 256),
                       get_double_or(s, "du", 1.0), get_double_or(s, "dv", 1.0),
                       get_int_or(s, "num_views", 360), get_int_or(s, "nx", 256),
                       get_int_or(s, "ny", 256), get_int_or(s, "nz", 256),
                       get_double_or(s, "voxel_size", 0.5));
}

ConfigSection geometry_to_config(const ConeBeamGeometry& g) {
  ConfigSection s;
  auto put = [&s](const char* k, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s[k] = buf;
  };
  put("sod", g.sod);
  put("sdd", g.sdd);
  s["nu"] = std::to_string(g.nu);
  s["nv"] = std::to_string(g.nv);
  put("du", g.du);
  put("dv", g.dv);
  s["num_views"] = std::to_string(g.num_views);
  s["nx"] = std::to_string(g.nx);
  s["ny"] = std::to_string(g.ny);
  s["nz"] = std::to_string(g.nz);
  put("voxel_size", g.voxel_size);
  return s;
}

}  // namespace cbct
