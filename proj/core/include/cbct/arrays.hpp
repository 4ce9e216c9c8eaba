#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbct {

// IO failures (missing file, bad magic, header/payload mismatch).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense 3D scalar field on a regular voxel grid, x fastest:
// index = x + nx*(y + ny*z). Storage is 32-bit; arithmetic that aggregates
// over many elements accumulates in 64-bit.
struct Volume {
  int nx = 0, ny = 0, nz = 0;
  double voxel_size = 1.0;
  std::vector<float> data;

  static Volume zeros(int nx, int ny, int nz, double voxel_size = 1.0);

  std::size_t size() const { return data.size(); }
  std::size_t index(int x, int y, int z) const {
    return std::size_t(x) + std::size_t(nx) * (std::size_t(y) + std::size_t(ny) * std::size_t(z));
  }
  float& at(int x, int y, int z) { return data[index(x, y, z)]; }
  float at(int x, int y, int z) const { return data[index(x, y, z)]; }
  bool same_shape(const Volume& o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }
};

// Stack of detector readings, u fastest: index = u + nu*(v + nv*view).
struct Sinogram {
  int num_views = 0, nv = 0, nu = 0;
  std::vector<float> data;

  static Sinogram zeros(int num_views, int nv, int nu);

  std::size_t size() const { return data.size(); }
  std::size_t index(int view, int v, int u) const {
    return std::size_t(u) + std::size_t(nu) * (std::size_t(v) + std::size_t(nv) * std::size_t(view));
  }
  float& at(int view, int v, int u) { return data[index(view, v, u)]; }
  float at(int view, int v, int u) const { return data[index(view, v, u)]; }
  bool same_shape(const Sinogram& o) const {
    return num_views == o.num_views && nv == o.nv && nu == o.nu;
  }
};

enum class ScalarType { Float32, Float64 };

// .ctarr container: 8-byte magic "CTARR\0\0\0", 8-byte little-endian header
// length, UTF-8 JSON header, raw little-endian payload. dims are listed
// fastest axis first, matching the layout string ("x,y,z" / "u,v,view").
struct ArrayInfo {
  std::string kind;    // "volume" | "sinogram"
  std::string dtype;   // "f32" | "f64"
  std::int64_t dims[3] = {0, 0, 0};
  std::string layout;
  double voxel_size = 0.0;  // volumes only
  std::map<std::string, std::string> extra;
};

void write_array(const std::string& path, const Volume& v,
                 ScalarType dtype = ScalarType::Float32,
                 const std::map<std::string, std::string>& metadata = {});
void write_array(const std::string& path, const Sinogram& s,
                 ScalarType dtype = ScalarType::Float32,
                 const std::map<std::string, std::string>& metadata = {});

ArrayInfo read_array_info(const std::string& path);
Volume read_volume(const std::string& path, ArrayInfo* info = nullptr);
Sinogram read_sinogram(const std::string& path, ArrayInfo* info = nullptr);

// Raw container access for tooling and tests; header_json must be a valid
// JSON object text. Payload bytes round-trip unmodified.
void write_ctarr_raw(const std::string& path, const std::string& header_json,
                     const void* payload, std::size_t payload_bytes);
std::pair<std::string, std::vector<std::uint8_t>> read_ctarr_raw(const std::string& path);

// Metrics. Accumulation in 64-bit.
double mse(std::span<const float> a, std::span<const float> b);
double mse(const Volume& a, const Volume& b);
double mse(const Sinogram& a, const Sinogram& b);

// 10*log10(peak^2/mse); +infinity when mse == 0.
double psnr(double peak, double mse_value);
double psnr(const Volume& a, const Volume& b, double peak);

}  // namespace cbct
