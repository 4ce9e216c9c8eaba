#include "cbct/arrays.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace cbct {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'C', 'T', 'A', 'R', 'R', '\0', '\0', '\0'};

static_assert(std::endian::native == std::endian::little,
              "the .ctarr writer assumes a little-endian host");

void check_shape3(const char* what, long long n0, long long n1, long long n2) {
  if (n0 <= 0 || n1 <= 0 || n2 <= 0)
    throw std::invalid_argument(std::string(what) + ": dimensions must be positive");
}

template <class T>
void check_finite(std::span<const T> values, const char* what) {
  for (const T v : values)
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string(what) + ": non-finite value");
}

std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "f32") return 4;
  if (dtype == "f64") return 8;
  throw IoError("unsupported dtype '" + dtype + "'");
}

json base_header(const char* kind, const char* layout, std::int64_t d0, std::int64_t d1,
                 std::int64_t d2, ScalarType dtype,
                 const std::map<std::string, std::string>& metadata) {
  json h;
  h["kind"] = kind;
  h["dtype"] = dtype == ScalarType::Float32 ? "f32" : "f64";
  h["dims"] = {d0, d1, d2};  // fastest axis first
  h["layout"] = layout;
  for (const auto& [k, v] : metadata) h["meta"][k] = v;
  return h;
}

void write_payload(const std::string& path, const json& header,
                   std::span<const float> values, ScalarType dtype) {
  if (dtype == ScalarType::Float32) {
    write_ctarr_raw(path, header.dump(), values.data(), values.size_bytes());
  } else {
    std::vector<double> wide(values.begin(), values.end());
    write_ctarr_raw(path, header.dump(), wide.data(), wide.size() * sizeof(double));
  }
}

struct Parsed {
  json header;
  std::vector<std::uint8_t> payload;
};

Parsed read_and_check(const std::string& path) {
  auto [text, payload] = read_ctarr_raw(path);
  json h;
  try {
    h = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(path + ": bad header JSON: " + e.what());
  }
  if (!h.contains("kind") || !h.contains("dtype") || !h.contains("dims") ||
      !h.contains("layout"))
    throw IoError(path + ": header missing required keys");
  const auto dims = h["dims"];
  if (!dims.is_array() || dims.size() != 3) throw IoError(path + ": dims must have rank 3");
  std::size_t count = 1;
  for (const auto& d : dims) {
    const std::int64_t n = d.get<std::int64_t>();
    if (n <= 0) throw IoError(path + ": dims must be positive");
    count *= std::size_t(n);
  }
  const std::size_t expect = count * dtype_size(h["dtype"].get<std::string>());
  if (payload.size() != expect)
    throw IoError(path + ": payload holds " + std::to_string(payload.size()) +
                  " bytes, header declares " + std::to_string(expect));
  return {std::move(h), std::move(payload)};
}

std::vector<float> to_floats(const Parsed& p, const std::string& path) {
  const std::string dtype = p.header["dtype"].get<std::string>();
  std::vector<float> out;
  if (dtype == "f32") {
    out.resize(p.payload.size() / 4);
    std::memcpy(out.data(), p.payload.data(), p.payload.size());
  } else {
    std::vector<double> wide(p.payload.size() / 8);
    std::memcpy(wide.data(), p.payload.data(), p.payload.size());
    out.assign(wide.begin(), wide.end());
  }
  for (float v : out)
    if (!std::isfinite(v)) throw IoError(path + ": non-finite value in payload");
  return out;
}

ArrayInfo info_from_header(const json& h) {
  ArrayInfo info;
  info.kind = h["kind"].get<std::string>();
  info.dtype = h["dtype"].get<std::string>();
  for (int i = 0; i < 3; ++i) info.dims[i] = h["dims"][i].get<std::int64_t>();
  info.layout = h["layout"].get<std::string>();
  if (h.contains("voxel_size")) info.voxel_size = h["voxel_size"].get<double>();
  if (h.contains("meta"))
    for (const auto& [k, v] : h["meta"].items()) info.extra[k] = v.get<std::string>();
  return info;
}

}  // namespace

Volume Volume::zeros(int nx, int ny, int nz, double voxel_size) {
  check_shape3("volume", nx, ny, nz);
  Volume v;
  v.nx = nx;
  v.ny = ny;
  v.nz = nz;
  v.voxel_size = voxel_size;
  v.data.assign(std::size_t(nx) * std::size_t(ny) * std::size_t(nz), 0.0f);
  return v;
}

Sinogram Sinogram::zeros(int num_views, int nv, int nu) {
  check_shape3("sinogram", num_views, nv, nu);
  Sinogram s;
  s.num_views = num_views;
  s.nv = nv;
  s.nu = nu;
  s.data.assign(std::size_t(num_views) * std::size_t(nv) * std::size_t(nu), 0.0f);
  return s;
}

void write_ctarr_raw(const std::string& path, const std::string& header_json,
                     const void* payload, std::size_t payload_bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t len = header_json.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(header_json.data(), std::streamsize(header_json.size()));
  if (payload_bytes > 0)
    out.write(static_cast<const char*>(payload), std::streamsize(payload_bytes));
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::pair<std::string, std::vector<std::uint8_t>> read_ctarr_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw IoError(path + ": not a .ctarr file (bad magic)");
  std::uint64_t len = 0;
  if (!in.read(reinterpret_cast<char*>(&len), sizeof len))
    throw IoError(path + ": truncated header length");
  if (len > (std::uint64_t(1) << 30)) throw IoError(path + ": implausible header length");
  std::string header(std::size_t(len), '\0');
  if (!in.read(header.data(), std::streamsize(len))) throw IoError(path + ": truncated header");
  std::vector<std::uint8_t> payload;
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(std::streamoff(sizeof kMagic + sizeof len + len), std::ios::beg);
  const auto begin = in.tellg();
  payload.resize(std::size_t(end - begin));
  if (!payload.empty() &&
      !in.read(reinterpret_cast<char*>(payload.data()), std::streamsize(payload.size())))
    throw IoError(path + ": truncated payload");
  return {std::move(header), std::move(payload)};
}

void write_array(const std::string& path, const Volume& v, ScalarType dtype,
                 const std::map<std::string, std::string>& metadata) {
  check_shape3("volume", v.nx, v.ny, v.nz);
  if (v.data.size() != v.size())
    throw std::invalid_argument("volume: data length does not match dims");
  check_finite<float>(v.data, "volume");
  json h = base_header("volume", "x,y,z", v.nx, v.ny, v.nz, dtype, metadata);
  h["voxel_size"] = v.voxel_size;
  write_payload(path, h, v.data, dtype);
}

void write_array(const std::string& path, const Sinogram& s, ScalarType dtype,
                 const std::map<std::string, std::string>& metadata) {
  check_shape3("sinogram", s.num_views, s.nv, s.nu);
  if (s.data.size() != s.size())
    throw std::invalid_argument("sinogram: data length does not match dims");
  check_finite<float>(s.data, "sinogram");
  json h = base_header("sinogram", "u,v,view", s.nu, s.nv, s.num_views, dtype, metadata);
  write_payload(path, h, s.data, dtype);
}

ArrayInfo read_array_info(const std::string& path) {
  auto [text, payload] = read_ctarr_raw(path);
  json h;
  try {
    h = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(path + ": bad header JSON: " + e.what());
  }
  return info_from_header(h);
}

Volume read_volume(const std::string& path, ArrayInfo* info) {
  Parsed p = read_and_check(path);
  if (p.header["kind"].get<std::string>() != "volume")
    throw IoError(path + ": expected kind=volume, found " +
                  p.header["kind"].get<std::string>());
  if (p.header["layout"].get<std::string>() != "x,y,z")
    throw IoError(path + ": unsupported volume layout");
  Volume v;
  v.nx = int(p.header["dims"][0].get<std::int64_t>());
  v.ny = int(p.header["dims"][1].get<std::int64_t>());
  v.nz = int(p.header["dims"][2].get<std::int64_t>());
  v.voxel_size = p.header.value("voxel_size", 1.0);
  v.data = to_floats(p, path);
  if (info) *info = info_from_header(p.header);
  return v;
}

Sinogram read_sinogram(const std::string& path, ArrayInfo* info) {
  Parsed p = read_and_check(path);
  if (p.header["kind"].get<std::string>() != "sinogram")
    throw IoError(path + ": expected kind=sinogram, found " +
                  p.header["kind"].get<std::string>());
  if (p.header["layout"].get<std::string>() != "u,v,view")
    throw IoError(path + ": unsupported sinogram layout");
  Sinogram s;
  s.nu = int(p.header["dims"][0].get<std::int64_t>());
  s.nv = int(p.header["dims"][1].get<std::int64_t>());
  s.num_views = int(p.header["dims"][2].get<std::int64_t>());
  s.data = to_floats(p, path);
  if (info) *info = info_from_header(p.header);
  return s;
}

double mse(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("mse: size mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  if (a.empty()) throw std::invalid_argument("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    acc += d * d;
  }
  return acc / double(a.size());
}

double mse(const Volume& a, const Volume& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mse: volume shape mismatch");
  return mse(std::span<const float>(a.data), std::span<const float>(b.data));
}

double mse(const Sinogram& a, const Sinogram& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mse: sinogram shape mismatch");
  return mse(std::span<const float>(a.data), std::span<const float>(b.data));
}

double psnr(double peak, double mse_value) {
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  if (mse_value < 0.0) throw std::invalid_argument("psnr: mse must be nonnegative");
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse_value);
}

double psnr(const Volume& a, const Volume& b, double peak) {
  return psnr(peak, mse(a, b));
}

}  // namespace cbct
