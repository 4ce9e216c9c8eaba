#include "cbct/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cbct/threads.hpp"

namespace cbct {

namespace {

// Half-sample reflection: ... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
// Folding is weight-preserving, so normalized kernels conserve the mean.
inline int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -1 - i;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> k(std::size_t(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * double(i) * double(i) / (sigma * sigma));
    k[std::size_t(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

// n-dimensional array view over a contiguous buffer, dim 0 fastest.
struct View3 {
  float* data;
  int n0, n1, n2;
  std::size_t idx(int i0, int i1, int i2) const {
    return std::size_t(i0) + std::size_t(n0) * (std::size_t(i1) + std::size_t(n1) * std::size_t(i2));
  }
};

void gaussian_axis(View3 a, int axis, const std::vector<double>& kernel) {
  const int radius = int(kernel.size() / 2);
  const int n[3] = {a.n0, a.n1, a.n2};
  const int len = n[axis];
  const int o1 = (axis == 0) ? 1 : 0;
  const int o2 = (axis == 2) ? 1 : 2;
  std::vector<double> line(static_cast<std::size_t>(len));
  for (int j2 = 0; j2 < n[o2]; ++j2) {
    for (int j1 = 0; j1 < n[o1]; ++j1) {
      int c[3];
      c[o1] = j1;
      c[o2] = j2;
      for (int i = 0; i < len; ++i) {
        c[axis] = i;
        line[std::size_t(i)] = a.data[a.idx(c[0], c[1], c[2])];
      }
      for (int i = 0; i < len; ++i) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t)
          acc += kernel[std::size_t(t + radius)] * line[std::size_t(reflect(i + t, len))];
        c[axis] = i;
        a.data[a.idx(c[0], c[1], c[2])] = float(acc);
      }
    }
  }
}

void gaussian_2d(View3 slice, double sigma) {
  const auto k = gaussian_kernel(sigma);
  gaussian_axis(slice, 0, k);
  gaussian_axis(slice, 1, k);
}

void gaussian_3d(View3 a, double sigma) {
  const auto k = gaussian_kernel(sigma);
  gaussian_axis(a, 0, k);
  gaussian_axis(a, 1, k);
  gaussian_axis(a, 2, k);
}

void median_generic(View3 a, int radius, bool volumetric) {
  const int n0 = a.n0, n1 = a.n1, n2 = volumetric ? a.n2 : 1;
  const std::size_t total = std::size_t(n0) * std::size_t(n1) * std::size_t(n2);
  std::vector<float> src(a.data, a.data + total);
  std::vector<float> window;
  const int zr = volumetric ? radius : 0;
  View3 s{src.data(), a.n0, a.n1, a.n2};
  for (int i2 = 0; i2 < n2; ++i2) {
    for (int i1 = 0; i1 < n1; ++i1) {
      for (int i0 = 0; i0 < n0; ++i0) {
        window.clear();
        for (int t2 = -zr; t2 <= zr; ++t2) {
          const int j2 = volumetric ? reflect(i2 + t2, n2) : i2;
          for (int t1 = -radius; t1 <= radius; ++t1) {
            const int j1 = reflect(i1 + t1, n1);
            for (int t0 = -radius; t0 <= radius; ++t0)
              window.push_back(src[s.idx(reflect(i0 + t0, n0), j1, j2)]);
          }
        }
        auto mid = window.begin() + std::ptrdiff_t(window.size() / 2);
        std::nth_element(window.begin(), mid, window.end());
        a.data[a.idx(i0, i1, i2)] = *mid;
      }
    }
  }
}

// Chambolle dual projection for ROF denoising:
//   min_u  0.5*||u - f||^2 + lambda*TV(u),   u = f - lambda*div(p).
// Forward-difference gradient, Neumann boundaries; step tau = 1/(4*ndim)
// stays inside the proven-convergent range.
void tv_rof(View3 a, double lambda, int iterations, bool volumetric) {
  const int ndim = volumetric ? 3 : 2;
  const double tau = 1.0 / (4.0 * double(ndim));
  const int n0 = a.n0, n1 = a.n1, n2 = volumetric ? a.n2 : 1;
  const std::size_t total = std::size_t(n0) * std::size_t(n1) * std::size_t(n2);

  std::vector<double> f(total);
  for (std::size_t i = 0; i < total; ++i) f[i] = a.data[i];
  std::vector<double> p0(total, 0.0), p1(total, 0.0), p2;
  if (volumetric) p2.assign(total, 0.0);
  std::vector<double> divp(total, 0.0), work(total);

  auto at = [&](int i0, int i1, int i2) {
    return std::size_t(i0) + std::size_t(n0) * (std::size_t(i1) + std::size_t(n1) * std::size_t(i2));
  };

  for (int it = 0; it < iterations; ++it) {
    // work = div p - f/lambda
    for (int i2 = 0; i2 < n2; ++i2)
      for (int i1 = 0; i1 < n1; ++i1)
        for (int i0 = 0; i0 < n0; ++i0) {
          const std::size_t k = at(i0, i1, i2);
          double d = p0[k] - (i0 > 0 ? p0[at(i0 - 1, i1, i2)] : 0.0);
          d += p1[k] - (i1 > 0 ? p1[at(i0, i1 - 1, i2)] : 0.0);
          if (volumetric) d += p2[k] - (i2 > 0 ? p2[at(i0, i1, i2 - 1)] : 0.0);
          divp[k] = d;
          work[k] = d - f[k] / lambda;
        }
    // p <- (p + tau*grad(work)) / (1 + tau*|grad(work)|)
    for (int i2 = 0; i2 < n2; ++i2)
      for (int i1 = 0; i1 < n1; ++i1)
        for (int i0 = 0; i0 < n0; ++i0) {
          const std::size_t k = at(i0, i1, i2);
          const double g0 = (i0 + 1 < n0) ? work[at(i0 + 1, i1, i2)] - work[k] : 0.0;
          const double g1 = (i1 + 1 < n1) ? work[at(i0, i1 + 1, i2)] - work[k] : 0.0;
          const double g2 =
              volumetric ? ((i2 + 1 < n2) ? work[at(i0, i1, i2 + 1)] - work[k] : 0.0) : 0.0;
          const double mag = std::sqrt(g0 * g0 + g1 * g1 + g2 * g2);
          const double denom = 1.0 + tau * mag;
          p0[k] = (p0[k] + tau * g0) / denom;
          p1[k] = (p1[k] + tau * g1) / denom;
          if (volumetric) p2[k] = (p2[k] + tau * g2) / denom;
        }
  }
  // final divergence for the primal recovery
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < n1; ++i1)
      for (int i0 = 0; i0 < n0; ++i0) {
        const std::size_t k = at(i0, i1, i2);
        double d = p0[k] - (i0 > 0 ? p0[at(i0 - 1, i1, i2)] : 0.0);
        d += p1[k] - (i1 > 0 ? p1[at(i0, i1 - 1, i2)] : 0.0);
        if (volumetric) d += p2[k] - (i2 > 0 ? p2[at(i0, i1, i2 - 1)] : 0.0);
        a.data[k] = float(f[k] - lambda * d);
      }
}

void apply_enhancer(const Enhancer& e, View3 a, bool volumetric) {
  switch (e.kind) {
    case EnhancerKind::identity:
      return;
    case EnhancerKind::gaussian:
      if (volumetric)
        gaussian_3d(a, e.sigma);
      else
        gaussian_2d(a, e.sigma);
      return;
    case EnhancerKind::median:
      median_generic(a, e.radius, volumetric);
      return;
    case EnhancerKind::tv:
      tv_rof(a, e.lambda, e.iterations, volumetric);
      return;
  }
}

// Slices are contiguous (dim 2 is the slice axis for both layouts).
void run_stage(const EnhancementStage& stage, float* data, int n0, int n1, int n2) {
  if (stage.enhancer.kind == EnhancerKind::identity) return;
  if (stage.slicing == Slicing::volumetric) {
    apply_enhancer(stage.enhancer, View3{data, n0, n1, n2}, true);
    return;
  }
  const std::size_t slice_len = std::size_t(n0) * std::size_t(n1);
  const int nthreads = thread_count();
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
  for (int s = 0; s < n2; ++s)
    apply_enhancer(stage.enhancer, View3{data + std::size_t(s) * slice_len, n0, n1, 1},
                   false);
}

}  // namespace

void validate(const EnhancementStage& stage) {
  const auto& e = stage.enhancer;
  switch (e.kind) {
    case EnhancerKind::identity:
      break;
    case EnhancerKind::gaussian:
      if (!(e.sigma > 0.0))
        throw std::invalid_argument("enhancer: sigma must be positive");
      break;
    case EnhancerKind::median:
      if (e.radius < 1) throw std::invalid_argument("enhancer: radius must be >= 1");
      break;
    case EnhancerKind::tv:
      if (!(e.lambda > 0.0)) throw std::invalid_argument("enhancer: lambda must be positive");
      if (e.iterations < 1)
        throw std::invalid_argument("enhancer: iterations must be >= 1");
      break;
  }
  if (stage.domain == EnhanceDomain::sinogram && stage.slicing == Slicing::per_z_slice)
    throw std::invalid_argument("enhancer: sinogram stages slice per_view or volumetric");
  if (stage.domain == EnhanceDomain::image && stage.slicing == Slicing::per_view)
    throw std::invalid_argument("enhancer: image stages slice per_z_slice or volumetric");
}

Sinogram enhance(const EnhancementStage& stage, const Sinogram& s) {
  validate(stage);
  if (stage.domain != EnhanceDomain::sinogram)
    throw std::invalid_argument("enhance: stage domain is not sinogram");
  Sinogram out = s;
  run_stage(stage, out.data.data(), s.nu, s.nv, s.num_views);
  return out;
}

Volume enhance(const EnhancementStage& stage, const Volume& v) {
  validate(stage);
  if (stage.domain != EnhanceDomain::image)
    throw std::invalid_argument("enhance: stage domain is not image");
  Volume out = v;
  run_stage(stage, out.data.data(), v.nx, v.ny, v.nz);
  return out;
}

const char* to_string(EnhancerKind kind) {
  switch (kind) {
    case EnhancerKind::identity: return "identity";
    case EnhancerKind::gaussian: return "gaussian";
    case EnhancerKind::median: return "median";
    case EnhancerKind::tv: return "tv";
  }
  return "?";
}

EnhancementStage load_enhancer(const ConfigSection& section, EnhanceDomain domain) {
  EnhancementStage stage;
  stage.domain = domain;
  stage.slicing =
      domain == EnhanceDomain::sinogram ? Slicing::per_view : Slicing::per_z_slice;

  const std::string kind = get_string_or(section, "kind", "identity");
  if (kind == "identity")
    stage.enhancer.kind = EnhancerKind::identity;
  else if (kind == "gaussian")
    stage.enhancer.kind = EnhancerKind::gaussian;
  else if (kind == "median")
    stage.enhancer.kind = EnhancerKind::median;
  else if (kind == "tv")
    stage.enhancer.kind = EnhancerKind::tv;
  else
    throw std::invalid_argument("enhancer: unknown kind '" + kind +
                                "' (known: identity, gaussian, median, tv)");

  stage.enhancer.sigma = get_double_or(section, "sigma", stage.enhancer.sigma);
  stage.enhancer.radius = get_int_or(section, "radius", stage.enhancer.radius);
  stage.enhancer.lambda = get_double_or(section, "lambda", stage.enhancer.lambda);
  stage.enhancer.iterations = get_int_or(section, "iterations", stage.enhancer.iterations);

  const std::string slicing = get_string_or(section, "slicing", "");
  if (slicing == "per_view")
    stage.slicing = Slicing::per_view;
  else if (slicing == "per_z_slice")
    stage.slicing = Slicing::per_z_slice;
  else if (slicing == "volumetric")
    stage.slicing = Slicing::volumetric;
  else if (!slicing.empty())
    throw std::invalid_argument("enhancer: unknown slicing '" + slicing +
                                "' (known: per_view, per_z_slice, volumetric)");
  validate(stage);
  return stage;
}

EnhancementStage identity_stage(EnhanceDomain domain) {
  EnhancementStage s;
  s.domain = domain;
  s.slicing = domain == EnhanceDomain::sinogram ? Slicing::per_view : Slicing::per_z_slice;
  return s;
}

EnhancementStage default_sem() {
  EnhancementStage s = identity_stage(EnhanceDomain::sinogram);
  s.enhancer.kind = EnhancerKind::gaussian;
  s.enhancer.sigma = 1.0;
  return s;
}

EnhancementStage default_iem() {
  EnhancementStage s = identity_stage(EnhanceDomain::image);
  s.enhancer.kind = EnhancerKind::tv;
  s.enhancer.lambda = 0.1;
  s.enhancer.iterations = 50;
  return s;
}

}  // namespace cbct
