#include "cbct/projector.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "cbct/threads.hpp"

namespace cbct {

namespace {

struct GridContext {
  int n[3];
  std::size_t stride[3];
  double center[3];  // (n-1)/2 per axis
  double vs, inv_vs;
};

GridContext make_context(const ConeBeamGeometry& g) {
  GridContext c;
  c.n[0] = g.nx;
  c.n[1] = g.ny;
  c.n[2] = g.nz;
  c.stride[0] = 1;
  c.stride[1] = std::size_t(g.nx);
  c.stride[2] = std::size_t(g.nx) * std::size_t(g.ny);
  for (int k = 0; k < 3; ++k) c.center[k] = double(c.n[k] - 1) / 2.0;
  c.vs = g.voxel_size;
  c.inv_vs = 1.0 / g.voxel_size;
  return c;
}

// Joseph traversal along the ray p -> q: step one voxel plane at a time along
// the dominant axis, bilinearly interpolating in the two transverse axes.
// Gather mode returns the line integral; scatter mode adds the transposed
// weights times `value` into `acc`.
template <class T, bool Scatter>
double joseph_traverse(const GridContext& g, const Vec3& p, const Vec3& q, const T* vol,
                       double* acc, double value) {
  const double d[3] = {q.x - p.x, q.y - p.y, q.z - p.z};
  const double pp[3] = {p.x, p.y, p.z};
  const double ad[3] = {std::abs(d[0]), std::abs(d[1]), std::abs(d[2])};
  int a = 0;  // dominant axis; ties resolve to the earlier axis
  if (ad[1] > ad[a]) a = 1;
  if (ad[2] > ad[a]) a = 2;
  if (ad[a] == 0.0) return 0.0;
  const int b = (a == 0) ? 1 : 0;
  const int c = (a == 2) ? 1 : 2;

  const double inv_da = 1.0 / d[a];
  const double gb = d[b] * inv_da;  // transverse index increment per plane
  const double gc = d[c] * inv_da;
  const double t0 = ((0.0 - g.center[a]) * g.vs - pp[a]) * inv_da;  // ray param at plane 0
  double fb = (pp[b] + t0 * d[b]) * g.inv_vs + g.center[b];
  double fc = (pp[c] + t0 * d[c]) * g.inv_vs + g.center[c];

  // Restrict the plane range to where the transverse indices can touch the
  // grid; interpolation reaches into (-1, n).
  int i0 = 0, i1 = g.n[a] - 1;
  const double plane_max = double(g.n[a]);
  auto clip = [&](double f0, double gk, int nk) {
    if (gk == 0.0) return f0 > -1.0 && f0 < double(nk);
    double lo = (-1.0 - f0) / gk;
    double hi = (double(nk) - f0) / gk;
    if (lo > hi) std::swap(lo, hi);
    lo = std::max(lo, -1.0);
    hi = std::min(hi, plane_max);
    const int ilo = int(std::ceil(lo));
    const int ihi = int(std::floor(hi));
    if (ilo > i0) i0 = ilo;
    if (ihi < i1) i1 = ihi;
    return i0 <= i1;
  };
  if (!clip(fb, gb, g.n[b])) return 0.0;
  if (!clip(fc, gc, g.n[c])) return 0.0;
  fb += gb * double(i0);
  fc += gc * double(i0);

  const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  const double steplen = g.vs * len * std::abs(inv_da);
  const std::size_t sa = g.stride[a], sb = g.stride[b], sc = g.stride[c];
  const int nb = g.n[b], nc = g.n[c];
  const double sval = value * steplen;

  double sum = 0.0;
  for (int i = i0; i <= i1; ++i, fb += gb, fc += gc) {
    const double flb = std::floor(fb), flc = std::floor(fc);
    const int ib = int(flb), ic = int(flc);
    const double wb1 = fb - flb, wc1 = fc - flc;
    const double wb0 = 1.0 - wb1, wc0 = 1.0 - wc1;
    const std::size_t base = std::size_t(i) * sa;
    if (ib >= 0 && ib + 1 < nb && ic >= 0 && ic + 1 < nc) {
      const std::size_t k = base + std::size_t(ib) * sb + std::size_t(ic) * sc;
      if constexpr (Scatter) {
        acc[k] += sval * (wb0 * wc0);
        acc[k + sb] += sval * (wb1 * wc0);
        acc[k + sc] += sval * (wb0 * wc1);
        acc[k + sb + sc] += sval * (wb1 * wc1);
      } else {
        sum += wb0 * wc0 * double(vol[k]) + wb1 * wc0 * double(vol[k + sb]) +
               wb0 * wc1 * double(vol[k + sc]) + wb1 * wc1 * double(vol[k + sb + sc]);
      }
    } else {
      for (int jb = ib; jb <= ib + 1; ++jb) {
        if (jb < 0 || jb >= nb) continue;
        const double wb = (jb == ib) ? wb0 : wb1;
        for (int jc = ic; jc <= ic + 1; ++jc) {
          if (jc < 0 || jc >= nc) continue;
          const double w = wb * ((jc == ic) ? wc0 : wc1);
          const std::size_t k = base + std::size_t(jb) * sb + std::size_t(jc) * sc;
          if constexpr (Scatter) {
            acc[k] += sval * w;
          } else {
            sum += w * double(vol[k]);
          }
        }
      }
    }
  }
  return sum * steplen;
}

struct ViewFrame {
  Vec3 src, det, ua;
};

ViewFrame view_frame(const ConeBeamGeometry& g, int view) {
  return {source_position(g, view), detector_center(g, view), detector_u_axis(g, view)};
}

template <class T>
void forward_impl(const ConeBeamGeometry& g, const T* vol, T* sino) {
  const GridContext ctx = make_context(g);
  const int nthreads = thread_count();
  const double cu = double(g.nu - 1) / 2.0, cv = double(g.nv - 1) / 2.0;
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
  for (int view = 0; view < g.num_views; ++view) {
    const ViewFrame f = view_frame(g, view);
    T* out = sino + std::size_t(view) * std::size_t(g.nv) * std::size_t(g.nu);
    for (int v = 0; v < g.nv; ++v) {
      const double voff = (double(v) - cv) * g.dv;
      for (int u = 0; u < g.nu; ++u) {
        const double uoff = (double(u) - cu) * g.du;
        const Vec3 q{f.det.x + uoff * f.ua.x, f.det.y + uoff * f.ua.y, voff};
        out[std::size_t(v) * std::size_t(g.nu) + std::size_t(u)] =
            T(joseph_traverse<T, false>(ctx, f.src, q, vol, nullptr, 0.0));
      }
    }
  }
}

// Per-thread accumulators merged in thread order keep the result
// reproducible for a fixed worker count and race-free for any.
template <class T>
void back_impl(const ConeBeamGeometry& g, const T* sino, T* vol_out) {
  const GridContext ctx = make_context(g);
  const std::size_t nvox = g.num_voxels();
  const int nthreads = thread_count();
  const double cu = double(g.nu - 1) / 2.0, cv = double(g.nv - 1) / 2.0;
  std::vector<std::vector<double>> acc(static_cast<std::size_t>(nthreads));
#pragma omp parallel num_threads(nthreads)
  {
    auto& mine = acc[std::size_t(omp_get_thread_num())];
    mine.assign(nvox, 0.0);
#pragma omp for schedule(static)
    for (int view = 0; view < g.num_views; ++view) {
      const ViewFrame f = view_frame(g, view);
      const T* in = sino + std::size_t(view) * std::size_t(g.nv) * std::size_t(g.nu);
      for (int v = 0; v < g.nv; ++v) {
        const double voff = (double(v) - cv) * g.dv;
        for (int u = 0; u < g.nu; ++u) {
          const double val = double(in[std::size_t(v) * std::size_t(g.nu) + std::size_t(u)]);
          if (val == 0.0) continue;
          const double uoff = (double(u) - cu) * g.du;
          const Vec3 q{f.det.x + uoff * f.ua.x, f.det.y + uoff * f.ua.y, voff};
          joseph_traverse<T, true>(ctx, f.src, q, nullptr, mine.data(), val);
        }
      }
    }
  }
  std::vector<double>& total = acc[0];
  if (total.empty()) total.assign(nvox, 0.0);
  for (std::size_t t = 1; t < acc.size(); ++t) {
    if (acc[t].empty()) continue;
    for (std::size_t i = 0; i < nvox; ++i) total[i] += acc[t][i];
  }
  for (std::size_t i = 0; i < nvox; ++i) vol_out[i] = T(total[i]);
}

void check_vol_shape(const ConeBeamGeometry& g, std::size_t n) {
  if (n != g.num_voxels())
    throw std::invalid_argument("projector: volume has " + std::to_string(n) +
                                " elements, geometry expects " +
                                std::to_string(g.num_voxels()));
}

void check_sino_shape(const ConeBeamGeometry& g, std::size_t n) {
  if (n != g.num_rays())
    throw std::invalid_argument("projector: sinogram has " + std::to_string(n) +
                                " elements, geometry expects " +
                                std::to_string(g.num_rays()));
}

}  // namespace

SystemOperator::SystemOperator(ConeBeamGeometry geom, ProjectionMethod method)
    : geom_(std::move(geom)), method_(method) {
  validate(geom_);
}

void SystemOperator::forward_into(std::span<const float> vol, std::span<float> sino) const {
  check_vol_shape(geom_, vol.size());
  check_sino_shape(geom_, sino.size());
  forward_impl<float>(geom_, vol.data(), sino.data());
}

void SystemOperator::forward_into(std::span<const double> vol, std::span<double> sino) const {
  check_vol_shape(geom_, vol.size());
  check_sino_shape(geom_, sino.size());
  forward_impl<double>(geom_, vol.data(), sino.data());
}

void SystemOperator::back_into(std::span<const float> sino, std::span<float> vol) const {
  check_sino_shape(geom_, sino.size());
  check_vol_shape(geom_, vol.size());
  back_impl<float>(geom_, sino.data(), vol.data());
}

void SystemOperator::back_into(std::span<const double> sino, std::span<double> vol) const {
  check_sino_shape(geom_, sino.size());
  check_vol_shape(geom_, vol.size());
  back_impl<double>(geom_, sino.data(), vol.data());
}

Sinogram SystemOperator::forward(const Volume& x) const {
  if (x.nx != geom_.nx || x.ny != geom_.ny || x.nz != geom_.nz)
    throw std::invalid_argument("projector: volume dims do not match geometry");
  if (std::abs(x.voxel_size - geom_.voxel_size) > 1e-9 * geom_.voxel_size)
    throw std::invalid_argument("projector: volume voxel_size does not match geometry");
  Sinogram y = Sinogram::zeros(geom_.num_views, geom_.nv, geom_.nu);
  forward_into(std::span<const float>(x.data), std::span<float>(y.data));
  return y;
}

Volume SystemOperator::back(const Sinogram& y) const {
  if (y.num_views != geom_.num_views || y.nv != geom_.nv || y.nu != geom_.nu)
    throw std::invalid_argument("projector: sinogram dims do not match geometry");
  Volume x = Volume::zeros(geom_.nx, geom_.ny, geom_.nz, geom_.voxel_size);
  back_into(std::span<const float>(y.data), std::span<float>(x.data));
  return x;
}

Sinogram forward_project(const SystemOperator& op, const Volume& x) { return op.forward(x); }
Volume back_project(const SystemOperator& op, const Sinogram& y) { return op.back(y); }

Eigen::MatrixXd dense_matrix(const SystemOperator& op) {
  const auto& g = op.geometry();
  if (g.num_voxels() > 4096)
    throw std::invalid_argument("dense_matrix: voxel count " +
                                std::to_string(g.num_voxels()) + " exceeds guard 4096");
  if (g.num_rays() > 16384)
    throw std::invalid_argument("dense_matrix: ray count " + std::to_string(g.num_rays()) +
                                " exceeds guard 16384");
  const std::size_t nvox = g.num_voxels(), nray = g.num_rays();
  Eigen::MatrixXd A(static_cast<Eigen::Index>(nray), static_cast<Eigen::Index>(nvox));
  std::vector<double> e(nvox, 0.0), col(nray);
  for (std::size_t j = 0; j < nvox; ++j) {
    e[j] = 1.0;
    op.forward_into(std::span<const double>(e), std::span<double>(col));
    for (std::size_t i = 0; i < nray; ++i) A(Eigen::Index(i), Eigen::Index(j)) = col[i];
    e[j] = 0.0;
  }
  return A;
}

PowerIterResult operator_norm_sq(const SystemOperator& op, int max_iters, double tol,
                                 std::uint64_t seed) {
  if (max_iters < 1) throw std::invalid_argument("operator_norm_sq: max_iters must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("operator_norm_sq: tol must be positive");
  const auto& g = op.geometry();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> x(g.num_voxels());
  for (auto& v : x) v = dist(rng);
  double xn = 0.0;
  for (double v : x) xn += v * v;
  xn = std::sqrt(xn);
  for (auto& v : x) v /= xn;

  std::vector<double> y(g.num_rays()), z(x.size());
  PowerIterResult res;
  double prev = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    res.iterations = it;
    op.forward_into(std::span<const double>(x), std::span<double>(y));
    op.back_into(std::span<const double>(y), std::span<double>(z));
    double rq = 0.0, zn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      rq += x[i] * z[i];
      zn += z[i] * z[i];
    }
    zn = std::sqrt(zn);
    res.value = rq;
    if (zn == 0.0) {  // operator annihilates the iterate
      res.value = 0.0;
      res.converged = true;
      break;
    }
    if (it > 1 && std::abs(rq - prev) < tol * std::abs(rq)) {
      res.converged = true;
      break;
    }
    prev = rq;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = z[i] / zn;
  }
  return res;
}

}  // namespace cbct
