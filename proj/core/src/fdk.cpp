#include <fftw3.h>
#include <omp.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "cbct/solvers.hpp"
#include "cbct/threads.hpp"

namespace cbct {

namespace {

int next_pow2(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

// Frequency response of the discrete ramp filter, built from the
// spatial-domain Ram-Lak sequence (unit sample spacing):
//   h[0] = 1/4, h[n] = 0 for even n != 0, h[n] = -1/(pi^2 n^2) for odd n.
// Building it in the spatial domain keeps the small positive DC term the
// naive |w| ramp loses.
std::vector<double> ramp_response(int pad, FdkWindow window) {
  std::vector<double> h(std::size_t(pad), 0.0);
  h[0] = 0.25;
  for (int n = 1; n <= pad / 2; ++n) {
    if (n % 2 == 0) continue;
    const double v = -1.0 / (std::numbers::pi * std::numbers::pi * double(n) * double(n));
    h[std::size_t(n)] = v;
    h[std::size_t(pad - n)] = v;  // circular layout of the negative taps
  }
  const int nbins = pad / 2 + 1;
  std::vector<double> in(h);
  std::vector<fftw_complex> out(static_cast<std::size_t>(nbins));
  fftw_plan plan = fftw_plan_dft_r2c_1d(pad, in.data(), out.data(),
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  std::vector<double> response(static_cast<std::size_t>(nbins));
  for (int k = 0; k < nbins; ++k) response[std::size_t(k)] = out[std::size_t(k)][0];
  if (window == FdkWindow::hann) {
    for (int k = 0; k < nbins; ++k)
      response[std::size_t(k)] *=
          0.5 * (1.0 + std::cos(std::numbers::pi * double(k) / double(pad / 2)));
  }
  return response;
}

}  // namespace

Volume fdk(const Sinogram& b, const ConeBeamGeometry& g, const FdkConfig& cfg) {
  validate(g);
  if (b.num_views != g.num_views || b.nv != g.nv || b.nu != g.nu)
    throw std::invalid_argument("fdk: sinogram dims do not match geometry");
  if (g.num_views < 2) throw std::invalid_argument("fdk: need at least 2 views");
  const int pad = cfg.pad_to > 0 ? cfg.pad_to : next_pow2(2 * g.nu);
  if (pad < 2 * g.nu)
    throw std::invalid_argument("fdk: pad_to must be at least 2*nu = " +
                                std::to_string(2 * g.nu));

  const int nu = g.nu, nv = g.nv, views = g.num_views;
  const double cu = double(nu - 1) / 2.0, cv = double(nv - 1) / 2.0;
  // Work on the detector de-magnified to the rotation axis; sampling
  // positions are unchanged, only the effective pitch rescales.
  const double mag = g.sod / g.sdd;
  const double dp = g.du * mag;
  const double dzeta = g.dv * mag;

  const std::vector<double> response = ramp_response(pad, cfg.window);
  const int nbins = pad / 2 + 1;

  // Stage 1+2: cosine weighting and row-wise ramp filtering.
  std::vector<float> filtered(std::size_t(views) * std::size_t(nv) * std::size_t(nu));
  const int nthreads = thread_count();
  fftw_plan fwd, inv;
  {
    std::vector<double> tmp_r(static_cast<std::size_t>(pad));
    std::vector<fftw_complex> tmp_c(static_cast<std::size_t>(nbins));
    fwd = fftw_plan_dft_r2c_1d(pad, tmp_r.data(), tmp_c.data(),
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
    inv = fftw_plan_dft_c2r_1d(pad, tmp_c.data(), tmp_r.data(),
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
#pragma omp parallel num_threads(nthreads)
  {
    std::vector<double> row(static_cast<std::size_t>(pad));
    std::vector<fftw_complex> spec(static_cast<std::size_t>(nbins));
#pragma omp for schedule(static)
    for (int view = 0; view < views; ++view) {
      for (int v = 0; v < nv; ++v) {
        const double voff = (double(v) - cv) * g.dv;
        for (int u = 0; u < nu; ++u) {
          const double uoff = (double(u) - cu) * g.du;
          const double cosw = g.sdd / std::sqrt(g.sdd * g.sdd + uoff * uoff + voff * voff);
          row[std::size_t(u)] = double(b.at(view, v, u)) * cosw;
        }
        std::fill(row.begin() + nu, row.end(), 0.0);
        fftw_execute_dft_r2c(fwd, row.data(), spec.data());
        for (int k = 0; k < nbins; ++k) {
          spec[std::size_t(k)][0] *= response[std::size_t(k)];
          spec[std::size_t(k)][1] *= response[std::size_t(k)];
        }
        fftw_execute_dft_c2r(inv, spec.data(), row.data());
        // 1/pad undoes the unnormalized transform pair; 1/dp scales the
        // discrete convolution to the continuous filter.
        const double scale = 1.0 / (double(pad) * dp);
        float* out = filtered.data() +
                     (std::size_t(view) * std::size_t(nv) + std::size_t(v)) * std::size_t(nu);
        for (int u = 0; u < nu; ++u) out[u] = float(row[std::size_t(u)] * scale);
      }
    }
  }
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);

  // Stage 3: weighted backprojection.
  Volume vol = Volume::zeros(g.nx, g.ny, g.nz, g.voxel_size);
  const double ccx = double(g.nx - 1) / 2.0, ccy = double(g.ny - 1) / 2.0,
               ccz = double(g.nz - 1) / 2.0;
  const double view_scale = std::numbers::pi / double(views);
  std::vector<double> cosa(static_cast<std::size_t>(views)), sina(static_cast<std::size_t>(views));
  for (int i = 0; i < views; ++i) {
    cosa[std::size_t(i)] = std::cos(g.angles[std::size_t(i)]);
    sina[std::size_t(i)] = std::sin(g.angles[std::size_t(i)]);
  }
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (int z = 0; z < g.nz; ++z) {
    const double Z = (double(z) - ccz) * g.voxel_size;
    std::vector<double> slice(std::size_t(g.nx) * std::size_t(g.ny), 0.0);
    for (int view = 0; view < views; ++view) {
      const double ca = cosa[std::size_t(view)], sa = sina[std::size_t(view)];
      const float* fv = filtered.data() + std::size_t(view) * std::size_t(nv) * std::size_t(nu);
      for (int y = 0; y < g.ny; ++y) {
        const double Y = (double(y) - ccy) * g.voxel_size;
        for (int x = 0; x < g.nx; ++x) {
          const double X = (double(x) - ccx) * g.voxel_size;
          const double U = g.sod - X * ca - Y * sa;  // source-to-voxel along the central ray
          const double tau = -X * sa + Y * ca;       // lateral offset
          const double fu = (g.sod * tau / U) / dp + cu;
          const double fvz = (g.sod * Z / U) / dzeta + cv;
          const int iu = int(std::floor(fu)), iv = int(std::floor(fvz));
          if (iu < -1 || iu >= nu || iv < -1 || iv >= nv) continue;
          const double wu1 = fu - double(iu), wv1 = fvz - double(iv);
          const double wu0 = 1.0 - wu1, wv0 = 1.0 - wv1;
          double val = 0.0;
          const bool u0ok = iu >= 0, u1ok = iu + 1 < nu;
          const bool v0ok = iv >= 0, v1ok = iv + 1 < nv;
          if (v0ok) {
            const float* line = fv + std::size_t(iv) * std::size_t(nu);
            if (u0ok) val += wu0 * wv0 * double(line[iu]);
            if (u1ok) val += wu1 * wv0 * double(line[iu + 1]);
          }
          if (v1ok) {
            const float* line = fv + std::size_t(iv + 1) * std::size_t(nu);
            if (u0ok) val += wu0 * wv1 * double(line[iu]);
            if (u1ok) val += wu1 * wv1 * double(line[iu + 1]);
          }
          slice[std::size_t(y) * std::size_t(g.nx) + std::size_t(x)] +=
              val * (g.sod * g.sod) / (U * U);
        }
      }
    }
    float* out = vol.data.data() + std::size_t(z) * std::size_t(g.nx) * std::size_t(g.ny);
    for (std::size_t i = 0; i < slice.size(); ++i) out[i] = float(slice[i] * view_scale);
  }
  return vol;
}

}  // namespace cbct
