#include "cbct/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "cbct/threads.hpp"

namespace cbct {

namespace rng {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

Stream::Stream(std::uint64_t seed, std::uint64_t counter) {
  state = seed;
  std::uint64_t a = splitmix64(state);
  state ^= counter * 0xd1342543de82ef95ull + a;
  splitmix64(state);  // decorrelate neighboring counters
}

std::uint64_t Stream::next_u64() { return splitmix64(state); }

double Stream::uniform() {
  return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::int64_t Stream::poisson(double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("poisson: lambda must be >= 0");
  if (lambda == 0.0) return 0;
  if (lambda < 10.0) {
    // sequential inversion
    const double enl = std::exp(-lambda);
    double prod = uniform();
    std::int64_t k = 0;
    while (prod > enl) {
      prod *= uniform();
      ++k;
    }
    return k;
  }
  // Hormann's transformed rejection with squeeze (PTRS)
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::abs(u);
    const auto k = std::int64_t(std::floor((2.0 * a / us + b) * u + lambda + 0.43));
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -lambda + double(k) * loglam - std::lgamma(double(k) + 1.0))
      return k;
  }
}

}  // namespace rng

DoseModel low_dose(std::uint64_t seed) { return {1e4, 0.5, seed}; }
DoseModel clinical_dose(std::uint64_t seed) { return {1e6, 0.5, seed}; }

Sinogram simulate_dose(const Sinogram& clean, const DoseModel& model) {
  if (!(model.i0 > 0.0)) throw std::invalid_argument("dose model: i0 must be positive");
  if (!(model.count_floor > 0.0 && model.count_floor < model.i0))
    throw std::invalid_argument("dose model: count_floor must lie in (0, i0)");
  for (float p : clean.data)
    if (p < 0.0f)
      throw std::invalid_argument("simulate_dose: negative line integral in input");

  Sinogram out = clean;
  const std::int64_t n = std::int64_t(clean.data.size());
  const int nthreads = thread_count();
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (std::int64_t i = 0; i < n; ++i) {
    rng::Stream stream(model.seed, std::uint64_t(i));
    const double lambda = model.i0 * std::exp(-double(clean.data[std::size_t(i)]));
    const double counts =
        std::max(double(stream.poisson(lambda)), model.count_floor);
    out.data[std::size_t(i)] = float(-std::log(counts / model.i0));
  }
  return out;
}

}  // namespace cbct
