#pragma once

#include <cstdint>

#include "cbct/arrays.hpp"

namespace cbct {

namespace rng {

// Counter-based per-element stream: the state is derived from (seed, counter)
// alone, so sampling is reproducible under any parallel schedule.
struct Stream {
  std::uint64_t state;

  Stream(std::uint64_t seed, std::uint64_t counter);
  std::uint64_t next_u64();
  double uniform();  // in (0, 1), never exactly 0 or 1

  // Poisson sampling: sequential inversion for small means, transformed
  // rejection (PTRS) for large ones.
  std::int64_t poisson(double lambda);
};

}  // namespace rng

// Transmission-domain Poisson dose model: per line integral p the detector
// sees n ~ Poisson(i0 * exp(-p)) and reports -ln(max(n, count_floor)/i0).
struct DoseModel {
  double i0 = 1e6;
  double count_floor = 0.5;
  std::uint64_t seed = 0;
};

DoseModel low_dose(std::uint64_t seed = 0);       // i0 = 1e4
DoseModel clinical_dose(std::uint64_t seed = 0);  // i0 = 1e6

Sinogram simulate_dose(const Sinogram& clean, const DoseModel& model);

}  // namespace cbct
