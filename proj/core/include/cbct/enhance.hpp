#pragma once

#include <string>

#include "cbct/arrays.hpp"
#include "cbct/config.hpp"

namespace cbct {

enum class EnhancerKind { identity, gaussian, median, tv };

struct Enhancer {
  EnhancerKind kind = EnhancerKind::identity;
  double sigma = 1.0;    // gaussian, in elements
  int radius = 1;        // median window radius
  double lambda = 0.1;   // tv regularization weight
  int iterations = 50;   // tv dual-projection steps
};

enum class EnhanceDomain { sinogram, image };
enum class Slicing { per_view, per_z_slice, volumetric };

// Shape-preserving enhancement stage. Sinogram stages slice per view (the
// channel axis), image stages per z-slice; either may run volumetric.
struct EnhancementStage {
  EnhanceDomain domain = EnhanceDomain::sinogram;
  Enhancer enhancer;
  Slicing slicing = Slicing::per_view;
};

void validate(const EnhancementStage& stage);

Sinogram enhance(const EnhancementStage& stage, const Sinogram& s);
Volume enhance(const EnhancementStage& stage, const Volume& v);

const char* to_string(EnhancerKind kind);

// Parses kind/params/slicing from a config section ([sem] or [iem]); unknown
// kinds are rejected with the list of known ones.
EnhancementStage load_enhancer(const ConfigSection& section, EnhanceDomain domain);

EnhancementStage identity_stage(EnhanceDomain domain);
EnhancementStage default_sem();  // gaussian sigma 1.0, per view
EnhancementStage default_iem();  // tv lambda 0.1, 50 iterations, per z-slice

}  // namespace cbct
